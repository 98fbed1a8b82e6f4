"""Lazy peeling of quadrangulations: exact weights and the geometry engine.

One peeling step either glues a fresh quadrangle onto the peeled boundary
edge (event A, half-perimeter L -> L+1) or glues the peeled edge onto the
boundary edge 2j steps away clockwise/counterclockwise (events B_j / B'_j,
L -> L-1-j), filling the enclosed hole with an independent unpointed
Boltzmann quadrangulation with boundary 2j. Transition weights are the
h-transform ratios of the step law p (p_1 = 2/3, p_{-i} heavy tailed):
h_down(l) = 4^{-l} C(2l, l) for the finite-map chain killed at 0,
h_up(l) = l * h_down(l) for the infinite-map chain.

The geometry engine realizes the full map; the count-level "skeleton"
engines used by the large-scale experiments live in _peelfast.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import cmap, laws, schaeffer
from .trees import SizeTooLarge


class RadiusBeyondXi(ValueError):
    pass


class StepBudgetExceeded(RuntimeError):
    """A size-capped run outgrew its budget; callers bin these explicitly."""


# ---------------------------------------------------------------------------
# exact transition weights
# ---------------------------------------------------------------------------

def h_down(l: int) -> Fraction:
    return Fraction(math.comb(2 * l, l), 4**l)


def h_up(l: int) -> Fraction:
    return l * h_down(l)


def step_p(i: int) -> Fraction:
    """The unconditioned step law: p(1) = 2/3, p(-i) heavy tailed."""
    if i == 1:
        return Fraction(2, 3)
    if i >= 0:
        return Fraction(0)
    m = -i
    return Fraction(2 * math.comb(2 * m - 2, m - 1), 4**m * m * (m + 1))


@dataclass
class PeelWeights:
    L: int
    mode: str                     # "boltzmann" or "uipq"
    p_A: Fraction
    p_B: list                     # p_B[j] = total weight of B_j + B'_j, j in [0, L)

    def check_normalized(self):
        total = self.p_A + sum(self.p_B)
        if total != 1:
            raise AssertionError(f"weights sum to {total} at L={self.L}")


def step_weights(L: int, mode: str = "boltzmann") -> PeelWeights:
    """Exact rational one-step law of the lazy peeling at half-perimeter L."""
    if L < 1:
        raise ValueError("L >= 1")
    h = h_down if mode == "boltzmann" else h_up
    hL = h(L)
    p_A = h(L + 1) / hL * step_p(1)
    p_B = [h(L - 1 - j) / hL * step_p(-(j + 1)) for j in range(L)]
    return PeelWeights(L, mode, p_A, p_B)


def sample_step(L: int, mode: str, rng) -> int:
    """One peeling step at half-perimeter L: +1 for A, -(j+1) for B/B'_j.

    Float sequential inversion using the exact term ratios; agreement with
    step_weights is asserted by tests for all L <= 500.
    """
    if mode == "boltzmann":
        q_a = (2 * L + 1) / (3.0 * (L + 1))
        f = 0.25 * (2 * L) / (2 * L - 1) if L >= 1 else 0.0
    else:
        q_a = (2 * L + 1) / (3.0 * L)
        f = 0.25 * 2 * (L - 1) / (2 * L - 1)
    u = rng.random()
    if u < q_a:
        return 1
    u = (u - q_a)
    i = 1
    c = f
    while u > c and i < L:
        # f(i+1)/f(i) = [(2i-1)/(2(i+2))] * [h(L-i-1)/h(L-i)]
        l = L - i
        if mode == "boltzmann":
            hr = (2 * l) / (2 * l - 1)
        else:
            hr = 2 * (l - 1) / (2 * l - 1) if l >= 1 else 0.0
        f = f * (2 * i - 1) / (2 * (i + 2)) * hr
        i += 1
        c += f
    return -i


# ---------------------------------------------------------------------------
# trace record
# ---------------------------------------------------------------------------

@dataclass
class PeelTrace:
    mode: str
    events: list = field(default_factory=list)   # (kind, j, hole_volume)
    S: list = field(default_factory=list)        # half-perimeter path
    M: list = field(default_factory=list)        # volume (inner face count) path
    layer_times: list = field(default_factory=list)   # R_1, R_2, ...
    layer_H: list = field(default_factory=list)
    layer_V: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)     # (radius, BoundaryQuadrangulation)
    terminal: object = None                      # CombinatorialMap in boltzmann mode
    xi_distance: int | None = None
    truncated: bool = False

    @property
    def n_steps(self) -> int:
        return len(self.events)

    @property
    def xi_radius(self) -> int:
        """Largest completed layer (Xi in boltzmann mode)."""
        return len(self.layer_times)

    def to_jsonl(self) -> str:
        lines = [json.dumps({
            "mode": self.mode, "steps": self.n_steps,
            "layer_times": self.layer_times, "layer_H": self.layer_H,
            "layer_V": self.layer_V, "truncated": self.truncated,
        })]
        for t, (kind, j, vol) in enumerate(self.events):
            lines.append(json.dumps({
                "t": t, "kind": kind, "j": j, "hole_volume": vol,
                "S": self.S[t + 1], "M": self.M[t + 1]}))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# geometry engine
# ---------------------------------------------------------------------------

class _Slot:
    __slots__ = ("dart", "partner", "tail", "head", "prev", "next")

    def __init__(self, dart, partner, tail, head):
        self.dart = dart
        self.partner = partner
        self.tail = tail
        self.head = head
        self.prev = None
        self.next = None


class _Peeler:
    """Mutable peeling state: faces built so far plus a circular boundary.

    With fill_holes=False the B-events record holes as unfilled faces; the
    boundary process, layer times and labels are unaffected (hole interiors
    never touch the boundary again), but no terminal map can be assembled.
    """

    def __init__(self, rng, mode="boltzmann", track_labels=False,
                 max_faces=None, fill_max_tries=1_000_000, fill_holes=True):
        self.rng = rng
        self.mode = mode
        self.track_labels = track_labels
        self.max_faces = max_faces
        self.fill_max_tries = fill_max_tries
        self.fill_holes = fill_holes
        self.twin = []          # -1 while unresolved
        self.faces = []
        self.n_darts = 0
        self.parent = {}        # union-find over vertex tokens
        self.label = {}         # token -> boundary label (track_labels)
        self.rep_dart = {}      # token -> a surviving dart with that origin
        self.n_tokens = 0
        self.volume = 0
        self.boundary_len = 0
        self.cursor = None
        self.xi_token = None
        self._init_square()

    # -- low-level helpers --------------------------------------------------

    def _new_darts(self, k):
        base = self.n_darts
        self.n_darts += k
        self.twin.extend([-1] * k)
        return base

    def _new_token(self, label=None, rep=None):
        t = self.n_tokens
        self.n_tokens += 1
        self.parent[t] = t
        if label is not None:
            self.label[t] = label
        if rep is not None:
            self.rep_dart[t] = rep
        return t

    def find(self, t):
        while self.parent[t] != t:
            self.parent[t] = self.parent[self.parent[t]]
            t = self.parent[t]
        return t

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        self.parent[ra] = rb
        if self.track_labels:
            self.label[rb] = min(self.label[ra], self.label[rb])
        if rb not in self.rep_dart and ra in self.rep_dart:
            self.rep_dart[rb] = self.rep_dart[ra]
        return rb

    def _insert_after(self, slot, new):
        new.prev = slot
        new.next = slot.next
        slot.next.prev = new
        slot.next = new
        self.boundary_len += 1

    def _remove(self, slot):
        slot.prev.next = slot.next
        slot.next.prev = slot.prev
        self.boundary_len -= 1
        if self.cursor is slot:
            self.cursor = slot.next if self.boundary_len else None

    def _init_square(self):
        base = self._new_darts(8)
        toks = []
        for j in range(4):
            # the root dart is twin(0), so the root vertex is the head of
            # dart 0; labels are graph distances from it
            lbl = (1, 0, 1, 2)[j] if self.track_labels else None
            toks.append(self._new_token(label=lbl, rep=j))
        cycle = [0, 1, 2, 3]
        self.faces.append(cycle)
        self.volume = 1
        slots = []
        for j in range(4):
            # interior dart j runs tok[j] -> tok[j+1]; slot twin reversed
            s = _Slot(4 + j, j, toks[(j + 1) % 4], toks[j])
            slots.append(s)
        # boundary walk order (outer face on the left): reversed interior order
        order = [slots[3], slots[2], slots[1], slots[0]]
        for a, b in zip(order, order[1:] + order[:1]):
            a.next = b
            b.prev = a
        self.boundary_len = 4
        self.cursor = order[0]
        self.root_interior = 0  # final root dart = twin of dart 0

    # -- events --------------------------------------------------------------

    def half_perimeter(self):
        return self.boundary_len // 2

    def event_A(self, slot):
        """Glue a quadrangle onto the peeled edge."""
        base = self._new_darts(6)
        n1, n2, n3, t1, t2, t3 = base, base + 1, base + 2, base + 3, base + 4, base + 5
        self.twin[n1] = t1
        self.twin[t1] = n1
        self.twin[n2] = t2
        self.twin[t2] = n2
        self.twin[n3] = t3
        self.twin[t3] = n3
        u, v = slot.tail, slot.head
        if self.track_labels:
            w1 = self._new_token(self.label[self.find(v)] + 1, rep=n2)
            w2 = self._new_token(self.label[self.find(u)] + 1, rep=n3)
        else:
            w1 = self._new_token(rep=n2)
            w2 = self._new_token(rep=n3)
        # face walk: slot dart (u->v), v->w1, w1->w2, w2->u
        self.faces.append([slot.dart, n1, n2, n3])
        self.volume += 1
        s3 = _Slot(t3, n3, u, w2)
        s2 = _Slot(t2, n2, w2, w1)
        s1 = _Slot(t1, n1, w1, v)
        prev = slot.prev
        nxt = slot.next
        self._remove(slot)
        # boundary order: prev -> s3 -> s2 -> s1 -> nxt
        for s in (s3, s2, s1):
            prev.next = s
            s.prev = prev
            prev = s
        prev.next = nxt
        nxt.prev = prev
        self.boundary_len += 3
        # the peeled slot becomes the interior side of the new quad edge
        self.twin[slot.dart] = slot.partner
        self.twin[slot.partner] = slot.dart
        return s1, s2, s3

    def event_B(self, slot, j, prime):
        """Fold the peeled edge onto the edge 2j slots forward (B_j) or
        backward (B'_j); fill the enclosed hole; return the slot after the
        splice (None at termination)."""
        L = self.half_perimeter()
        if j == L - 1:
            return self._terminate(slot, prime)
        if prime:
            first = slot
            for _ in range(2 * j + 1):
                first = first.prev
            last = slot
        else:
            first = slot
            last = slot
            for _ in range(2 * j + 1):
                last = last.next
        middles = []
        s = first.next
        while s is not last:
            middles.append(s)
            s = s.next
        assert len(middles) == 2 * j
        after = last.next
        self.union(first.tail, last.head)
        self.union(first.head, last.tail)
        self.twin[first.partner] = last.partner
        self.twin[last.partner] = first.partner
        for s in [first, last] + middles:
            self._remove(s)
        if j > 0:
            if self.fill_holes:
                self._fill_hole(middles)
            else:
                self.faces.append([s.dart for s in middles])
                for s in middles:
                    self.twin[s.dart] = s.partner
                    self.twin[s.partner] = s.dart
        return after

    def _terminate(self, slot, prime):
        L = self.half_perimeter()
        j = L - 1
        first = slot.next if prime else slot
        # at termination the stretch wraps the whole boundary: e' is the
        # neighbor of e on the far side
        if prime:
            e_prime = slot.next
            middles = []
            s = e_prime.next
            while s is not slot:
                middles.append(s)
                s = s.next
            first, last = e_prime, slot
        else:
            e_prime = slot.prev
            middles = []
            s = slot.next
            while s is not e_prime:
                middles.append(s)
                s = s.next
            first, last = slot, e_prime
        assert len(middles) == 2 * j
        self.union(first.tail, last.head)
        self.union(first.head, last.tail)
        self.twin[first.partner] = last.partner
        self.twin[last.partner] = first.partner
        # distinguished vertex: tail of the peeled slot for B, head for B'
        self.xi_token = self.find(slot.head if prime else slot.tail)
        for s in [first, last] + middles:
            self._remove(s)
        if j > 0:
            if self.fill_holes:
                self._fill_hole(middles)
            else:
                self.faces.append([s.dart for s in middles])
                for s in middles:
                    self.twin[s.dart] = s.partner
                    self.twin[s.partner] = s.dart
        return None

    def _fill_hole(self, middles):
        """Glue an unpointed Boltzmann quadrangulation with boundary into the
        hole bounded by the given slots (hole on their left, in walk order)."""
        j2 = len(middles)
        patch = schaeffer.boltzmann_boundary_quad(
            j2 // 2, self.rng, pointed=False,
            max_edges=self.max_faces, max_tries=self.fill_max_tries)
        pm = patch.map
        self.volume += patch.n_inner_faces
        if self.max_faces is not None and self.volume > self.max_faces:
            raise SizeTooLarge("peeling run outgrew max_faces")
        base = self._new_darts(pm.n_darts)
        o0 = int(pm.twin[pm.root_dart])
        owalk = pm.face_cycle(o0)
        # hole slot t (t = 0..2j-1) pairs with patch outer dart o_{-t}
        pairs = []
        deleted_patch = np.zeros(pm.n_darts, dtype=bool)
        opos = {}
        for idx, o in enumerate(owalk):
            deleted_patch[o] = True
            opos[o] = idx
        for t, s in enumerate(middles):
            pairs.append((s, owalk[(-t) % j2]))
        # twin resolution with pendant chains through the patch boundary
        slot_of_pos = {(-t) % j2: middles[t] for t in range(j2)}
        for s, o in pairs:
            x = int(pm.twin[o])
            while deleted_patch[x]:
                s2 = slot_of_pos[opos[x]]
                x = -1 - s2.partner  # marker: resolved to a host interior dart
                break
            if x >= 0:
                self.twin[s.partner] = base + x
                self.twin[base + x] = s.partner
            else:
                other = -1 - x
                self.twin[s.partner] = other
                self.twin[other] = s.partner
        # patch faces and internal twins
        for d in range(pm.n_darts):
            if deleted_patch[d]:
                continue
            td = int(pm.twin[d])
            if not deleted_patch[td]:
                self.twin[base + d] = base + td
        reps = pm.first_dart_of_face()
        for f in range(pm.n_faces):
            if f == patch.outer_face:
                continue
            self.faces.append([base + d for d in pm.face_cycle(int(reps[f]))])

    # -- assembly -------------------------------------------------------------

    def _compact(self, faces, twin):
        used = np.zeros(self.n_darts, dtype=bool)
        for cyc in faces:
            used[cyc] = True
        new_id = np.cumsum(used) - 1
        twin_c = new_id[np.asarray(twin)[used]]
        faces_c = [new_id[np.asarray(cyc)] for cyc in faces]
        return twin_c, faces_c, new_id

    def assemble(self) -> cmap.CombinatorialMap:
        if self.boundary_len:
            raise RuntimeError("assemble() requires an empty boundary")
        twin, faces, new_id = self._compact(self.faces, self.twin)
        root = int(twin[new_id[self.root_interior]])
        marks = ()
        if self.xi_token is not None:
            marks = (int(new_id[self.rep_dart[self.find(self.xi_token)]]),)
        return cmap.map_from_faces(twin, faces, root, marks)

    def snapshot(self) -> cmap.BoundaryQuadrangulation:
        """The current quadrangulation with (simple) boundary."""
        twin = list(self.twin)
        slots = []
        s = self.cursor
        for _ in range(self.boundary_len):
            slots.append(s)
            s = s.next
        cycle = [sl.dart for sl in slots]
        for sl in slots:
            twin[sl.dart] = sl.partner
            twin[sl.partner] = sl.dart
        faces = self.faces + [cycle]
        twin_c, faces_c, new_id = self._compact(faces, twin)
        root = int(twin_c[new_id[self.root_interior]])
        m = cmap.map_from_faces(twin_c, faces_c, root)
        return cmap.BoundaryQuadrangulation(m, int(m.face_of[new_id[cycle[0]]]))


def run_boltzmann_peeling(rng, max_steps: int | None = None,
                          max_faces: int | None = None,
                          trace_snapshots=()):
    """Peel a fresh Boltzmann rooted pointed quadrangulation to completion.

    Returns (map, trace). Size-capped runs raise SizeTooLarge so that callers
    can bin them without biasing the law.
    """
    peeler = _Peeler(rng, mode="boltzmann", max_faces=max_faces)
    trace = PeelTrace(mode="boltzmann")
    trace.S.append(peeler.half_perimeter())
    trace.M.append(peeler.volume)
    steps = 0
    while peeler.boundary_len:
        if max_steps is not None and steps >= max_steps:
            raise SizeTooLarge("peeling exceeded max_steps")
        L = peeler.half_perimeter()
        move = sample_step(L, "boltzmann", rng)
        slot = peeler.cursor
        if move == 1:
            peeler.event_A(slot)
            trace.events.append(("A", None, 0))
        else:
            j = -move - 1
            prime = bool(rng.integers(2))
            vol_before = peeler.volume
            peeler.event_B(slot, j, prime)
            trace.events.append(("B'" if prime else "B", j,
                                 peeler.volume - vol_before))
        steps += 1
        trace.S.append(peeler.half_perimeter())
        trace.M.append(peeler.volume)
    q = peeler.assemble()
    trace.terminal = q
    return q, trace


def peel_by_layers(rng, mode: str = "boltzmann", max_radius: int = 1,
                   boundary: int | None = None,
                   max_steps: int | None = None,
                   max_faces: int | None = None,
                   snapshot_radii=(), fill_holes: bool = True):
    """Peeling by layers with the geometry engine.

    Boundary labels are kept as distances from the root (or, with
    `boundary` = l for the finite-boundary infinite-map model, from the
    alternating 0-labeled initial vertices). The peeled edge is the first
    (i+1, i) edge after the last (i+2)-labeled vertex in boundary order;
    when no (i+2) vertex exists, the first (i+1, i) edge at or after the
    previous peel position. Records R_k, H_k, V_k and optional hull
    snapshots. Boltzmann mode stops at min(Xi, max_radius) or at the end of
    the algorithm; infinite modes stop after max_radius layers.
    """
    if boundary is not None and mode != "uipq":
        raise ValueError("a custom starting boundary requires uipq mode")
    peeler = _Peeler(rng, mode=mode, track_labels=True, max_faces=max_faces,
                     fill_holes=fill_holes)
    if boundary is not None:
        _reset_to_cycle(peeler, boundary)
    trace = PeelTrace(mode=mode if boundary is None else "p_ell")
    trace.S.append(peeler.half_perimeter())
    trace.M.append(peeler.volume)
    snapshot_radii = set(snapshot_radii)
    steps = 0
    # current layer index i: boundary labels lie in {i, i+1, i+2}
    i = 0
    while peeler.boundary_len:
        if len(trace.layer_times) >= max_radius:
            trace.truncated = True
            break
        if max_steps is not None and steps >= max_steps:
            raise SizeTooLarge("peeling exceeded max_steps")
        slot = _find_peel_slot(peeler, i)
        L = peeler.half_perimeter()
        move = sample_step(L, mode, rng)
        if move == 1:
            s1, _, _ = peeler.event_A(slot)
            peeler.cursor = s1
            trace.events.append(("A", None, 0))
        else:
            j = -move - 1
            prime = bool(rng.integers(2))
            vol_before = peeler.volume
            after = peeler.event_B(slot, j, prime)
            peeler.cursor = after
            trace.events.append(("B'" if prime else "B", j,
                                 peeler.volume - vol_before))
        steps += 1
        trace.S.append(peeler.half_perimeter())
        trace.M.append(peeler.volume)
        if peeler.boundary_len and _layer_complete(peeler, i):
            i += 1
            trace.layer_times.append(steps)
            trace.layer_H.append(peeler.half_perimeter())
            trace.layer_V.append(peeler.volume)
            if i in snapshot_radii:
                trace.snapshots.append((i, peeler.snapshot()))
    if not peeler.boundary_len:
        q = peeler.assemble()
        trace.terminal = q
        d = q.bfs_distances(q.root_vertex)
        trace.xi_distance = int(d[q.pointed_vertex])
    return trace


def _reset_to_cycle(peeler: _Peeler, l: int):
    """Restart the peeler from a bare simple cycle of length 2l with
    alternating labels 0, 1 (the finite-boundary infinite-map model).

    The inside of the starting cycle is retained as a single 2l-gon face, so
    snapshots of this mode are not quadrangulations inside the initial ring.
    """
    peeler.twin = []
    peeler.faces = []
    peeler.n_darts = 0
    peeler.parent = {}
    peeler.label = {}
    peeler.rep_dart = {}
    peeler.n_tokens = 0
    peeler.volume = 0
    peeler.boundary_len = 0
    peeler._new_darts(4 * l)
    toks = [peeler._new_token(label=(j % 2)) for j in range(2 * l)]
    slots = []
    for j in range(2 * l):
        # slot dart 2j+1 runs tok[j] -> tok[j+1]; its partner 2j reversed
        s = _Slot(2 * j + 1, 2 * j, toks[j], toks[(j + 1) % (2 * l)])
        slots.append(s)
        peeler.rep_dart[toks[(j + 1) % (2 * l)]] = 2 * j
    for a, b in zip(slots, slots[1:] + slots[:1]):
        a.next = b
        b.prev = a
    peeler.faces.append([s.partner for s in reversed(slots)])
    peeler.boundary_len = 2 * l
    peeler.cursor = slots[0]
    peeler.root_interior = slots[0].partner


def _find_peel_slot(peeler: _Peeler, i: int):
    """First (i+1, i) boundary edge after the end of the contiguous arc of
    (i+2)-labeled vertices; if the arc is empty, the first such edge at or
    after the previous peel position (the cursor)."""
    lab = lambda tok: peeler.label[peeler.find(tok)]
    start = peeler.cursor
    scan = start
    arc_end = None
    s = start
    for _ in range(peeler.boundary_len):
        if lab(s.tail) == i + 2 and lab(s.next.next.tail) != i + 2:
            arc_end = s
            break
        s = s.next
    if arc_end is not None:
        scan = arc_end
    for _ in range(peeler.boundary_len + 1):
        if lab(scan.tail) == i + 1 and lab(scan.head) == i:
            return scan
        scan = scan.next
    raise RuntimeError("no peelable edge found; labels inconsistent")


def _layer_complete(peeler: _Peeler, i: int) -> bool:
    s = peeler.cursor
    for _ in range(peeler.boundary_len):
        if peeler.label[peeler.find(s.tail)] == i:
            return False
        s = s.next
    return True


def extract_filled_quad(trace: PeelTrace, radius: int) -> cmap.BoundaryQuadrangulation:
    """The quadrangulation filling the complement of the lazy hull of the
    given radius in the terminal map; regluing it at the canonical anchor
    reproduces the map exactly."""
    if trace.terminal is None:
        raise RadiusBeyondXi("trace has no terminal map")
    split = cmap.hull_split(trace.terminal, radius)
    if split == cmap.ALL_OF_Q:
        raise RadiusBeyondXi(f"radius {radius} exceeds the largest layer")
    return split.filled


def reweight_check_up_down(n: int, statistic, seed: int,
                           n_finite: int = 200_000, n_infinite: int = 2000,
                           want_volume: bool = True):
    """Both sides of the finite/infinite absolute-continuity identity
    E[F((H,V)_{1..n}) 1{n <= Xi}] = E[(2/H_n^inf) F((H,V)^inf_{1..n})].

    `statistic` maps the (n+1)-row arrays (H, V) (index 0 unused) to a
    number. Returns (MeanCI_finite, MeanCI_infinite).
    """
    from . import _peelfast, rng as qrng, stats

    offs, cdf = _peelfast.volume_tables()
    seeds_f = qrng.child_seeds(seed, n_finite, stream_id=1)
    st, H, V, _ = _peelfast.run_layers_batch(
        seeds_f, False, n, want_volume, offs, cdf, 10**12)
    vals = np.zeros(n_finite)
    for r in np.flatnonzero(st == 0):
        vals[r] = statistic(H[r], V[r])
    lhs = stats.mean_ci(vals)

    seeds_i = qrng.child_seeds(seed, n_infinite, stream_id=2)
    st2, H2, V2, _ = _peelfast.run_layers_batch(
        seeds_i, True, n, want_volume, offs, cdf, 10**12)
    vals2 = np.array([2.0 / H2[r, n] * statistic(H2[r], V2[r])
                      for r in range(n_infinite)])
    rhs = stats.mean_ci(vals2)
    return lhs, rhs


def jump_count_perimeter_estimator(v_path, eps: float, window=None) -> float:
    """phi(eps)^{-1} times the number of jumps exceeding eps in the window.

    v_path is a rescaled hull-volume path (array indexed by time); the
    window is an index interval (lo, hi], defaulting to the whole path.
    """
    v = np.asarray(v_path, dtype=float)
    jumps = np.diff(v)
    if window is not None:
        lo, hi = window
        jumps = jumps[lo:hi]
    count = int((jumps > eps).sum())
    return count / laws.jump_count_normalizer(eps)
