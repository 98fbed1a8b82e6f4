"""Dart-based rooted planar maps.

A map on n_darts darts is a pair of permutations: `twin` (the edge
involution) and `sigma` (the rotation sending a dart to the next dart out of
the same vertex). Faces are the orbits of phi(d) = sigma[twin[d]]; the face
of a dart lies on its left. Vertices and faces are identified with orbit
labels. The outer face of a quadrangulation with boundary is the face on the
right of the root dart for Schaeffer-built maps, and is carried explicitly
otherwise.

Maps are immutable after construction; all surgeries build new maps.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"RMAP"
VERSION = 1

ALL_OF_Q = "ALL_OF_Q"  # extract_hull outcome for radius beyond Xi


class MapError(ValueError):
    pass


class NotInvolution(MapError):
    pass


class NotConnected(MapError):
    pass


class EulerViolation(MapError):
    pass


class PerimeterMismatch(MapError):
    pass


class NonSimpleFace(MapError):
    pass


def perm_orbit_labels(perm: np.ndarray) -> np.ndarray:
    """Label each index with the minimum of its orbit, by pointer doubling."""
    n = len(perm)
    label = np.arange(n, dtype=np.int64)
    hop = perm.astype(np.int64)
    while True:
        new = np.minimum(label, label[hop])
        if np.array_equal(new, label):
            break
        label = new
        hop = hop[hop]
    return label


def _dense(labels: np.ndarray) -> tuple[np.ndarray, int]:
    uniq, dense = np.unique(labels, return_inverse=True)
    return dense.astype(np.int64), len(uniq)


class CombinatorialMap:
    """Validated rooted planar map with optional marked vertices."""

    def __init__(self, twin, sigma, root_dart: int, mark_darts=(), check: bool = True):
        self.twin = np.asarray(twin, dtype=np.int64)
        self.sigma = np.asarray(sigma, dtype=np.int64)
        self.n_darts = len(self.twin)
        self.root_dart = int(root_dart)
        self.mark_darts = tuple(int(d) for d in mark_darts)
        if check:
            self._validate_perms()
        self.phi = self.sigma[self.twin]
        self.vertex_of, self.n_vertices = _dense(perm_orbit_labels(self.sigma))
        self.face_of, self.n_faces = _dense(perm_orbit_labels(self.phi))
        self.n_edges = self.n_darts // 2
        if check:
            self._validate_topology()

    # -- validation -------------------------------------------------------

    def _validate_perms(self):
        n = self.n_darts
        if n == 0 or n % 2:
            raise MapError("dart count must be positive and even")
        for name, p in (("twin", self.twin), ("sigma", self.sigma)):
            if p.shape != (n,) or p.min() < 0 or p.max() >= n:
                raise MapError(f"{name} is not a permutation of [0,{n})")
            if len(np.unique(p)) != n:
                raise MapError(f"{name} is not a bijection")
        if np.any(self.twin[self.twin] != np.arange(n)):
            raise NotInvolution("twin is not an involution")
        if np.any(self.twin == np.arange(n)):
            raise NotInvolution("twin has a fixed point")
        if not (0 <= self.root_dart < n):
            raise MapError("root dart out of range")

    def _validate_topology(self):
        # connectivity of the group generated by twin and sigma
        reach = perm_orbit_labels(self.sigma)
        merged = _union_orbits(reach, self.twin)
        if len(np.unique(merged)) != 1:
            raise NotConnected("map is not connected")
        if self.n_vertices - self.n_edges + self.n_faces != 2:
            raise EulerViolation(
                f"V-E+F = {self.n_vertices}-{self.n_edges}+{self.n_faces} != 2")

    # -- basic queries ----------------------------------------------------

    @property
    def root_vertex(self) -> int:
        return int(self.vertex_of[self.root_dart])

    @property
    def marked_vertices(self) -> tuple[int, ...]:
        return tuple(int(self.vertex_of[d]) for d in self.mark_darts)

    @property
    def pointed_vertex(self) -> int:
        if not self.mark_darts:
            raise MapError("map has no marked vertex")
        return int(self.vertex_of[self.mark_darts[-1]])

    def face_degrees(self) -> np.ndarray:
        return np.bincount(self.face_of, minlength=self.n_faces)

    def vertex_degrees(self) -> np.ndarray:
        return np.bincount(self.vertex_of, minlength=self.n_vertices)

    def face_cycle(self, dart: int) -> list[int]:
        out = [dart]
        d = int(self.phi[dart])
        while d != dart:
            out.append(d)
            d = int(self.phi[d])
        return out

    def first_dart_of_face(self) -> np.ndarray:
        """face id -> one dart on that face."""
        _, first = np.unique(self.face_of, return_index=True)
        return first

    def first_dart_of_vertex(self) -> np.ndarray:
        _, first = np.unique(self.vertex_of, return_index=True)
        return first

    def is_quadrangulation(self) -> bool:
        return bool(np.all(self.face_degrees() == 4))

    def edges(self) -> np.ndarray:
        """(n_edges, 2) vertex pairs; row index doubles as edge id (dart//2 is
        not stable, so edge id = index of the lower dart)."""
        d = np.flatnonzero(np.arange(self.n_darts) < self.twin)
        return np.column_stack([self.vertex_of[d], self.vertex_of[self.twin[d]]])

    def adjacency_csr(self):
        """CSR arrays (indptr, targets) of the vertex adjacency multigraph."""
        src = self.vertex_of
        order = np.argsort(src, kind="stable")
        targets = self.vertex_of[self.twin[order]]
        indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, targets

    # -- distances --------------------------------------------------------

    def bfs_distances(self, source, cap: int | None = None) -> np.ndarray:
        """Hop counts from a vertex (or iterable of vertices); -1 beyond cap."""
        indptr, targets = self.adjacency_csr()
        if np.isscalar(source):
            seeds = np.array([source], dtype=np.int64)
        else:
            seeds = np.asarray(list(source), dtype=np.int64)
        dist = np.full(self.n_vertices, -1, dtype=np.int64)
        dist[seeds] = 0
        frontier = seeds
        level = 0
        while len(frontier) and (cap is None or level < cap):
            level += 1
            counts = indptr[frontier + 1] - indptr[frontier]
            starts = indptr[frontier]
            idx = np.repeat(starts + counts, counts) - _ranges(counts)
            nbrs = targets[idx]
            nbrs = nbrs[dist[nbrs] < 0]
            if not len(nbrs):
                break
            frontier = np.unique(nbrs)
            dist[frontier] = level
        return dist

    # -- canonical form ---------------------------------------------------

    def canonical_relabeling(self) -> np.ndarray:
        """old->new dart relabeling from the deterministic traversal that
        starts at the root and expands sigma before twin. Two rooted maps are
        isomorphic iff their relabeled (twin, sigma) arrays coincide."""
        n = self.n_darts
        old2new = np.full(n, -1, dtype=np.int64)
        new2old = np.empty(n, dtype=np.int64)
        old2new[self.root_dart] = 0
        new2old[0] = self.root_dart
        filled = 1
        k = 0
        sigma, twin = self.sigma, self.twin
        while k < filled:
            d = new2old[k]
            for nb in (sigma[d], twin[d]):
                if old2new[nb] < 0:
                    old2new[nb] = filled
                    new2old[filled] = nb
                    filled += 1
            k += 1
        if filled != n:
            raise NotConnected("canonical traversal did not reach all darts")
        return old2new

    def canonical_key(self, extra_faces=()) -> bytes:
        """Canonical bytes for rooted-map isomorphism, marks included.

        Marked vertices canonicalize to the least relabeled dart of their
        rotation orbit; `extra_faces` (darts) stamp distinguished faces via
        their face orbits, e.g. the outer face of a boundary map.
        """
        old2new = self.canonical_relabeling()
        new2old = np.argsort(old2new)
        twin_new = old2new[self.twin[new2old]]
        sigma_new = old2new[self.sigma[new2old]]
        marks = [_orbit_min_new(self.sigma, d, old2new) for d in self.mark_darts]
        marks += [_orbit_min_new(self.phi, d, old2new) for d in extra_faces]
        head = struct.pack("<II", self.n_darts, len(marks))
        return (head + twin_new.astype("<u4").tobytes()
                + sigma_new.astype("<u4").tobytes()
                + np.asarray(marks, dtype="<u4").tobytes())

    # -- serialization ----------------------------------------------------

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(MAGIC)
        buf.write(struct.pack("<III", VERSION, self.n_darts, 0))
        buf.write(self.twin.astype("<u4").tobytes())
        buf.write(self.sigma.astype("<u4").tobytes())
        buf.write(struct.pack("<II", self.root_dart, len(self.mark_darts)))
        buf.write(np.asarray(self.mark_darts, dtype="<u4").tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CombinatorialMap":
        if blob[:4] != MAGIC:
            raise MapError("bad magic")
        version, n, _flags = struct.unpack_from("<III", blob, 4)
        if version != VERSION:
            raise MapError(f"unsupported version {version}")
        off = 16
        twin = np.frombuffer(blob, dtype="<u4", count=n, offset=off).astype(np.int64)
        off += 4 * n
        sigma = np.frombuffer(blob, dtype="<u4", count=n, offset=off).astype(np.int64)
        off += 4 * n
        root, nm = struct.unpack_from("<II", blob, off)
        off += 8
        marks = np.frombuffer(blob, dtype="<u4", count=nm, offset=off).astype(np.int64)
        return cls(twin, sigma, root, marks)

    def to_json(self) -> str:
        return json.dumps({
            "n_darts": self.n_darts,
            "twin": self.twin.tolist(),
            "next_at_vertex": self.sigma.tolist(),
            "root_dart": self.root_dart,
            "mark_darts": list(self.mark_darts),
        })

    @classmethod
    def from_json(cls, text: str) -> "CombinatorialMap":
        obj = json.loads(text)
        return cls(obj["twin"], obj["next_at_vertex"], obj["root_dart"],
                   obj.get("mark_darts", ()))

    def __repr__(self):
        return (f"CombinatorialMap(V={self.n_vertices}, E={self.n_edges}, "
                f"F={self.n_faces}, root={self.root_dart})")


def _ranges(counts: np.ndarray) -> np.ndarray:
    # concatenation of ranges(1..c) per count, used to gather CSR slices
    if not len(counts):
        return np.empty(0, dtype=np.int64)
    total = int(counts.sum())
    out = np.ones(total, dtype=np.int64)
    ends = np.cumsum(counts)
    out[0] = 1
    out[ends[:-1]] = 1 - counts[:-1]
    return np.cumsum(out)


def _union_orbits(labels: np.ndarray, perm: np.ndarray) -> np.ndarray:
    # merge orbit labels across an extra permutation until stable
    lab = labels.copy()
    while True:
        new = np.minimum(lab, lab[perm])
        # propagate within existing orbits: min over label classes
        mins = np.full(lab.max() + 1, np.iinfo(np.int64).max)
        np.minimum.at(mins, lab, new)
        new = mins[lab]
        if np.array_equal(new, lab):
            return lab
        lab = new


def _orbit_min_new(sigma: np.ndarray, dart: int, old2new: np.ndarray) -> int:
    best = int(old2new[dart])
    d = int(sigma[dart])
    while d != dart:
        if old2new[d] < best:
            best = int(old2new[d])
        d = int(sigma[d])
    return best


def build_map(n_darts: int, twin, next_at_vertex, root_dart: int,
              mark_darts=()) -> CombinatorialMap:
    """Validate and build; raises NotInvolution / NotConnected / EulerViolation."""
    twin = np.asarray(twin)
    if len(twin) != n_darts:
        raise MapError("n_darts does not match twin length")
    return CombinatorialMap(twin, next_at_vertex, root_dart, mark_darts)


def map_from_faces(twin, face_cycles, root_dart: int, mark_darts=(),
                   check: bool = True) -> CombinatorialMap:
    """Build a map from its twin involution and the list of face cycles.

    Each cycle lists darts in face-walk order (face on the left); sigma is
    recovered as phi o twin.
    """
    twin = np.asarray(twin, dtype=np.int64)
    n = len(twin)
    phi = np.full(n, -1, dtype=np.int64)
    for cyc in face_cycles:
        cyc = np.asarray(cyc, dtype=np.int64)
        phi[cyc] = np.roll(cyc, -1)
    if np.any(phi < 0):
        raise MapError("face cycles do not cover all darts")
    sigma = phi[twin]
    return CombinatorialMap(twin, sigma, root_dart, mark_darts, check=check)


@dataclass
class BoundaryQuadrangulation:
    """A quadrangulation whose faces are all 4-gons except one outer face.

    For Schaeffer-built maps the root dart lies on the boundary with the
    outer face on its right; hulls keep the root of the ambient map, which
    may be interior, so the outer face is carried explicitly.
    """

    map: CombinatorialMap
    outer_face: int
    _outer_dart: int = field(default=-1)

    def __post_init__(self):
        if self._outer_dart < 0:
            hit = np.flatnonzero(self.map.face_of == self.outer_face)
            if not len(hit):
                raise MapError("outer face id not present")
            self._outer_dart = int(hit[0])

    @property
    def perimeter(self) -> int:
        return int((self.map.face_of == self.outer_face).sum())

    @property
    def n_inner_faces(self) -> int:
        return self.map.n_faces - 1

    @property
    def pointed_vertex(self) -> int:
        return self.map.pointed_vertex

    def outer_cycle(self) -> list[int]:
        return self.map.face_cycle(self._outer_dart)

    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.map.vertex_of[np.asarray(self.outer_cycle())])

    def validate(self, require_even: bool = True):
        deg = self.map.face_degrees()
        inner = np.delete(deg, self.outer_face)
        if np.any(inner != 4):
            raise MapError("an inner face is not a quadrilateral")
        if require_even and deg[self.outer_face] % 2:
            raise MapError("outer face degree is odd")

    def canonical_key(self) -> bytes:
        return self.map.canonical_key(extra_faces=(self._outer_dart,))


def boundary_quad_from_root(m: CombinatorialMap) -> BoundaryQuadrangulation:
    """Wrap a map rooted on its boundary: outer face = right of the root dart."""
    outer = int(m.face_of[m.twin[m.root_dart]])
    bq = BoundaryQuadrangulation(m, outer, _outer_dart=int(m.twin[m.root_dart]))
    return bq


# ---------------------------------------------------------------------------
# gluing a quadrangulation with a boundary into a simple face
# ---------------------------------------------------------------------------

def glue_boundary_into_face(host: CombinatorialMap, face: int, anchor_dart: int,
                            patch: BoundaryQuadrangulation) -> CombinatorialMap:
    """Glue `patch` into the simple face `face` of `host`.

    The patch root edge lands on `anchor_dart` (which must have `face` on its
    left), oriented the same way. Pendant patch boundary edges identify pairs
    of host boundary edges through the patch, which the twin-chasing below
    resolves. Marks of both maps are carried over; the patch pointed vertex
    (if any) becomes the last mark of the result.
    """
    if host.face_of[anchor_dart] != face:
        raise MapError("anchor dart does not border the requested face")
    hole = host.face_cycle(anchor_dart)
    k2 = len(hole)
    if len(np.unique(host.vertex_of[np.asarray(hole)])) != k2:
        raise NonSimpleFace("host face boundary is not simple")
    if patch.perimeter != k2:
        raise PerimeterMismatch(f"face degree {k2} != patch perimeter {patch.perimeter}")
    pm = patch.map
    o0 = int(pm.twin[pm.root_dart])
    if pm.face_of[o0] != patch.outer_face:
        raise MapError("patch root dart does not have the outer face on its right")
    owalk = pm.face_cycle(o0)

    nh, npd = host.n_darts, pm.n_darts
    deleted = np.zeros(nh + npd, dtype=bool)
    mu = np.full(nh + npd, -1, dtype=np.int64)
    for i, a in enumerate(hole):
        o = owalk[(-i) % k2] + nh
        deleted[a] = True
        deleted[o] = True
        mu[a] = o
        mu[o] = a

    def own_twin(d):
        return int(host.twin[d]) if d < nh else int(pm.twin[d - nh]) + nh

    keep = ~deleted
    new_id = np.cumsum(keep) - 1
    twin_new = np.full(int(keep.sum()), -1, dtype=np.int64)
    for d in np.flatnonzero(keep):
        x = own_twin(d)
        while deleted[x]:
            x = own_twin(mu[x])
        twin_new[new_id[d]] = new_id[x]

    cycles = []
    host_reps = host.first_dart_of_face()
    for f in range(host.n_faces):
        if f == face:
            continue
        cycles.append(new_id[host.face_cycle(int(host_reps[f]))])
    patch_reps = pm.first_dart_of_face()
    for f in range(pm.n_faces):
        if f == patch.outer_face:
            continue
        cycles.append(new_id[np.asarray(pm.face_cycle(int(patch_reps[f]))) + nh])

    def carry(d):
        # representative dart of a vertex, surviving the surgery
        if not deleted[d]:
            return int(new_id[d])
        if d < nh:  # host dart on the hole: twin of the previous hole dart
            i = hole.index(d)
            return int(new_id[host.twin[hole[i - 1]]])
        j = owalk.index(d - nh)
        a = hole[(-j) % k2]
        return int(new_id[host.twin[a]])

    marks = [carry(d) for d in host.mark_darts]
    marks += [carry(d + nh) for d in pm.mark_darts]
    if deleted[host.root_dart]:
        raise MapError("cannot glue into the face bordered by the root dart")
    return map_from_faces(
        _twin_pairs_ok(twin_new), cycles, int(new_id[host.root_dart]), marks)


def _twin_pairs_ok(twin_new: np.ndarray) -> np.ndarray:
    if np.any(twin_new < 0) or np.any(twin_new[twin_new] != np.arange(len(twin_new))):
        raise MapError("twin resolution failed")
    return twin_new


# ---------------------------------------------------------------------------
# dagger: close a boundary quadrangulation with an apex vertex
# ---------------------------------------------------------------------------

def dagger(bq: BoundaryQuadrangulation) -> CombinatorialMap:
    """Close the boundary with an apex joined to every second outer corner.

    The outer face of degree 2k is cut into k quadrilaterals by k new edges
    from a fresh vertex to the corners c_0, c_2, ..., c_{2k-2}, where c_0 is
    the root corner. The result is a rooted, pointed quadrangulation rooted
    at the apex-to-c_0 edge, marked (apex, old pointed vertex).
    """
    m = bq.map
    o0 = int(m.sigma[m.root_dart])
    if m.face_of[o0] != bq.outer_face:
        raise MapError("root corner is not on the outer face")
    owalk = m.face_cycle(o0)
    k2 = len(owalk)
    if k2 % 2:
        raise MapError("odd perimeter")
    k = k2 // 2
    n = m.n_darts
    # new darts: g_i = n + 2i (apex -> c_{2i}), gbar_i = n + 2i + 1
    twin = np.concatenate([m.twin, np.arange(n, n + 2 * k)])
    twin[n:n + 2 * k] = np.arange(n, n + 2 * k).reshape(-1, 2)[:, ::-1].ravel()
    cycles = []
    for f in range(m.n_faces):
        if f == bq.outer_face:
            continue
        rep = int(np.flatnonzero(m.face_of == f)[0])
        cycles.append(m.face_cycle(rep))
    for i in range(k):
        g = n + 2 * i
        gbar_next = n + 2 * ((i + 1) % k) + 1
        cycles.append([g, owalk[2 * i], owalk[2 * i + 1], gbar_next])
    marks = [n] + [int(d) for d in m.mark_darts]
    return map_from_faces(twin, cycles, n, marks)


# ---------------------------------------------------------------------------
# hulls: direct extraction from a rooted pointed quadrangulation
# ---------------------------------------------------------------------------

@dataclass
class HullSplit:
    """Result of cutting a rooted pointed quadrangulation along the lazy hull
    boundary of a given radius."""

    hull: BoundaryQuadrangulation
    filled: BoundaryQuadrangulation
    radius: int
    half_perimeter: int
    interior_vertices: np.ndarray  # ambient-map vertex ids strictly inside the hull
    anchor_slot: int  # ambient dart carried by the hull boundary edge that anchors regluing
    hull_dart_src: np.ndarray  # hull dart -> ambient source dart (boundary copies share slots)
    fill_dart_src: np.ndarray  # filled dart -> ambient dart

    def anchor_bdart(self) -> int:
        """Hull boundary dart (outer face on its left) to glue the filled
        part back onto; glue_boundary_into_face(hull.map, hull.outer_face,
        anchor_bdart(), filled) reproduces the ambient map."""
        cand = np.flatnonzero(self.hull_dart_src == self.anchor_slot)
        for d in cand:
            if self.hull.map.face_of[d] == self.hull.outer_face:
                return int(d)
        raise MapError("anchor boundary dart not found")

    def reglue(self) -> CombinatorialMap:
        return glue_boundary_into_face(self.hull.map, self.hull.outer_face,
                                       self.anchor_bdart(), self.filled)


def hull_split(q: CombinatorialMap, radius: int):
    """Lazy hull of the given radius and the quadrangulation filling it.

    Returns ALL_OF_Q when the radius exceeds the largest completed layer.
    The hull keeps the ambient root; the filled part keeps the pointed
    vertex and is rooted so that regluing it at the anchor reproduces q.
    """
    if radius < 1:
        raise MapError("radius >= 1 required")
    dist = q.bfs_distances(q.root_vertex)
    lo = np.flatnonzero(np.arange(q.n_darts) < q.twin)
    ends_u = q.vertex_of[lo]
    ends_v = q.vertex_of[q.twin[lo]]
    in_ball = (dist[ends_u] <= radius) & (dist[ends_v] <= radius)

    # absorb complement components not containing the pointed vertex
    parent = np.arange(q.n_vertices, dtype=np.int64)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in zip(ends_u[~in_ball], ends_v[~in_ball]):
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    xi_root = find(q.pointed_vertex)
    outside = np.fromiter((find(u) == xi_root for u in ends_u[~in_ball]),
                          dtype=bool, count=int((~in_ball).sum()))
    kept = in_ball.copy()          # kept = edges of A'_radius (dual skeleton)
    kept[np.flatnonzero(~in_ball)[~outside]] = True
    if kept.all():
        return ALL_OF_Q

    edge_kept = np.zeros(q.n_darts, dtype=bool)  # per dart
    edge_kept[lo[kept]] = True
    edge_kept[q.twin[lo[kept]]] = True

    hull_face = np.zeros(q.n_faces, dtype=bool)
    np.logical_or.at(hull_face, q.face_of[edge_kept], True)
    if not hull_face[q.face_of[q.root_dart]]:
        raise MapError("root face fell outside the hull")

    is_hull_dart = hull_face[q.face_of]
    slots = np.flatnonzero(is_hull_dart & ~edge_kept)
    if len(slots) % 2:
        raise MapError("odd hull boundary length")

    def spin(d):
        x = int(q.phi[d])
        while edge_kept[x]:
            x = int(q.phi[q.twin[x]])
        return x

    # boundary walk: must close into a single cycle (simple-boundary property)
    walk = [int(slots[0])]
    seen = {int(slots[0])}
    while True:
        nxt = spin(walk[-1])
        if nxt == walk[0]:
            break
        if nxt in seen:
            raise MapError("hull boundary is not a single cycle")
        walk.append(nxt)
        seen.add(nxt)
    if len(walk) != len(slots):
        raise MapError("hull boundary misses slots")

    hull_map, hull_src, hull_bdart0 = _build_hull(q, is_hull_dart, edge_kept, walk)
    filled_bq, fill_src = _build_filled(q, is_hull_dart, edge_kept, walk)
    anchor_slot = _anchor_slot(q, hull_map, hull_src, walk)
    fill_root_src = int(q.twin[anchor_slot])
    filled_bq = _reroot_filled(filled_bq, fill_src, fill_root_src)

    outer_hull = int(hull_map.face_of[hull_bdart0])
    boundary_verts = np.unique(hull_map.vertex_of[hull_map.face_of == outer_hull])
    first_dart = hull_map.first_dart_of_vertex()
    interior_new = np.setdiff1d(np.arange(hull_map.n_vertices), boundary_verts)
    interior = np.unique(q.vertex_of[hull_src[first_dart[interior_new]]])
    hull_bq = BoundaryQuadrangulation(hull_map, outer_hull)
    return HullSplit(
        hull=hull_bq,
        filled=filled_bq,
        radius=radius,
        half_perimeter=len(walk) // 2,
        interior_vertices=interior.astype(np.int64),
        anchor_slot=anchor_slot,
        hull_dart_src=hull_src,
        fill_dart_src=fill_src,
    )


def _build_hull(q, is_hull_dart, edge_kept, walk):
    face_darts = np.flatnonzero(is_hull_dart)
    new_id = np.full(q.n_darts, -1, dtype=np.int64)
    new_id[face_darts] = np.arange(len(face_darts))
    nb = len(face_darts)
    m = len(walk)
    b_id = {d: nb + i for i, d in enumerate(walk)}
    total = nb + m
    twin = np.full(total, -1, dtype=np.int64)
    src = np.full(total, -1, dtype=np.int64)
    src[:nb] = face_darts
    for i, d in enumerate(walk):
        src[nb + i] = d  # ambient dart whose copy this boundary dart is
    for d in face_darts:
        if edge_kept[d]:
            twin[new_id[d]] = new_id[q.twin[d]]
        else:
            twin[new_id[d]] = b_id[int(d)]
            twin[b_id[int(d)]] = new_id[d]
    cycles = []
    done = np.zeros(q.n_faces, dtype=bool)
    for d in face_darts:
        f = q.face_of[d]
        if not done[f]:
            done[f] = True
            cycles.append(new_id[q.face_cycle(int(d))])
    outer = [b_id[walk[0]]] + [b_id[d] for d in walk[:0:-1]]
    cycles.append(outer)
    hull_map = map_from_faces(twin, cycles, int(new_id[q.root_dart]),
                              mark_darts=())
    return hull_map, src, b_id[walk[0]]


def _build_filled(q, is_hull_dart, edge_kept, walk):
    fill_darts = np.flatnonzero(~edge_kept)
    new_id = np.full(q.n_darts, -1, dtype=np.int64)
    new_id[fill_darts] = np.arange(len(fill_darts))
    twin = new_id[q.twin[fill_darts]]
    cycles = []
    done = np.zeros(q.n_faces, dtype=bool)
    for d in fill_darts:
        f = q.face_of[d]
        if is_hull_dart[d]:
            continue
        if not done[f]:
            done[f] = True
            cycles.append(new_id[q.face_cycle(int(d))])
    cycles.append(new_id[np.asarray(walk)])
    # pointed vertex: any dart at the ambient pointed vertex inside the fill
    xi = q.pointed_vertex
    cand = fill_darts[q.vertex_of[fill_darts] == xi]
    if not len(cand):
        raise MapError("pointed vertex is not in the filled part")
    fmap = map_from_faces(twin, cycles, int(new_id[walk[0]]),
                          mark_darts=(int(new_id[cand[0]]),))
    outer = int(fmap.face_of[new_id[walk[0]]])
    return BoundaryQuadrangulation(fmap, outer), fill_darts


def _anchor_slot(q, hull_map, hull_src, walk) -> int:
    """Deterministic regluing anchor: the walk slot whose boundary copy has
    the least canonical dart id in the hull."""
    old2new = hull_map.canonical_relabeling()
    n_face_darts = hull_map.n_darts - len(walk)
    b_new = old2new[n_face_darts:]
    return int(walk[int(np.argmin(b_new))])


def _reroot_filled(bq: BoundaryQuadrangulation, src, root_src_dart):
    new_root = int(np.flatnonzero(src == root_src_dart)[0])
    m = bq.map
    remapped = CombinatorialMap(m.twin, m.sigma, new_root, m.mark_darts, check=False)
    return BoundaryQuadrangulation(remapped, bq.outer_face)


def extract_hull(q: CombinatorialMap, radius: int):
    """Lazy hull of the given radius, or ALL_OF_Q if the radius is too large."""
    split = hull_split(q, radius)
    if split == ALL_OF_Q:
        return ALL_OF_Q
    return split.hull


# ---------------------------------------------------------------------------
# ball complements
# ---------------------------------------------------------------------------

def ball_complement_components(q: CombinatorialMap, center: int, r: int,
                               proximity_radii=()) -> list[dict]:
    """Components of the subgraph induced on {v : d(center, v) > r}.

    Each component reports its vertex set, the subset adjacent to the ball
    (its boundary), and counts #{v : d(v, boundary) < s} for each requested s.
    """
    dist = q.bfs_distances(center)
    outside = dist > r
    if not outside.any():
        return []
    parent = np.arange(q.n_vertices, dtype=np.int64)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = q.edges()
    for u, v in edges:
        if outside[u] and outside[v]:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
    comp_of = {}
    for v in np.flatnonzero(outside):
        comp_of.setdefault(find(v), []).append(int(v))
    boundary = np.zeros(q.n_vertices, dtype=bool)
    for u, v in edges:
        if outside[u] != outside[v]:
            boundary[u if outside[u] else v] = True
    out = []
    for verts in comp_of.values():
        verts_arr = np.asarray(verts)
        comp_boundary = verts_arr[boundary[verts_arr]]
        entry = {"vertices": verts_arr, "boundary": comp_boundary, "near_counts": {}}
        if len(comp_boundary) and proximity_radii:
            mask = np.zeros(q.n_vertices, dtype=bool)
            mask[verts_arr] = True
            bd = _restricted_bfs(q, comp_boundary, mask)
            for s in proximity_radii:
                entry["near_counts"][int(s)] = int(((bd >= 0) & (bd < s)).sum())
        out.append(entry)
    out.sort(key=lambda e: -len(e["vertices"]))
    return out


def _restricted_bfs(q, seeds, mask):
    indptr, targets = q.adjacency_csr()
    dist = np.full(q.n_vertices, -1, dtype=np.int64)
    dist[seeds] = 0
    frontier = np.asarray(seeds)
    level = 0
    while len(frontier):
        level += 1
        counts = indptr[frontier + 1] - indptr[frontier]
        idx = np.repeat(indptr[frontier] + counts, counts) - _ranges(counts)
        nbrs = targets[idx]
        nbrs = nbrs[mask[nbrs] & (dist[nbrs] < 0)]
        if not len(nbrs):
            break
        frontier = np.unique(nbrs)
        dist[frontier] = level
    return dist
