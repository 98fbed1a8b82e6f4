"""Discrete snakes and the label-based metrics.

A discrete snake is a pair of paths (zeta_j, what_j), j = 0..sigma, with
zeta the contour height of a plane tree (or reflected forest walk) and what
the label of the visited vertex. All metric functionals are computed from
cyclic interval minima of the label path:

  D0(a, b)     = Z_a + Z_b - 2 max(min over [a,b], min over [b,a])
  D            = largest pseudo-metric below D0 (shortest-path closure)
  Delta0(a, b) = D0 when one of the two interval minima is > 0, else +inf
  Delta        = closure of Delta0 (points with positive labels)
  dagger(d)    = min(d(x,y), d(x,boundary) + d(y,boundary))

Intervals are taken over positions; for endpoints with label 0 the interval
excludes the endpoint itself, which implements the boundary limit rule
(two boundary points are at Delta distance 0 iff one of the open intervals
between them has positive labels).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import trees as trees_mod
from .trees import LabeledForestWithBridge, LabeledTree, PlaneTree, reroot_contour


class CapExceeded(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass
class DiscreteSnake:
    zeta: np.ndarray            # length sigma+1, zeta[0] = zeta[sigma] = 0
    what: np.ndarray            # tip labels along the contour
    tree_projection: np.ndarray  # position -> vertex id
    parent: np.ndarray | None = None   # vertex parents (forest roots: -1)
    _rmq: object = field(default=None, repr=False)

    def __post_init__(self):
        self.zeta = np.asarray(self.zeta, dtype=np.int64)
        self.what = np.asarray(self.what, dtype=np.int64)
        self.tree_projection = np.asarray(self.tree_projection, dtype=np.int64)
        if not (self.zeta[0] == 0 and self.zeta[-1] == 0):
            raise ValueError("zeta must start and end at 0")
        if np.any(np.abs(np.diff(self.zeta)) > 1) or np.any(self.zeta < 0):
            raise ValueError("zeta must be a nonnegative +-1/0 walk")
        if len(self.what) != len(self.zeta) or len(self.tree_projection) != len(self.zeta):
            raise ValueError("path length mismatch")

    @property
    def sigma(self) -> int:
        return len(self.zeta) - 1

    @property
    def min_label(self) -> int:
        return int(self.what.min())

    def argmin_label(self) -> int:
        return int(np.argmin(self.what))

    def vertex_labels(self) -> np.ndarray:
        n_v = int(self.tree_projection.max()) + 1
        out = np.zeros(n_v, dtype=np.int64)
        out[self.tree_projection] = self.what
        return out

    def visits(self, vertex: int) -> np.ndarray:
        return np.flatnonzero(self.tree_projection == vertex)

    # -- cyclic range-minimum queries over the label path -------------------

    def _table(self):
        if self._rmq is None:
            n = self.sigma
            doubled = np.concatenate([self.what[:n], self.what[:n]])
            levels = [doubled]
            k = 1
            while k < n:
                prev = levels[-1]
                levels.append(np.minimum(prev[:-k], prev[k:]))
                k *= 2
            self._rmq = levels
        return self._rmq

    def range_min(self, i, j):
        """Min of the label path over cyclic positions i..j inclusive
        (walking forward from i to j); vectorized over arrays."""
        n = self.sigma
        i = np.asarray(i, dtype=np.int64) % n
        j = np.asarray(j, dtype=np.int64) % n
        length = (j - i) % n + 1
        levels = self._table()
        k = np.maximum(np.int64(np.log2(length)), 0)
        pow2 = np.int64(1) << k
        lev = np.minimum(k, len(levels) - 1)
        out = np.empty(np.broadcast(i, j).shape, dtype=np.int64)
        flat_i = np.broadcast_to(i, out.shape).ravel()
        flat_j = np.broadcast_to((i + length - pow2) % (2 * n), out.shape).ravel()
        flat_l = np.broadcast_to(lev, out.shape).ravel()
        res = out.ravel()
        for level in np.unique(flat_l):
            mask = flat_l == level
            tab = levels[level]
            res[mask] = np.minimum(tab[flat_i[mask]], tab[flat_j[mask]])
        return res.reshape(out.shape)

    def to_csv(self) -> str:
        lines = ["j,zeta,what"]
        for j in range(len(self.zeta)):
            lines.append(f"{j},{self.zeta[j]},{self.what[j]}")
        return "\n".join(lines) + "\n"


def snake_from_labeled_tree(lt: LabeledTree) -> DiscreteSnake:
    C, L = trees_mod.contour_label_functions(lt)
    cv = lt.tree.contour_vertices()
    return DiscreteSnake(C, L, cv, parent=lt.tree.parent.copy())


def snake_from_forest_bridge(fb: LabeledForestWithBridge) -> DiscreteSnake:
    """Composite-label snake of a labeled forest with bridge.

    zeta is the reflected forest walk (height above the running floor), so
    distinct tree roots stay distinct through tree_projection while zeta
    returns to 0 at every floor visit.
    """
    C, L, cv, ct = trees_mod.forest_contour(fb)
    runmin = np.minimum.accumulate(C)
    zeta = C - runmin
    proj = np.concatenate([cv, [cv[0]]])
    parent = _forest_parent(fb)
    return DiscreteSnake(zeta, L, proj, parent=parent)


def nonnegative_snake_from_forest(fb: LabeledForestWithBridge,
                                  vertex_labels) -> DiscreteSnake:
    """Forest snake with externally supplied nonnegative vertex labels
    (e.g. graph distances to the boundary), the discrete stand-in for the
    positive-excursion coding of a disk."""
    C, L, cv, ct = trees_mod.forest_contour(fb)
    runmin = np.minimum.accumulate(C)
    zeta = C - runmin
    lab = np.asarray(vertex_labels, dtype=np.int64)
    what = np.concatenate([lab[cv], [lab[cv[0]]]])
    if what.min() < 0:
        raise DomainError("labels must be nonnegative")
    proj = np.concatenate([cv, [cv[0]]])
    return DiscreteSnake(zeta, what, proj, parent=_forest_parent(fb))


def _forest_parent(fb: LabeledForestWithBridge) -> np.ndarray:
    parts = []
    off = 0
    for lt in fb.trees:
        p = lt.tree.parent.copy()
        p[1:] += off
        parts.append(p)
        off += lt.tree.n_vertices
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# interval pseudo-distances
# ---------------------------------------------------------------------------

def d_circ_index(s: DiscreteSnake, i, j):
    """D0 between positions (vectorized); cyclic closed-interval minima."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    n = s.sigma
    zi = s.what[i % n]
    zj = s.what[j % n]
    m1 = s.range_min(i, j)
    m2 = s.range_min(j, i)
    out = zi + zj - 2 * np.maximum(m1, m2)
    return np.where((i % n) == (j % n), 0, out)


def d_circ(s: DiscreteSnake, a: int, b: int) -> int:
    """D0 between tree vertices: interval minima over the inclusion-smallest
    lexicographic interval (the visit pair with the shortest cyclic gap)."""
    if a == b:
        return 0
    n = s.sigma
    va = s.visits(a) % n
    vb = s.visits(b) % n
    va = np.unique(va)
    vb = np.unique(vb)
    gaps = (vb[None, :] - va[:, None]) % n
    ia, ib = np.unravel_index(np.argmin(gaps), gaps.shape)
    m1 = int(s.range_min(va[ia], vb[ib]))
    gaps2 = (va[:, None] - vb[None, :]) % n
    ib2, ia2 = np.unravel_index(np.argmin(gaps2.T), gaps2.T.shape)
    m2 = int(s.range_min(vb[ib2], va[ia2]))
    za = int(s.what[va[0]])
    zb = int(s.what[vb[0]])
    return za + zb - 2 * max(m1, m2)


def delta_circ_index(s: DiscreteSnake, i, j):
    """Boundary-avoiding interval distance between positions (vectorized).

    Intervals exclude zero-labeled endpoints (the boundary limit rule);
    +inf when both interval minima touch 0.
    """
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    n = s.sigma
    im = i % n
    jm = j % n
    zi = s.what[im]
    zj = s.what[jm]
    lo1 = np.where(zi == 0, im + 1, im)
    hi1 = np.where(zj == 0, jm - 1, jm)
    m1 = _open_range_min(s, lo1, hi1, im, jm)
    lo2 = np.where(zj == 0, jm + 1, jm)
    hi2 = np.where(zi == 0, im - 1, im)
    m2 = _open_range_min(s, lo2, hi2, jm, im)
    best = np.maximum(m1, m2)
    big = np.iinfo(np.int64).max // 4
    # an empty interval only arises for contour-adjacent boundary points,
    # which the limit rule identifies
    val = np.where(best >= big, np.abs(zi - zj),
                   np.where(best > 0, zi + zj - 2 * np.minimum(best, big),
                            np.iinfo(np.int64).max))
    same = im == jm
    return np.where(same, 0, val)


def _open_range_min(s, lo, hi, orig_lo, orig_hi):
    """Range min over lo..hi cyclic, treating reversed (empty) ranges as
    +inf; ranges here shrink by at most one index at each end."""
    n = s.sigma
    length_orig = (np.asarray(orig_hi) - np.asarray(orig_lo)) % n + 1
    shrink = (np.asarray(lo) - np.asarray(orig_lo)) % n + (np.asarray(orig_hi) - np.asarray(hi)) % n
    empty = length_orig <= shrink
    safe_lo = np.where(empty, 0, np.asarray(lo) % n)
    safe_hi = np.where(empty, 0, np.asarray(hi) % n)
    mins = s.range_min(safe_lo, safe_hi)
    big = np.iinfo(np.int64).max // 4
    return np.where(empty, big, mins)


def delta_circ(s: DiscreteSnake, a: int, b: int):
    """Delta0 between positive-label tree vertices; DomainError outside."""
    lab = s.vertex_labels()
    if lab[a] <= 0 or lab[b] <= 0:
        raise DomainError("delta_circ requires positive labels at both points")
    if a == b:
        return 0
    n = s.sigma
    va, vb = s.visits(a) % n, s.visits(b) % n
    gaps = (vb[None, :] - va[:, None]) % n
    ia, ib = np.unravel_index(np.argmin(gaps), gaps.shape)
    m1 = int(s.range_min(va[ia], vb[ib]))
    gaps2 = (va[None, :] - vb[:, None]) % n
    ib2, ia2 = np.unravel_index(np.argmin(gaps2), gaps2.shape)
    m2 = int(s.range_min(vb[ib2], va[ia2]))
    if max(m1, m2) <= 0:
        return np.inf
    return int(lab[a] + lab[b] - 2 * max(m1, m2))


# ---------------------------------------------------------------------------
# metric closure and derived metrics
# ---------------------------------------------------------------------------

def metric_closure(base: np.ndarray) -> np.ndarray:
    """Largest pseudo-metric below the symmetric base matrix: all-pairs
    shortest paths (Floyd-Warshall with numpy row/column relaxation)."""
    d = np.array(base, dtype=float)
    if d.shape[0] != d.shape[1]:
        raise ValueError("square matrix required")
    np.fill_diagonal(d, 0.0)
    n = d.shape[0]
    for k in range(n):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    return d


def dagger_metric(base: np.ndarray, boundary_dist) -> np.ndarray:
    """Identify the boundary: d'(x,y) = min(d(x,y), d(x,B) + d(y,B))."""
    b = np.asarray(boundary_dist, dtype=float)
    d = np.asarray(base, dtype=float)
    if len(b) != d.shape[0]:
        raise ValueError("boundary_dist length mismatch")
    out = np.minimum(d, b[:, None] + b[None, :])
    np.fill_diagonal(out, 0.0)
    return out


def truncate(s: DiscreteSnake, y) -> DiscreteSnake:
    """Truncation at level y: keep positions whose vertex has every strict
    ancestor labeled > y (the ancestral path reaches the tip before
    touching y)."""
    if s.parent is None:
        raise ValueError("snake carries no tree structure")
    if not y < s.what[0]:
        raise DomainError("truncation level must be below the initial label")
    lab = s.vertex_labels()
    n_v = len(s.parent)
    anc_min = np.full(n_v, np.iinfo(np.int64).max, dtype=np.int64)
    for v in range(n_v):
        p = s.parent[v]
        if p >= 0:
            anc_min[v] = min(anc_min[p], lab[p])
    keep_vertex = anc_min > y
    keep_pos = keep_vertex[s.tree_projection]
    if not keep_pos.all():
        zeta = s.zeta[keep_pos]
        what = s.what[keep_pos]
        proj = s.tree_projection[keep_pos]
    else:
        zeta, what, proj = s.zeta, s.what, s.tree_projection
    return DiscreteSnake(zeta, what, proj, parent=s.parent)


def retained_indices(s: DiscreteSnake, y) -> np.ndarray:
    """The index set kept by truncate(s, y); separated out for oracles."""
    if s.parent is None:
        raise ValueError("snake carries no tree structure")
    lab = s.vertex_labels()
    n_v = len(s.parent)
    anc_min = np.full(n_v, np.iinfo(np.int64).max, dtype=np.int64)
    for v in range(n_v):
        p = s.parent[v]
        if p >= 0:
            anc_min[v] = min(anc_min[p], lab[p])
    return np.flatnonzero((anc_min > y)[s.tree_projection])


def reroot_snake(s: DiscreteSnake, r: int) -> DiscreteSnake:
    """Snake re-rooted at position r: zeta'_j = d_zeta(r, r+j), labels
    shifted to start at 0; an exact involution with reroot at sigma - r."""
    n = s.sigma
    if not 0 <= r <= n:
        raise ValueError("r out of range")
    Ct, Lt = reroot_contour(s.zeta, s.what, r)
    idx = (r + np.arange(n + 1))
    idx = np.where(idx <= n, idx, idx - n)
    proj = s.tree_projection[idx]
    parent = None
    if np.all(np.abs(np.diff(Ct)) == 1):
        parent = PlaneTree.from_dyck(np.diff(Ct)).parent
        new_tree = PlaneTree(parent)
        proj = new_tree.contour_vertices()
    return DiscreteSnake(Ct, Lt, proj, parent=parent)


def exit_local_time_estimate(s: DiscreteSnake, eps: float) -> np.ndarray:
    """Cumulative near-boundary occupation eps^{-2} #{j <= t : what_j < eps}
    of a nonnegative snake; nondecreasing in t."""
    if s.what.min() < 0:
        raise DomainError("nonnegative snake required")
    hits = (s.what < eps).astype(float)
    return np.cumsum(hits) / eps**2


def boundary_loop_order(s: DiscreteSnake) -> np.ndarray:
    """Zero-label vertices in contour order of first visit (the discrete
    boundary loop)."""
    if s.what.min() < 0:
        raise DomainError("nonnegative snake required")
    zero_pos = np.flatnonzero(s.what[:-1] == 0)
    seen = set()
    order = []
    for p in zero_pos:
        v = int(s.tree_projection[p])
        if v not in seen:
            seen.add(v)
            order.append(v)
    return np.asarray(order, dtype=np.int64)


def quotient_mms(s: DiscreteSnake, m: int, which: str = "plain",
                 metric: str = "D", rng=None, cap: int = 4000):
    """Finite metric-measure space of m stratified-uniform contour points.

    metric "D": closure of the index interval distance; "Delta": closure of
    the boundary-avoiding variant. Marks: pointed = image of the minimal
    label point, bipointed adds the contour root. Masses are sigma/m each.
    """
    from .mms import FiniteMMS

    if m > cap:
        raise CapExceeded(f"m = {m} above cap {cap}")
    if m < 2:
        raise ValueError("m >= 2 points required")
    n = s.sigma
    if rng is None:
        idx = (np.arange(m, dtype=np.int64) * n) // m
    else:
        edges = (np.arange(m + 1, dtype=np.int64) * n) // m
        idx = np.array([rng.integers(edges[t], max(edges[t] + 1, edges[t + 1]))
                        for t in range(m)], dtype=np.int64)
    marks = []
    if which in ("pointed", "bipointed"):
        idx = np.concatenate([idx, [s.argmin_label() % n]])
        marks.append(len(idx) - 1)
    if which == "bipointed":
        idx = np.concatenate([idx, [0]])
        marks.append(len(idx) - 1)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    if metric == "D":
        base = d_circ_index(s, ii, jj).astype(float)
    elif metric == "Delta":
        base = delta_circ_index(s, ii, jj).astype(float)
        base[base > 1e17] = np.inf
    else:
        raise ValueError("metric must be 'D' or 'Delta'")
    dist = metric_closure(base)
    mass = np.full(len(idx), n / m, dtype=float)
    if which in ("pointed", "bipointed"):
        mass[len(idx) - len(marks):] = 0.0
    return FiniteMMS(dist, mass, tuple(marks)), idx
