"""Finite (k-pointed) metric measure spaces and GHP upper bounds.

The Gromov-Hausdorff-Prokhorov distance between two spaces is bounded by
3 max(distortion of a correspondence, coupling mass off the correspondence,
Prokhorov defects of the two coupling marginals); only upper bounds are
computed, matching how closeness is certified in the experiments.

The Prokhorov distance between finite measures on a common finite space is
computed exactly: the condition nu(C) <= mu(C^eps) + eps for all C reduces,
by flow duality, to max(|mu|, |nu|) - maxflow(eps) <= eps, where the flow
network joins atoms at distance <= eps. The flow is piecewise constant in
eps with jumps at pairwise distances, so the infimum is attained on a
finite candidate set and solved without bisection.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow


class NotACorrespondence(ValueError):
    pass


class MarksNotInCorrespondence(ValueError):
    pass


class ZeroMass(ValueError):
    pass


@dataclass
class FiniteMMS:
    dist: np.ndarray
    mass: np.ndarray
    marks: tuple = ()

    def __post_init__(self):
        self.dist = np.asarray(self.dist, dtype=float)
        self.mass = np.asarray(self.mass, dtype=float)
        n = self.dist.shape[0]
        if self.dist.shape != (n, n):
            raise ValueError("dist must be square")
        if len(self.mass) != n:
            raise ValueError("mass length mismatch")
        if np.any(self.mass < 0):
            raise ValueError("mass must be nonnegative")
        self.marks = tuple(int(m) for m in self.marks)
        for m in self.marks:
            if not 0 <= m < n:
                raise ValueError("mark index out of range")

    @property
    def n(self) -> int:
        return len(self.mass)

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    def check_metric(self, pseudo: bool = True, tol: float = 1e-9):
        d = self.dist
        if not np.allclose(d, d.T, atol=tol):
            raise ValueError("not symmetric")
        if np.any(np.abs(np.diag(d)) > tol):
            raise ValueError("nonzero diagonal")
        if np.any(d < -tol):
            raise ValueError("negative distance")
        viol = d[:, :, None] > d[:, None, :] + d[None, :, :] + tol
        if viol.any():
            raise ValueError("triangle inequality fails")
        if not pseudo:
            off = d + np.eye(self.n) * np.inf
            if np.any(off <= tol):
                raise ValueError("distinct points at distance 0")

    def diameter(self) -> float:
        return float(self.dist.max())

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(b"RMMS")
        buf.write(struct.pack("<II", 1, self.n))
        buf.write(self.dist.astype("<f8").tobytes())
        buf.write(self.mass.astype("<f8").tobytes())
        buf.write(struct.pack("<I", len(self.marks)))
        buf.write(np.asarray(self.marks, dtype="<u4").tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "FiniteMMS":
        if blob[:4] != b"RMMS":
            raise ValueError("bad magic")
        _, n = struct.unpack_from("<II", blob, 4)
        off = 12
        dist = np.frombuffer(blob, "<f8", n * n, off).reshape(n, n).copy()
        off += 8 * n * n
        mass = np.frombuffer(blob, "<f8", n, off).copy()
        off += 8 * n
        (nm,) = struct.unpack_from("<I", blob, off)
        marks = np.frombuffer(blob, "<u4", nm, off + 4)
        return cls(dist, mass, tuple(int(m) for m in marks))

    def metadata(self) -> dict:
        return {"n": self.n, "total_mass": self.total_mass,
                "marks": list(self.marks), "diameter": self.diameter()}


@dataclass
class Correspondence:
    pairs: np.ndarray   # (P, 2) index pairs (i in X, j in Y)

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)

    def check(self, nx: int, ny: int):
        if len(np.unique(self.pairs[:, 0])) != nx:
            raise NotACorrespondence("projection onto X not surjective")
        if len(np.unique(self.pairs[:, 1])) != ny:
            raise NotACorrespondence("projection onto Y not surjective")


def identity_correspondence(n: int) -> Correspondence:
    idx = np.arange(n)
    return Correspondence(np.column_stack([idx, idx]))


def distortion(c: Correspondence, X: FiniteMMS, Y: FiniteMMS,
               chunk: int = 1024) -> float:
    """sup over pairs of pairs of |d_X - d_Y|."""
    c.check(X.n, Y.n)
    ii = c.pairs[:, 0]
    jj = c.pairs[:, 1]
    best = 0.0
    for lo in range(0, len(ii), chunk):
        hi = min(lo + chunk, len(ii))
        dx = X.dist[np.ix_(ii[lo:hi], ii)]
        dy = Y.dist[np.ix_(jj[lo:hi], jj)]
        best = max(best, float(np.abs(dx - dy).max()))
    return best


# ---------------------------------------------------------------------------
# exact Prokhorov distance on a common finite space
# ---------------------------------------------------------------------------

_FLOW_SCALE = 2**30


def prokhorov_finite(mu, nu, dist) -> float:
    """Exact Prokhorov distance between two finite measures on the points of
    a common finite metric space (masses resolved to ~1e-9 relative)."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    d = np.asarray(dist, dtype=float)
    if mu.shape != nu.shape or d.shape != (len(mu), len(mu)):
        raise ValueError("shape mismatch")
    if np.allclose(mu, nu):
        return 0.0
    ms = mu > 0
    ns = nu > 0
    mu_s = mu[ms]
    nu_s = nu[ns]
    dd = d[np.ix_(ns, ms)]       # rows: nu atoms, cols: mu atoms
    big = max(mu_s.sum(), nu_s.sum())
    scale = _FLOW_SCALE / max(big, 1e-300)
    mu_i = np.round(mu_s * scale).astype(np.int64)
    nu_i = np.round(nu_s * scale).astype(np.int64)
    total = max(mu_i.sum(), nu_i.sum())
    thresholds = np.unique(dd)
    candidates = []
    lefts = np.concatenate([[0.0], thresholds])
    rights = np.concatenate([thresholds, [np.inf]])
    for left, right in zip(lefts, rights):
        flow = _bipartite_flow(nu_i, mu_i, dd <= left)
        needed = (total - flow) / scale
        cand = max(left, needed)
        if cand < right or right == np.inf:
            candidates.append(cand)
    return float(min(candidates))


def _bipartite_flow(supply, demand, adj) -> int:
    p, q = adj.shape
    if not adj.any():
        return 0
    n_nodes = p + q + 2
    src, snk = 0, p + q + 1
    rows, cols, caps = [], [], []
    for i in range(p):
        rows.append(src)
        cols.append(1 + i)
        caps.append(int(supply[i]))
    for j in range(q):
        rows.append(1 + p + j)
        cols.append(snk)
        caps.append(int(demand[j]))
    ii, jj = np.nonzero(adj)
    for i, j in zip(ii, jj):
        rows.append(1 + i)
        cols.append(1 + p + j)
        caps.append(int(supply[i]))
    graph = csr_matrix((caps, (rows, cols)), shape=(n_nodes, n_nodes))
    return int(maximum_flow(graph, src, snk).flow_value)


# ---------------------------------------------------------------------------
# GHP upper bound via a correspondence and a coupling
# ---------------------------------------------------------------------------

def ghp_upper_bound(X: FiniteMMS, Y: FiniteMMS, c: Correspondence,
                    coupling: np.ndarray) -> float:
    """3 max(distortion, coupling mass off the correspondence, Prokhorov
    defects of the coupling marginals); a valid upper bound for the
    k-pointed GHP distance when all marks are paired in c."""
    c.check(X.n, Y.n)
    coupling = np.asarray(coupling, dtype=float)
    if coupling.shape != (X.n, Y.n):
        raise ValueError("coupling must be an (X.n, Y.n) matrix")
    if np.any(coupling < 0):
        raise ValueError("coupling must be nonnegative")
    if len(X.marks) != len(Y.marks):
        raise MarksNotInCorrespondence("mark counts differ")
    pair_set = set(map(tuple, c.pairs))
    for mx, my in zip(X.marks, Y.marks):
        if (mx, my) not in pair_set:
            raise MarksNotInCorrespondence(f"marks ({mx},{my}) not paired")
    on_mask = np.zeros((X.n, Y.n), dtype=bool)
    on_mask[c.pairs[:, 0], c.pairs[:, 1]] = True
    off_mass = float(coupling[~on_mask].sum())
    dis = distortion(c, X, Y)
    d_px = prokhorov_finite(coupling.sum(axis=1), X.mass, X.dist)
    d_py = prokhorov_finite(coupling.sum(axis=0), Y.mass, Y.dist)
    return 3.0 * max(dis, off_mass, d_px, d_py)


def sample_uniform_points(X: FiniteMMS, n: int, rng) -> FiniteMMS:
    """Append n i.i.d. mass-proportional indices as marks."""
    if X.total_mass <= 0:
        raise ZeroMass("total mass must be positive")
    p = X.mass / X.total_mass
    draws = rng.choice(X.n, size=n, p=p)
    return FiniteMMS(X.dist, X.mass, X.marks + tuple(int(d) for d in draws))


def empirical_submms(X: FiniteMMS, n: int, rng) -> tuple[FiniteMMS, np.ndarray]:
    """The n-point empirical space (uniform masses 1/n at sampled points)."""
    if X.total_mass <= 0:
        raise ZeroMass("total mass must be positive")
    p = X.mass / X.total_mass
    idx = rng.choice(X.n, size=n, p=p)
    sub = FiniteMMS(X.dist[np.ix_(idx, idx)], np.full(n, 1.0 / n))
    return sub, idx


def empirical_ghp_bound(X: FiniteMMS, idx: np.ndarray) -> float:
    """GHP upper bound between the empirical space on idx (mass 1/n each)
    and X normalized to a probability measure, via the nearest-sample
    correspondence and the obvious coupling."""
    n = len(idx)
    sub = FiniteMMS(X.dist[np.ix_(idx, idx)], np.full(n, 1.0 / n))
    nearest = np.argmin(X.dist[:, idx], axis=1)
    pairs = [(int(nearest[x]), int(x)) for x in range(X.n)]
    pairs += [(t, int(idx[t])) for t in range(n)]
    corr = Correspondence(np.asarray(pairs))
    coupling = np.zeros((n, X.n))
    w = X.mass / X.total_mass
    for x in range(X.n):
        coupling[nearest[x], x] = w[x]
    return ghp_upper_bound(sub, FiniteMMS(X.dist, w), corr, coupling)
