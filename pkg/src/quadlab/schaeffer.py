"""Bijective encodings between labeled trees/forests and quadrangulations.

The common engine takes a cyclic corner sequence with integer labels whose
increments (cyclically) are >= -1, draws the successor chord from every
corner to the next corner of strictly smaller label (the first such corner
has label exactly one less), and sends minimal-label corners to an extra
vertex. Chords are the edges of the produced quadrangulation; rotations
come from the angular order of chord ends around each corner.

For a labeled tree (root label 0) this produces the rooted pointed
quadrangulation with n faces whose distances to the extra vertex are
label - min + 1. For a labeled forest with a bridge it produces a pointed
quadrangulation with boundary 2k. Correctness of the conventions is pinned
by exact image counting against the closed-form counts in `laws`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

import math

from . import cmap, trees
from .trees import (LabeledForestWithBridge, LabeledTree,
                    RejectionBudgetExceeded, SizeTooLarge,
                    sample_gw_geometric_tree,
                    sample_labeled_forest_with_bridge, sample_labels)
from .trees import forest_size_walk as trees_fsw


def successors(labels: np.ndarray) -> np.ndarray:
    """Cyclic next-smaller-element; minimal-label corners map to N.

    Requires cyclic increments >= -1, so the first smaller label is exactly
    one less.
    """
    lab = np.asarray(labels, dtype=np.int64)
    n = len(lab)
    succ = np.full(n, n, dtype=np.int64)
    stack: list[int] = []
    for sweep in range(2):
        for j in range(n):
            while stack and lab[stack[-1]] > lab[j]:
                top = stack.pop()
                if succ[top] == n:
                    succ[top] = j
            if sweep == 0:
                stack.append(j)
    return succ


@dataclass
class ChordMap:
    """Raw output of the chord construction, before rooting conventions."""

    map_twin: np.ndarray
    map_sigma: np.ndarray
    origin: np.ndarray       # dart -> vertex id (forest ids; extra vertex = n_real)
    succ: np.ndarray
    n_corners: int
    xi_vertex: int

    def out_dart(self, corner: int) -> int:
        return 2 * corner

    def in_dart(self, corner: int) -> int:
        return 2 * corner + 1


def build_chord_map(labels, corner_vertex, n_real_vertices: int) -> ChordMap:
    """Chords drawn forward along the contour: at each corner, incoming ends
    stack by hug length (contour distance from their origin) with the
    outgoing end outermost; corners of a vertex concatenate in contour
    order. This pins the embedding, which the endpoints alone do not."""
    lab = np.asarray(labels, dtype=np.int64)
    cv = np.asarray(corner_vertex, dtype=np.int64)
    n = len(lab)
    succ = successors(lab)
    xi = n_real_vertices
    # darts: 2j = chord tail at corner j, 2j+1 = chord head at succ[j]
    twin = np.arange(2 * n, dtype=np.int64).reshape(-1, 2)[:, ::-1].ravel()
    origin = np.empty(2 * n, dtype=np.int64)
    origin[0::2] = cv
    origin[1::2] = np.where(succ < n, cv[np.minimum(succ, n - 1)], xi)
    # chord ends: incoming at succ[j] with hug (succ - j) mod n, outgoing last
    pos = np.concatenate([succ, np.arange(n)])
    dart = np.concatenate([2 * np.arange(n) + 1, 2 * np.arange(n)])
    j_idx = np.arange(n)
    hug_in = np.where(succ == n, n - j_idx, (succ - j_idx) % n)
    key = np.concatenate([hug_in, np.full(n, 2 * n + 1)])  # outgoing beyond any hug
    vert = np.where(pos < n, cv[np.minimum(pos, n - 1)], xi)
    order = np.lexsort((key, pos, vert))
    sv = vert[order]
    sd = dart[order]
    # sigma: cycle the sorted ends within each vertex block
    sigma = np.empty(2 * n, dtype=np.int64)
    block_start = np.flatnonzero(np.concatenate([[True], sv[1:] != sv[:-1]]))
    block_end = np.concatenate([block_start[1:], [len(sv)]])
    nxt = np.arange(1, len(sd) + 1)
    nxt[block_end - 1] = block_start
    sigma[sd] = sd[nxt]
    return ChordMap(twin, sigma, origin, succ, n, xi)


@dataclass
class CorrespondenceTables:
    """Vertex dictionary between an encoding and its quadrangulation."""

    vertex_map: np.ndarray      # tree/forest vertex -> map vertex
    xi: int                     # map vertex of the extra (pointed) vertex
    corner_successor: np.ndarray


def tree_to_pointed_quad(lt: LabeledTree, eps: int,
                         with_tables: bool = False):
    """Rooted pointed quadrangulation of a labeled tree (root label 0).

    The pointed vertex is the extra vertex; for every tree vertex u the
    graph distance to it is label(u) - min + 1. eps picks the root-edge
    orientation: the root edge is the chord of the root's first corner, with
    tail at the root vertex when eps = 1.
    """
    if eps not in (0, 1):
        raise ValueError("eps must be 0 or 1")
    if lt.tree.n_edges < 1:
        raise ValueError("tree must have at least one edge")
    cv = lt.tree.contour_vertices()[:-1]
    labels = lt.labels[cv]
    cm = build_chord_map(labels, cv, lt.tree.n_vertices)
    root_dart = cm.out_dart(0) if eps == 1 else cm.in_dart(0)
    xi_rep = int(np.flatnonzero(cm.origin == cm.xi_vertex)[0])
    m = cmap.CombinatorialMap(cm.map_twin, cm.map_sigma, root_dart,
                              mark_darts=(xi_rep,))
    if not with_tables:
        return m
    vmap = np.full(lt.tree.n_vertices, -1, dtype=np.int64)
    first = {}
    for j, v in enumerate(cv):
        if v not in first:
            first[v] = j
            vmap[v] = m.vertex_of[cm.out_dart(j)]
    tables = CorrespondenceTables(vmap, m.pointed_vertex, cm.succ)
    return m, tables


def forest_bridge_to_boundary_quad(fb: LabeledForestWithBridge,
                                   with_tables: bool = False):
    """Pointed quadrangulation with boundary 2k from a labeled forest+bridge.

    Inner faces = total forest edges; the k tree roots lie on the boundary;
    composite labels b_alpha + label are distances to the pointed vertex up
    to the global shift (label - min + 1). The sign bit picks the root edge
    among the two wrap-gap chords.
    """
    C, L, corner_vertex, corner_tree = trees.forest_contour(fb)
    labels = L[:-1]
    n_real = int(corner_vertex.max()) + 1 if len(corner_vertex) else 0
    cm = build_chord_map(labels, corner_vertex, n_real)
    xi_rep = int(np.flatnonzero(cm.origin == cm.xi_vertex)[0])
    y0 = cm.in_dart(cm.n_corners - 1)
    # the outer face borders the wrap gap on the arriving side of the last
    # corner's chord; the sign bit mirrors the map (all rotations reversed).
    # Exactness of this convention is pinned by the image-count tests.
    if fb.sign == 1:
        sigma = cm.map_sigma
        outer_dart = y0
    else:
        sigma = np.argsort(cm.map_sigma)
        outer_dart = int(cm.map_twin[y0])
    m0 = cmap.CombinatorialMap(cm.map_twin, sigma, 0, check=True)
    root_dart = int(m0.twin[outer_dart])
    m = cmap.CombinatorialMap(cm.map_twin, sigma, root_dart,
                              mark_darts=(xi_rep,), check=False)
    bq = cmap.BoundaryQuadrangulation(m, int(m.face_of[outer_dart]),
                                      _outer_dart=outer_dart)
    bq.validate()
    if m.face_of[m.twin[root_dart]] != bq.outer_face:
        raise cmap.MapError("root does not border the outer face")
    if not with_tables:
        return bq
    vmap = np.full(n_real, -1, dtype=np.int64)
    for j, v in enumerate(corner_vertex):
        if vmap[v] < 0:
            vmap[v] = m.vertex_of[cm.out_dart(j)]
    tables = CorrespondenceTables(vmap, m.pointed_vertex, cm.succ)
    return bq, tables


def outer_walk_vertices(labels, succ, corner_vertex, xi_vertex) -> np.ndarray:
    """Vertices of the outer face of the chord map, without building the
    full rotation system.

    The rotation at a vertex is the concatenation over its corners (in
    contour order) of [incoming chords by hug length, outgoing chord]; the
    walk starts at the arriving end of the last corner's chord and iterates
    phi(d) = sigma(twin(d)). Only the fans of visited vertices are built.
    """
    labels = np.asarray(labels, dtype=np.int64)
    succ = np.asarray(succ, dtype=np.int64)
    cv = np.asarray(corner_vertex, dtype=np.int64)
    n = len(labels)
    hug = np.where(succ == n, n - np.arange(n), (succ - np.arange(n)) % n)
    in_order = np.lexsort((hug, succ))       # incoming ends grouped by target
    in_indptr = np.zeros(n + 2, dtype=np.int64)
    np.add.at(in_indptr, succ + 1, 1)
    np.cumsum(in_indptr, out=in_indptr)
    corner_order = np.argsort(cv, kind="stable")
    corner_indptr = np.zeros(xi_vertex + 2, dtype=np.int64)
    np.add.at(corner_indptr, cv + 1, 1)
    np.cumsum(corner_indptr, out=corner_indptr)

    def origin(dart):
        j = dart >> 1
        if dart & 1:
            return int(cv[succ[j]]) if succ[j] < n else xi_vertex
        return int(cv[j])

    rotations: dict[int, dict[int, int]] = {}

    def sigma(dart):
        v = origin(dart)
        rot = rotations.get(v)
        if rot is None:
            ends = []
            if v == xi_vertex:
                for e in in_order[in_indptr[n]:in_indptr[n + 1]]:
                    ends.append(2 * int(e) + 1)
            else:
                for p in corner_order[corner_indptr[v]:corner_indptr[v + 1]]:
                    p = int(p)
                    for e in in_order[in_indptr[p]:in_indptr[p + 1]]:
                        ends.append(2 * int(e) + 1)
                    ends.append(2 * p)
            rot = {d: ends[(i + 1) % len(ends)] for i, d in enumerate(ends)}
            rotations[v] = rot
        return rot[dart]

    y0 = 2 * (n - 1) + 1
    verts = []
    d = y0
    while True:
        verts.append(origin(d))
        d = sigma(d ^ 1)
        if d == y0:
            break
    return np.unique(np.asarray(verts, dtype=np.int64))


# ---------------------------------------------------------------------------
# Boltzmann samplers
# ---------------------------------------------------------------------------

def boltzmann_quad_via_trees(rng: np.random.Generator,
                             max_edges: int | None = None,
                             with_tree: bool = False):
    """Exact Boltzmann rooted pointed quadrangulation: GW(geom 1/2) tree
    conditioned to be nonempty, uniform labels, uniform orientation bit."""
    t = sample_gw_geometric_tree(rng, condition_nonempty=True, max_edges=max_edges)
    lt = sample_labels(t, "labeled", rng)
    eps = int(rng.integers(2))
    q = tree_to_pointed_quad(lt, eps)
    return (q, lt, eps) if with_tree else q


def boltzmann_boundary_quad(k: int, rng: np.random.Generator,
                            pointed: bool = True,
                            max_edges: int | None = None,
                            max_tries: int = 1_000_000):
    """Boltzmann quadrangulation with boundary 2k (weight 12^{-inner faces}).

    pointed=True is the forest+bridge sampler. pointed=False removes the
    pointing by rejection with probability (k+1)/#vertices (k+1 being the
    least vertex count at perimeter 2k): the acceptance variable is drawn
    first, turning it into a size threshold, so rejected tries cost only a
    size walk stopped at the threshold. max_edges aborts only on accepted
    oversize draws (SizeTooLarge), keeping the law exact under binning.
    """
    if pointed:
        fb = sample_labeled_forest_with_bridge(k, rng, max_edges=max_edges)
        return forest_bridge_to_boundary_quad(fb)
    hard_cap = 10**9
    for _ in range(max_tries):
        u = rng.random()
        # accept iff u * (n + k + 1) < k + 1, i.e. n <= threshold
        threshold = int(math.floor((k + 1) * (1.0 - u) / max(u, 1e-300)))
        state = rng.bit_generator.state
        n = trees_fsw(k, rng, min(threshold, hard_cap))
        if n < 0:
            continue
        if max_edges is not None and n > max_edges:
            raise SizeTooLarge(f"accepted patch has {n} > {max_edges} edges")
        rng.bit_generator.state = state
        fb = sample_labeled_forest_with_bridge(k, rng, max_edges=None)
        assert fb.n_edges == n
        return forest_bridge_to_boundary_quad(fb)
    raise RejectionBudgetExceeded(f"unpointed rejection failed in {max_tries} tries")


# ---------------------------------------------------------------------------
# label-geodesic machinery
# ---------------------------------------------------------------------------

def k_set(lt: LabeledTree, k: int) -> np.ndarray:
    """Vertices whose root geodesic (in the tree) meets a label at most
    min_label + k - 1. Equals the full vertex set once k > -min."""
    t = lt.tree
    cutoff = lt.min_label() + k - 1
    best = np.empty(t.n_vertices, dtype=np.int64)
    best[0] = lt.labels[0]
    for v in range(1, t.n_vertices):
        best[v] = min(best[t.parent[v]], lt.labels[v])
    return np.flatnonzero(best <= cutoff)


def hull_vertex_set(q: cmap.CombinatorialMap, k: int) -> np.ndarray:
    """Vertices v such that every path from v to the pointed vertex meets
    the closed ball of radius k around the root."""
    dist = q.bfs_distances(q.root_vertex)
    xi = q.pointed_vertex
    outside = dist > k
    parent = np.arange(q.n_vertices, dtype=np.int64)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in q.edges():
        if outside[u] and outside[v]:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
    xi_comp = find(xi)
    hull = np.fromiter(
        ((not outside[v]) or find(v) != xi_comp for v in range(q.n_vertices)),
        dtype=bool, count=q.n_vertices)
    return np.flatnonzero(hull)


def verify_discrete_cactus(q: cmap.CombinatorialMap, lt: LabeledTree,
                           tables: CorrespondenceTables, pairs,
                           check_converse: bool = True) -> bool:
    """Check the cactus property for the given tree-vertex pairs.

    Any path of q between u and v must meet a vertex whose label is at most
    the minimal label on the tree geodesic between them; conversely a path
    exists using only labels >= that minimum - 1 (root label of q being
    min - 1 by the distance normalization). Labels of map vertices here are
    distances to the pointed vertex, i.e. label - min + 1.
    """
    t = lt.tree
    depth = t.depths()
    dist_xi = q.bfs_distances(q.pointed_vertex)
    shift = 1 - lt.min_label()
    indptr, targets = q.adjacency_csr()
    for (u, v) in pairs:
        if u == v:
            continue
        g = _tree_geodesic(t, depth, u, v)
        kmin = min(int(lt.labels[w]) for w in g)
        mu, mv = int(tables.vertex_map[u]), int(tables.vertex_map[v])
        level = kmin + shift
        # deleting {w : label(w) <= kmin} must disconnect u from v unless
        # one of them is itself at or below the level
        if dist_xi[mu] > level and dist_xi[mv] > level:
            if _connected_above(indptr, targets, dist_xi, level, mu, mv):
                return False
        if check_converse:
            if not _connected_above(indptr, targets, dist_xi, level - 1 - 1, mu, mv):
                return False
    return True


def _tree_geodesic(t, depth, u, v):
    path_u, path_v = [u], [v]
    uu, vv = u, v
    while uu != vv:
        if depth[uu] >= depth[vv]:
            uu = int(t.parent[uu])
            path_u.append(uu)
        else:
            vv = int(t.parent[vv])
            path_v.append(vv)
    return path_u + path_v[:-1]


def _connected_above(indptr, targets, dist_xi, level, src, dst):
    # BFS restricted to vertices with dist_xi > level
    if dist_xi[src] <= level or dist_xi[dst] <= level:
        return False
    seen = {src}
    stack = [src]
    while stack:
        x = stack.pop()
        if x == dst:
            return True
        for t_ in targets[indptr[x]:indptr[x + 1]]:
            t_ = int(t_)
            if t_ not in seen and dist_xi[t_] > level:
                seen.add(t_)
                stack.append(t_)
    return False
