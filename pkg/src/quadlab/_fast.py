"""Numba kernels for tree-side sampling at scale.

Covers the Boltzmann distance-law sampler (branching-walk minimum with
early stopping), joint (size, distance) sampling for the two-sampler
agreement tests, and contour/label/successor construction for large
labeled forests (used by the boundary-measure experiments, where maps of
millions of edges are handled as plain graphs).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._peelfast import U64, _rng_init, _uniform


@njit(cache=True, inline="always")
def _geom_half(s0, s1):
    """Geometric on {0,1,...} with P(k) = 2^{-(k+1)}, via bit counting."""
    k = 0
    while True:
        s0, s1, u = _uniform(s0, s1)
        if u < 0.5:
            return s0, s1, k
        k += 1


@njit(cache=True, inline="always")
def _unif3(s0, s1):
    s0, s1, u = _uniform(s0, s1)
    return s0, s1, np.int64(u * 3.0) - 1


@njit(cache=True)
def dist_root_samples(seeds, n_per_seed, dmax):
    """Samples of d(root, pointed vertex) of a Boltzmann quadrangulation.

    d = -min(label) + eps over the conditioned Galton-Watson tree with
    uniform label increments; the depth-first exploration aborts into the
    top bucket as soon as the running minimum forces d > dmax. Both
    components of the mixture (eps = 0, 1) are exact.
    """
    out = np.empty(len(seeds) * n_per_seed, dtype=np.int64)
    pos = 0
    for si in range(len(seeds)):
        s0, s1 = _rng_init(seeds[si])
        for _ in range(n_per_seed):
            while True:
                s0, s1, k = _geom_half(s0, s1)
                if k > 0:
                    break
            # DFS stack of (remaining children, label)
            stack_rem = np.empty(64, dtype=np.int64)
            stack_lab = np.empty(64, dtype=np.int64)
            stack_rem[0] = k
            stack_lab[0] = 0
            top = 0
            mn = 0
            aborted = False
            while top >= 0:
                if stack_rem[top] == 0:
                    top -= 1
                    continue
                stack_rem[top] -= 1
                s0, s1, inc = _unif3(s0, s1)
                lab = stack_lab[top] + inc
                if lab < mn:
                    mn = lab
                    if -mn > dmax:
                        aborted = True
                        break
                s0, s1, kc = _geom_half(s0, s1)
                top += 1
                if top >= len(stack_rem):
                    stack_rem = np.concatenate((stack_rem, np.empty(len(stack_rem), dtype=np.int64)))
                    stack_lab = np.concatenate((stack_lab, np.empty(len(stack_lab), dtype=np.int64)))
                stack_rem[top] = kc
                stack_lab[top] = lab
            if aborted:
                out[pos] = dmax + 1
            else:
                s0, s1, u = _uniform(s0, s1)
                eps = 1 if u < 0.5 else 0
                out[pos] = -mn + eps
            pos += 1
    return out


@njit(cache=True)
def size_and_dist_samples(seeds, n_per_seed, size_cap, dmax):
    """Joint (tree size clipped at size_cap+1, distance clipped at dmax+1)
    of Boltzmann quadrangulations via the tree route; exact within caps."""
    n = len(seeds) * n_per_seed
    sizes = np.empty(n, dtype=np.int64)
    dists = np.empty(n, dtype=np.int64)
    pos = 0
    for si in range(len(seeds)):
        s0, s1 = _rng_init(seeds[si])
        for _ in range(n_per_seed):
            while True:
                s0, s1, k = _geom_half(s0, s1)
                if k > 0:
                    break
            stack_rem = np.empty(64, dtype=np.int64)
            stack_lab = np.empty(64, dtype=np.int64)
            stack_rem[0] = k
            stack_lab[0] = 0
            top = 0
            mn = 0
            edges = 0
            oversize = False
            while top >= 0:
                if stack_rem[top] == 0:
                    top -= 1
                    continue
                stack_rem[top] -= 1
                edges += 1
                if edges > size_cap:
                    oversize = True
                    break
                s0, s1, inc = _unif3(s0, s1)
                lab = stack_lab[top] + inc
                if lab < mn:
                    mn = lab
                s0, s1, kc = _geom_half(s0, s1)
                top += 1
                if top >= len(stack_rem):
                    stack_rem = np.concatenate((stack_rem, np.empty(len(stack_rem), dtype=np.int64)))
                    stack_lab = np.concatenate((stack_lab, np.empty(len(stack_lab), dtype=np.int64)))
                stack_rem[top] = kc
                stack_lab[top] = lab
            if oversize:
                sizes[pos] = size_cap + 1
                dists[pos] = dmax + 1
            else:
                sizes[pos] = edges
                s0, s1, u = _uniform(s0, s1)
                eps = 1 if u < 0.5 else 0
                d = -mn + eps
                dists[pos] = d if d <= dmax else dmax + 1
            pos += 1
    return sizes, dists


@njit(cache=True)
def forest_sizes(seed, k, stop_above):
    """Total edge count of k independent GW(geom 1/2) trees, aborting with
    -1 once the running total exceeds stop_above. RNG consumption matches
    forest_build exactly, so a caller may re-run with the same seed."""
    s0, s1 = _rng_init(seed)
    total = 0
    for _ in range(k):
        pending = 1
        while pending > 0:
            s0, s1, c = _geom_half(s0, s1)
            pending += c - 1
            total += c
            if total > stop_above:
                return -1
    return total


@njit(cache=True)
def forest_build(seed, k, n_edges):
    """Contour representation of k GW trees with uniform labels, matching
    the RNG stream of forest_sizes on the offspring draws.

    Returns (corner_vertex, corner_depth, corner_label, corner_tree,
    tree_first_vertex): concatenated full contours (2 n_i + 1 corners per
    tree), global vertex ids, per-vertex labels with each tree root at 0.
    """
    s0, s1 = _rng_init(seed)
    n_vertices = n_edges + k
    offspring = np.empty(n_vertices, dtype=np.int64)
    tree_of_vertex = np.empty(n_vertices, dtype=np.int64)
    v = 0
    for t in range(k):
        pending = 1
        start = v
        while pending > 0:
            s0, s1, c = _geom_half(s0, s1)
            offspring[v] = c
            tree_of_vertex[v] = t
            v += 1
            pending += c - 1
    # second pass: build each tree's contour with labels (preorder children)
    n_corners = 2 * n_edges + k
    corner_vertex = np.empty(n_corners, dtype=np.int64)
    corner_label = np.empty(n_corners, dtype=np.int64)
    corner_tree = np.empty(n_corners, dtype=np.int64)
    vertex_label = np.empty(n_vertices, dtype=np.int64)
    tree_first = np.empty(k, dtype=np.int64)
    stack_v = np.empty(n_vertices + 1, dtype=np.int64)
    stack_rem = np.empty(n_vertices + 1, dtype=np.int64)
    ci = 0
    v = 0
    for t in range(k):
        root = v
        tree_first[t] = root
        vertex_label[root] = 0
        stack_v[0] = root
        stack_rem[0] = offspring[root]
        top = 0
        nxt = root + 1
        corner_vertex[ci] = root
        corner_label[ci] = 0
        corner_tree[ci] = t
        ci += 1
        while top >= 0:
            if stack_rem[top] == 0:
                top -= 1
                if top >= 0:
                    corner_vertex[ci] = stack_v[top]
                    corner_label[ci] = vertex_label[stack_v[top]]
                    corner_tree[ci] = t
                    ci += 1
                continue
            stack_rem[top] -= 1
            child = nxt
            nxt += 1
            s0, s1, inc = _unif3(s0, s1)
            vertex_label[child] = vertex_label[stack_v[top]] + inc
            top += 1
            stack_v[top] = child
            stack_rem[top] = offspring[child]
            corner_vertex[ci] = child
            corner_label[ci] = vertex_label[child]
            corner_tree[ci] = t
            ci += 1
        v = nxt
    return corner_vertex, corner_label, corner_tree, vertex_label, tree_first


@njit(cache=True)
def successors_fast(labels):
    """Cyclic next-smaller-element (minimal corners map to N)."""
    n = len(labels)
    succ = np.full(n, n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = -1
    for sweep in range(2):
        for j in range(n):
            while top >= 0 and labels[stack[top]] > labels[j]:
                if succ[stack[top]] == n:
                    succ[stack[top]] = j
                top -= 1
            if sweep == 0:
                top += 1
                stack[top] = j
    return succ


@njit(cache=True)
def multi_source_bfs_counts(indptr, targets, seeds_mask, depth):
    """Multi-source BFS over a CSR graph; returns counts per level < depth
    and the per-vertex distance (-1 beyond depth)."""
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int64)
    frontier = np.empty(n, dtype=np.int64)
    fn = 0
    for vtx in range(n):
        if seeds_mask[vtx]:
            dist[vtx] = 0
            frontier[fn] = vtx
            fn += 1
    counts = np.zeros(depth + 1, dtype=np.int64)
    counts[0] = fn
    nxt = np.empty(n, dtype=np.int64)
    for level in range(1, depth + 1):
        nn = 0
        for fi in range(fn):
            vtx = frontier[fi]
            for e in range(indptr[vtx], indptr[vtx + 1]):
                w = targets[e]
                if dist[w] < 0:
                    dist[w] = level
                    nxt[nn] = w
                    nn += 1
        counts[level] = nn
        frontier, nxt = nxt, frontier
        fn = nn
        if fn == 0:
            break
    return counts, dist
