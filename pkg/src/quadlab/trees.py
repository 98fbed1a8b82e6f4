"""Plane trees, labeled trees, forests with bridges: exact samplers and codings.

Vertices are numbered in preorder (root = 0), so parent[v] < v for v > 0.
All samplers draw from the exact target distribution; the well-labeled
variant uses rejection and is only meant for small cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class SizeTooLarge(ValueError):
    pass


class RejectionBudgetExceeded(RuntimeError):
    pass


@dataclass
class PlaneTree:
    parent: np.ndarray               # parent[0] == -1
    children: list = field(repr=False)

    def __init__(self, parent):
        self.parent = np.asarray(parent, dtype=np.int64)
        self.children = [[] for _ in range(len(self.parent))]
        for v in range(1, len(self.parent)):
            self.children[self.parent[v]].append(v)

    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    @property
    def n_edges(self) -> int:
        return len(self.parent) - 1

    def depths(self) -> np.ndarray:
        d = np.zeros(self.n_vertices, dtype=np.int64)
        for v in range(1, self.n_vertices):
            d[v] = d[self.parent[v]] + 1
        return d

    def contour_vertices(self) -> np.ndarray:
        """u_0 ... u_{2n}: the contour sequence (first-child order)."""
        n = self.n_vertices
        out = np.empty(2 * n - 1, dtype=np.int64)
        idx = [0] * n
        v = 0
        out[0] = 0
        pos = 1
        while pos < len(out):
            if idx[v] < len(self.children[v]):
                v2 = self.children[v][idx[v]]
                idx[v] += 1
                v = v2
            else:
                v = int(self.parent[v])
            out[pos] = v
            pos += 1
        return out

    def to_dyck(self) -> np.ndarray:
        cv = self.contour_vertices()
        return np.sign(np.diff(self.depths()[cv])).astype(np.int64)

    @classmethod
    def from_dyck(cls, word) -> "PlaneTree":
        word = np.asarray(word, dtype=np.int64)
        n = len(word) // 2
        parent = np.full(n + 1, -1, dtype=np.int64)
        stack = [0]
        nxt = 1
        for step in word:
            if step == 1:
                parent[nxt] = stack[-1]
                stack.append(nxt)
                nxt += 1
            else:
                stack.pop()
        if len(stack) != 1 or nxt != n + 1:
            raise ValueError("not a balanced Dyck word")
        return cls(parent)

    def to_text(self) -> str:
        return "".join("(" if s == 1 else ")" for s in self.to_dyck())

    @classmethod
    def from_text(cls, text: str) -> "PlaneTree":
        word = [1 if c == "(" else -1 for c in text.strip()]
        return cls.from_dyck(word)


@dataclass
class LabeledTree:
    tree: PlaneTree
    labels: np.ndarray  # integer label per vertex, root label 0

    def __init__(self, tree, labels):
        self.tree = tree
        self.labels = np.asarray(labels, dtype=np.int64)
        if len(self.labels) != tree.n_vertices:
            raise ValueError("label count mismatch")

    def check(self, well_labeled: bool = False):
        t = self.tree
        for v in range(1, t.n_vertices):
            if abs(self.labels[v] - self.labels[t.parent[v]]) > 1:
                raise ValueError("label increment exceeds 1 on an edge")
        if well_labeled:
            if self.labels[0] != 1 or self.labels.min() < 1:
                raise ValueError("not well-labeled")
        elif self.labels[0] != 0:
            raise ValueError("root label must be 0")

    def min_label(self) -> int:
        return int(self.labels.min())

    def to_text(self) -> str:
        return self.tree.to_text() + " " + " ".join(str(x) for x in self.labels)

    @classmethod
    def from_text(cls, text: str) -> "LabeledTree":
        word, *labels = text.split()
        return cls(PlaneTree.from_text(word), [int(x) for x in labels])


@dataclass
class LabeledForestWithBridge:
    trees: list            # of LabeledTree, root labels 0
    bridge: np.ndarray     # b_1 ... b_k, b_1 = 0, increments >= -1 (b_{k+1}=0)
    sign: int = 1

    def __post_init__(self):
        self.bridge = np.asarray(self.bridge, dtype=np.int64)
        k = len(self.trees)
        if len(self.bridge) != k or k < 1:
            raise ValueError("bridge length must equal the number of trees")
        if self.bridge[0] != 0:
            raise ValueError("b_1 must be 0")
        ext = np.append(self.bridge, 0)
        if np.any(np.diff(ext) < -1):
            raise ValueError("bridge increment below -1")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +-1")

    @property
    def k(self) -> int:
        return len(self.trees)

    @property
    def n_edges(self) -> int:
        return sum(t.tree.n_edges for t in self.trees)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def sample_uniform_plane_tree(n: int, rng: np.random.Generator) -> PlaneTree:
    """Exactly uniform plane tree with n edges, by the cycle lemma.

    Shuffle n up-steps and n+1 down-steps; the unique rotation starting just
    after the first minimum is a down-terminated excursion whose first 2n
    steps form a uniform Dyck word.
    """
    if n < 1:
        raise ValueError("n >= 1")
    steps = np.concatenate([np.ones(n, dtype=np.int64), -np.ones(n + 1, dtype=np.int64)])
    rng.shuffle(steps)
    walk = np.cumsum(steps)
    pivot = int(np.argmin(walk)) + 1
    rotated = np.concatenate([steps[pivot:], steps[:pivot]])
    return PlaneTree.from_dyck(rotated[:-1])


def sample_labels(tree: PlaneTree, variant: str, rng: np.random.Generator,
                  max_tries: int = 100_000) -> LabeledTree:
    """Uniform admissible labels: 'labeled' (root 0, free sign) draws i.i.d.
    uniform {-1,0,1} edge increments; 'well_labeled' rejects until positive."""
    if variant == "labeled":
        inc = rng.integers(-1, 2, size=tree.n_edges)
        labels = np.zeros(tree.n_vertices, dtype=np.int64)
        for v in range(1, tree.n_vertices):
            labels[v] = labels[tree.parent[v]] + inc[v - 1]
        return LabeledTree(tree, labels)
    if variant == "well_labeled":
        for _ in range(max_tries):
            lt = sample_labels(tree, "labeled", rng)
            if lt.labels.min() == 0:
                return LabeledTree(tree, lt.labels + 1)
        raise RejectionBudgetExceeded(f"no well-labeled draw in {max_tries} tries")
    raise ValueError("variant must be 'labeled' or 'well_labeled'")


def sample_gw_geometric_tree(rng: np.random.Generator,
                             condition_nonempty: bool = False,
                             max_edges: int | None = None) -> PlaneTree:
    """Critical Galton-Watson tree with offspring law P(k) = 2^{-(k+1)}.

    Optionally conditioned on having at least one edge. `max_edges` aborts
    oversized draws (raises SizeTooLarge) so callers can bin them explicitly;
    it is never used to silently resample, which would bias the law.
    """
    while True:
        offspring = _gw_offspring_sequence(rng, max_edges)
        if condition_nonempty and len(offspring) == 1:
            continue
        return tree_from_offspring(offspring)


def _gw_offspring_sequence(rng, max_edges):
    # preorder offspring counts, by running the Lukasiewicz walk (steps
    # offspring-1, offspring ~ Geom(1/2) on {0,1,...}) to first passage at -1
    out: list[int] = []
    walk = 0
    chunk = 64
    while True:
        ks = rng.geometric(0.5, size=chunk) - 1
        for k in ks:
            out.append(int(k))
            walk += k - 1
            if walk < 0:
                return out
            if max_edges is not None and len(out) > max_edges:
                raise SizeTooLarge(f"tree exceeded {max_edges} edges")
        chunk = min(2 * chunk, 65536)


def tree_from_offspring(offspring) -> PlaneTree:
    """Plane tree whose preorder offspring counts are the given sequence."""
    n_v = len(offspring)
    parent = np.full(n_v, -1, dtype=np.int64)
    stack = [(0, int(offspring[0]))]
    nxt = 1
    while nxt < n_v:
        v, rem = stack[-1]
        if rem == 0:
            stack.pop()
            continue
        stack[-1] = (v, rem - 1)
        parent[nxt] = v
        stack.append((nxt, int(offspring[nxt])))
        nxt += 1
    return PlaneTree(parent)


def sample_bridge(k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform bridge (b_1=0, increments >= -1, closing increment to 0).

    i.i.d. shifted-geometric increments P(d) = 2^{-d-2} on {-1,0,1,...} are
    rejected until they sum to 0; every admissible bridge then has the same
    probability 2^{-2k}, hence uniformity.
    """
    if k < 1:
        raise ValueError("k >= 1")
    if k == 1:
        return np.zeros(1, dtype=np.int64)
    while True:
        d = rng.geometric(0.5, size=k).astype(np.int64) - 2
        if d.sum() == 0:
            b = np.concatenate([[0], np.cumsum(d[:-1])])
            return b


def sample_labeled_forest_with_bridge(k: int, rng: np.random.Generator,
                                      max_edges: int | None = None
                                      ) -> LabeledForestWithBridge:
    """k independent unconditioned GW(geometric 1/2) trees with uniform
    labels, an independent uniform bridge, and a uniform sign."""
    trees = []
    for _ in range(k):
        t = sample_gw_geometric_tree(rng, condition_nonempty=False,
                                     max_edges=max_edges)
        trees.append(sample_labels(t, "labeled", rng))
    bridge = sample_bridge(k, rng)
    sign = 1 if rng.integers(2) else -1
    return LabeledForestWithBridge(trees, bridge, sign)


def forest_size_walk(k: int, rng: np.random.Generator, total_cap) -> int:
    """Total edge count of the forest that sample_labeled_forest_with_bridge
    would build from the current generator state, aborting with -1 once the
    running total exceeds total_cap.

    Consumes the generator exactly like the builder up to the point of
    abort, so a caller may snapshot the state, size-walk, then restore and
    rebuild the identical forest.
    """
    total = 0
    for _ in range(k):
        # mirror _gw_offspring_sequence's chunked draws
        walk = 0
        chunk = 64
        n_vertices = 0
        done = False
        while not done:
            ks = rng.geometric(0.5, size=chunk) - 1
            for kk in ks:
                n_vertices += 1
                walk += kk - 1
                if walk < 0:
                    done = True
                    break
                if total + n_vertices - 1 > total_cap:
                    return -1
            chunk = min(2 * chunk, 65536)
        total += n_vertices - 1
        if total > total_cap:
            return -1
        # mirror sample_labels' increment draw to stay aligned
        if n_vertices > 1:
            rng.integers(-1, 2, size=n_vertices - 1)
    return total


# ---------------------------------------------------------------------------
# contour and label codings
# ---------------------------------------------------------------------------

def contour_label_functions(lt: LabeledTree) -> tuple[np.ndarray, np.ndarray]:
    """(C, L) of length 2n+1: depths and labels along the contour."""
    cv = lt.tree.contour_vertices()
    depths = lt.tree.depths()
    return depths[cv], lt.labels[cv]


def forest_contour(fb: LabeledForestWithBridge):
    """Forest coding: corner vertex ids, C_j = |u_j| - alpha_j + 1 and
    L_j = b_alpha + label, with the closing convention C_N = -k, L_N = 0.

    Returns (C, L, corner_vertex, corner_tree) where the first three have
    length N+1 = 2*edges + k + 1 (the last entry is the closing convention
    and has no corner), and vertex ids are global across the forest
    (tree i's vertices are offset by the sizes of trees before it).
    """
    k = fb.k
    cs, ls, cv, ct = [], [], [], []
    offset = 0
    for i, lt in enumerate(fb.trees):
        walk = lt.tree.contour_vertices()  # 2 n_i + 1 corners, ends at the root
        depths = lt.tree.depths()
        cs.append(depths[walk] - i)              # |u| - alpha + 1 with alpha = i+1
        ls.append(fb.bridge[i] + lt.labels[walk])
        cv.append(walk + offset)
        ct.append(np.full(len(walk), i, dtype=np.int64))
        offset += lt.tree.n_vertices
    C = np.concatenate(cs + [np.array([-k])])
    L = np.concatenate(ls + [np.array([0])])
    corner_vertex = np.concatenate(cv)
    corner_tree = np.concatenate(ct)
    return C, L, corner_vertex, corner_tree


def reroot_tree_at_vertex(lt: LabeledTree, v: int) -> LabeledTree:
    """Re-root at the first corner of v; labels shifted so the new root is 0.

    Matches the contour-level transform: the new contour and labels are the
    cyclically shifted ones, C~_j = d_C(k, k+j), L~_j = L_{k+j} - L_k.
    """
    cv = lt.tree.contour_vertices()
    if not (0 <= v < lt.tree.n_vertices):
        raise ValueError("vertex out of range")
    k = int(np.argmax(cv == v))
    C, L = contour_label_functions(lt)
    n2 = len(C) - 1  # 2 * n_edges
    Ct, Lt = reroot_contour(C, L, k)
    new_tree = PlaneTree.from_dyck(np.diff(Ct))
    new_cv = new_tree.contour_vertices()
    labels = np.zeros(new_tree.n_vertices, dtype=np.int64)
    labels[new_cv] = Lt
    return LabeledTree(new_tree, labels)


def reroot_contour(C, L, k):
    """The re-rooted contour pair: C~_j = C_{k xor j} + C_k - 2 min, L~ shifted."""
    C = np.asarray(C)
    L = np.asarray(L)
    n2 = len(C) - 1
    j = np.arange(n2 + 1)
    kpj = k + j
    kpj = np.where(kpj <= n2, kpj, kpj - n2)
    lo = np.minimum(kpj, k)
    hi = np.maximum(kpj, k)
    Ct = np.empty(n2 + 1, dtype=np.int64)
    for idx in range(n2 + 1):
        Ct[idx] = C[kpj[idx]] + C[k] - 2 * C[lo[idx]:hi[idx] + 1].min()
    Lt = L[kpj] - L[k]
    return Ct, Lt


# ---------------------------------------------------------------------------
# exhaustive enumeration (oracle scale only)
# ---------------------------------------------------------------------------

def enumerate_plane_trees(n: int) -> list[PlaneTree]:
    if n > 8:
        raise SizeTooLarge("enumeration capped at n = 8")
    words: list[list[int]] = []

    def rec(word, opens, closes):
        if opens == n and closes == n:
            words.append(word[:])
            return
        if opens < n:
            word.append(1)
            rec(word, opens + 1, closes)
            word.pop()
        if closes < opens:
            word.append(-1)
            rec(word, opens, closes + 1)
            word.pop()

    rec([], 0, 0)
    return [PlaneTree.from_dyck(w) for w in words]


def enumerate_labeled_trees(n: int) -> list[LabeledTree]:
    """All labeled plane trees with n edges (root label 0): 3^n per shape."""
    if n > 6:
        raise SizeTooLarge("labeled enumeration capped at n = 6")
    out = []
    for t in enumerate_plane_trees(n):
        for mask in range(3**n):
            inc = np.empty(n, dtype=np.int64)
            m = mask
            for e in range(n):
                inc[e] = m % 3 - 1
                m //= 3
            labels = np.zeros(n + 1, dtype=np.int64)
            for v in range(1, n + 1):
                labels[v] = labels[t.parent[v]] + inc[v - 1]
            out.append(LabeledTree(t, labels))
    return out


def enumerate_bridges(k: int) -> list[np.ndarray]:
    """All bridges of length k by depth-first search over increments."""
    if k > 8:
        raise SizeTooLarge("bridge enumeration capped at k = 8")
    out = []

    def rec(prefix, total):
        if len(prefix) == k:
            if total == 0:
                b = np.concatenate([[0], np.cumsum(prefix[:-1])]) if k > 1 else np.zeros(1)
                out.append(b.astype(np.int64))
            return
        remaining = k - len(prefix)
        # later increments are each >= -1, so total + d <= remaining - 1
        for d in range(-1, remaining - total):
            prefix.append(d)
            rec(prefix, total + d)
            prefix.pop()

    rec([], 0)
    return out

