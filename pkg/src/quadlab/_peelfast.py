"""Count-level peeling engines (numba).

The boundary of a peeling-by-layers run is, up to rotation, determined by
three integers: the half-perimeter L, the number h of boundary vertices
labeled i+2 and the number m = L - h labeled i (labels i+1 fill the odd
positions). Peeling events act on (L, h, m) explicitly:

  A:    L+1, h+1, m            (new i+2 vertex extends the high arc)
  B_j:  eats forward into the low region: buries j+1 label-i vertices;
        if j+1 >= m the layer completes and the odd class becomes the new
        low class: (L-j-1, 0, L-j-1), layer -> i+1
  B'_j: eats backward into the high arc: (L-j-1, h-j-1, m) when j+1 <= h,
        else (L-j-1, 0, m+h-j-1); never completes a layer
  j = L-1 terminates (finite mode only).

The label counts never go inconsistent: m stays >= 1 between completions
because the boundary is bipartite. Hole volumes are sampled exactly from
the Boltzmann boundary-quadrangulation volume law for perimeters 2j with
j <= J_EXACT (inverse-cdf tables with a Pareto(3/2) tail beyond the
1 - 1e-3 quantile) and from the asymptotic volume-factor law
m ~ round(j(j+1)/2 * theta), theta = 1/(2 Gamma(3/2)), beyond; the exact
mean is j(j+1)/2 for every j.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

J_EXACT = 32
_TAIL_Q = 1e-3

U64 = np.uint64


@njit(cache=True, inline="always")
def _splitmix64(x):
    x = (x + U64(0x9E3779B97F4A7C15)) & U64(0xFFFFFFFFFFFFFFFF)
    z = x
    z = ((z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)) & U64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)) & U64(0xFFFFFFFFFFFFFFFF)
    return x, z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _rng_init(seed):
    s, a = _splitmix64(U64(seed))
    s, b = _splitmix64(s)
    if a == U64(0) and b == U64(0):
        a = U64(1)
    return a, b


@njit(cache=True, inline="always")
def _rng_next(s0, s1):
    x = s0
    y = s1
    x = x ^ ((x << U64(23)) & U64(0xFFFFFFFFFFFFFFFF))
    x = x ^ (x >> U64(17))
    x = x ^ y ^ (y >> U64(26))
    out = (x + y) & U64(0xFFFFFFFFFFFFFFFF)
    return y, x, out


@njit(cache=True, inline="always")
def _uniform(s0, s1):
    s0, s1, w = _rng_next(s0, s1)
    return s0, s1, (np.float64(w >> U64(11))) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _sample_move(L, up, s0, s1):
    """One peeling move at half-perimeter L: +1 for A, -(j+1) for B-type."""
    if up:
        q_a = (2.0 * L + 1.0) / (3.0 * L)
    else:
        q_a = (2.0 * L + 1.0) / (3.0 * (L + 1.0))
    s0, s1, u = _uniform(s0, s1)
    if u < q_a:
        return s0, s1, 1
    u = u - q_a
    if up:
        f = 0.5 * (L - 1.0) / (2.0 * L - 1.0)
    else:
        f = 0.25 * (2.0 * L) / (2.0 * L - 1.0)
    i = 1
    c = f
    while u > c and i < L:
        l = L - i
        if up:
            hr = 2.0 * (l - 1.0) / (2.0 * l - 1.0)
        else:
            hr = (2.0 * l) / (2.0 * l - 1.0)
        f = f * (2.0 * i - 1.0) / (2.0 * (i + 2.0)) * hr
        i += 1
        c += f
    if up and i >= L:
        i = L - 1  # float-slop guard; the up-chain never closes
    return s0, s1, -i


def build_volume_tables(j_max: int = J_EXACT, tail_q: float = _TAIL_Q):
    """Inverse-cdf tables of the hole-volume law per perimeter 2j, j <= j_max.

    cdf[offsets[j]:offsets[j+1]] is the cdf of the inner-face count
    m = 0, 1, ... truncated at the 1 - tail_q quantile; the total mass is
    normalized with a power-law tail correction accurate to ~1e-6.
    """
    cdfs = [np.ones(1)]
    offsets = [0, 1]
    for j in range(1, j_max + 1):
        top = max(2048, 160 * j * j)
        m = np.arange(top, dtype=np.float64)
        ratios = (2 * m + j + 1) * (2 * m + j) / (4.0 * (m + 1) * (m + j + 2))
        terms = np.empty(top)
        terms[0] = 1.0 / (j * (j + 1.0))
        terms[1:] = terms[0] * np.cumprod(ratios[:-1])
        total = terms.sum() + (2.0 / 3.0) * top * terms[-1]
        cdf = np.cumsum(terms) / total
        cut = int(np.searchsorted(cdf, 1.0 - tail_q)) + 1
        cdfs.append(cdf[:cut])
        offsets.append(offsets[-1] + cut)
    return np.asarray(offsets, dtype=np.int64), np.concatenate(cdfs)


_VOL_OFFSETS, _VOL_CDF = build_volume_tables()


@njit(cache=True)
def _sample_volume(j, s0, s1, offsets, cdf):
    """Inner-face count of the Boltzmann quadrangulation filling a hole of
    perimeter 2j."""
    if j == 0:
        return s0, s1, 0
    if j <= J_EXACT:
        lo = offsets[j]
        hi = offsets[j + 1]
        s0, s1, u = _uniform(s0, s1)
        if u < cdf[hi - 1]:
            a, b = lo, hi - 1
            while a < b:
                mid = (a + b) // 2
                if cdf[mid] < u:
                    a = mid + 1
                else:
                    b = mid
            return s0, s1, int(a - lo)
        mq = hi - lo - 1
        s0, s1, v = _uniform(s0, s1)
        if v < 1e-12:
            v = 1e-12
        return s0, s1, int(mq * v ** (-2.0 / 3.0)) + 1
    s0, s1, u1 = _uniform(s0, s1)
    if u1 < 1e-300:
        u1 = 1e-300
    e = -math.log(u1)
    s0, s1, u2 = _uniform(s0, s1)
    s0, s1, u3 = _uniform(s0, s1)
    if u2 < 1e-300:
        u2 = 1e-300
    z = math.sqrt(-2.0 * math.log(u2)) * math.cos(2.0 * math.pi * u3)
    g = e + 0.5 * z * z          # Gamma(3/2)
    theta = 1.0 / (2.0 * g)
    return s0, s1, int(j * (j + 1.0) * 0.5 * theta + 0.5)


@njit(cache=True)
def _advance(L, h, m, layer, target_layer, up, s0, s1, H_out, V_out,
             want_volume, volume, offsets, cdf, max_steps, steps):
    """Advance one layered chain; see module docstring for the dynamics.

    Returns (status, L, h, m, layer, s0, s1, volume, steps): status 0 =
    target layer reached, 1 = map closed (finite mode), 2 = step budget.
    """
    while layer < target_layer:
        if steps >= max_steps:
            return 2, L, h, m, layer, s0, s1, volume, steps
        s0, s1, move = _sample_move(L, up, s0, s1)
        steps += 1
        if move == 1:
            L += 1
            h += 1
            if want_volume:
                volume += 1.0
        else:
            i_jump = -move
            if i_jump == L and not up:
                if want_volume and L >= 2:
                    s0, s1, dv = _sample_volume(L - 1, s0, s1, offsets, cdf)
                    volume += dv
                return 1, 0, 0, 0, layer, s0, s1, volume, steps
            if want_volume and i_jump >= 2:
                s0, s1, dv = _sample_volume(i_jump - 1, s0, s1, offsets, cdf)
                volume += dv
            s0, s1, u = _uniform(s0, s1)
            L -= i_jump
            if u < 0.5:
                if i_jump >= m:      # B into the low region: layer completes
                    layer += 1
                    h = 0
                    m = L
                    H_out[layer] = L
                    V_out[layer] = volume
                else:
                    m -= i_jump
            else:
                if i_jump <= h:      # B' into the high arc
                    h -= i_jump
                else:
                    m = m + h - i_jump
                    h = 0
    return 0, L, h, m, layer, s0, s1, volume, steps


@njit(cache=True)
def run_layers_batch(seeds, up, target_layer, want_volume, offsets, cdf,
                     max_steps):
    """Layered chains from the initial square (L=2, h=1, m=1, volume 1).

    Returns (status, H, V, steps); H[r, k], V[r, k] are the half-perimeter
    and volume at completion of layer k (0 where never reached).
    """
    n = len(seeds)
    H = np.zeros((n, target_layer + 1), dtype=np.float64)
    V = np.zeros((n, target_layer + 1), dtype=np.float64)
    status = np.empty(n, dtype=np.int64)
    steps_out = np.empty(n, dtype=np.int64)
    for r in range(n):
        s0, s1 = _rng_init(seeds[r])
        st, L, h, m, layer, s0, s1, vol, steps = _advance(
            2, 1, 1, 0, target_layer, up, s0, s1,
            H[r], V[r], want_volume, 1.0, offsets, cdf, max_steps, 0)
        status[r] = st
        steps_out[r] = steps
    return status, H, V, steps_out


@njit(cache=True)
def survivor_states_batch(seeds, up, target_layer, offsets, cdf, max_steps):
    """Chains from the initial square to target_layer, returning final
    states for splitting-style continuation (no volume tracking)."""
    n = len(seeds)
    status = np.empty(n, dtype=np.int64)
    Ls = np.zeros(n, dtype=np.int64)
    hs = np.zeros(n, dtype=np.int64)
    ms = np.zeros(n, dtype=np.int64)
    steps_out = np.zeros(n, dtype=np.int64)
    H_scr = np.zeros(target_layer + 1, dtype=np.float64)
    V_scr = np.zeros(target_layer + 1, dtype=np.float64)
    for r in range(n):
        s0, s1 = _rng_init(seeds[r])
        st, L, h, m, layer, s0, s1, vol, steps = _advance(
            2, 1, 1, 0, target_layer, up, s0, s1,
            H_scr, V_scr, False, 0.0, offsets, cdf, max_steps, 0)
        status[r] = st
        steps_out[r] = steps
        if st == 0:
            Ls[r] = L
            hs[r] = h
            ms[r] = m
    return status, Ls, hs, ms, steps_out


@njit(cache=True)
def continue_layers_batch(seeds, L0, h0, m0, layer0, up, target_layer,
                          offsets, cdf, max_steps):
    """Continue chains from the given states until target_layer layers have
    completed. Returns (status, L, h, m) final states."""
    n = len(seeds)
    status = np.empty(n, dtype=np.int64)
    Ls = np.zeros(n, dtype=np.int64)
    hs = np.zeros(n, dtype=np.int64)
    ms = np.zeros(n, dtype=np.int64)
    H_scr = np.zeros(target_layer + 1, dtype=np.float64)
    V_scr = np.zeros(target_layer + 1, dtype=np.float64)
    for r in range(n):
        s0, s1 = _rng_init(seeds[r])
        st, L, h, m, layer, s0, s1, vol, steps = _advance(
            L0[r], h0[r], m0[r], layer0[r], target_layer, up, s0, s1,
            H_scr, V_scr, False, 0.0, offsets, cdf, max_steps, 0)
        status[r] = st
        if st == 0:
            Ls[r] = L
            hs[r] = h
            ms[r] = m
    return status, Ls, hs, ms


@njit(cache=True)
def p_ell_batch(seeds, ell, max_steps, min_watch_cap):
    """R_1 and the running minimum of the half-perimeter for the
    alternating-boundary infinite-map model with boundary 2*ell.

    The chain drifts to infinity, so the minimum is tracked until L first
    exceeds min_watch_cap after R_1; R_1 = -1 if max_steps elapse first.
    """
    n = len(seeds)
    R1 = np.full(n, -1, dtype=np.int64)
    minS = np.zeros(n, dtype=np.int64)
    for r in range(n):
        s0, s1 = _rng_init(seeds[r])
        L = ell
        h = 0
        m = ell
        mn = ell
        steps = 0
        r1 = -1
        while steps < max_steps:
            s0, s1, move = _sample_move(L, True, s0, s1)
            steps += 1
            if move == 1:
                L += 1
                h += 1
            else:
                i_jump = -move
                s0, s1, u = _uniform(s0, s1)
                L -= i_jump
                if u < 0.5:
                    if i_jump >= m:
                        if r1 < 0:
                            r1 = steps
                        h = 0
                        m = L
                    else:
                        m -= i_jump
                else:
                    if i_jump <= h:
                        h -= i_jump
                    else:
                        m = m + h - i_jump
                        h = 0
            if L < mn:
                mn = L
            if r1 >= 0 and L > min_watch_cap:
                break
        R1[r] = r1
        minS[r] = mn
    return R1, minS


@njit(cache=True)
def uipq_step_paths(seeds, checkpoints, want_volume, offsets, cdf):
    """Step-indexed (S, M) of the infinite-mode chain from the initial
    square, recorded at the given step checkpoints."""
    n = len(seeds)
    k = len(checkpoints)
    S = np.zeros((n, k), dtype=np.float64)
    M = np.zeros((n, k), dtype=np.float64)
    n_steps = checkpoints[k - 1]
    for r in range(n):
        s0, s1 = _rng_init(seeds[r])
        L = 2
        h = 1
        m = 1
        vol = 1.0
        ci = 0
        for t in range(1, n_steps + 1):
            s0, s1, move = _sample_move(L, True, s0, s1)
            if move == 1:
                L += 1
                h += 1
                vol += 1.0
            else:
                i_jump = -move
                if want_volume and i_jump >= 2:
                    s0, s1, dv = _sample_volume(i_jump - 1, s0, s1, offsets, cdf)
                    vol += dv
                s0, s1, u = _uniform(s0, s1)
                L -= i_jump
                if u < 0.5:
                    if i_jump >= m:
                        h = 0
                        m = L
                    else:
                        m -= i_jump
                else:
                    if i_jump <= h:
                        h -= i_jump
                    else:
                        m = m + h - i_jump
                        h = 0
            while ci < k and t == checkpoints[ci]:
                S[r, ci] = L
                M[r, ci] = vol
                ci += 1
    return S, M


def volume_tables():
    return _VOL_OFFSETS, _VOL_CDF
