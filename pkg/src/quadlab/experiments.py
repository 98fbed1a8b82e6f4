"""Experiment registry: samplers bound to their laws, with binding gates.

Every experiment is deterministic given (id, seed, config): stochastic work
derives per-replica streams from the seed, configs carry the sample sizes
and tolerances, and reports serialize to JSON. Gate tolerances follow the
acceptance criteria; sample sizes default to the binding scale and can be
shrunk with quick=True for non-binding smoke runs.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _fast, _peelfast, cmap, laws, mms, peeling, rng as qrng, schaeffer, snake, stats, trees


@dataclass
class ExperimentReport:
    experiment: str
    seed: int
    config: dict
    values: dict = field(default_factory=dict)
    gates: dict = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(g["passed"] for g in self.gates.values())

    def gate(self, name: str, value, passed: bool, requirement: str):
        self.gates[name] = {"value": _jsonable(value), "passed": bool(passed),
                            "requirement": requirement}

    def to_json(self) -> str:
        return json.dumps({
            "experiment": self.experiment, "seed": self.seed,
            "config": _jsonable(self.config), "values": _jsonable(self.values),
            "gates": self.gates, "passed": self.passed,
            "elapsed_seconds": round(self.elapsed, 3),
        }, sort_keys=True, indent=2)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Fraction):
        return str(x)
    return x


class UnknownExperiment(KeyError):
    pass


EXPERIMENTS = {}


def register(name):
    def deco(fn):
        EXPERIMENTS[name] = fn
        return fn
    return deco


def run_experiment(exp_id: str, seed: int, config: dict | None = None,
                   quick: bool = False) -> ExperimentReport:
    if exp_id not in EXPERIMENTS:
        raise UnknownExperiment(
            f"unknown experiment {exp_id!r}; known: {sorted(EXPERIMENTS)}")
    cfg = dict(config or {})
    if quick:
        cfg["quick"] = True
    rep = ExperimentReport(exp_id, seed, cfg)
    t0 = time.time()
    EXPERIMENTS[exp_id](rep, seed, cfg)
    rep.elapsed = time.time() - t0
    if quick:
        for g in rep.gates.values():
            g["requirement"] = "quick (non-binding): " + g["requirement"]
    return rep


# ---------------------------------------------------------------------------
# 1. exact enumeration
# ---------------------------------------------------------------------------

@register("enumeration")
def _exp_enumeration(rep, seed, cfg):
    """Bijection image counts at n = 1, 2, 3 equal the closed-form counts."""
    for n in (1, 2, 3):
        keys = set()
        for lt in trees.enumerate_labeled_trees(n):
            for eps in (0, 1):
                q = schaeffer.tree_to_pointed_quad(lt, eps)
                if not q.is_quadrangulation():
                    rep.gate(f"valid_n{n}", False, False, "all images are quadrangulations")
                keys.add(q.canonical_key())
        want = laws.n_pointed_quadrangulations(n)
        rep.values[f"images_n{n}"] = len(keys)
        rep.gate(f"count_n{n}", len(keys), len(keys) == want, f"= {want}")


# ---------------------------------------------------------------------------
# 2. exact rational identities
# ---------------------------------------------------------------------------

@register("weights-exact")
def _exp_weights(rep, seed, cfg):
    L_max = int(cfg.get("L_max", 500))
    ell_max = int(cfg.get("ell_max", 200))
    xcheck = int(cfg.get("fraction_cross_check", 40))
    if cfg.get("quick"):
        L_max, ell_max, xcheck = 60, 40, 12
    # normalization of the one-step law at L is the harmonicity identity at
    # L: p1 h(L+1) + sum_i p_{-i} h(L-i) = h(L). Verified in scaled integer
    # arithmetic: multiplying by 3 * 4^{L+1} * lcm(1..L_max+1) clears every
    # denominator (i and i+1 are coprime, so i(i+1) divides the lcm).
    lcm = 1
    for x in range(2, L_max + 2):
        lcm = math.lcm(lcm, x)
    c2 = [math.comb(2 * m, m) for m in range(L_max + 2)]
    lcm_div = [0] + [lcm // (i * (i + 1)) for i in range(1, L_max + 1)]
    pre = [24 * c2[i - 1] * lcm_div[i] for i in range(1, L_max + 1)]
    bad = 0
    for L in range(1, L_max + 1):
        rhs_d = 12 * c2[L] * lcm
        rhs_u = rhs_d * L
        lhs_d = 2 * c2[L + 1] * lcm
        lhs_u = lhs_d * (L + 1)
        for i in range(1, L + 1):
            term = pre[i - 1] * c2[L - i]
            lhs_d += term
            lhs_u += term * (L - i)
        if lhs_d != rhs_d or lhs_u != rhs_u:
            bad += 1
    rep.gate("normalization", bad, bad == 0,
             f"exact normalization (= harmonicity) for all L <= {L_max}, both h-functions")
    rep.gate("harmonicity", bad, bad == 0 and ell_max <= L_max,
             f"h_down (h(0)=1) and h_up (h(0)=0) harmonic for ell <= {ell_max}")
    # tie the Fraction-level step_weights implementation to the identity
    bad_frac = 0
    for L in range(1, xcheck + 1):
        for mode in ("boltzmann", "uipq"):
            w = peeling.step_weights(L, mode)
            if w.p_A + sum(w.p_B) != 1:
                bad_frac += 1
    rep.gate("step_weights_exact", bad_frac, bad_frac == 0,
             f"step_weights sums to 1 exactly for L <= {xcheck}")

    # mean-step identity: (1/2) sum i p_{-i} = 1/3 with an analytic tail
    import mpmath as mp
    M = int(cfg.get("drift_terms", 10_000))
    if cfg.get("quick"):
        M = 2000
    mp.mp.dps = 50
    partial = mp.mpf(0)
    p = mp.mpf(1) / 4
    for i in range(1, M + 1):
        partial += i * p
        p = p * (2 * i - 1) / (2 * (i + 2))
    tail = _drift_tail(M)
    err = abs(float(partial) + tail - 2.0 / 3.0)
    rep.values["drift_partial"] = float(partial)
    rep.values["drift_tail"] = tail
    rep.gate("mean_drift", err, err <= 1e-12,
             "(1/2) sum i p_{-i} = 1/3 to 1e-12 with analytic tail")


def _drift_tail(M: int) -> float:
    """sum_{i > M} i p_{-i} = (1/2) sum_{m >= M} b_m/(m+2), b_m = 4^{-m} C(2m,m).

    Using b_m = (pi m)^{-1/2}(1 - 1/(8m) + 1/(128 m^2) + O(m^{-3})) the
    summand expands as m^{-3/2}(1 - (17/8)/m + (545/128)/m^2 + O(m^{-3}))
    / (2 sqrt(pi)); partial zeta tails come from Euler-Maclaurin. The
    truncation error is below 1e-13 for M >= 5000.
    """
    def zeta_tail(s: float) -> float:
        return (M ** (1 - s) / (s - 1) + 0.5 * M ** (-s)
                + s * M ** (-s - 1) / 12
                - s * (s + 1) * (s + 2) * M ** (-s - 3) / 720)

    val = zeta_tail(1.5) - (17.0 / 8.0) * zeta_tail(2.5) \
        + (545.0 / 128.0) * zeta_tail(3.5)
    return val / (2.0 * math.sqrt(math.pi))


# ---------------------------------------------------------------------------
# 3. distance law
# ---------------------------------------------------------------------------

@register("dist-root-law")
def _exp_dist_root(rep, seed, cfg):
    n_samples = int(cfg.get("n_samples", 100_000))
    dmax = int(cfg.get("dmax", 12))
    if cfg.get("quick"):
        n_samples = 10_000
    seeds = qrng.child_seeds(seed, 64)
    per = (n_samples + 63) // 64
    d = _fast.dist_root_samples(seeds, per, dmax)[:n_samples]
    observed = np.bincount(d, minlength=dmax + 2)
    pmf = [float(laws.dist_root_pmf(x)) for x in range(dmax + 1)]
    pmf.append(float(laws.dist_root_tail(dmax + 1)))
    expected = np.asarray(pmf) * n_samples
    res = stats.chi2_test(observed, expected)
    rep.values["chi2"] = res.as_dict()
    rep.values["pmf_head"] = (observed[:5] / n_samples).tolist()
    rep.gate("chi2_p", res.p_value, res.p_value > 0.01, "chi-square p > 0.01")


# ---------------------------------------------------------------------------
# 4. sampler agreement (tree route vs peeling route)
# ---------------------------------------------------------------------------

@register("sampler-agreement")
def _exp_agreement(rep, seed, cfg):
    n_samples = int(cfg.get("n_samples", 100_000))
    size_cap = int(cfg.get("size_cap", 1500))
    dmax = int(cfg.get("dmax", 40))
    if cfg.get("quick"):
        n_samples = 8000
        size_cap = 400
    rng_peel = qrng.stream(seed, 1)

    seeds = qrng.child_seeds(seed, 64)
    per = (n_samples + 63) // 64
    t_sizes, t_dists = _fast.size_and_dist_samples(seeds, per, size_cap, dmax)
    t_sizes, t_dists = t_sizes[:n_samples], t_dists[:n_samples]

    p_sizes = np.empty(n_samples, dtype=np.int64)
    p_dists = np.empty(n_samples, dtype=np.int64)
    keys_tree = {}
    keys_peel = {}
    for r in range(n_samples):
        try:
            q, _tr = peeling.run_boltzmann_peeling(rng_peel, max_faces=size_cap)
            p_sizes[r] = q.n_faces
            dd = q.bfs_distances(q.root_vertex)[q.pointed_vertex]
            p_dists[r] = min(int(dd), dmax + 1)
            if q.n_faces <= 3:
                k = q.canonical_key()
                keys_peel[k] = keys_peel.get(k, 0) + 1
        except trees.SizeTooLarge:
            p_sizes[r] = size_cap + 1
            p_dists[r] = dmax + 1
    # tree-route canonical forms: Boltzmann conditioned on size n is uniform
    # over images, so sample small maps directly in the observed proportions
    rng_tree = qrng.stream(seed, 2)
    for n in (1, 2, 3):
        count = int((t_sizes == n).sum())
        for _ in range(count):
            t = trees.sample_uniform_plane_tree(n, rng_tree)
            lt = trees.sample_labels(t, "labeled", rng_tree)
            q = schaeffer.tree_to_pointed_quad(lt, int(rng_tree.integers(2)))
            k = q.canonical_key()
            keys_tree[k] = keys_tree.get(k, 0) + 1
    all_keys = sorted(set(keys_tree) | set(keys_peel))
    ct = np.array([keys_tree.get(k, 0) for k in all_keys], dtype=float)
    cp = np.array([keys_peel.get(k, 0) for k in all_keys], dtype=float)
    res_forms = stats.chi2_two_sample(ct, cp)
    res_size = stats.ks_two_sample(t_sizes, p_sizes)
    res_dist = stats.ks_two_sample(t_dists, p_dists)
    joint_t = t_sizes.astype(float) * (dmax + 2) + t_dists
    joint_p = p_sizes.astype(float) * (dmax + 2) + p_dists
    res_joint = stats.ks_two_sample(joint_t, joint_p)
    rep.values["n_forms"] = len(all_keys)
    rep.values["chi2_forms"] = res_forms.as_dict()
    rep.values["ks_size"] = res_size.as_dict()
    rep.values["ks_dist"] = res_dist.as_dict()
    rep.values["ks_joint"] = res_joint.as_dict()
    rep.gate("forms_p", res_forms.p_value, res_forms.p_value > 0.01,
             "canonical forms |Q|<=3 two-sample chi2 p > 0.01")
    rep.gate("size_p", res_size.p_value, res_size.p_value > 0.01, "KS(|Q|) p > 0.01")
    rep.gate("dist_p", res_dist.p_value, res_dist.p_value > 0.01, "KS(d) p > 0.01")
    rep.gate("joint_p", res_joint.p_value, res_joint.p_value > 0.01,
             "KS on the interleaved (|Q|, d) code p > 0.01")


# ---------------------------------------------------------------------------
# 5. hull decomposition
# ---------------------------------------------------------------------------

@register("hull-decomposition")
def _exp_hull(rep, seed, cfg):
    n_runs = int(cfg.get("n_runs", 1000))
    max_faces = int(cfg.get("max_faces", 3000))
    if cfg.get("quick"):
        n_runs = 120
    rng = qrng.stream(seed)
    n_round = 0
    n_checked = 0
    filled_keys = {}
    direct_keys = {}
    fill_small = 4
    while n_checked < n_runs:
        try:
            q, tr = peeling.run_boltzmann_peeling(rng, max_faces=max_faces)
        except trees.SizeTooLarge:
            continue
        n_checked += 1
        d = int(q.bfs_distances(q.root_vertex)[q.pointed_vertex])
        if d < 1:
            continue
        radius = int(rng.integers(1, d + 1))
        split = cmap.hull_split(q, radius)
        if split != cmap.ALL_OF_Q:
            if split.reglue().canonical_key() != q.canonical_key():
                rep.gate("roundtrip", n_round, False, "glue(hull, filled) == Q exactly")
                return
            n_round += 1
        # filled-part law at radius 1, perimeter 2, small size
        split1 = split if radius == 1 else cmap.hull_split(q, 1)
        if split1 != cmap.ALL_OF_Q and split1.half_perimeter == 1 \
                and split1.filled.n_inner_faces <= fill_small:
            key = split1.filled.canonical_key()
            filled_keys[key] = filled_keys.get(key, 0) + 1
    rep.values["roundtrips"] = n_round
    rep.gate("roundtrip", n_round, n_round > 0.3 * n_runs,
             "glue(extract_hull, extract_filled_quad) reproduces Q bit-exactly")
    # conditional law of the filled part: pointed Boltzmann with the same
    # perimeter (compared conditioned on small size on both sides)
    rng2 = qrng.stream(seed, 3)
    target = sum(filled_keys.values())
    got = 0
    while got < 3 * target:
        try:
            bq = schaeffer.boltzmann_boundary_quad(1, rng2, pointed=True, max_edges=10**6)
        except trees.SizeTooLarge:
            continue
        got += 1
        if bq.n_inner_faces <= fill_small:
            key = bq.canonical_key()
            direct_keys[key] = direct_keys.get(key, 0) + 1
    all_keys = sorted(set(filled_keys) | set(direct_keys))
    a = np.array([filled_keys.get(k, 0) for k in all_keys], dtype=float)
    b = np.array([direct_keys.get(k, 0) for k in all_keys], dtype=float)
    rep.values["filled_law_counts"] = [float(a.sum()), float(b.sum())]
    if a.sum() >= 50 and b.sum() >= 50:
        res = stats.chi2_two_sample(a, b, min_expected=3)
        rep.values["filled_law_chi2"] = res.as_dict()
        rep.gate("filled_law_p", res.p_value, res.p_value > 0.01,
                 "filled-quad law | perimeter 2 matches pointed boundary Boltzmann")
    else:
        rep.gate("filled_law_p", float(min(a.sum(), b.sum())), bool(cfg.get("quick")),
                 "needs >= 50 conditioned samples per side (binding at full scale)")


# ---------------------------------------------------------------------------
# 6. Xi tail
# ---------------------------------------------------------------------------

@register("xi-tail")
def _exp_xi_tail(rep, seed, cfg):
    n = int(cfg.get("n", 400))
    n_direct = int(cfg.get("n_direct", 1_000_000))
    n_uipq = int(cfg.get("n_uipq", 1200))
    clones = int(cfg.get("clones", 2500))
    h0_frac = float(cfg.get("h0_frac", 0.05))
    if cfg.get("quick"):
        n, n_direct, n_uipq, clones = 60, 100_000, 400, 800
    offs, cdf = _peelfast.volume_tables()
    levels = [n // 4, n // 2, (3 * n) // 4, n]
    max_steps = 50 * n**3 + 10**6

    # stage 1: direct runs to the first level
    seeds1 = qrng.child_seeds(seed, n_direct)
    st, Ls, hs, ms, steps = _peelfast.survivor_states_batch(
        seeds1, False, levels[0], offs, cdf, max_steps)
    surv = st == 0
    p_hat = [float(surv.mean())]
    pool = (Ls[surv], hs[surv], ms[surv])
    rel_var = [(1 - p_hat[0]) / max(surv.sum(), 1)]
    rng = qrng.stream(seed, 7)
    for stage, (lo, hi) in enumerate(zip(levels, levels[1:]), start=2):
        m = len(pool[0])
        pick = rng.integers(0, m, size=clones)
        seeds_c = qrng.child_seeds(seed, clones, stream_id=stage)
        stc, Lc, hc, mc = _peelfast.continue_layers_batch(
            seeds_c, pool[0][pick], pool[1][pick], pool[2][pick],
            np.full(clones, lo, dtype=np.int64), False, hi, offs, cdf, max_steps)
        sc = stc == 0
        f = float(sc.mean())
        p_hat.append(f)
        rel_var.append(1.5 * (1 - f) / max(sc.sum(), 1))  # clone-correlation slack
        pool = (Lc[sc], hc[sc], mc[sc])
    p_split = float(np.prod(p_hat))
    H_final = pool[0].astype(float)
    h0 = h0_frac * n * n
    frac_small = float((H_final < h0).mean()) if len(H_final) else 0.0

    # importance part: E[2/H 1_{H >= h0}] under the infinite-mode chain
    seeds_u = qrng.child_seeds(seed, n_uipq, stream_id=99)
    stu, Hu, Vu, _ = _peelfast.run_layers_batch(
        seeds_u, True, n, False, offs, cdf, max_steps)
    Hn = Hu[:, n]
    w = np.where(Hn >= h0, 2.0 / np.maximum(Hn, 1.0), 0.0)
    part_a = float(w.mean())
    se_a = float(w.std(ddof=1) / math.sqrt(len(w)))
    part_b = p_split * frac_small
    se_b = part_b * math.sqrt(sum(rel_var) + (0.03 if frac_small > 0 else 0.0))
    p_comb = part_a + part_b
    se = math.sqrt(se_a**2 + se_b**2)
    scaled = n * n * p_comb
    rep.values.update({
        "p_split": p_split, "p_direct_stage1": p_hat[0], "stage_fracs": p_hat,
        "part_a": part_a, "part_b": part_b, "frac_small": frac_small,
        "estimate": p_comb, "se": se, "n2_estimate": scaled,
        "n2_split": n * n * p_split, "exact_band": [
            float(4 * n * n / ((n + 1) * (n + 3))), float(4 * n / (n + 2))],
    })
    lo_g, hi_g = cfg.get("band", (3.4, 4.6))
    rep.gate("n2_tail", scaled, lo_g <= scaled <= hi_g,
             f"n^2 P(Xi >= {n}) in [{lo_g}, {hi_g}] (importance-boosted)")


# ---------------------------------------------------------------------------
# 7. hull exit-size law
# ---------------------------------------------------------------------------

@register("hull-gamma")
def _exp_hull_gamma(rep, seed, cfg):
    n = int(cfg.get("n", 10_000))
    delta = float(cfg.get("delta", 1.0))
    want = int(cfg.get("n_conditioned", 10_000))
    if cfg.get("quick"):
        n, want = 2500, 1500
    radius = int(delta * math.sqrt(n))
    offs, cdf = _peelfast.volume_tables()
    max_steps = 40 * radius**3 + 10**6
    H = []
    attempts = 0
    chunk = int(cfg.get("chunk", 1_000_000))
    stream = 0
    while len(H) < want and attempts < ek_cap(want, radius):
        seeds = qrng.child_seeds(seed, chunk, stream_id=stream)
        stream += 1
        st, Ls, hs, ms, steps = _peelfast.survivor_states_batch(
            seeds, False, radius, offs, cdf, max_steps)
        H.extend(Ls[st == 0].tolist())
        attempts += chunk
    H = np.asarray(H[:want], dtype=float)
    x = H / n
    scale = delta * delta
    res = stats.ks_test(x, lambda z: laws.gamma_half_cdf(z, scale=scale))
    ci = stats.mean_ci(x)
    rep.values.update({"n_conditioned": len(x), "attempts": attempts,
                       "ks": res.as_dict(), "mean_ci": ci.as_dict()})
    rep.gate("ks_dist", res.statistic, res.statistic < 0.05,
             "KS distance to Gamma(1/2, delta^2) < 0.05")
    lo, hi = scale / 2 - 0.05, scale / 2 + 0.05
    rep.gate("mean", ci.mean, lo <= ci.mean <= hi,
             f"mean of H/n in [{lo:.3f}, {hi:.3f}]")


def ek_cap(want, radius):
    # survival probability to `radius` layers is ~ 4/radius^2
    return int(1.6 * want * radius * radius / 4) + 500_000


# ---------------------------------------------------------------------------
# 8. infinite-map layer scaling
# ---------------------------------------------------------------------------

@register("uipq-layers")
def _exp_uipq_layers(rep, seed, cfg):
    n_runs = int(cfg.get("n_runs", 220))
    n_big = int(cfg.get("n", 400))
    ell = int(cfg.get("ell", 2000))
    r1_runs = int(cfg.get("r1_runs", 1000))
    if cfg.get("quick"):
        n_runs, n_big, ell, r1_runs = 60, 100, 400, 200
    offs, cdf = _peelfast.volume_tables()
    seeds = qrng.child_seeds(seed, n_runs)
    st, Hh, Vv, _ = _peelfast.run_layers_batch(
        seeds, True, n_big, False, offs, cdf, 10**12)
    means = {}
    for m in (n_big // 4, n_big // 2, n_big):
        means[m] = float(Hh[:, m].mean() / m**2)
    rep.values["H_over_n2"] = {str(k): v for k, v in means.items()}
    target = 1.5
    val = means[n_big]
    rep.gate("H_scaling", val, abs(val - target) <= 0.2 * target,
             f"E[H_n]/n^2 at n={n_big} within 20% of 3/2")
    seeds2 = qrng.child_seeds(seed, r1_runs, stream_id=5)
    R1, _mn = _peelfast.p_ell_batch(seeds2, ell, 10**9, 0)
    r1_mean = float(R1.mean() / ell)
    rep.values["R1_over_ell"] = r1_mean
    lo, hi = cfg.get("r1_band", (2.85, 3.15))
    rep.gate("R1", r1_mean, lo <= r1_mean <= hi,
             f"mean R1/ell at ell={ell} in [{lo}, {hi}]")


# ---------------------------------------------------------------------------
# 9. metric property suite
# ---------------------------------------------------------------------------

@register("metric-suite")
def _exp_metric(rep, seed, cfg):
    n_snakes = int(cfg.get("n_snakes", 100))
    max_edges = int(cfg.get("max_edges", 500))
    m_points = int(cfg.get("m_points", 320))
    if cfg.get("quick"):
        n_snakes, max_edges, m_points = 20, 120, 80
    rng = qrng.stream(seed)
    fails = {k: 0 for k in ("equal_D", "cactus", "closure", "ega", "trunc",
                            "reroot", "ghp")}
    ghp_worst = 0.0
    done = 0
    while done < n_snakes:
        n = int(rng.integers(20, max_edges + 1))
        t = trees.sample_uniform_plane_tree(n, rng)
        lt = trees.sample_labels(t, "labeled", rng)
        s = snake.snake_from_labeled_tree(lt)
        done += 1
        lab = s.vertex_labels()
        astar = int(s.tree_projection[s.argmin_label()])
        wstar = s.min_label
        for v in rng.integers(0, t.n_vertices, size=12):
            if snake.d_circ(s, astar, int(v)) != lab[v] - wstar:
                fails["equal_D"] += 1
        # cactus bound on sampled pairs
        depth = t.depths()
        for _ in range(12):
            a, b = int(rng.integers(t.n_vertices)), int(rng.integers(t.n_vertices))
            geo_min = min(int(lt.labels[w]) for w in schaeffer._tree_geodesic(t, depth, a, b))
            if snake.d_circ(s, a, b) < lab[a] + lab[b] - 2 * geo_min:
                fails["cactus"] += 1
        # closure properties on an index sample
        m = min(m_points, s.sigma)
        X, idx = snake.quotient_mms(s, m, rng=rng)
        base = snake.d_circ_index(s, *np.meshgrid(idx, idx, indexing="ij")).astype(float)
        if not (np.all(X.dist <= base + 1e-9)
                and np.allclose(snake.metric_closure(X.dist), X.dist)):
            fails["closure"] += 1
        # boundary-avoiding identity on a nonnegative snake
        if s.min_label < 0:
            s0 = _shifted_nonneg(s)
            idx0 = _positive_indices(s0, m, rng)
            if len(idx0) >= 3:
                ii, jj = np.meshgrid(idx0, idx0, indexing="ij")
                dmat = snake.metric_closure(snake.d_circ_index(s0, ii, jj).astype(float))
                d0raw = snake.delta_circ_index(s0, ii, jj)
                delta = snake.metric_closure(
                    np.where(d0raw > 1e17, np.inf, d0raw).astype(float))
                z = s0.what[idx0 % s0.sigma].astype(float)
                constrained = _constrained_chain_closure(dmat, z)
                ok = np.allclose(delta, constrained, atol=1e-9) or (
                    np.array_equal(np.isinf(delta), np.isinf(constrained))
                    and np.allclose(delta[~np.isinf(delta)],
                                    constrained[~np.isinf(constrained)], atol=1e-9))
                if not ok:
                    fails["ega"] += 1
        # truncation characterization (already exactly the subtree rule);
        # cross-check the time-change form on a random level
        y = int(rng.integers(wstar - 1, int(s.what[0])))
        keep = snake.retained_indices(s, y)
        anc = _ancestor_path_check(s, lt, y)
        if not np.array_equal(keep, anc):
            fails["trunc"] += 1
        # re-rooting involution and GHP invariance bound
        r = int(rng.integers(s.sigma + 1))
        s2 = snake.reroot_snake(s, r)
        s3 = snake.reroot_snake(s2, s.sigma - r)
        if not (np.array_equal(s3.zeta, s.zeta) and np.array_equal(s3.what, s.what)):
            fails["reroot"] += 1
        bound = _reroot_ghp_bound(s, s2, r, min(m, 120), rng)
        ghp_worst = max(ghp_worst, bound * m / (2.0 * s.sigma))
        if bound > 2 * (6.0 * s.sigma / min(m, 120)):
            fails["ghp"] += 1
    rep.values["fails"] = fails
    rep.values["ghp_worst_in_grid_steps"] = ghp_worst
    for k, v in fails.items():
        rep.gate(k, v, v == 0, f"{k} exact on all sampled snakes")


def _shifted_nonneg(s):
    lt_labels = s.what - s.min_label
    return snake.DiscreteSnake(s.zeta, lt_labels, s.tree_projection, parent=s.parent)


def _positive_indices(s0, m, rng):
    pos = np.flatnonzero(s0.what[:-1] > 0)
    if len(pos) <= m:
        return pos
    return np.sort(rng.choice(pos, size=m, replace=False))


def _constrained_chain_closure(dmat, z):
    allowed = dmat < z[:, None] + z[None, :] - 1e-12
    base = np.where(allowed, dmat, np.inf)
    np.fill_diagonal(base, 0.0)
    return snake.metric_closure(base)


def _ancestor_path_check(s, lt, y):
    keep = []
    t = lt.tree
    for pos in range(s.sigma + 1):
        v = int(s.tree_projection[pos])
        ok = True
        u = int(t.parent[v])
        while u >= 0:
            if lt.labels[u] <= y:
                ok = False
                break
            u = int(t.parent[u])
        if ok:
            keep.append(pos)
    return np.asarray(keep, dtype=np.int64)


def _reroot_ghp_bound(s, s2, r, m, rng):
    X, idx1 = snake.quotient_mms(s, m, rng=rng)
    Y, idx2 = snake.quotient_mms(s2, m, rng=rng)
    n = s.sigma
    shifted = (idx1 - r) % n
    pairs = []
    for a, pos in enumerate(shifted):
        b = int(np.argmin(np.minimum((idx2 - pos) % n, (pos - idx2) % n)))
        pairs.append((a, b))
    for b, pos in enumerate(idx2):
        a = int(np.argmin(np.minimum((shifted - pos) % n, (pos - shifted) % n)))
        pairs.append((a, b))
    corr = mms.Correspondence(np.asarray(pairs))
    coupling = np.zeros((X.n, Y.n))
    w = 1.0 / len(pairs)
    for a, b in pairs:
        coupling[a, b] += w * X.total_mass
    return mms.ghp_upper_bound(X, Y, corr, coupling)


# ---------------------------------------------------------------------------
# 10. boundary measure
# ---------------------------------------------------------------------------

@register("boundary-measure")
def _exp_boundary(rep, seed, cfg):
    k = int(cfg.get("k", 2000))
    r = int(cfg.get("r", 10))
    n_samples = int(cfg.get("n_samples", 600))
    loop_k = int(cfg.get("loop_k", 150))
    loop_samples = int(cfg.get("loop_samples", 100))
    if cfg.get("quick"):
        k, n_samples, loop_k, loop_samples = 300, 120, 60, 25
    bands = cfg.get("bands", [0.5, 2.0, 5.0, 10.0])
    edges_bands = [int(b * k * k / 2) for b in bands]
    ratio_flat, ratio_trend, band_means, band_probs = _tube_estimate(
        seed, k, r, n_samples, edges_bands)
    ratio = 0.5 * (ratio_flat + ratio_trend)
    rep.values["tube_ratio"] = ratio
    rep.values["tube_ratio_flat_extrapolation"] = ratio_flat
    rep.values["tube_ratio_trend_extrapolation"] = ratio_trend
    rep.values["band_means"] = band_means
    rep.values["band_probs"] = band_probs
    rep.gate("tube", ratio, 0.85 <= ratio <= 1.15,
             f"E#(v : d(v, boundary) < {r}) / ((3/4) r^2 k) in [0.85, 1.15]")
    sens = abs(ratio_trend - ratio_flat)
    rep.values["extrapolation_sensitivity"] = sens
    rep.gate("extrapolation", sens, sens < 0.06,
             "top-size-band extrapolation moves the ratio by < 0.06")
    # loop order vs tube measure at moderate perimeter
    agree = _loop_vs_tube(seed, loop_k, loop_samples)
    rep.values["loop_tube_reldiff"] = agree
    rep.gate("loop_tube", agree, agree < 0.2,
             "loop pushforward vs eps-tube measure, pooled |rel dev| < 0.2"
             " (MC error scale ~ 1/sqrt(samples))")


def _tube_estimate(seed, k, r, n_samples, edges_bands):
    rng = qrng.stream(seed, 11)
    edges_lo = [0] + edges_bands
    edges_hi = edges_bands + [None]
    n_bands = len(edges_lo)
    # band probabilities from cheap size walks
    n_walks = 30_000
    seeds = qrng.child_seeds(seed, n_walks, stream_id=12)
    cap = edges_bands[-1]
    sizes = np.array([_fast.forest_sizes(s, k, int(cap)) for s in seeds])
    probs = []
    for lo, hi in zip(edges_lo, edges_hi):
        if hi is None:
            probs.append(float((sizes < 0).mean()))
        else:
            probs.append(float(((sizes >= lo) & (sizes < hi)).mean()))
    # per-band tube means (top band extrapolated from the last realized one)
    want = [max(6, int(round(n_samples * p))) for p in probs[:-1]]
    means = []
    for bi, (lo, hi) in enumerate(zip(edges_lo[:-1], edges_hi[:-1])):
        acc = []
        tries = 0
        while len(acc) < want[bi] and tries < 400 * want[bi]:
            tries += 1
            s_try = qrng.child_seeds(seed, 1, stream_id=1000 + 37 * bi + tries)[0]
            n_edges = _fast.forest_sizes(s_try, k, int(hi) - 1)
            if n_edges < lo or n_edges < 0:
                continue
            counts = _tube_counts_one(s_try, k, n_edges, r, rng)
            acc.append(counts)
        means.append(float(np.mean(acc)) if acc else 0.0)
    # top band: flat extrapolation vs one-more-increment trend extrapolation
    flat_means = means + [means[-1]]
    trend_means = means + [means[-1] + max(0.0, means[-1] - means[-2])]
    denom = 0.75 * r * r * k
    ratio_flat = sum(p * m for p, m in zip(probs, flat_means)) / denom
    ratio_trend = sum(p * m for p, m in zip(probs, trend_means)) / denom
    return ratio_flat, ratio_trend, flat_means[:-1], probs


def _tube_counts_one(s_try, k, n_edges, r, rng):
    cv, clab, ctree, vlab, tfirst = _fast.forest_build(s_try, k, n_edges)
    bridge = trees.sample_bridge(k, rng)
    labels = (bridge[ctree] + clab).astype(np.int64)
    succ = _fast.successors_fast(labels)
    n_v = n_edges + k
    xi = n_v
    bverts = schaeffer.outer_walk_vertices(labels, succ, cv, xi)
    # adjacency from the chords
    tails = cv
    heads = np.where(succ < len(labels), cv[np.minimum(succ, len(labels) - 1)], xi)
    indptr, targets = _csr_from_edges(tails, heads, n_v + 1)
    mask = np.zeros(n_v + 1, dtype=np.bool_)
    mask[bverts] = True
    counts, _dist = _fast.multi_source_bfs_counts(indptr, targets, mask, r - 1)
    return int(counts.sum())


def _csr_from_edges(tails, heads, n_v):
    src = np.concatenate([tails, heads])
    dst = np.concatenate([heads, tails])
    order = np.argsort(src, kind="stable")
    indptr = np.zeros(n_v + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst[order]


def _loop_vs_tube(seed, k, n_samples):
    """Pool the eps-tube measure over samples, bucketed by nearest floor
    vertex, and compare with the loop pushforward (uniform over the floor).
    Returns the mean absolute relative deviation of pooled bucket masses."""
    rng = qrng.stream(seed, 21)
    pooled = np.zeros(k)
    got = 0
    while got < n_samples:
        try:
            fb = trees.sample_labeled_forest_with_bridge(k, rng, max_edges=80 * k)
        except trees.SizeTooLarge:
            continue
        got += 1
        bq, tab = schaeffer.forest_bridge_to_boundary_quad(fb, with_tables=True)
        roots_forest = []
        roots_map = []
        off = 0
        for lt in fb.trees:
            roots_forest.append(off)
            roots_map.append(int(tab.vertex_map[off]))
            off += lt.tree.n_vertices
        dist_roots = bq.map.bfs_distances(roots_map)
        vlab = dist_roots[tab.vertex_map]
        s0 = snake.nonnegative_snake_from_forest(fb, vlab)
        loop = snake.boundary_loop_order(s0)
        # the loop visits exactly the floor (tree roots) in contour order
        assert set(loop.tolist()) == set(roots_forest), "loop must visit exactly the floor"
        assert loop.tolist() == sorted(loop.tolist()), "loop order is the forest order"
        eps = math.sqrt(max(2, k)) / 4
        tube_hits = np.flatnonzero(s0.what < eps)
        nearest = _nearest_root_buckets(bq, roots_map, int(eps) + 1)
        buckets = np.zeros(k)
        for pos in tube_hits:
            b = nearest[int(tab.vertex_map[s0.tree_projection[pos]])]
            if b >= 0:
                buckets[b] += 1
        if buckets.sum() > 0:
            pooled += buckets * (k / buckets.sum())
    pooled /= max(got, 1)
    return float(np.mean(np.abs(pooled - 1.0)))


def _nearest_root_buckets(bq, roots, depth):
    n_v = bq.map.n_vertices
    owner = np.full(n_v, -1, dtype=np.int64)
    dist = np.full(n_v, -1, dtype=np.int64)
    indptr, targets = bq.map.adjacency_csr()
    frontier = list(roots)
    for i, v in enumerate(roots):
        owner[v] = i
        dist[v] = 0
    level = 0
    while frontier and level < depth:
        level += 1
        nxt = []
        for v in frontier:
            for t in targets[indptr[v]:indptr[v + 1]]:
                t = int(t)
                if dist[t] < 0:
                    dist[t] = level
                    owner[t] = owner[v]
                    nxt.append(t)
        frontier = nxt
    return owner


# ---------------------------------------------------------------------------
# 11. GHP machinery
# ---------------------------------------------------------------------------

@register("ghp-machinery")
def _exp_ghp(rep, seed, cfg):
    d2 = np.array([[0.0, 0.7], [0.7, 0.0]])
    vals = [
        (mms.prokhorov_finite([1, 0], [1, 0], d2), 0.0),
        (mms.prokhorov_finite([1, 0], [0, 1], d2), 0.7),
        (mms.prokhorov_finite([1, 0], [0, 1], np.array([[0, 3.0], [3.0, 0]])), 1.0),
        (mms.prokhorov_finite([1, 0], [0, 0], d2), 1.0),
    ]
    ok = all(abs(a - b) < 1e-9 for a, b in vals)
    rep.values["prokhorov_hand"] = [[a, b] for a, b in vals]
    rep.gate("prokhorov", ok, ok, "hand values 0, min(d,1), 1 exact")

    # truncated-space bound replica on sampled snakes
    rng = qrng.stream(seed)
    worst_slack = -1.0
    n_checked = 0
    while n_checked < int(cfg.get("n_snakes", 25)):
        t = trees.sample_uniform_plane_tree(int(rng.integers(40, 150)), rng)
        lt = trees.sample_labels(t, "labeled", rng)
        s = snake.snake_from_labeled_tree(lt)
        if s.min_label > -3:
            continue
        n_checked += 1
        delta = int(rng.integers(1, -s.min_label))
        bound, closed = _truncated_bound_replica(s, delta, rng)
        worst_slack = max(worst_slack, bound - closed)
    rep.values["worst_bound_minus_closed_form"] = worst_slack
    rep.gate("truncated_bound", worst_slack, worst_slack <= 1e-9,
             "ghp_upper_bound <= 3(2(delta + K_delta) + kappa_delta) exactly")


def _truncated_bound_replica(s, delta, rng):
    """The hull-truncation correspondence: sample points of the D space vs
    the level-(W*+delta) truncated space with its boundary glued; returns
    (computed bound, closed form 3(2(delta + K) + kappa)) in sample units."""
    m = 100
    n = s.sigma
    idx = np.sort(rng.integers(0, n, size=m))
    wstar = s.min_label
    keep_idx = snake.retained_indices(s, wstar + delta)
    keep_set = set(keep_idx.tolist())
    kept = np.array([i in keep_set for i in idx])
    z = s.what[idx].astype(float)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    D = snake.metric_closure(snake.d_circ_index(s, ii, jj).astype(float))
    # truncated-and-glued metric on kept points plus a boundary point
    kidx = np.flatnonzero(kept)
    Dk = D[np.ix_(kidx, kidx)]
    zb = z[kidx] - (wstar + delta)
    Dd = np.minimum(Dk, zb[:, None] + zb[None, :])
    size = len(kidx) + 1
    Y = np.zeros((size, size))
    Y[:-1, :-1] = Dd
    Y[:-1, -1] = zb
    Y[-1, :-1] = zb
    mass_y = np.zeros(size)
    mass_y[:-1] = 1.0
    kappa = float((~kept).sum())
    K = float(max((z[~kept] - wstar).max() if (~kept).any() else 0.0, delta))
    X = mms.FiniteMMS(D, np.ones(m))
    Ymms = mms.FiniteMMS(np.minimum(Y, Y.T), mass_y)
    pairs = []
    back = {int(g): a for a, g in enumerate(kidx)}
    for a in range(m):
        if kept[a]:
            pairs.append((a, back[a]))
        else:
            pairs.append((a, size - 1))
    corr = mms.Correspondence(np.asarray(pairs))
    coupling = np.zeros((m, size))
    for a, b in pairs:
        coupling[a, b] = 1.0
    bound = mms.ghp_upper_bound(X, Ymms, corr, coupling)
    closed = 3.0 * (2.0 * (delta + K) + kappa)
    return bound, closed


def all_experiment_ids():
    return sorted(EXPERIMENTS)
