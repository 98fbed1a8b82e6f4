"""Goodness-of-fit helpers: chi-square, KS (one and two sample), mean CIs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps


@dataclass
class TestResult:
    statistic: float
    p_value: float
    n: int

    def as_dict(self) -> dict:
        return {"statistic": float(self.statistic), "p_value": float(self.p_value), "n": int(self.n)}


def chi2_test(observed, expected, min_expected: float = 5.0) -> TestResult:
    """Pearson chi-square of observed counts against expected counts.

    Cells with expected count below `min_expected` are pooled into the last
    cell, keeping the multinomial approximation honest.
    """
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    if obs.shape != exp.shape:
        raise ValueError("observed and expected must have the same shape")
    if not math.isclose(obs.sum(), exp.sum(), rel_tol=1e-9, abs_tol=1e-6):
        raise ValueError("observed and expected totals differ; normalize expected first")
    keep = exp >= min_expected
    if not keep.all():
        obs = np.append(obs[keep], obs[~keep].sum())
        exp = np.append(exp[keep], exp[~keep].sum())
    if len(obs) < 2:
        raise ValueError("need at least 2 cells after pooling")
    stat = float(((obs - exp) ** 2 / exp).sum())
    dof = len(obs) - 1
    p = float(sps.chi2.sf(stat, dof))
    return TestResult(stat, p, int(obs.sum()))


def chi2_two_sample(counts_a, counts_b, min_expected: float = 5.0) -> TestResult:
    """Two-sample chi-square homogeneity test on parallel count vectors."""
    a = np.asarray(counts_a, dtype=float)
    b = np.asarray(counts_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("count vectors must align")
    tot = a + b
    keep = tot > 0
    a, b = a[keep], b[keep]
    exp_a = (a + b) * a.sum() / (a.sum() + b.sum())
    pool = exp_a < min_expected
    if pool.any():
        a = np.append(a[~pool], a[pool].sum())
        b = np.append(b[~pool], b[pool].sum())
    table = np.vstack([a, b])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        raise ValueError("need at least 2 cells")
    stat, p, _, _ = sps.chi2_contingency(table)
    return TestResult(float(stat), float(p), int(table.sum()))


def ks_test(samples, cdf, weights=None) -> TestResult:
    """One-sample KS distance against a cdf callable; optional weights.

    With weights, the statistic is the sup distance between the weighted
    empirical cdf and the reference; the p-value uses the effective sample
    size (Kish) in the asymptotic Kolmogorov distribution.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("empty sample")
    if weights is None:
        res = sps.kstest(x, cdf)
        return TestResult(float(res.statistic), float(res.pvalue), n)
    w = np.asarray(weights, dtype=float)
    order = np.argsort(np.asarray(samples, dtype=float))
    x = np.asarray(samples, dtype=float)[order]
    w = w[order]
    cw = np.cumsum(w) / w.sum()
    ref = np.asarray(cdf(x), dtype=float)
    d_plus = np.max(cw - ref)
    d_minus = np.max(ref - np.concatenate([[0.0], cw[:-1]]))
    stat = max(float(d_plus), float(d_minus))
    n_eff = float(w.sum() ** 2 / (w**2).sum())
    p = float(sps.kstwobign.sf(stat * math.sqrt(n_eff)))
    return TestResult(stat, p, int(round(n_eff)))


def ks_two_sample(a, b) -> TestResult:
    """Two-sample KS test; with ties (discrete data) the p-value is conservative."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    res = sps.ks_2samp(a, b, method="asymp")
    return TestResult(float(res.statistic), float(res.pvalue), len(a) + len(b))


@dataclass
class MeanCI:
    mean: float
    low: float
    high: float
    level: float
    n: int

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "low": self.low,
            "high": self.high,
            "level": self.level,
            "n": self.n,
        }


def mean_ci(samples, level: float = 0.95, weights=None) -> MeanCI:
    """Normal-approximation confidence interval for the mean.

    With weights, computes the self-normalized (ratio) estimator and its
    delta-method standard error.
    """
    x = np.asarray(samples, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("need at least 2 samples")
    z = sps.norm.ppf(0.5 + level / 2)
    if weights is None:
        m = float(x.mean())
        se = float(x.std(ddof=1) / math.sqrt(n))
    else:
        w = np.asarray(weights, dtype=float)
        m = float((w * x).sum() / w.sum())
        resid = w * (x - m)
        se = float(np.sqrt((resid**2).sum()) / w.sum())
    return MeanCI(m, m - z * se, m + z * se, level, n)
