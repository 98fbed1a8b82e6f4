import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from quadlab import laws, stats


def test_quad_counts():
    assert laws.n_quadrangulations(1) == 2
    assert laws.n_quadrangulations(2) == 9
    assert laws.n_quadrangulations(3) == 54
    assert [laws.n_pointed_quadrangulations(n) for n in (1, 2, 3)] == [6, 36, 270]


def test_labeled_tree_counts_match_pointed_quads():
    # 2 * #labeled trees = #pointed quadrangulations
    for n in (1, 2, 3, 4):
        assert 2 * laws.n_labeled_trees(n) == laws.n_pointed_quadrangulations(n)


def test_boundary_counts_consistency():
    # pointed = (n + k + 1) * unpointed, and the forest+bridge product
    for k in (1, 2, 3):
        for n in (0, 1, 2, 3):
            unp = laws.n_boundary_quadrangulations(k, n)
            assert laws.n_pointed_boundary_quadrangulations(k, n) == (n + k + 1) * unp


def test_dist_root_pmf_properties():
    assert laws.dist_root_tail(1) == Fraction(5, 6)
    assert laws.dist_root_tail(2) == Fraction(1, 2)
    # pmf nonnegative and sums telescope
    total = sum(laws.dist_root_pmf(n) for n in range(0, 2000))
    assert all(laws.dist_root_pmf(n) >= 0 for n in range(0, 10_000, 37))
    assert abs(float(total) + float(laws.dist_root_tail(2000)) - 1) < 1e-12


def test_gamma_half_density_normalizes_and_mean():
    for delta in (0.5, 1.0, 2.0):
        total, _ = integrate.quad(lambda z: laws.gamma_half_density(z, delta), 0, np.inf)
        mean, _ = integrate.quad(lambda z: z * laws.gamma_half_density(z, delta), 0, np.inf)
        assert abs(total - 1) < 1e-9
        # Gamma(1/2, scale delta^2) has mean delta^2/2; the quadrature oracle
        # also pins the delta^2/3-scaled form of the unconverted density
        assert abs(mean - delta**2 / 3) < 1e-9


def test_gamma_half_cdf_matches_density():
    from scipy import stats as sps
    for scale in (0.5, 1.0, 2.0):
        zs = np.linspace(0.01, 5, 40)
        ref = sps.gamma.cdf(zs, a=0.5, scale=scale)
        got = laws.gamma_half_cdf(zs, scale=scale)
        assert np.allclose(got, ref, atol=1e-12)


def test_hull_perimeter_density_mean():
    for t in (0.5, 1.0, 2.0):
        total, _ = integrate.quad(lambda z: laws.hull_perimeter_density(z, t), 0, np.inf)
        mean, _ = integrate.quad(lambda z: z * laws.hull_perimeter_density(z, t), 0, np.inf)
        assert abs(total - 1) < 1e-9
        assert abs(mean - 1.5 * t * t) < 1e-8


def test_hole_volume_factor_density():
    total, _ = integrate.quad(laws.hole_volume_factor_density, 0, np.inf, limit=200)
    mean, _ = integrate.quad(lambda x: x * laws.hole_volume_factor_density(x),
                             0, np.inf, limit=300)
    assert abs(total - 1) < 1e-7
    assert abs(mean - 1.0) < 1e-5


def test_snake_min_tail_and_limits():
    assert abs(laws.snake_min_tail(0.0, -1.0) - 1.5) < 1e-12
    assert laws.xi_tail_limit(1.0) == 4.0
    assert laws.xi_tail_limit(2.0) == 1.0
    assert laws.exit_sigma_mean(3.0) == 9.0


def test_jump_normalizer():
    c0 = 3 * 2 ** (-7 / 4) * math.gamma(0.75)
    assert abs(laws.C0 - c0) < 1e-12
    eps = 0.37
    assert abs(laws.jump_count_normalizer(eps) - (4 / 3) * c0 * eps ** (-0.75)) < 1e-12


def test_law_dispatcher():
    assert laws.law("n_quadrangulations", 2) == 9
    assert "dist_root_tail" in laws.catalog()
    with pytest.raises(KeyError):
        laws.law("no-such-law")
    with pytest.raises(laws.DomainError):
        laws.law("xi_tail_limit", -1.0)


def test_chi2_calibration(rng):
    # fair 6-cell multinomial at 1e5 draws: p > 0.01 in most replications
    passes = 0
    for _ in range(60):
        draws = rng.multinomial(100_000, [1 / 6] * 6)
        res = stats.chi2_test(draws, np.full(6, 100_000 / 6))
        passes += res.p_value > 0.01
    assert passes >= 56


def test_chi2_power(rng):
    draws = rng.multinomial(10_000, [0.3, 0.2, 0.2, 0.3])
    res = stats.chi2_test(draws, np.full(4, 2500.0))
    assert res.p_value < 1e-3


def test_ks_calibration_and_power(rng):
    from scipy import stats as sps
    pvals = [stats.ks_test(rng.normal(size=400), sps.norm.cdf).p_value
             for _ in range(40)]
    assert min(pvals) > 1e-4 and np.mean([p > 0.05 for p in pvals]) > 0.75
    shifted = rng.normal(size=10_000) + 0.2
    assert stats.ks_test(shifted, sps.norm.cdf).p_value < 1e-3


def test_weighted_ks_matches_unweighted(rng):
    from scipy import stats as sps
    x = rng.normal(size=500)
    a = stats.ks_test(x, sps.norm.cdf)
    b = stats.ks_test(x, sps.norm.cdf, weights=np.ones(500))
    assert abs(a.statistic - b.statistic) < 1e-12


def test_mean_ci(rng):
    x = rng.normal(loc=2.0, size=4000)
    ci = stats.mean_ci(x)
    assert ci.low < 2.0 < ci.high
    w = rng.random(4000) + 0.5
    ciw = stats.mean_ci(x, weights=w)
    assert abs(ciw.mean - 2.0) < 0.1
