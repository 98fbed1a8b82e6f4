"""Closed-form law catalog.

Exact combinatorial counts (rational arithmetic) and the limit-law densities
used by the verification experiments. Everything here is a pure formula;
samplers and tests consume these as oracles.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


class DomainError(ValueError):
    """Argument outside a law's domain."""


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def n_quadrangulations(n: int) -> int:
    """Number of rooted quadrangulations with n faces: (2/(n+2))*3^n*catalan(n)."""
    if n < 1:
        raise DomainError("n >= 1 required")
    num = 2 * 3**n * catalan(n)
    assert num % (n + 2) == 0
    return num // (n + 2)


def n_pointed_quadrangulations(n: int) -> int:
    """Rooted and pointed: (n+2) times the rooted count."""
    return (n + 2) * n_quadrangulations(n)


def n_labeled_trees(n: int) -> int:
    """Labeled plane trees with n edges, root label 0: 3^n * catalan(n)."""
    if n < 0:
        raise DomainError("n >= 0 required")
    return 3**n * catalan(n)


def n_bridges(k: int) -> int:
    """Bridges (b_1=0, increments >= -1, total increment 0) of length k."""
    if k < 1:
        raise DomainError("k >= 1 required")
    return math.comb(2 * k - 1, k - 1)


def n_boundary_quadrangulations(k: int, n: int) -> int:
    """Rooted (unpointed) quadrangulations with boundary 2k and n inner faces.

    3^n * (2k)!/(k!(k-1)!) * (2n+k-1)!/(n!(n+k+1)!).
    """
    if k < 1 or n < 0:
        raise DomainError("k >= 1 and n >= 0 required")
    val = Fraction(3**n) * Fraction(math.factorial(2 * k), math.factorial(k) * math.factorial(k - 1))
    val *= Fraction(math.factorial(2 * n + k - 1), math.factorial(n) * math.factorial(n + k + 1))
    assert val.denominator == 1
    return int(val)


def n_pointed_boundary_quadrangulations(k: int, n: int) -> int:
    """Pointed variant: the unpointed count times the vertex count n+k+1."""
    return (n + k + 1) * n_boundary_quadrangulations(k, n)


def boltzmann_size_pmf(n: int) -> Fraction:
    """P(|Q| = n) = 4^{-n} catalan(n) for a Boltzmann rooted pointed quadrangulation."""
    if n < 1:
        raise DomainError("n >= 1 required")
    return Fraction(catalan(n), 4**n)


def dist_root_tail(n: int) -> Fraction:
    """P(d_gr(root, pointed vertex) >= n) for a Boltzmann quadrangulation.

    Equals 1 at n=0, 5/6 at n=1 and 4/(n(n+2)) for n >= 2.
    """
    if n < 0:
        raise DomainError("n >= 0 required")
    if n == 0:
        return Fraction(1)
    if n == 1:
        return Fraction(5, 6)
    return Fraction(4, n * (n + 2))


def dist_root_pmf(n: int) -> Fraction:
    return dist_root_tail(n) - dist_root_tail(n + 1)


def tree_min_label_tail(n: int) -> Fraction:
    """P(min label <= -n) = 4/((n+1)(n+2)) for a Boltzmann labeled tree, n >= 1."""
    if n < 1:
        raise DomainError("n >= 1 required")
    return Fraction(4, (n + 1) * (n + 2))


def gamma_half_density(z, delta: float = 1.0):
    """Density (1/delta) sqrt(3/(2 pi z)) exp(-3z/(2 delta^2)) of the rescaled
    hull exit size at radius delta; a Gamma(1/2) with scale 2*delta^2/3."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("z > 0 required")
    return (1.0 / delta) * np.sqrt(3.0 / (2.0 * np.pi * z)) * np.exp(-3.0 * z / (2 * delta**2))


def gamma_half_cdf(z, scale: float = 1.0):
    """CDF of Gamma(shape 1/2, scale): erf(sqrt(z/scale))."""
    z = np.asarray(z, dtype=float)
    return np.where(z <= 0, 0.0, np.vectorize(math.erf)(np.sqrt(np.maximum(z, 0) / scale)))


def hull_perimeter_density(z, t: float = 1.0):
    """Density (2/t^3) sqrt(z/pi) exp(-z/t^2) of the infinite-map rescaled hull
    half-perimeter at time t (a Gamma(3/2) with scale t^2)."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("z >= 0 required")
    return (2.0 / t**3) * np.sqrt(z / np.pi) * np.exp(-z / t**2)


def hole_volume_factor_density(x):
    """Density (2 pi x^5)^{-1/2} exp(-1/(2x)) of the volume factor attached to
    perimeter jumps; equals the law of 1/(2G) for G ~ Gamma(3/2)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("x > 0 required")
    return np.exp(-1.0 / (2 * x)) / np.sqrt(2 * np.pi * x**5)


def snake_min_tail(x: float, y: float) -> float:
    """Weight 3/(2 (x-y)^2) of snake trajectories started at x whose minimal
    label goes below y < x."""
    if y >= x:
        raise DomainError("y < x required")
    return 3.0 / (2.0 * (x - y) ** 2)


def xi_tail_limit(t: float = 1.0) -> float:
    """Limit of n^2 P(Xi >= nt): 4/t^2."""
    if t <= 0:
        raise DomainError("t > 0 required")
    return 4.0 / t**2


def exit_sigma_mean(z: float) -> float:
    """Mean duration of the positive excursion conditioned on exit measure z: z^2."""
    if z <= 0:
        raise DomainError("z > 0 required")
    return z * z


#: constant in the Levy measure c0 * y^{-7/4} of the hull volume subordinator
C0 = 3.0 * 2.0 ** (-7.0 / 4.0) * math.gamma(0.75)


def jump_count_normalizer(eps: float) -> float:
    """phi(eps) = (4/3) c0 eps^{-3/4}: expected jump count per unit window."""
    if eps <= 0:
        raise DomainError("eps > 0 required")
    return (4.0 / 3.0) * C0 * eps ** (-0.75)


_CATALOG = {
    "n_quadrangulations": (n_quadrangulations, "rooted quadrangulations with n faces"),
    "n_pointed_quadrangulations": (n_pointed_quadrangulations, "rooted pointed quadrangulations"),
    "n_labeled_trees": (n_labeled_trees, "labeled plane trees with n edges"),
    "n_bridges": (n_bridges, "bridges of length k"),
    "n_boundary_quadrangulations": (n_boundary_quadrangulations, "boundary 2k, n inner faces"),
    "n_pointed_boundary_quadrangulations": (n_pointed_boundary_quadrangulations, "pointed variant"),
    "boltzmann_size_pmf": (boltzmann_size_pmf, "P(|Q|=n) under the Boltzmann law"),
    "dist_root_tail": (dist_root_tail, "P(d(root, point) >= n)"),
    "dist_root_pmf": (dist_root_pmf, "pmf of d(root, point)"),
    "gamma_half_density": (gamma_half_density, "rescaled hull exit size density"),
    "gamma_half_cdf": (gamma_half_cdf, "Gamma(1/2, scale) cdf"),
    "hull_perimeter_density": (hull_perimeter_density, "infinite-map hull half-perimeter density"),
    "hole_volume_factor_density": (hole_volume_factor_density, "volume factor density"),
    "snake_min_tail": (snake_min_tail, "minimal-label tail weight"),
    "xi_tail_limit": (xi_tail_limit, "limit of n^2 P(Xi >= nt)"),
    "exit_sigma_mean": (exit_sigma_mean, "mean duration given exit measure"),
    "jump_count_normalizer": (jump_count_normalizer, "phi(eps)"),
}


def law(name: str, *args):
    """Evaluate a named catalog formula."""
    if name not in _CATALOG:
        raise KeyError(f"unknown law {name!r}; known: {sorted(_CATALOG)}")
    fn, _ = _CATALOG[name]
    return fn(*args)


def catalog() -> dict:
    """name -> one-line description of every catalog entry."""
    return {k: doc for k, (_, doc) in _CATALOG.items()}
