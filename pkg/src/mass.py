"""
Exit masses and distribution functions

Integrates the exit densities over time. Below t_lo the small-time asymptotic branch is
integrated in closed form, between t_lo and T adaptive quadrature runs on the spectral
series, and beyond T the survival series supplies the exact remaining mass.
"""

import math
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy import special as sp

from src.errors import DomainError
from src.exitlaw import (
    Boundary,
    q01_auto,
    q01_to_zero_series,
    q01_to_zero_survival,
    q1_auto,
    q1_series,
    q1_survival,
    q_ball,
    survival_coefficients,
    zero_survival_coefficients,
)
from src.kernels import check_open_unit
from src.series import sum_eigen_series_many
from src.special import Index, SeriesConfig, first_zero

# Mass left to the closed-form small-time patch
PATCH_MASS = 1e-9
_PIECES = 12
# Upper quadrature limit T puts j_1^2 T / 2 at this value
_TAIL_EXPONENT = 8.0
_AUTO_FLOOR = 1e-5


def _quadrature(density: Callable[[float], float], t_lo: float, t_hi: float) -> float:
    edges = np.geomspace(t_lo, t_hi, _PIECES + 1)
    pieces = [
        integrate.quad(density, a, b, epsabs=1e-13, epsrel=1e-10, limit=200)[0]
        for a, b in zip(edges[:-1], edges[1:])
    ]
    return math.fsum(pieces)


def _upper_limit(mu: float, t_lo: float) -> float:
    j1 = first_zero(mu)
    return max(4.0 * t_lo, 2.0 * _TAIL_EXPONENT / (j1 * j1))


def hitting_mass(mu: float, x: float, cfg: Optional[SeriesConfig] = None) -> float:
    """Total mass of q1(., x); equals 1 for every mu > -1"""
    check_open_unit("x", x)
    weight = x ** (mu + 0.5)
    target = PATCH_MASS * min(1.0, weight)
    t_lo = (1.0 - x) ** 2 / (2.0 * float(sp.erfcinv(target)) ** 2)
    patch = float(sp.erfc((1.0 - x) / math.sqrt(2.0 * t_lo))) / weight
    t_hi = _upper_limit(mu, t_lo)
    body = _quadrature(lambda t: q1_series(mu, t, x, cfg), t_lo, t_hi)
    return math.fsum([patch, body, q1_survival(mu, t_hi, x, cfg)])


def zero_exit_mass(mu: float, x: float, cfg: Optional[SeriesConfig] = None) -> float:
    """Total mass of the exit density through 0; equals 1 - x^{-2mu}"""
    check_open_unit("x", x)
    nu = -mu
    t_lo = x * x / (2.0 * float(sp.gammainccinv(nu, PATCH_MASS)))
    patch = float(sp.gammaincc(nu, x * x / (2.0 * t_lo)))
    t_hi = _upper_limit(nu, t_lo)
    body = _quadrature(lambda t: q01_to_zero_series(mu, t, x, cfg), t_lo, t_hi)
    return math.fsum([patch, body, q01_to_zero_survival(mu, t_hi, x, cfg)])


def exit_mass(index: Index, x: float, boundary: Boundary = Boundary.ONE, cfg: Optional[SeriesConfig] = None) -> float:
    """
    Probability of leaving through `boundary`, by stitched quadrature of the density

    Args:
        index: Bessel index and zero convention
        x: Start in (0, 1)
        boundary: ONE, or ZERO under the killing convention
        cfg: Truncation policy

    Returns:
        1 for the reflecting convention; x^{-2mu} (ONE) or 1 - x^{-2mu} (ZERO) under killing
    """
    boundary = Boundary(boundary)
    if not index.absorbs_at_zero:
        if boundary is Boundary.ZERO:
            raise DomainError("exit through zero needs the killing convention")
        return hitting_mass(index.mu, x, cfg)
    if boundary is Boundary.ONE:
        return x ** (-2.0 * index.mu) * hitting_mass(-index.mu, x, cfg)
    return zero_exit_mass(index.mu, x, cfg)


def ball_exit_mass(n: int, cfg: Optional[SeriesConfig] = None) -> float:
    """Total mass of the exit-time density of n-dimensional Brownian motion started at the centre"""
    mu = n / 2.0 - 1.0
    t_lo = 1.0 / (2.0 * float(sp.gammainccinv(mu + 1.0, PATCH_MASS / 2.0)))
    patch = 2.0 * float(sp.gammaincc(mu + 1.0, 1.0 / (2.0 * t_lo)))
    t_hi = _upper_limit(mu, t_lo)
    body = _quadrature(lambda t: q_ball(n, t, 0.0, 1.0, cfg), t_lo, t_hi)
    return math.fsum([patch, body, q1_survival(mu, t_hi, 0.0, cfg)])


def auto_mass(index: Index, x: float, boundary: Boundary = Boundary.ONE, cfg: Optional[SeriesConfig] = None) -> float:
    """Mass of the dispatcher's density, integrated across its regime switches"""
    boundary = Boundary(boundary)
    if index.absorbs_at_zero:
        def density(t):
            return q01_auto(index.mu, t, x, boundary, cfg)[0]
        nu = -index.mu
        t_hi = _upper_limit(nu, _AUTO_FLOOR)
        if boundary is Boundary.ONE:
            tail = x ** (2.0 * nu) * q1_survival(nu, t_hi, x, cfg)
        else:
            tail = q01_to_zero_survival(index.mu, t_hi, x, cfg)
    else:
        def density(t):
            return q1_auto(index.mu, t, x, cfg)[0]
        t_hi = _upper_limit(index.mu, _AUTO_FLOOR)
        tail = q1_survival(index.mu, t_hi, x, cfg)
    return math.fsum([_quadrature(density, _AUTO_FLOOR, t_hi), tail])


def exit_time_cdf(
    index: Index, x: float, boundary: Boundary, times: np.ndarray, cfg: Optional[SeriesConfig] = None
) -> np.ndarray:
    """
    Distribution function of the exit time conditioned on leaving through `boundary`

    Args:
        index: Bessel index and zero convention
        x: Start in (0, 1)
        boundary: Exit boundary
        times: Positive times
        cfg: Truncation policy

    Returns:
        P(T <= t | exit through boundary) at each time
    """
    boundary = Boundary(boundary)
    times = np.asarray(times, dtype=float)
    if index.absorbs_at_zero and boundary is Boundary.ZERO:
        nu = -index.mu
        coefficients, envelope = zero_survival_coefficients(nu, x)
        remaining = sum_eigen_series_many(nu, times, coefficients, envelope, cfg)
        return 1.0 - remaining / (1.0 - x ** (2.0 * nu))
    if boundary is Boundary.ZERO:
        raise DomainError("exit through zero needs the killing convention")
    # Conditioned on exiting at 1, the killed law is the hitting law of the opposite index
    mu = -index.mu if index.absorbs_at_zero else index.mu
    coefficients, envelope = survival_coefficients(mu, x)
    return 1.0 - sum_eigen_series_many(mu, times, coefficients, envelope, cfg)
