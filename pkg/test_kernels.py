"""
Kernel Tests
Free and killed transition densities of the Bessel process, series truncation policy
"""

import math
import sys
from pathlib import Path

import mpmath
import numpy as np
import pytest
from scipy import integrate
from scipy import special as sp

sys.path.append(str(Path(__file__).parent))

from src.errors import DomainError, TruncationError
from src.kernels import (
    EvalPoint,
    SpeedMeasureConvention,
    free_density,
    free_density_comparison,
    interior_point,
    killed_density_at_zero,
    killed_density_estimate_kernel,
    killed_density_reflection,
    killed_density_reflection_ratio_bounds,
    killed_density_series,
    killed_density_series_result,
    killed_density_two_sided,
    log_free_density,
    log_free_density_comparison,
    log_killed_density_estimate_kernel,
    log_killed_density_first_mode,
    survival_from_kernel,
)
from src.series import sum_eigen_series
from src.special import SeriesConfig, bessel_zeros
from src.validation import killed_sandwich_large_time, log_killed_reference

MUS = [-0.75, -0.25, 0.0, 0.5, 1.0, 3.0]


def gauss(u, t):
    return math.exp(-u * u / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)


def reflecting_brownian_series(t, x, y, terms=400):
    n = np.arange(1, terms)
    k = (n - 0.5) * math.pi
    return math.fsum(np.cos(k * x) * np.cos(k * y) * np.exp(-k * k * t / 2.0))


def absorbing_brownian_series(t, x, y, terms=400):
    k = np.arange(1, terms) * math.pi
    return math.fsum(np.sin(k * x) * np.sin(k * y) * np.exp(-k * k * t / 2.0))


# ============================================================================
# RECORDS
# ============================================================================
def test_speed_measure_density():
    speed = SpeedMeasureConvention(mu=0.5)
    assert speed.density_exponent == 2.0
    assert speed.density(0.5) == pytest.approx(0.5)


def test_eval_point_interval_check():
    assert EvalPoint(t=0.1, x=0.5, y=0.2).require_interval().y == 0.2
    with pytest.raises(DomainError):
        EvalPoint(t=0.1, x=1.0).require_interval()
    with pytest.raises(ValueError):
        EvalPoint(t=float("inf"), x=0.5)


def test_kernels_validate_through_eval_points():
    assert interior_point(0.1, 0.5, 0.2) == EvalPoint(t=0.1, x=0.5, y=0.2)
    for t, x, y in ((0.1, float("nan"), 0.5), (0.1, -0.2, 0.5), (0.1, 0.5, 1.0), (0.0, 0.5, 0.5)):
        with pytest.raises(DomainError):
            killed_density_series(0.5, t, x, y)
    with pytest.raises(DomainError):
        survival_from_kernel(0.5, 0.1, 1.2)


# ============================================================================
# FREE KERNEL
# ============================================================================
@pytest.mark.parametrize("mu", MUS)
def test_free_density_matches_mpmath(mu):
    t, x, y = 0.3, 0.4, 0.9
    expected = (
        mpmath.mpf(1) / (2 * t) * (x * y) ** (-mu)
        * mpmath.exp(-(x * x + y * y) / (2 * t)) * mpmath.besseli(mu, x * y / t)
    )
    assert free_density(mu, t, x, y) == pytest.approx(float(expected), rel=1e-12)


@pytest.mark.parametrize("mu", MUS)
def test_free_density_is_symmetric(mu):
    for t in (0.01, 0.5, 4.0):
        assert free_density(mu, t, 0.3, 1.7) == pytest.approx(free_density(mu, t, 1.7, 0.3), rel=1e-14)


def test_free_density_brownian_case():
    for t, x, y in ((0.02, 0.1, 0.3), (0.5, 0.8, 0.2), (2.0, 1.5, 0.1)):
        assert 2.0 * free_density(-0.5, t, x, y) == pytest.approx(gauss(x - y, t) + gauss(x + y, t), rel=1e-12)


@pytest.mark.parametrize("mu", [-0.5, 0.0, 2.0])
def test_free_density_at_origin_is_the_limit(mu):
    at_origin = free_density(mu, 0.4, 0.0, 0.7)
    assert at_origin == pytest.approx(math.exp(-0.49 / 0.8) / (0.8 ** (mu + 1.0) * math.gamma(mu + 1.0)), rel=1e-14)
    assert free_density(mu, 0.4, 1e-7, 0.7) == pytest.approx(at_origin, rel=1e-9)


def test_log_free_density_in_the_deep_tail():
    t, x, y = 1e-4, 0.1, 0.9
    expected = mpmath.log(mpmath.besseli(0, x * y / t) / (2 * t)) - (x * x + y * y) / (2 * t)
    assert log_free_density(0.0, t, x, y) == pytest.approx(float(expected), rel=1e-12)
    assert free_density(0.0, t, x, y) == 0.0


@pytest.mark.parametrize("mu", [-0.5, 0.0, 1.5])
def test_free_density_solves_generator_equation(mu):
    t, x, y, h = 0.5, 1.0, 0.8, 1e-4

    def p(tt, yy):
        return free_density(mu, tt, x, yy)

    dt = (p(t + h, y) - p(t - h, y)) / (2 * h)
    dy = (p(t, y + h) - p(t, y - h)) / (2 * h)
    dyy = (p(t, y + h) - 2 * p(t, y) + p(t, y - h)) / h ** 2
    generator = 0.5 * dyy + (2 * mu + 1) / (2 * y) * dy
    assert dt == pytest.approx(generator, rel=1e-4, abs=1e-6 * p(t, y))


def test_free_density_integrates_to_one():
    mu, t, x = 0.7, 0.3, 0.5
    mass, _ = integrate.quad(
        lambda y: 2.0 * free_density(mu, t, y, x), 0.0, 10.0, weight="alg", wvar=(2 * mu + 1, 0.0)
    )
    assert mass == pytest.approx(1.0, rel=1e-7)


def test_free_density_comparison_is_within_constants():
    # t = 1e-3, x = 0.05, y = 3 underflows both kernels; the logs stay finite
    assert free_density(0.0, 1e-3, 0.05, 3.0) == 0.0
    log_ratios = [
        log_free_density(0.0, t, x, y) - log_free_density_comparison(0.0, t, x, y)
        for t in (1e-3, 0.1, 10.0)
        for x in (0.05, 1.0, 3.0)
        for y in (0.05, 1.0, 3.0)
    ]
    assert all(math.isfinite(r) for r in log_ratios)
    assert math.log(0.05) < min(log_ratios) <= max(log_ratios) < math.log(20.0)
    assert free_density_comparison(0.0, 0.1, 1.0, 1.0) == pytest.approx(
        math.exp(log_free_density_comparison(0.0, 0.1, 1.0, 1.0)), rel=1e-15
    )


def test_free_density_domain():
    with pytest.raises(DomainError):
        free_density(-1.0, 0.1, 0.5, 0.5)
    with pytest.raises(DomainError):
        free_density(0.0, 0.0, 0.5, 0.5)
    with pytest.raises(DomainError):
        free_density(0.0, 0.1, -0.5, 0.5)


# ============================================================================
# KILLED KERNEL
# ============================================================================
@pytest.mark.parametrize("t", [0.02, 0.3, 2.0])
def test_killed_density_reflecting_brownian(t):
    for x, y in ((0.2, 0.6), (0.5, 0.5), (0.7, 0.9)):
        assert killed_density_series(-0.5, t, x, y) == pytest.approx(reflecting_brownian_series(t, x, y), rel=1e-10)


@pytest.mark.parametrize("t", [0.02, 0.3, 2.0])
def test_two_sided_density_absorbing_brownian(t):
    for x, y in ((0.2, 0.6), (0.5, 0.5), (0.7, 0.9)):
        assert killed_density_two_sided(-0.5, t, x, y) == pytest.approx(absorbing_brownian_series(t, x, y), rel=1e-10)


@pytest.mark.parametrize("mu", MUS)
def test_killed_below_free(mu):
    for t in (0.05, 0.5):
        for x, y in ((0.2, 0.4), (0.7, 0.95), (0.5, 0.1)):
            assert killed_density_series(mu, t, x, y) <= free_density(mu, t, x, y) + 1e-12


@pytest.mark.parametrize("mu", MUS)
def test_killed_density_is_symmetric(mu):
    assert killed_density_series(mu, 0.2, 0.3, 0.8) == pytest.approx(killed_density_series(mu, 0.2, 0.8, 0.3), rel=1e-12)


def test_killed_density_near_free_for_small_times():
    # far from 1 and at small t the killing is invisible
    assert killed_density_series(1.0, 0.002, 0.3, 0.32) == pytest.approx(free_density(1.0, 0.002, 0.3, 0.32), rel=1e-10)


@pytest.mark.parametrize("mu", [-0.75, 0.0, 3.0])
def test_killed_density_large_time_is_the_first_mode(mu):
    t, x, y = 4.0, 0.4, 0.6
    j1 = bessel_zeros(mu, 1).zeros[0]
    first = (
        x ** -mu * sp.jv(mu, j1 * x) * y ** -mu * sp.jv(mu, j1 * y)
        / sp.jv(mu + 1.0, j1) ** 2 * math.exp(-j1 * j1 * t / 2.0)
    )
    assert killed_density_series(mu, t, x, y) == pytest.approx(first, rel=1e-9)


@pytest.mark.parametrize("mu", [-0.75, 0.0, 3.0])
def test_first_mode_log_matches_the_series(mu):
    t, x, y = 4.0, 0.4, 0.6
    assert log_killed_density_first_mode(mu, t, x, y) == pytest.approx(
        math.log(killed_density_series(mu, t, x, y)), rel=1e-9
    )


def test_estimate_kernel_carries_the_large_time_factor():
    mu, t, x, y = 1.0, 3.0, 0.4, 0.7
    j1 = bessel_zeros(mu, 1).zeros[0]
    expected = (1 - x) * (1 - y) / t * (1 + t) ** (mu + 2) * math.exp(-j1 * j1 * t / 2) * free_density(mu, t, x, y)
    assert killed_density_estimate_kernel(mu, t, x, y) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("mu", [-0.75, 0.0, 3.0])
def test_killed_to_kernel_ratio_settles_at_large_times(mu):
    j1 = bessel_zeros(mu, 1).zeros[0]
    start = 40.0 / j1 ** 2
    for x, y in ((0.5, 0.5), (0.2, 0.9)):
        logs = [
            log_killed_density_first_mode(mu, t, x, y) - log_killed_density_estimate_kernel(mu, t, x, y)
            for t in start * 10.0 ** np.arange(5)
        ]
        drifts = [abs(math.expm1(b - a)) for a, b in zip(logs, logs[1:])]
        assert all(math.isfinite(v) for v in logs)
        assert drifts == sorted(drifts, reverse=True)
        assert drifts[-1] < 0.01


def test_large_time_sandwich_check_passes():
    result = killed_sandwich_large_time(quick=True)
    assert result.passed, result.measured



@pytest.mark.parametrize("mu", [0.0, 0.5, 3.0])
def test_killed_initial_mass(mu):
    x = 0.5
    assert survival_from_kernel(mu, 0.05 * (1 - x) ** 2, x) == pytest.approx(1.0, abs=1e-3)


def test_survival_from_kernel_decays():
    assert survival_from_kernel(0.0, 1.0, 0.5) < survival_from_kernel(0.0, 0.1, 0.5) < 1.0


@pytest.mark.parametrize("mu", [-0.25, -0.5, -0.9])
def test_two_sided_is_exactly_the_opposite_index(mu):
    x, y = 0.3, 0.7
    assert killed_density_two_sided(mu, 0.4, x, y) == (x * y) ** (-2 * mu) * killed_density_series(-mu, 0.4, x, y)


def test_two_sided_needs_negative_index():
    with pytest.raises(DomainError):
        killed_density_two_sided(0.5, 0.1, 0.3, 0.4)


def test_killed_density_at_zero_is_the_limit():
    assert killed_density_at_zero(0.5, 0.3, 0.4) == pytest.approx(killed_density_series(0.5, 0.3, 0.4, 1e-6), rel=1e-9)


def test_reflection_approximation():
    t, x = 0.01, 0.8
    assert killed_density_reflection(0.5, t, x, 1.0) == 0.0
    # without drift the single reflection is exact up to images at distance above 2
    assert killed_density_reflection(-0.5, t, x, 0.9) == pytest.approx(killed_density_series(-0.5, t, x, 0.9), rel=1e-8)
    assert 0 < killed_density_reflection(1.0, t, x, 0.9) < free_density(1.0, t, x, 0.9)
    with pytest.raises(DomainError):
        killed_density_reflection(0.5, t, x, 0.4)


def test_reflection_approximation_near_the_boundary():
    # for mu = 1/2 the gap is r 2(1-y) / ((2-y)(1-r)) with r = exp(-2(1-x)(1-y)/t): about 5.5% here
    mu, t, x, y = 0.5, 0.01, 0.9, 0.95
    ratio = killed_density_reflection(mu, t, x, y) / killed_density_series(mu, t, x, y)
    r = math.exp(-2 * (1 - x) * (1 - y) / t)
    assert ratio == pytest.approx(1 + r * 2 * (1 - y) / ((2 - y) * (1 - r)), rel=1e-6)
    assert 0.05 < ratio - 1 < 0.06



def test_reflection_ratio_bounds():
    mu, t, x, y = 1.0, 0.2, 0.6, 0.7
    lower, upper = killed_density_reflection_ratio_bounds(mu, t, x, y)
    ratio = free_density(mu, t, x, 2 - y) / free_density(mu, t, x, y)
    assert lower <= ratio <= upper


@pytest.mark.parametrize("mu", [0.5, 3.0])
def test_estimate_kernel_sandwich_on_a_grid(mu):
    ratios = {}
    for t in (0.01, 0.1, 1.0, 5.0, 50.0):
        for x in (0.1, 0.5, 0.9):
            for y in (0.1, 0.5, 0.9):
                reference = log_killed_reference(mu, t, x, y)
                if reference is not None:
                    ratios[t, x, y] = math.exp(reference - log_killed_density_estimate_kernel(mu, t, x, y))
    assert all((50.0, x, y) in ratios for x in (0.1, 0.5, 0.9) for y in (0.1, 0.5, 0.9))
    assert 0 < min(ratios.values()) <= max(ratios.values()) < math.inf
    for x in (0.1, 0.5, 0.9):
        assert 1 / 3 < ratios[50.0, x, x] / ratios[5.0, x, x] < 3



# ============================================================================
# SERIES TRUNCATION
# ============================================================================
def test_series_raises_when_terms_run_out():
    cfg = SeriesConfig(max_terms=2)
    with pytest.raises(TruncationError):
        killed_density_series(0.0, 1e-3, 0.5, 0.5, cfg)


def test_series_reports_bounds():
    result = killed_density_series_result(0.0, 0.1, 0.5, 0.5)
    assert result.tail_bound <= 1e-12 * abs(result.value) or result.tail_bound <= 1e-12
    assert result.rounding_bound > 0
    assert result.relative_error() == pytest.approx(result.error_bound / result.value)


def test_series_rejects_nonpositive_time():
    with pytest.raises(DomainError):
        sum_eigen_series(0.0, 0.0, lambda j: j, lambda j: j)
