"""
Exit Law Module
Densities of the first exit time of the Bessel process from [0,1) (reflecting or
non-reaching at 0) and from (0,1) (killed at 0): spectral series, flux oracles,
comparison kernels, small-time asymptotics, Brownian closed forms and dispatchers
"""

import math
from enum import Enum
from typing import Callable, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special as sp

import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))

import config
from src.errors import DomainError
from src.kernels import (
    check_index,
    check_open_unit,
    check_time,
    eigenfunction,
    eigenfunction_envelope,
    free_density,
    killed_density_series,
    killed_series,
    normalizer_floor,
)
from src.series import SeriesResult, sum_eigen_series
from src.special import Index, SeriesConfig, ZeroBoundary, first_zero

# Image and sine series both stop once a term's exponent drops below -700
_EXPONENT_CUTOFF = 700.0
# Scaled times below this use the image series, above it the sine series
_IMAGE_SWITCH = 0.5
CLOSED_FORM_REL_ERROR = 1e-14
# Above the crossover the series is returned as is when certified to this accuracy
SERIES_TRUST_REL_ERROR = 1e-6
MAX_FLUX_STEP = 1e-3


class Boundary(str, Enum):
    ONE = "one"
    ZERO = "zero"


class Method(str, Enum):
    SERIES = "series"
    FLUX_DIFFERENCE = "flux_difference"
    SMALL_TIME_ASYMPTOTIC = "small_time_asymptotic"
    CLOSED_FORM_IMAGES = "closed_form_images"


class IntervalSide(str, Enum):
    LOWER = "lower"
    UPPER = "upper"


class StructuralForm(str, Enum):
    """Leading-order structural representations of the exit densities"""

    NEAR_BOUNDARY = "near_boundary"  # 2(1-x)/t p(t,x,1)
    REFLECTED_INTERVAL = "reflected_interval"  # Brownian exit from (x/4, 1) over x^{mu+1/2}
    ZERO_KERNEL = "zero_kernel"  # -2mu x^{-2mu} p^{(-mu)}(t,x,0)
    ZERO_KERNEL_NEAR_ONE = "zero_kernel_near_one"  # -4mu x^{-2mu} (1-x)/t p^{(-mu)}(t,x,0)


class RegimeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: Method
    estimated_rel_error: float = Field(ge=0, allow_inf_nan=False)
    terms: Optional[int] = None


class ExitLawQuery(BaseModel):
    """One exit-density evaluation request"""

    model_config = ConfigDict(frozen=True)

    index: Index
    t: float = Field(gt=0, allow_inf_nan=False)
    x: float
    boundary: Boundary = Boundary.ONE
    radius: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _check_query(self):
        if self.boundary is Boundary.ZERO and not self.index.absorbs_at_zero:
            raise DomainError("exit through zero needs the killing convention")
        if not 0 < self.x < self.radius:
            raise DomainError(f"x={self.x} must lie in (0, {self.radius})")
        return self

    @property
    def scaled_t(self) -> float:
        return self.t / self.radius ** 2

    @property
    def scaled_x(self) -> float:
        return self.x / self.radius


def _series_report(result: SeriesResult) -> RegimeReport:
    return RegimeReport(method=Method.SERIES, estimated_rel_error=result.relative_error(), terms=result.terms)


def _series_or_asymptotic(
    result: SeriesResult, asymptotic: Callable[[], Tuple[float, RegimeReport]]
) -> Tuple[float, RegimeReport]:
    """Series output unless rounding has swamped it; then the small-time form with the smaller error"""
    report = _series_report(result)
    if result.value > 0 and report.estimated_rel_error <= SERIES_TRUST_REL_ERROR:
        return result.value, report
    value, fallback = asymptotic()
    if result.value <= 0 or fallback.estimated_rel_error < report.estimated_rel_error:
        return value, fallback
    return result.value, report


def _scaled(result: SeriesResult, factor: float) -> SeriesResult:
    return SeriesResult(
        value=result.value * factor,
        terms=result.terms,
        tail_bound=result.tail_bound * abs(factor),
        rounding_bound=result.rounding_bound * abs(factor),
    )


def _check_killing_index(mu: float):
    if mu >= 0:
        raise DomainError(f"the killing convention needs mu < 0 (got mu={mu})")


# ============================================================================
# SPECTRAL SERIES
# ============================================================================
def _q1_series(mu: float, t: float, x: float, cfg: Optional[SeriesConfig]) -> SeriesResult:
    def coefficients(zeros):
        return zeros * eigenfunction(mu, zeros, x) / sp.jv(mu + 1.0, zeros)

    def envelope(j):
        return j * eigenfunction_envelope(mu, j, x) / normalizer_floor(j)

    return sum_eigen_series(mu, t, coefficients, envelope, cfg)


def q1_series_result(mu: float, t: float, x: float, cfg: Optional[SeriesConfig] = None) -> SeriesResult:
    """q1_series with its term count and error bounds"""
    check_index(mu)
    check_time(t)
    check_open_unit("x", x)
    return _q1_series(mu, t, x, cfg)


def q1_series(mu: float, t: float, x: float, cfg: Optional[SeriesConfig] = None) -> float:
    """
    Density of the first hitting time of 1 from x in (0, 1)

    x^{-mu} sum_n j_n J_mu(j_n x) / J_{mu+1}(j_n) exp(-j_n^2 t/2), accurate once
    j_{mu,1}^2 t / 2 >= 0.02.

    Args:
        mu: Bessel index, mu > -1
        t: Time, t > 0
        x: Start in (0, 1)
        cfg: Truncation policy

    Returns:
        q1(t, x)
    """
    return q1_series_result(mu, t, x, cfg).value


def q01_to_one_series_result(mu: float, t: float, x: float, cfg: Optional[SeriesConfig] = None) -> SeriesResult:
    _check_killing_index(mu)
    check_time(t)
    check_open_unit("x", x)
    return _scaled(_q1_series(-mu, t, x, cfg), x ** (-2.0 * mu))


def q01_to_one_series(mu: float, t: float, x: float, cfg: Optional[SeriesConfig] = None) -> float:
    """Exit through 1 before 0 for mu < 0: x^{-2mu} q1 of the opposite index"""
    return q01_to_one_series_result(mu, t, x, cfg).value


def q01_to_zero_series_result(mu: float, t: float, x: float, cfg: Optional[SeriesConfig] = None) -> SeriesResult:
    _check_killing_index(mu)
    check_time(t)
    check_open_unit("x", x)
    nu = -mu
    return _scaled(killed_series(nu, t, x, 0.0, cfg), 2.0 * nu * x ** (2.0 * nu))


def q01_to_zero_series(mu: float, t: float, x: float, cfg: Optional[SeriesConfig] = None) -> float:
    """
    Exit through 0 before 1 for mu < 0

    With nu = -mu: 2 x^nu / (2^nu Gamma(nu)) sum_n j_n^nu J_nu(j_n x) / J_{nu+1}(j_n)^2
    exp(-j_n^2 t/2), the same number as -2mu x^{-2mu} times the y -> 0 limit of the
    killed kernel of index nu.

    Args:
        mu: Bessel index, mu < 0
        t: Time, t > 0
        x: Start in (0, 1)
        cfg: Truncation policy

    Returns:
        q01(t, x, 0)
    """
    return q01_to_zero_series_result(mu, t, x, cfg).value


# ============================================================================
# SURVIVAL FUNCTIONS
# ============================================================================
def survival_coefficients(mu: float, x: float):
    def coefficients(zeros):
        return 2.0 * eigenfunction(mu, zeros, x) / (zeros * sp.jv(mu + 1.0, zeros))

    def envelope(j):
        return 2.0 * eigenfunction_envelope(mu, j, x) / (j * normalizer_floor(j))

    return coefficients, envelope


def zero_survival_coefficients(nu: float, x: float):
    prefactor = 4.0 * nu * x ** (2.0 * nu)

    def coefficients(zeros):
        return prefactor * eigenfunction(nu, zeros, x) * eigenfunction(nu, zeros, 0.0) / (
            zeros * sp.jv(nu + 1.0, zeros)
        ) ** 2

    def envelope(j):
        return prefactor * eigenfunction_envelope(nu, j, x) * eigenfunction_envelope(nu, j, 0.0) / (
            j * normalizer_floor(j)
        ) ** 2

    return coefficients, envelope


def q1_survival(mu: float, t: float, x: float, cfg: Optional[SeriesConfig] = None) -> float:
    """P_x(T1 > t) = x^{-mu} sum 2 J_mu(j x) / (j J_{mu+1}(j)) exp(-j^2 t/2); x = 0 allowed"""
    check_index(mu)
    check_time(t)
    if not 0 <= x < 1:
        raise DomainError(f"x={x} must lie in [0, 1)")
    coefficients, envelope = survival_coefficients(mu, x)
    return sum_eigen_series(mu, t, coefficients, envelope, cfg).value


def q01_to_one_survival(mu: float, t: float, x: float, cfg: Optional[SeriesConfig] = None) -> float:
    """P_x(exit through 1 after time t) for mu < 0"""
    _check_killing_index(mu)
    check_open_unit("x", x)
    return x ** (-2.0 * mu) * q1_survival(-mu, t, x, cfg)


def q01_to_zero_survival(mu: float, t: float, x: float, cfg: Optional[SeriesConfig] = None) -> float:
    """P_x(exit through 0 after time t) for mu < 0"""
    _check_killing_index(mu)
    check_time(t)
    check_open_unit("x", x)
    coefficients, envelope = zero_survival_coefficients(-mu, x)
    return sum_eigen_series(-mu, t, coefficients, envelope, cfg).value


# ============================================================================
# FLUX ORACLES
# ============================================================================
def default_flux_step(t: float, x: float) -> float:
    return min(MAX_FLUX_STEP, 0.02 * t / (1.0 - x))


def q1_via_flux(mu: float, t: float, x: float, h: Optional[float] = None, cfg: Optional[SeriesConfig] = None) -> float:
    """
    Hitting density as the flux of the killed kernel through y = 1

    D(h) = p1(t, x, 1-h) / h is first order in h; one Richardson step
    2 D(h/2) - D(h) removes the linear term.

    Args:
        mu: Bessel index, mu > -1
        t: Time, t > 0
        x: Start in (0, 1)
        h: Difference step in (0, 1e-3] (defaults to min(1e-3, 0.02 t / (1-x)))
        cfg: Truncation policy for the kernel series

    Returns:
        Flux approximation of q1(t, x)
    """
    check_index(mu)
    check_time(t)
    check_open_unit("x", x)
    h = default_flux_step(t, x) if h is None else h
    if not 0 < h <= MAX_FLUX_STEP or not h < 1.0 - x:
        raise DomainError(f"flux step h={h} must lie in (0, {MAX_FLUX_STEP:g}] and below 1-x={1.0 - x:g}")

    def difference(step):
        return killed_density_series(mu, t, x, 1.0 - step, cfg) / step

    return 2.0 * difference(h / 2.0) - difference(h)


def q1_via_flux_with_error(
    mu: float, t: float, x: float, h: Optional[float] = None, cfg: Optional[SeriesConfig] = None
) -> Tuple[float, float]:
    """Flux value at step h and its relative error estimated from the step h/2"""
    h = default_flux_step(t, x) if h is None else h
    coarse = q1_via_flux(mu, t, x, h, cfg)
    fine = q1_via_flux(mu, t, x, h / 2.0, cfg)
    scale = abs(coarse)
    return coarse, (4.0 / 3.0) * abs(coarse - fine) / scale if scale > 0 else 1.0


def q01_zero_via_flux(mu: float, t: float, x: float, h: Optional[float] = None, cfg: Optional[SeriesConfig] = None) -> float:
    """
    Exit density through 0 from the opposite-index kernel near y = 0

    The kernel is even in y, so (4 L(h/2) - L(h)) / 3 with L(h) = p1^{(-mu)}(t, x, h)
    removes the h^2 term of the limit y -> 0.
    """
    _check_killing_index(mu)
    check_time(t)
    check_open_unit("x", x)
    nu = -mu
    h = min(1e-3, 0.1 * math.sqrt(t), x / 2.0) if h is None else h
    if not 0 < h < x:
        raise DomainError(f"flux step h={h} must lie in (0, x)")

    def limit(step):
        return killed_series(nu, t, x, step, cfg).value

    extrapolated = (4.0 * limit(h / 2.0) - limit(h)) / 3.0
    return 2.0 * nu * x ** (2.0 * nu) * extrapolated


# ============================================================================
# COMPARISON KERNELS
# ============================================================================
def _hitting_kernel(mu: float, t: float, x: float) -> float:
    j1 = first_zero(mu)
    log_value = (
        math.log(1.0 - x)
        + (mu + 2.0) * math.log1p(t)
        - (mu + 0.5) * math.log(x + t)
        - 1.5 * math.log(t)
        - (1.0 - x) ** 2 / (2.0 * t)
        - j1 * j1 * t / 2.0
    )
    return math.exp(log_value)


def q1_estimate_kernel(mu: float, t: float, x: float) -> float:
    """(1-x)(1+t)^{mu+2} / ((x+t)^{mu+1/2} t^{3/2}) exp(-(1-x)^2/2t - j_{mu,1}^2 t/2)"""
    check_index(mu)
    check_time(t)
    check_open_unit("x", x)
    return _hitting_kernel(mu, t, x)


def q01_estimate_kernels(mu: float, t: float, x: float) -> Tuple[float, float]:
    """
    Comparison kernels (to_one, to_zero) for the killing convention

    Args:
        mu: Bessel index, mu < 0
        t: Time, t > 0
        x: Start in (0, 1)

    Returns:
        (x^{-2mu} times the hitting kernel of index -mu,
         x^{-2mu} (1-x)/(1-x+t) (1+t)^{2-mu} / t^{1-mu} exp(-x^2/2t - j^2 t/2))
    """
    _check_killing_index(mu)
    check_time(t)
    check_open_unit("x", x)
    nu = -mu
    j1 = first_zero(nu)
    weight = x ** (2.0 * nu)
    to_one = weight * _hitting_kernel(nu, t, x)
    log_zero = (
        math.log(1.0 - x)
        - math.log(1.0 - x + t)
        + (nu + 2.0) * math.log1p(t)
        - (nu + 1.0) * math.log(t)
        - x * x / (2.0 * t)
        - j1 * j1 * t / 2.0
    )
    return to_one, weight * math.exp(log_zero)


def q_ball_estimate_kernel(n: int, t: float, x_norm: float) -> float:
    """Comparison kernel of the exit time of n-dimensional Brownian motion from the unit ball"""
    _check_dimension(n)
    check_time(t)
    if not 0 <= x_norm < 1:
        raise DomainError(f"|x|={x_norm} must lie in [0, 1)")
    return _hitting_kernel(n / 2.0 - 1.0, t, x_norm)


# ============================================================================
# SMALL-TIME ASYMPTOTICS
# ============================================================================
def _small_x_hitting(mu: float, t: float, x: float) -> float:
    log_value = (
        math.log1p(-x)
        - (1.0 + x * x) / (2.0 * t)
        - mu * math.log(2.0)
        - float(sp.gammaln(mu + 1.0))
        - (mu + 2.0) * math.log(t)
    )
    return math.exp(log_value)


def bulk_error_constant(mu: float) -> float:
    """Coefficient of t/x in the bulk error; the first correction is (4mu^2-1) t / (8x)"""
    return max(1.0, abs(4.0 * mu * mu - 1.0) / 8.0)


def time_error_constant(mu: float) -> float:
    """Coefficient of the O(t) terms the leading forms drop"""
    return abs(mu) + 2.0


def q1_smalltime(mu: float, t: float, x: float) -> Tuple[float, RegimeReport]:
    """
    Leading small-time behaviour of q1

    Bulk (x >= sqrt t): (1-x) / sqrt(2 pi t^3) exp(-(1-x)^2/2t) / x^{mu+1/2}, error ~ t/x.
    Near the origin (x <= t^{3/2}): (1-x) exp(-(1+x^2)/2t) / (2^mu Gamma(mu+1) t^{mu+2}),
    error ~ (x/t)^2 + t. In between: 2(1-x)/t p(t,x,1), error ~ t/(1-x).
    """
    check_index(mu)
    check_time(t)
    check_open_unit("x", x)
    if x >= math.sqrt(t):
        value = (1.0 - x) / math.sqrt(2.0 * math.pi * t ** 3) * math.exp(-(1.0 - x) ** 2 / (2.0 * t))
        value /= x ** (mu + 0.5)
        error = bulk_error_constant(mu) * t / x + time_error_constant(mu) * t
    elif x <= t ** 1.5:
        value = _small_x_hitting(mu, t, x)
        error = (x / t) ** 2 + time_error_constant(mu) * t
    else:
        value = structural_asymptotics(mu, t, x, StructuralForm.NEAR_BOUNDARY)
        error = time_error_constant(mu) * t / (1.0 - x)
    report = RegimeReport(method=Method.SMALL_TIME_ASYMPTOTIC, estimated_rel_error=error)
    return value, report


def q01_zero_smalltime(mu: float, t: float, x: float) -> Tuple[float, RegimeReport]:
    """
    Leading small-time behaviour of the exit density through 0 (mu < 0, nu = -mu)

    (1-x) >= t|log t|: 2 x^{2nu} / ((2t)^{nu+1} Gamma(nu)) exp(-x^2/2t), error ~ exp(-2(1-x)/t).
    Otherwise: 8 (1-x) x^{2nu} / ((2t)^{nu+2} Gamma(nu)) exp(-x^2/2t), error ~ (1-x)/t + t.
    """
    _check_killing_index(mu)
    check_time(t)
    check_open_unit("x", x)
    nu = -mu
    common = 2.0 * nu * math.log(x) - float(sp.gammaln(nu)) - x * x / (2.0 * t)
    if 1.0 - x >= t * abs(math.log(t)):
        value = math.exp(math.log(2.0) + common - (nu + 1.0) * math.log(2.0 * t))
        error = math.exp(-2.0 * (1.0 - x) / t)
    else:
        value = math.exp(math.log(8.0 * (1.0 - x)) + common - (nu + 2.0) * math.log(2.0 * t))
        error = (1.0 - x) / t + time_error_constant(mu) * t
    report = RegimeReport(method=Method.SMALL_TIME_ASYMPTOTIC, estimated_rel_error=error)
    return value, report


def structural_asymptotics(mu: float, t: float, x: float, which: StructuralForm) -> float:
    """
    Leading-order structural forms of the exit densities

    Args:
        mu: Bessel index (mu < 0 for the zero-kernel forms)
        t: Time, t > 0
        x: Start in (0, 1), in (1/2, 1) for REFLECTED_INTERVAL
        which: Form to evaluate

    Returns:
        The named expression
    """
    check_time(t)
    check_open_unit("x", x)
    which = StructuralForm(which)
    if which is StructuralForm.NEAR_BOUNDARY:
        check_index(mu)
        return 2.0 * (1.0 - x) / t * free_density(mu, t, x, 1.0)
    if which is StructuralForm.REFLECTED_INTERVAL:
        check_index(mu)
        if not 0.5 < x < 1:
            raise DomainError(f"the reflected-interval form needs x in (1/2, 1) (got x={x})")
        return bm_interval_exit(t, x, x / 4.0, 1.0, IntervalSide.UPPER) / x ** (mu + 0.5)

    _check_killing_index(mu)
    nu = -mu
    zero_kernel = 2.0 * nu * x ** (2.0 * nu) * free_density(nu, t, x, 0.0)
    if which is StructuralForm.ZERO_KERNEL:
        return zero_kernel
    return 2.0 * (1.0 - x) / t * zero_kernel


# ============================================================================
# BROWNIAN CLOSED FORMS
# ============================================================================
def _unit_interval_exit(s: float, d: float) -> float:
    """Exit density of BM from (0,1) through the endpoint at distance d from the start"""
    if s < _IMAGE_SWITCH:
        norm = 1.0 / math.sqrt(2.0 * math.pi * s ** 3)

        def image(u):
            return u * norm * math.exp(-u * u / (2.0 * s))

        terms = [image(d)]
        k = 1
        while (2.0 * k - d) ** 2 / (2.0 * s) <= _EXPONENT_CUTOFF:
            terms.append(image(d + 2.0 * k) + image(d - 2.0 * k))
            k += 1
        return math.fsum(terms)

    n_max = int(math.ceil(math.sqrt(2.0 * _EXPONENT_CUTOFF / s) / math.pi)) + 1
    return math.fsum(
        n * math.pi * math.sin(n * math.pi * d) * math.exp(-(n * math.pi) ** 2 * s / 2.0)
        for n in range(1, n_max + 1)
    )


def bm_interval_exit(t: float, x: float, a: float, b: float, side: IntervalSide) -> float:
    """
    Exit-time density of standard Brownian motion from (a, b) through one endpoint

    Scaled to the unit interval; small scaled times use the image series summed in
    +-k pairs, larger ones the sine series.

    Args:
        t: Time, t > 0
        x: Start, a < x < b
        a: Lower endpoint
        b: Upper endpoint
        side: Endpoint through which the path leaves

    Returns:
        Density of the exit time on the event of leaving through `side`
    """
    check_time(t)
    if not a < x < b:
        raise DomainError(f"start x={x} must lie in ({a}, {b})")
    width = b - a
    distance = (x - a) if IntervalSide(side) is IntervalSide.LOWER else (b - x)
    return _unit_interval_exit(t / width ** 2, distance / width) / width ** 2


def _reflected_bm_hitting(t: float, x: float) -> float:
    # Reflected BM on [0,1) hits 1 when BM started at x leaves (-1, 1)
    return bm_interval_exit(t, x, -1.0, 1.0, IntervalSide.UPPER) + bm_interval_exit(
        t, x, -1.0, 1.0, IntervalSide.LOWER
    )


# ============================================================================
# DISPATCHERS
# ============================================================================
def q1_auto(mu: float, t: float, x: float, cfg: Optional[SeriesConfig] = None) -> Tuple[float, RegimeReport]:
    """
    Hitting density of 1 with automatic method choice

    Closed-form images for mu = -1/2, the spectral series once j_{mu,1}^2 t/2 reaches
    the crossover, and the small-time asymptotics below it. Just above the crossover a
    series swamped by rounding (non-positive or uncertified) gives way to the asymptotics.

    Args:
        mu: Bessel index, mu > -1
        t: Time, t > 0
        x: Start in (0, 1)
        cfg: Truncation policy for the series branch

    Returns:
        (value, RegimeReport)
    """
    check_index(mu)
    check_time(t)
    check_open_unit("x", x)
    if mu == -0.5:
        report = RegimeReport(method=Method.CLOSED_FORM_IMAGES, estimated_rel_error=CLOSED_FORM_REL_ERROR)
        return _reflected_bm_hitting(t, x), report
    j1 = first_zero(mu)
    if j1 * j1 * t / 2.0 >= config.SERIES_CROSSOVER:
        return _series_or_asymptotic(_q1_series(mu, t, x, cfg), lambda: q1_smalltime(mu, t, x))
    return q1_smalltime(mu, t, x)


def q01_auto(
    mu: float, t: float, x: float, boundary: Boundary, cfg: Optional[SeriesConfig] = None
) -> Tuple[float, RegimeReport]:
    """Exit density through `boundary` for the killing convention, mirroring q1_auto"""
    _check_killing_index(mu)
    check_time(t)
    check_open_unit("x", x)
    boundary = Boundary(boundary)
    if mu == -0.5:
        side = IntervalSide.UPPER if boundary is Boundary.ONE else IntervalSide.LOWER
        report = RegimeReport(method=Method.CLOSED_FORM_IMAGES, estimated_rel_error=CLOSED_FORM_REL_ERROR)
        return bm_interval_exit(t, x, 0.0, 1.0, side), report

    nu = -mu

    def asymptotic() -> Tuple[float, RegimeReport]:
        if boundary is Boundary.ONE:
            value, report = q1_smalltime(nu, t, x)
            return x ** (2.0 * nu) * value, report
        return q01_zero_smalltime(mu, t, x)

    j1 = first_zero(nu)
    if j1 * j1 * t / 2.0 >= config.SERIES_CROSSOVER:
        if boundary is Boundary.ONE:
            result = q01_to_one_series_result(mu, t, x, cfg)
        else:
            result = q01_to_zero_series_result(mu, t, x, cfg)
        return _series_or_asymptotic(result, asymptotic)
    return asymptotic()


def splitting_probability(mu: float, x: float) -> float:
    """P_x(reach 1 before 0) = x^{-2mu} for mu < 0"""
    _check_killing_index(mu)
    check_open_unit("x", x)
    return x ** (-2.0 * mu)


def mean_exit_time(mu: float, x: float, zero_boundary: ZeroBoundary = ZeroBoundary.NOT_APPLICABLE) -> float:
    """
    Expected exit time from [0,1) (reflecting / non-reaching) or from (0,1) (killing)

    Reflecting: (1 - x^2) / (2(mu+1)). Killing: (x^{-2mu} - x^2) / (2(mu+1)),
    with limit -x^2 log x at mu = -1.
    """
    if ZeroBoundary(zero_boundary) is ZeroBoundary.KILLING:
        _check_killing_index(mu)
        check_open_unit("x", x)
        if mu == -1.0:
            return -x * x * math.log(x)
        return (x ** (-2.0 * mu) - x * x) / (2.0 * (mu + 1.0))
    check_index(mu)
    if not 0 <= x < 1:
        raise DomainError(f"x={x} must lie in [0, 1)")
    return (1.0 - x * x) / (2.0 * (mu + 1.0))


# ============================================================================
# BROWNIAN BALL
# ============================================================================
def _check_dimension(n: int):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer (got n={n})")


def _q1_at_origin(mu: float, t: float, cfg: Optional[SeriesConfig]) -> float:
    if mu == -0.5:
        return 2.0 * bm_interval_exit(t, 0.0, -1.0, 1.0, IntervalSide.UPPER)
    j1 = first_zero(mu)
    if j1 * j1 * t / 2.0 >= config.SERIES_CROSSOVER:
        return _q1_series(mu, t, 0.0, cfg).value
    return math.exp(
        -1.0 / (2.0 * t) - mu * math.log(2.0) - float(sp.gammaln(mu + 1.0)) - (mu + 2.0) * math.log(t)
    )


def q_ball(n: int, t: float, x_norm: float, radius: float = 1.0, cfg: Optional[SeriesConfig] = None) -> float:
    """
    Exit-time density of n-dimensional Brownian motion from the ball of the given radius

    Args:
        n: Dimension (n >= 1); |B| is a Bessel process of index n/2 - 1
        t: Time, t > 0
        x_norm: Distance of the start from the centre, 0 <= x_norm < radius
        radius: Ball radius
        cfg: Truncation policy

    Returns:
        q^n(t, x) = q1(t / r^2, |x| / r) / r^2
    """
    _check_dimension(n)
    check_time(t)
    if not radius > 0:
        raise DomainError(f"radius must be positive (got {radius})")
    if not 0 <= x_norm < radius:
        raise DomainError(f"|x|={x_norm} must lie in [0, {radius})")
    mu = n / 2.0 - 1.0
    scaled_t = t / radius ** 2
    scaled_x = x_norm / radius
    if scaled_x == 0:
        value = _q1_at_origin(mu, scaled_t, cfg)
    else:
        value = q1_auto(mu, scaled_t, scaled_x, cfg)[0]
    return value / radius ** 2
