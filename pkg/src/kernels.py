"""
Kernels Module
Transition densities of the Bessel process with respect to the speed measure
m(dy) = 2 y^{2mu+1} dy: free on (0, inf), killed at 1, and killed at both 0 and 1
"""

import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy import integrate
from scipy import special as sp

from src.errors import DomainError
from src.series import SeriesResult, sum_eigen_series
from src.special import (
    SeriesConfig,
    first_zero,
    j_envelope_constant,
    jv_over_power,
    log_bessel_i_scaled,
)

# Below this Gaussian exponent the free kernel is assembled in log space
LOG_SPACE_THRESHOLD = -600.0
SPEED_NORMALIZATION = 2.0


class SpeedMeasureConvention(BaseModel):
    """m(dy) = normalization * y^{density_exponent} dy"""

    model_config = ConfigDict(frozen=True)

    mu: float = Field(gt=-1)
    normalization: float = SPEED_NORMALIZATION

    @property
    def density_exponent(self) -> float:
        return 2.0 * self.mu + 1.0

    def density(self, y: float) -> float:
        return self.normalization * y ** self.density_exponent


class EvalPoint(BaseModel):
    """A (t, x, y) evaluation point; y is None for hitting-time laws"""

    model_config = ConfigDict(frozen=True)

    t: float = Field(gt=0)
    x: float = Field(ge=0)
    y: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _check_finite(self):
        values = [self.t, self.x] + ([self.y] if self.y is not None else [])
        if not all(math.isfinite(v) for v in values):
            raise ValueError("evaluation points must be finite")
        return self

    def require_interval(self) -> "EvalPoint":
        """Raise DomainError unless x (and y) lie strictly inside (0, 1)"""
        for name, value in (("x", self.x), ("y", self.y)):
            if value is not None and not 0 < value < 1:
                raise DomainError(f"{name}={value} must lie in (0, 1)")
        return self


# ============================================================================
# SHARED HELPERS
# ============================================================================
def check_index(mu: float):
    if not mu > -1:
        raise DomainError(f"Bessel index must satisfy mu > -1 (got mu={mu})")


def check_time(t: float):
    if not t > 0 or not math.isfinite(t):
        raise DomainError(f"time must be positive and finite (got t={t})")


def check_open_unit(name: str, value: float):
    if not 0 < value < 1:
        raise DomainError(f"{name}={value} must lie in (0, 1)")


def interior_point(t: float, x: float, y: Optional[float] = None) -> EvalPoint:
    """Validated evaluation point with x (and y) strictly inside (0, 1)"""
    check_time(t)
    try:
        point = EvalPoint(t=t, x=x, y=y)
    except ValidationError as exc:
        raise DomainError(f"invalid evaluation point (t={t}, x={x}, y={y})") from exc
    return point.require_interval()


def eigenfunction(mu: float, zeros: np.ndarray, x: float) -> np.ndarray:
    """x^{-mu} J_mu(j x), continuous at x = 0"""
    return zeros ** mu * jv_over_power(mu, zeros * x)


def eigenfunction_envelope(mu: float, j: np.ndarray, x: float) -> np.ndarray:
    """Bound on |x^{-mu} J_mu(j x)|: C j^mu / (1 + j x)^{mu+1/2}"""
    return j_envelope_constant(mu) * np.exp(mu * np.log(j) - (mu + 0.5) * np.log1p(j * x))


def normalizer_floor(j: np.ndarray) -> np.ndarray:
    """Lower bound on |J_{mu+1}(j_k)| used beyond the zero table"""
    return 0.5 * np.sqrt(2.0 / (math.pi * j))


# ============================================================================
# FREE KERNEL
# ============================================================================
def log_free_density(mu: float, t: float, x: float, y: float) -> float:
    """Natural log of free_density; finite wherever the density is positive"""
    check_index(mu)
    check_time(t)
    if x < 0 or y < 0:
        raise DomainError(f"free kernel needs x, y >= 0 (got x={x}, y={y})")
    if x == 0 or y == 0:
        other = x + y
        return -(mu + 1.0) * math.log(2.0 * t) - float(sp.gammaln(mu + 1.0)) - other * other / (2.0 * t)
    xy = x * y
    return (
        -math.log(2.0 * t)
        - mu * math.log(xy)
        + log_bessel_i_scaled(mu, xy / t)
        - (x - y) ** 2 / (2.0 * t)
    )


def free_density(mu: float, t: float, x: float, y: float) -> float:
    """
    Free transition density p(t, x, y) on (0, inf)

    (1/2t) (xy)^{-mu} exp(-(x^2+y^2)/2t) I_mu(xy/t), evaluated as
    (1/2t) (xy)^{-mu} ive(mu, xy/t) exp(-(x-y)^2/2t).

    Args:
        mu: Bessel index, mu > -1
        t: Time, t > 0
        x: Start, x >= 0
        y: End, y >= 0

    Returns:
        Density with respect to the speed measure
    """
    check_index(mu)
    check_time(t)
    if x < 0 or y < 0:
        raise DomainError(f"free kernel needs x, y >= 0 (got x={x}, y={y})")
    if x == 0 or y == 0:
        return math.exp(log_free_density(mu, t, x, y))

    xy = x * y
    gauss = -(x - y) ** 2 / (2.0 * t)
    if gauss < LOG_SPACE_THRESHOLD or abs(mu * math.log(xy)) > 600:
        return math.exp(log_free_density(mu, t, x, y))
    scaled = float(sp.ive(mu, xy / t))
    if not scaled > 0 or not math.isfinite(scaled):
        return math.exp(log_free_density(mu, t, x, y))
    return xy ** (-mu) * scaled * math.exp(gauss) / (2.0 * t)


def log_free_density_comparison(mu: float, t: float, x: float, y: float) -> float:
    """Natural log of free_density_comparison"""
    check_index(mu)
    check_time(t)
    if x <= 0 or y < 0:
        raise DomainError(f"comparison kernel needs x > 0, y >= 0 (got x={x}, y={y})")
    return -(x - y) ** 2 / (2.0 * t) - (mu + 0.5) * math.log(x * y + t) - 0.5 * math.log(t)


def free_density_comparison(mu: float, t: float, x: float, y: float) -> float:
    """exp(-(x-y)^2/2t) / ((xy + t)^{mu+1/2} sqrt(t)), comparable to free_density up to constants"""
    return math.exp(log_free_density_comparison(mu, t, x, y))



# ============================================================================
# KILLED AT ONE
# ============================================================================
def killed_series(mu: float, t: float, x: float, y: float, cfg: Optional[SeriesConfig] = None) -> SeriesResult:
    """Killed-kernel series without argument checks; x and y may sit on the closed interval [0, 1]"""

    def coefficients(zeros):
        return eigenfunction(mu, zeros, x) * eigenfunction(mu, zeros, y) / sp.jv(mu + 1.0, zeros) ** 2

    def envelope(j):
        return eigenfunction_envelope(mu, j, x) * eigenfunction_envelope(mu, j, y) / normalizer_floor(j) ** 2

    return sum_eigen_series(mu, t, coefficients, envelope, cfg)


def killed_density_series_result(
    mu: float, t: float, x: float, y: float, cfg: Optional[SeriesConfig] = None
) -> SeriesResult:
    """killed_density_series with its term count and error bounds"""
    check_index(mu)
    interior_point(t, x, y)
    return killed_series(mu, t, x, y, cfg)


def killed_density_series(mu: float, t: float, x: float, y: float, cfg: Optional[SeriesConfig] = None) -> float:
    """
    Density of the process killed on reaching 1

    (xy)^{-mu} sum_k J_mu(j_k x) J_mu(j_k y) / J_{mu+1}(j_k)^2 exp(-j_k^2 t/2)

    Args:
        mu: Bessel index, mu > -1
        t: Time, t > 0
        x: Start in (0, 1)
        y: End in (0, 1)
        cfg: Truncation policy

    Returns:
        p1(t, x, y)
    """
    return killed_density_series_result(mu, t, x, y, cfg).value


def killed_density_at_zero(mu: float, t: float, x: float, cfg: Optional[SeriesConfig] = None) -> float:
    """Limit of p1(t, x, y) as y -> 0 (finite for every mu > -1)"""
    check_index(mu)
    interior_point(t, x)
    return killed_series(mu, t, x, 0.0, cfg).value


def killed_density_reflection(mu: float, t: float, x: float, y: float) -> float:
    """
    Reflection approximation p(t,x,y) - p(t,x,2-y) of the killed kernel, for y > 1/2

    Args:
        mu: Bessel index, mu > -1
        t: Time, t > 0
        x: Start in (0, 1)
        y: End in (1/2, 1]

    Returns:
        Approximation vanishing at y = 1
    """
    check_index(mu)
    interior_point(t, x)
    if not 0.5 < y <= 1:
        raise DomainError(f"reflection approximation needs y in (1/2, 1] (got y={y})")
    if y == 1:
        return 0.0
    return free_density(mu, t, x, y) - free_density(mu, t, x, 2.0 - y)


def killed_density_reflection_ratio_bounds(mu: float, t: float, x: float, y: float) -> Tuple[float, float]:
    """
    Bounds for p(t,x,2-y) / p(t,x,y) with y in (0, 1):
    (y/(2-y))^{2mu+4} e^{-2(1-x)(1-y)/t} and ((2-y)/y)^2 e^{-2(1-x)(1-y)/t}
    """
    check_index(mu)
    interior_point(t, x, y)
    decay = math.exp(-2.0 * (1.0 - x) * (1.0 - y) / t)
    ratio = y / (2.0 - y)
    return ratio ** (2.0 * mu + 4.0) * decay, ratio ** (-2.0) * decay


def log_killed_density_estimate_kernel(mu: float, t: float, x: float, y: float) -> float:
    """Natural log of killed_density_estimate_kernel"""
    interior_point(t, x, y)
    j1 = first_zero(mu)
    return (
        min(0.0, math.log((1.0 - x) * (1.0 - y) / t))
        + (mu + 2.0) * math.log1p(t)
        - j1 * j1 * t / 2.0
        + log_free_density(mu, t, x, y)
    )


def killed_density_estimate_kernel(mu: float, t: float, x: float, y: float) -> float:
    """
    min(1, (1-x)(1-y)/t) (1+t)^{mu+2} exp(-j_{mu,1}^2 t/2) p(t,x,y), comparable to the killed kernel

    For large t the other factors decay like t^{-mu-2}, so the ratio p1 / kernel
    settles to a constant instead of growing polynomially.
    """
    return math.exp(log_killed_density_estimate_kernel(mu, t, x, y))


def log_killed_density_first_mode(mu: float, t: float, x: float, y: float) -> float:
    """
    Natural log of the leading term of the killed series

    log(x^{-mu} J_mu(j1 x) y^{-mu} J_mu(j1 y)) - 2 log|J_{mu+1}(j1)| - j1^2 t/2;
    the remaining terms are below exp(-(j2^2 - j1^2) t/2) relative to it.
    """
    interior_point(t, x, y)
    j1 = np.array([first_zero(mu)])
    modes = eigenfunction(mu, j1, x)[0] * eigenfunction(mu, j1, y)[0]
    return (
        math.log(modes)
        - 2.0 * math.log(abs(float(sp.jv(mu + 1.0, j1[0]))))
        - float(j1[0]) ** 2 * t / 2.0
    )



# ============================================================================
# KILLED AT ZERO AND ONE
# ============================================================================
def killed_density_two_sided(mu: float, t: float, x: float, y: float, cfg: Optional[SeriesConfig] = None) -> float:
    """
    Density killed at both 0 and 1 for mu < 0: (xy)^{-2mu} p1 of the opposite index -mu

    Args:
        mu: Bessel index in (-1, 0) or below
        t: Time, t > 0
        x: Start in (0, 1)
        y: End in (0, 1)
        cfg: Truncation policy

    Returns:
        p01(t, x, y)
    """
    if mu >= 0:
        raise DomainError(f"two-sided killing needs mu < 0 (got mu={mu})")
    interior_point(t, x, y)
    return (x * y) ** (-2.0 * mu) * killed_series(-mu, t, x, y, cfg).value


# ============================================================================
# MASS
# ============================================================================
def survival_from_kernel(mu: float, t: float, x: float, cfg: Optional[SeriesConfig] = None) -> float:
    """
    Integral of p1(t, x, .) against the speed measure, i.e. P_x(T1 > t) for the reflecting process

    The speed density is handled as an algebraic weight near the origin.
    """
    check_index(mu)
    interior_point(t, x)
    speed = SpeedMeasureConvention(mu=mu)
    alpha = speed.density_exponent

    def kernel(y):
        return speed.normalization * killed_series(mu, t, x, min(max(y, 0.0), 1.0), cfg).value

    near, _ = integrate.quad(kernel, 0.0, x, weight="alg", wvar=(alpha, 0.0), limit=200)
    far, _ = integrate.quad(
        lambda y: killed_series(mu, t, x, y, cfg).value * speed.density(y), x, 1.0,
        epsabs=1e-13, epsrel=1e-11, limit=200,
    )
    return near + far

