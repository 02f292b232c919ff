"""
Special Functions Module
Bessel functions of the first kind, scaled modified Bessel functions, zeros of J_mu
and the ratio bounds the kernels and exit laws rely on
"""

import math
from enum import Enum
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import optimize
from scipy import special as sp

import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))

import config
from src.errors import DomainError

# Consecutive zeros of J_mu are more than 2.5 apart for every mu > -1
ZERO_SPACING_LOWER = 2.5
_SCAN_STEP = 0.1
_SCAN_CELLS = 4096
_BRENT_XTOL = 1e-15
_BRENT_RTOL = 4 * np.finfo(float).eps


# ============================================================================
# DOMAIN TYPES
# ============================================================================
class ZeroBoundary(str, Enum):
    """Behaviour of the Bessel process at the origin"""

    REFLECTING = "reflecting"
    KILLING = "killing"
    NOT_APPLICABLE = "not_applicable"


class Index(BaseModel):
    """
    Bessel index together with the boundary convention at zero

    mu >= 0 never reaches zero (NOT_APPLICABLE, simulated as reflecting),
    mu <= -1 must be killed at zero, and mu in (-1, 0) may use either convention.
    """

    model_config = ConfigDict(frozen=True)

    mu: float
    zero_boundary: ZeroBoundary = ZeroBoundary.NOT_APPLICABLE

    @model_validator(mode="after")
    def _check_convention(self):
        if self.zero_boundary is ZeroBoundary.REFLECTING and self.mu <= -1:
            raise DomainError(f"reflecting convention requires mu > -1 (got mu={self.mu})")
        if self.zero_boundary is ZeroBoundary.KILLING and self.mu >= 0:
            raise DomainError(f"killing convention requires mu < 0 (got mu={self.mu})")
        if self.zero_boundary is ZeroBoundary.NOT_APPLICABLE and self.mu < 0:
            raise DomainError(f"mu={self.mu} reaches zero: choose reflecting or killing")
        return self

    @property
    def absorbs_at_zero(self) -> bool:
        return self.zero_boundary is ZeroBoundary.KILLING


class SeriesConfig(BaseModel):
    """Truncation policy for Fourier-Bessel eigenexpansions"""

    model_config = ConfigDict(frozen=True)

    abs_tol: float = Field(default_factory=lambda: config.SERIES_ABS_TOL, gt=0)
    rel_tol: float = Field(default_factory=lambda: config.SERIES_REL_TOL, gt=0)
    max_terms: int = Field(default_factory=lambda: config.SERIES_MAX_TERMS, ge=1)
    # Require j_N^2 t / 2 >= min_exponent before truncating
    min_exponent: float = Field(default_factory=lambda: config.SERIES_MIN_EXPONENT, ge=2)


class ZeroTable(BaseModel):
    """
    Ascending positive zeros j_{mu,1..N} of J_mu

    Tables are immutable; extended() returns a new table and never recomputes
    the zeros already stored.
    """

    model_config = ConfigDict(frozen=True)

    mu: float
    zeros: Tuple[float, ...]
    enclosure_width: float = Field(ge=0)

    @model_validator(mode="after")
    def _check_zeros(self):
        if self.mu <= -1:
            raise DomainError(f"zero tables need mu > -1 (got mu={self.mu})")
        values = np.asarray(self.zeros)
        if values.size and (values[0] <= 0 or np.any(np.diff(values) <= 0)):
            raise ValueError("zeros must be positive and strictly increasing")
        return self

    def __len__(self) -> int:
        return len(self.zeros)

    def array(self) -> np.ndarray:
        return np.asarray(self.zeros, dtype=float)

    def extended(self, n: int) -> "ZeroTable":
        """
        Return a table holding at least n zeros

        Args:
            n: Number of zeros required

        Returns:
            self when already long enough, otherwise a new table
        """
        if n <= len(self):
            return self
        start = self.zeros[-1] + 1.0 if self.zeros else _scan_start(self.mu)
        new_zeros = _find_zeros(self.mu, n - len(self), start)
        return ZeroTable(
            mu=self.mu,
            zeros=self.zeros + tuple(new_zeros),
            enclosure_width=max(self.enclosure_width, _enclosure(new_zeros)),
        )

    def to_text(self) -> str:
        """Serialize: header `mu=<decimal> n=<int> tol=<decimal>`, then one zero per line"""
        lines = [f"mu={self.mu!r} n={len(self)} tol={self.enclosure_width!r}"]
        lines.extend(repr(z) for z in self.zeros)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ZeroTable":
        lines = [line.strip() for line in text.splitlines() if line.strip()]
        if not lines:
            raise ValueError("empty zero table")
        header = dict(field.split("=", 1) for field in lines[0].split())
        zeros = tuple(float(line) for line in lines[1:])
        if int(header["n"]) != len(zeros):
            raise ValueError(f"zero table header announces {header['n']} zeros, found {len(zeros)}")
        return cls(mu=float(header["mu"]), zeros=zeros, enclosure_width=float(header["tol"]))


# ============================================================================
# BESSEL FUNCTIONS
# ============================================================================
def bessel_j(mu: float, z: float) -> float:
    """
    Bessel function of the first kind J_mu(z) for real z >= 0

    Args:
        mu: Bessel index
        z: Nonnegative argument

    Returns:
        J_mu(z)
    """
    if z < 0:
        raise DomainError(f"bessel_j needs z >= 0 (got z={z})")
    if z == 0:
        if mu < 0:
            raise DomainError(f"J_mu(0) is unbounded for mu={mu} < 0; use bessel_j_normalized")
        return 1.0 if mu == 0 else 0.0
    value = float(sp.jv(mu, z))
    if not math.isfinite(value):
        raise OverflowError(f"J_{mu}({z}) is not representable")
    return value


def bessel_j_normalized(mu: float, z: float) -> float:
    """
    J_mu(z) / z^mu, continuous at z = 0 where it equals 1 / (2^mu Gamma(mu+1))

    Args:
        mu: Bessel index, mu > -1
        z: Nonnegative argument

    Returns:
        z^{-mu} J_mu(z)
    """
    if mu <= -1:
        raise DomainError(f"the normalized J needs mu > -1 (got mu={mu})")
    if z < 0:
        raise DomainError(f"bessel_j_normalized needs z >= 0 (got z={z})")
    return float(jv_over_power(mu, np.asarray([z], dtype=float))[0])


def jv_over_power(mu: float, z: np.ndarray) -> np.ndarray:
    """Vectorized z^{-mu} J_mu(z) for z >= 0, mu > -1 (ascending series near the origin)"""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < 1e-3
    if np.any(small):
        w = (z[small] / 2.0) ** 2
        lead = 2.0 ** (-mu) * sp.rgamma(mu + 1.0)
        out[small] = lead * (1.0 - w / (mu + 1.0) + w * w / (2.0 * (mu + 1.0) * (mu + 2.0)))
    large = ~small
    if np.any(large):
        out[large] = sp.jv(mu, z[large]) * z[large] ** (-mu)
    return out


def bessel_i_scaled(mu: float, z: float) -> float:
    """
    Exponentially scaled modified Bessel function e^{-z} I_mu(z)

    Args:
        mu: Bessel index, mu > -1
        z: Nonnegative argument

    Returns:
        e^{-z} I_mu(z)
    """
    if mu <= -1:
        raise DomainError(f"bessel_i_scaled needs mu > -1 (got mu={mu})")
    if z < 0:
        raise DomainError(f"bessel_i_scaled needs z >= 0 (got z={z})")
    if z == 0 and mu < 0:
        raise DomainError(f"I_mu(0) is unbounded for mu={mu} < 0")
    value = float(sp.ive(mu, z))
    if not math.isfinite(value):
        raise OverflowError(f"e^-z I_{mu}({z}) is not representable")
    return value


def log_bessel_i_scaled(mu: float, z: float) -> float:
    """log(e^{-z} I_mu(z)) for z > 0, falling back to the leading ascending term on underflow"""
    value = float(sp.ive(mu, z))
    if value > 0 and math.isfinite(value):
        return math.log(value)
    return mu * math.log(z / 2.0) - float(sp.gammaln(mu + 1.0)) - z


# ============================================================================
# ZEROS
# ============================================================================
def _scan_start(mu: float) -> float:
    # J_mu > 0 on (0, mu] for mu >= 0 and near the origin for mu in (-1, 0)
    return max(mu, 1e-8)


def _enclosure(zeros) -> float:
    if not zeros:
        return 0.0
    return max(_BRENT_XTOL + _BRENT_RTOL * z for z in zeros)


def _find_zeros(mu: float, count: int, start: float) -> list:
    """Bracket sign changes on a grid finer than the zero spacing, refine each with Brent's method"""
    found = []
    lo = start
    while len(found) < count:
        grid = lo + _SCAN_STEP * np.arange(_SCAN_CELLS + 1)
        values = sp.jv(mu, grid)
        signs = np.sign(values)
        cells = np.nonzero((signs[:-1] != 0) & (signs[:-1] * signs[1:] <= 0))[0]
        for cell in cells:
            root = optimize.brentq(
                lambda s: sp.jv(mu, s),
                grid[cell],
                grid[cell + 1],
                xtol=_BRENT_XTOL,
                rtol=_BRENT_RTOL,
                maxiter=200,
            )
            found.append(float(root))
            if len(found) == count:
                break
        lo = grid[-1]
    return found


def bessel_zeros(mu: float, n: int, table: Optional[ZeroTable] = None) -> ZeroTable:
    """
    First n positive zeros of J_mu

    Args:
        mu: Bessel index, mu > -1
        n: Number of zeros (n >= 1)
        table: Optional existing table to extend instead of starting afresh

    Returns:
        ZeroTable with at least n zeros
    """
    if mu <= -1:
        raise DomainError(f"J_mu has no zero table for mu={mu} <= -1")
    if n < 1:
        raise DomainError(f"need n >= 1 zeros (got n={n})")
    if table is not None and table.mu != mu:
        raise ValueError(f"cannot extend a table for mu={table.mu} with mu={mu}")
    base = table or ZeroTable(mu=mu, zeros=(), enclosure_width=0.0)
    return base.extended(n)


def bessel_j_deriv_at_zero(mu: float, k: int) -> float:
    """
    J_{mu+1}(j_{mu,k}), the normalizing value of the eigenexpansions

    Equals -J_mu'(j_{mu,k}); the sign alternates as (-1)^{k+1}.

    Args:
        mu: Bessel index, mu > -1
        k: Zero number (k >= 1)

    Returns:
        J_{mu+1}(j_{mu,k})
    """
    from src.zero_store import get_zero_store

    if k < 1:
        raise DomainError(f"zero numbers start at 1 (got k={k})")
    zero = get_zero_store().get(mu, k).zeros[k - 1]
    return float(sp.jv(mu + 1.0, zero))


def first_zero(mu: float) -> float:
    """j_{mu,1} from the shared zero store"""
    from src.zero_store import get_zero_store

    return get_zero_store().get(mu, 1).zeros[0]


# ============================================================================
# MAGNITUDE ENVELOPES AND RATIO BOUNDS
# ============================================================================
@lru_cache(maxsize=256)
def j_envelope_constant(mu: float, z_max: float = 200.0, points: int = 4000) -> float:
    """
    Empirical constant C with |J_mu(z)| <= C z^mu / (1+z)^{mu+1/2} on (0, z_max]

    Args:
        mu: Bessel index, mu > -1
        z_max: Right end of the sampled range
        points: Number of linearly spaced samples (plus a geometric block near 0)

    Returns:
        Sampled supremum times a 10% safety margin
    """
    if mu <= -1:
        raise DomainError(f"envelope constant needs mu > -1 (got mu={mu})")
    z = np.concatenate([np.geomspace(1e-6, 1.0, 200), np.linspace(1.0, z_max, points)])
    weight = np.exp((mu + 0.5) * np.log1p(z))
    ratio = np.abs(jv_over_power(mu, z)) * weight
    limit = 2.0 ** (-mu) * abs(float(sp.rgamma(mu + 1.0)))
    return 1.1 * max(float(np.nanmax(ratio)), limit)


def j_envelope(mu: float, z: np.ndarray) -> np.ndarray:
    """C z^mu / (1+z)^{mu+1/2} evaluated in log space"""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        return j_envelope_constant(mu) * np.exp(mu * np.log(z) - (mu + 0.5) * np.log1p(z))


def i_ratio_bounds(mu: float, x: float, y: float) -> Tuple[float, float]:
    """
    Two-sided bounds for I_mu(y) / I_mu(x), valid for every mu > -1

    Args:
        mu: Bessel index, mu > -1
        x: Smaller argument, x > 0
        y: Larger argument, y > x

    Returns:
        (lower, upper) = ((x/y)^{mu+4} e^{y-x}, (y/x)^{mu+2} e^{y-x})
    """
    if mu <= -1:
        raise DomainError(f"ratio bounds need mu > -1 (got mu={mu})")
    if not 0 < x < y:
        raise DomainError(f"ratio bounds need 0 < x < y (got x={x}, y={y})")
    growth = math.exp(y - x)
    return (x / y) ** (mu + 4) * growth, (y / x) ** (mu + 2) * growth


def i_ratio_bounds_classical(mu: float, x: float, y: float) -> Tuple[Optional[float], Optional[float]]:
    """
    Sharper classical bounds: upper (y/x)^mu e^{y-x} for mu > -1/2,
    lower (x/y)^mu e^{y-x} for mu > 1/2; None where a bound does not apply
    """
    if not 0 < x < y:
        raise DomainError(f"ratio bounds need 0 < x < y (got x={x}, y={y})")
    growth = math.exp(y - x)
    upper = (y / x) ** mu * growth if mu > -0.5 else None
    lower = (x / y) ** mu * growth if mu > 0.5 else None
    return lower, upper


def i_recurrence_residual(mu: float, z: float) -> float:
    """|I_mu - I_{mu+2} - 2(mu+1)/z I_{mu+1}| / I_mu, all scaled by e^{-z}"""
    base = sp.ive(mu, z)
    residual = base - sp.ive(mu + 2.0, z) - 2.0 * (mu + 1.0) / z * sp.ive(mu + 1.0, z)
    return float(abs(residual) / base)
