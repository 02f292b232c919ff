"""
Eigenexpansion summation shared by the kernels and the exit laws

Every series here has the shape sum_k c(j_k) exp(-j_k^2 t / 2) over the zeros j_k of
J_mu. Truncation needs both a minimum decay exponent and an envelope bound on the tail.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.errors import DomainError, TruncationError
from src.special import ZERO_SPACING_LOWER, SeriesConfig
from src.zero_store import get_zero_store

DEFAULT_SERIES_CONFIG = SeriesConfig()

# Per-term evaluation error of jv near its zeros, in units of |term|
ROUNDING_UNIT = 32 * np.finfo(float).eps
_TAIL_EXPONENT_SPAN = 80.0
_TAIL_MAX_POINTS = 200_000

Coefficients = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SeriesResult:
    value: float
    terms: int
    tail_bound: float
    rounding_bound: float

    @property
    def error_bound(self) -> float:
        return self.tail_bound + self.rounding_bound

    def relative_error(self) -> float:
        scale = abs(self.value)
        return self.error_bound / scale if scale > 0 else 1.0

    def certified(self, rel_tol: float) -> bool:
        """True when tail and rounding together stay below rel_tol of the value"""
        return self.error_bound <= rel_tol * abs(self.value)


def estimate_terms(t: float, cfg: SeriesConfig) -> int:
    # j_n ~ n pi, so j_N^2 t / 2 >= min_exponent needs about sqrt(2 min_exponent / t) / pi terms
    return max(1, int(math.ceil(math.sqrt(2.0 * cfg.min_exponent / t) / math.pi)) + 2)


def envelope_tail(envelope: Coefficients, j_last: float, t: float) -> float:
    """
    Bound on sum_{k>N} |c(j_k)| exp(-j_k^2 t/2)

    Zeros beyond j_N sit at least ZERO_SPACING_LOWER apart, and the envelope times the
    Gaussian factor is decreasing there, so virtual zeros j_N + 2.5 m dominate the tail.
    """
    j_stop = math.sqrt(j_last ** 2 + 2.0 * _TAIL_EXPONENT_SPAN / t)
    count = int(min(math.ceil((j_stop - j_last) / ZERO_SPACING_LOWER), _TAIL_MAX_POINTS)) + 1
    js = j_last + ZERO_SPACING_LOWER * np.arange(1, count + 1)
    return float(np.sum(envelope(js) * np.exp(-js ** 2 * t / 2.0)))


def _truncation_point(zeros, terms, t, envelope, cfg):
    ready = np.nonzero(zeros ** 2 * t / 2.0 >= cfg.min_exponent)[0]
    if not ready.size:
        return None
    partial = np.cumsum(terms)
    for k in ready:
        tail = envelope_tail(envelope, zeros[k], t)
        if tail <= max(cfg.abs_tol, cfg.rel_tol * abs(partial[k])):
            return int(k) + 1, tail
    return None


def sum_eigen_series(
    mu: float,
    t: float,
    coefficients: Coefficients,
    envelope: Coefficients,
    cfg: Optional[SeriesConfig] = None,
) -> SeriesResult:
    """
    Sum c(j_k) exp(-j_k^2 t/2) over the zeros of J_mu

    Args:
        mu: Index whose zeros carry the expansion
        t: Time, t > 0
        coefficients: Vectorized k-th coefficient as a function of j_k
        envelope: Vectorized upper bound of |coefficient| valid for any j beyond the table
        cfg: Truncation policy (defaults to DEFAULT_SERIES_CONFIG)

    Returns:
        SeriesResult with the compensated sum, term count and error bounds

    Raises:
        TruncationError: when max_terms zeros do not meet the tail criterion
    """
    if t <= 0:
        raise DomainError(f"eigenexpansions need t > 0 (got t={t})")
    cfg = cfg or DEFAULT_SERIES_CONFIG
    store = get_zero_store()

    n = min(estimate_terms(t, cfg), cfg.max_terms)
    while True:
        zeros = store.get(mu, n).array()[:n]
        terms = coefficients(zeros) * np.exp(-zeros ** 2 * t / 2.0)
        chosen = _truncation_point(zeros, terms, t, envelope, cfg)
        if chosen is not None:
            break
        if n >= cfg.max_terms:
            raise TruncationError(
                f"series for mu={mu}, t={t} did not reach its tail bound within {cfg.max_terms} terms"
            )
        n = min(2 * n, cfg.max_terms)

    count, tail = chosen
    used = terms[:count]
    return SeriesResult(
        value=math.fsum(used),
        terms=count,
        tail_bound=tail,
        rounding_bound=ROUNDING_UNIT * math.fsum(np.abs(used)),
    )


def sum_eigen_series_many(
    mu: float,
    times: np.ndarray,
    coefficients: Coefficients,
    envelope: Coefficients,
    cfg: Optional[SeriesConfig] = None,
) -> np.ndarray:
    """Same series at many times; the term count is fixed by the smallest time"""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.empty(0)
    reference = sum_eigen_series(mu, float(np.min(times)), coefficients, envelope, cfg)
    zeros = get_zero_store().get(mu, reference.terms).array()[: reference.terms]
    return np.exp(-np.outer(times, zeros ** 2 / 2.0)) @ coefficients(zeros)
