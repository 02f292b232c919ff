"""
Density Methods Module
Provides a unified interface over the exit-density evaluators
Defaults to the automatic regime dispatcher
"""

from abc import ABC, abstractmethod
from typing import Optional, Tuple

from src.errors import DomainError
from src.exitlaw import (
    CLOSED_FORM_REL_ERROR,
    Boundary,
    ExitLawQuery,
    IntervalSide,
    Method,
    RegimeReport,
    bm_interval_exit,
    q01_auto,
    q01_to_one_series_result,
    q01_to_zero_series_result,
    q01_zero_smalltime,
    q01_zero_via_flux,
    q1_auto,
    q1_series_result,
    q1_smalltime,
    q1_via_flux_with_error,
)
from src.series import SeriesResult
from src.special import SeriesConfig

METHOD_NAMES = ("auto", "series", "asymptotic", "flux", "images")


class BaseDensityMethod(ABC):
    """
    Abstract base class for exit-density evaluators
    """

    def __init__(self, cfg: Optional[SeriesConfig] = None):
        self.cfg = cfg

    def evaluate(self, query: ExitLawQuery) -> Tuple[float, RegimeReport]:
        """
        Evaluate the exit density of a query, undoing the radius scaling

        Args:
            query: Validated evaluation request

        Returns:
            (value, RegimeReport)
        """
        value, report = self._evaluate(query.index.mu, query.scaled_t, query.scaled_x, self._law(query))
        return value / query.radius ** 2, report

    @staticmethod
    def _law(query: ExitLawQuery) -> str:
        if not query.index.absorbs_at_zero:
            return "hitting"
        return "killed_one" if query.boundary is Boundary.ONE else "killed_zero"

    @abstractmethod
    def _evaluate(self, mu: float, t: float, x: float, law: str) -> Tuple[float, RegimeReport]:
        """
        Evaluate on the unit interval

        Args:
            mu: Bessel index
            t: Scaled time
            x: Scaled start
            law: "hitting", "killed_one" or "killed_zero"

        Returns:
            (value, RegimeReport)
        """
        pass


def _from_series(result: SeriesResult) -> Tuple[float, RegimeReport]:
    report = RegimeReport(method=Method.SERIES, estimated_rel_error=result.relative_error(), terms=result.terms)
    return result.value, report


class AutoMethod(BaseDensityMethod):
    """Regime dispatcher: closed forms, series or small-time asymptotics"""

    def _evaluate(self, mu, t, x, law):
        if law == "hitting":
            return q1_auto(mu, t, x, self.cfg)
        boundary = Boundary.ONE if law == "killed_one" else Boundary.ZERO
        return q01_auto(mu, t, x, boundary, self.cfg)


class SeriesMethod(BaseDensityMethod):
    """Spectral series regardless of the regime"""

    def _evaluate(self, mu, t, x, law):
        if law == "hitting":
            return _from_series(q1_series_result(mu, t, x, self.cfg))
        if law == "killed_one":
            return _from_series(q01_to_one_series_result(mu, t, x, self.cfg))
        return _from_series(q01_to_zero_series_result(mu, t, x, self.cfg))


class AsymptoticMethod(BaseDensityMethod):
    """Leading small-time asymptotics"""

    def _evaluate(self, mu, t, x, law):
        if law == "hitting":
            return q1_smalltime(mu, t, x)
        if law == "killed_one":
            value, report = q1_smalltime(-mu, t, x)
            return x ** (-2.0 * mu) * value, report
        return q01_zero_smalltime(mu, t, x)


class FluxMethod(BaseDensityMethod):
    """Richardson-extrapolated flux of the killed kernel"""

    def _evaluate(self, mu, t, x, law):
        if law == "killed_zero":
            step = min(1e-3, 0.1 * t ** 0.5, x / 4.0)
            value = q01_zero_via_flux(mu, t, x, h=step, cfg=self.cfg)
            coarse = q01_zero_via_flux(mu, t, x, h=2.0 * step, cfg=self.cfg)
            error = abs(coarse - value) / abs(value) if value else 1.0
        elif law == "killed_one":
            value, error = q1_via_flux_with_error(-mu, t, x, cfg=self.cfg)
            value *= x ** (-2.0 * mu)
        else:
            value, error = q1_via_flux_with_error(mu, t, x, cfg=self.cfg)
        return value, RegimeReport(method=Method.FLUX_DIFFERENCE, estimated_rel_error=error)


class ImagesMethod(BaseDensityMethod):
    """Brownian image series, defined for mu = -1/2 only"""

    def _evaluate(self, mu, t, x, law):
        if mu != -0.5:
            raise DomainError(f"the image series exists for mu = -1/2 only (got mu={mu})")
        if law == "hitting":
            value = bm_interval_exit(t, x, -1.0, 1.0, IntervalSide.UPPER) + bm_interval_exit(
                t, x, -1.0, 1.0, IntervalSide.LOWER
            )
        else:
            side = IntervalSide.UPPER if law == "killed_one" else IntervalSide.LOWER
            value = bm_interval_exit(t, x, 0.0, 1.0, side)
        return value, RegimeReport(method=Method.CLOSED_FORM_IMAGES, estimated_rel_error=CLOSED_FORM_REL_ERROR)


_METHODS = {
    "auto": AutoMethod,
    "series": SeriesMethod,
    "asymptotic": AsymptoticMethod,
    "flux": FluxMethod,
    "images": ImagesMethod,
}


def get_density_method(name: str = "auto", cfg: Optional[SeriesConfig] = None) -> BaseDensityMethod:
    """
    Factory function for density evaluators

    Args:
        name: One of METHOD_NAMES
        cfg: Truncation policy passed to series-based methods

    Returns:
        Initialized evaluator
    """
    try:
        return _METHODS[name.lower()](cfg)
    except KeyError:
        raise ValueError(f"unknown method '{name}' (choose from {', '.join(METHOD_NAMES)})") from None
