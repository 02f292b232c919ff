"""
Density Engine Module
Orchestrates grid evaluation of exit densities:
1. Validate every (t, x) point into an ExitLawQuery
2. Evaluate with the selected method, optionally across worker processes
3. Return rows with the method used and its error estimate
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence

import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))

import config
from src.exitlaw import Boundary, ExitLawQuery
from src.methods import get_density_method
from src.special import Index, SeriesConfig
from src.zero_store import status

ROW_FIELDS = ("mu", "t", "x", "boundary", "value", "method", "est_rel_error")


def _evaluate_chunk(method_name: str, cfg: Optional[SeriesConfig], queries: List[ExitLawQuery]) -> List[Dict]:
    method = get_density_method(method_name, cfg)
    rows = []
    for query in queries:
        value, report = method.evaluate(query)
        rows.append({
            "mu": query.index.mu,
            "t": query.t,
            "x": query.x,
            "boundary": query.boundary.value,
            "value": value,
            "method": report.method.value,
            "est_rel_error": report.estimated_rel_error,
        })
    return rows


class DensityEngine:
    """
    Grid evaluation engine for exit densities
    Rows come back in (t, x) grid order whatever the number of workers
    """

    def __init__(self, method: str = "auto", cfg: Optional[SeriesConfig] = None, workers: int = None):
        """
        Initialize the engine

        Args:
            method: Method name for get_density_method
            cfg: Truncation policy
            workers: Worker processes (defaults to config)
        """
        # Fail early on unknown names
        get_density_method(method, cfg)
        self.method = method
        self.cfg = cfg
        self.workers = max(1, workers or config.WORKERS)

    def build_queries(
        self,
        index: Index,
        boundary: Boundary,
        times: Sequence[float],
        xs: Sequence[float],
        radius: float = 1.0,
    ) -> List[ExitLawQuery]:
        """Validate the grid; raises DomainError on the first bad point"""
        return [
            ExitLawQuery(index=index, t=t, x=x, boundary=boundary, radius=radius)
            for t in times
            for x in xs
        ]

    def evaluate_grid(
        self,
        index: Index,
        boundary: Boundary,
        times: Sequence[float],
        xs: Sequence[float],
        radius: float = 1.0,
    ) -> List[Dict]:
        """
        Evaluate the exit density on a time-by-position grid

        Args:
            index: Bessel index and zero convention
            boundary: Exit boundary
            times: Times
            xs: Starting points
            radius: Interval radius (scaling)

        Returns:
            List of rows with keys ROW_FIELDS
        """
        queries = self.build_queries(index, boundary, times, xs, radius)
        status(f"🔍 Evaluating {len(queries)} points with method '{self.method}' ({self.workers} worker(s))")

        if self.workers == 1 or len(queries) < 2 * self.workers:
            rows = _evaluate_chunk(self.method, self.cfg, queries)
        else:
            size = -(-len(queries) // self.workers)
            chunks = [queries[i:i + size] for i in range(0, len(queries), size)]
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                results = pool.map(_evaluate_chunk, [self.method] * len(chunks), [self.cfg] * len(chunks), chunks)
                rows = [row for chunk in results for row in chunk]

        status(f"   ✓ Evaluated {len(rows)} points")
        return rows
