"""
Monte Carlo Module
Euler simulation of Bessel paths with Brownian-bridge boundary correction, run on
counter-based random streams so every (seed, stream) pair reproduces exactly
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))

import config
from src.errors import DomainError, InsufficientSamplesError, SimulationAnomalyError, SimulationTimeoutError
from src.exitlaw import Boundary, q01_to_zero_survival, q1_survival, splitting_probability
from src.mass import exit_time_cdf
from src.special import Index
from src.zero_store import status

# Boundary codes inside SampleBatch
EXIT_ZERO = 0
EXIT_ONE = 1
TIMED_OUT = -1
MIN_KS_SAMPLES = 50
SAMPLE_FIELDS = ("exit_time", "boundary", "steps", "scheme", "stream")


class Scheme(str, Enum):
    """Zero-boundary handling of the Euler walk"""

    EULER_REFLECT = "euler_reflect"
    EULER_ABSORB = "euler_absorb"

    @classmethod
    def for_index(cls, index: Index) -> "Scheme":
        return cls.EULER_ABSORB if index.absorbs_at_zero else cls.EULER_REFLECT


class SimConfig(BaseModel):
    """Simulation settings; defaults come from config"""

    model_config = ConfigDict(frozen=True)

    step: float = Field(default_factory=lambda: config.SIM_STEP, gt=0)
    max_time: float = Field(default_factory=lambda: config.SIM_MAX_TIME, gt=0)
    n_paths: int = Field(default=10_000, ge=1)
    seed: int = Field(default=0, ge=0)
    batch: int = Field(default_factory=lambda: config.SIM_BATCH, ge=1)
    bridge_correction: bool = True

    @property
    def n_streams(self) -> int:
        return -(-self.n_paths // self.batch)

    def stream_size(self, stream: int) -> int:
        return min(self.batch, self.n_paths - stream * self.batch)


class ExitSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    exit_time: float = Field(gt=0)
    boundary: Boundary
    steps: int = Field(ge=1)
    scheme: Scheme
    stream: int = Field(ge=0)
    bridge: bool = True


@dataclass
class SampleBatch:
    """Columnar simulation output; boundary holds EXIT_ONE, EXIT_ZERO or TIMED_OUT"""

    exit_time: np.ndarray
    boundary: np.ndarray
    steps: np.ndarray
    stream: np.ndarray
    scheme: Scheme
    bridge: bool = True

    def __len__(self) -> int:
        return len(self.exit_time)

    @property
    def completed(self) -> np.ndarray:
        return self.boundary != TIMED_OUT

    def times_at(self, boundary: Boundary) -> np.ndarray:
        code = EXIT_ONE if Boundary(boundary) is Boundary.ONE else EXIT_ZERO
        return self.exit_time[self.boundary == code]

    def samples(self) -> List[ExitSample]:
        """Completed paths as records, timeouts excluded"""
        return [
            ExitSample(
                exit_time=float(t),
                boundary=Boundary.ONE if code == EXIT_ONE else Boundary.ZERO,
                steps=int(n),
                scheme=self.scheme,
                stream=int(s),
                bridge=self.bridge,
            )
            for t, code, n, s in zip(self.exit_time, self.boundary, self.steps, self.stream)
            if code != TIMED_OUT
        ]

    def rows(self) -> List[Dict]:
        return [
            {
                "exit_time": f"{t:.10f}",
                "boundary": Boundary.ONE.value if code == EXIT_ONE else Boundary.ZERO.value,
                "steps": int(n),
                "scheme": self.scheme.value,
                "stream": int(s),
            }
            for t, code, n, s in zip(self.exit_time, self.boundary, self.steps, self.stream)
            if code != TIMED_OUT
        ]

    @classmethod
    def concatenate(cls, batches: List["SampleBatch"]) -> "SampleBatch":
        return cls(
            exit_time=np.concatenate([b.exit_time for b in batches]),
            boundary=np.concatenate([b.boundary for b in batches]),
            steps=np.concatenate([b.steps for b in batches]),
            stream=np.concatenate([b.stream for b in batches]),
            scheme=batches[0].scheme,
            bridge=batches[0].bridge,
        )


def _check_start(x0: float):
    if not 0 < x0 < 1:
        raise DomainError(f"start x0={x0} must lie in (0, 1)")


def stream_generator(seed: int, stream: int) -> np.random.Generator:
    """Philox generator keyed by (seed, stream)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


def simulate_stream(index: Index, x0: float, cfg: SimConfig, stream: int, n_paths: Optional[int] = None) -> SampleBatch:
    """
    Simulate one stream of paths from x0 until they leave [0,1) or (0,1)

    Euler step with the drift (2mu+1)/(2R) evaluated at max(R, sqrt(h)); the reflecting
    convention folds negative positions with |.|, killing absorbs them. With the bridge
    correction a step that stays inside still exits with probability
    exp(-2(1-R_k)(1-R_{k+1})/h) at 1 (and exp(-2 R_k R_{k+1}/h) at 0 under killing).
    Every step draws normals and uniforms for the whole batch, so path i always uses
    column i of the stream and neighbouring runs stay coupled.

    Args:
        index: Bessel index and zero convention
        x0: Start in (0, 1)
        cfg: Simulation settings
        stream: Stream number
        n_paths: Paths in this stream (defaults to cfg.stream_size(stream))

    Returns:
        SampleBatch with one entry per path, timeouts marked TIMED_OUT
    """
    _check_start(x0)
    n = cfg.stream_size(stream) if n_paths is None else n_paths
    if n < 1:
        raise DomainError(f"stream {stream} has no paths (n_paths={cfg.n_paths}, batch={cfg.batch})")
    rng = stream_generator(cfg.seed, stream)

    h = cfg.step
    root_h = math.sqrt(h)
    drift_coefficient = (2.0 * index.mu + 1.0) / 2.0
    killing = index.absorbs_at_zero
    max_steps = int(math.ceil(cfg.max_time / h))

    position = np.full(n, float(x0))
    boundary = np.full(n, TIMED_OUT, dtype=np.int8)
    exit_time = np.full(n, np.nan)
    steps = np.zeros(n, dtype=np.int64)
    alive = np.ones(n, dtype=bool)

    for k in range(max_steps):
        if not alive.any():
            break
        normals = rng.standard_normal(n)
        uniforms = rng.random((2, n))

        live = np.nonzero(alive)[0]
        start = position[live]
        end = start + drift_coefficient / np.maximum(start, root_h) * h + root_h * normals[live]

        at_zero = end <= 0 if killing else np.zeros(live.size, dtype=bool)
        if not killing:
            end = np.abs(end)
        at_one = end >= 1
        if cfg.bridge_correction:
            inside = ~(at_zero | at_one)
            crossing_one = np.exp(-2.0 * (1.0 - start) * (1.0 - end) / h)
            at_one |= inside & (uniforms[0, live] < crossing_one)
            if killing:
                crossing_zero = np.exp(-2.0 * start * np.maximum(end, 0.0) / h)
                at_zero |= inside & ~at_one & (uniforms[1, live] < crossing_zero)

        position[live] = end
        for code, hit in ((EXIT_ONE, at_one), (EXIT_ZERO, at_zero & ~at_one)):
            done = live[hit]
            boundary[done] = code
            exit_time[done] = (k + 1) * h
            steps[done] = k + 1
            alive[done] = False

    return SampleBatch(
        exit_time=exit_time,
        boundary=boundary,
        steps=steps,
        stream=np.full(n, stream, dtype=np.int64),
        scheme=Scheme.for_index(index),
        bridge=cfg.bridge_correction,
    )


def simulate_exit(index: Index, x0: float, cfg: SimConfig, stream: int) -> ExitSample:
    """Single-path view of simulate_stream; raises SimulationTimeoutError when the path does not leave"""
    batch = simulate_stream(index, x0, cfg, stream, n_paths=1)
    samples = batch.samples()
    if not samples:
        raise SimulationTimeoutError(f"path on stream {stream} did not exit before t={cfg.max_time}")
    return samples[0]


def _stream_task(index: Index, x0: float, cfg: SimConfig, stream: int) -> SampleBatch:
    return simulate_stream(index, x0, cfg, stream)


def run_simulation(index: Index, x0: float, cfg: SimConfig, workers: int = None) -> SampleBatch:
    """
    Simulate cfg.n_paths paths split into streams of cfg.batch

    Args:
        index: Bessel index and zero convention
        x0: Start in (0, 1)
        cfg: Simulation settings
        workers: Worker processes (defaults to config); output does not depend on it

    Returns:
        SampleBatch concatenated in stream order
    """
    _check_start(x0)
    workers = max(1, workers or config.WORKERS)
    streams = list(range(cfg.n_streams))
    status(f"🎲 Simulating {cfg.n_paths} paths in {len(streams)} stream(s), h={cfg.step:g}, {workers} worker(s)")

    if workers == 1 or len(streams) == 1:
        batches = [simulate_stream(index, x0, cfg, s) for s in streams]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_stream_task, [index] * len(streams), [x0] * len(streams), [cfg] * len(streams), streams))

    result = SampleBatch.concatenate(batches)
    timeouts = int(np.sum(~result.completed))
    status(f"   ✓ {len(result) - timeouts} paths exited" + (f", ⚠️  {timeouts} timed out" if timeouts else ""))
    return result


# ============================================================================
# SUMMARIES AND COMPARISONS
# ============================================================================
def timeout_probability(index: Index, x0: float, max_time: float) -> float:
    """P(no exit before max_time) from the survival series"""
    _check_start(x0)
    if not index.absorbs_at_zero:
        return q1_survival(index.mu, max_time, x0)
    return x0 ** (-2.0 * index.mu) * q1_survival(-index.mu, max_time, x0) + q01_to_zero_survival(
        index.mu, max_time, x0
    )


def summarize(batch: SampleBatch) -> Dict:
    """
    Boundary masses with binomial standard errors, exit-time moments and timeouts

    Args:
        batch: Simulation output

    Returns:
        Summary dictionary (timeouts excluded from masses and moments)
    """
    completed = batch.completed
    n = int(np.sum(completed))
    if n == 0:
        raise InsufficientSamplesError("no path exited")
    times = batch.exit_time[completed]
    summary = {"paths": len(batch), "exited": n, "timeouts": len(batch) - n}
    for boundary, code in ((Boundary.ONE, EXIT_ONE), (Boundary.ZERO, EXIT_ZERO)):
        fraction = float(np.sum(batch.boundary == code)) / n
        summary[f"mass_{boundary.value}"] = fraction
        summary[f"se_{boundary.value}"] = math.sqrt(fraction * (1.0 - fraction) / n)
    summary["mean_exit_time"] = float(np.mean(times))
    summary["var_exit_time"] = float(np.var(times, ddof=1)) if n > 1 else 0.0
    return summary


def empirical_vs_analytic(batch: SampleBatch, index: Index, x0: float) -> Dict:
    """
    Kolmogorov-Smirnov distances against the analytic conditional exit-time laws and
    the z-score of the boundary mass against the splitting probability

    Raises:
        InsufficientSamplesError: when a boundary has fewer than MIN_KS_SAMPLES exits
    """
    summary = summarize(batch)
    boundaries = [Boundary.ONE, Boundary.ZERO] if index.absorbs_at_zero else [Boundary.ONE]
    comparison = {"summary": summary}
    for boundary in boundaries:
        times = batch.times_at(boundary)
        if times.size < MIN_KS_SAMPLES:
            raise InsufficientSamplesError(
                f"only {times.size} exits through {boundary.value}; need {MIN_KS_SAMPLES} for a KS comparison"
            )
        result = stats.kstest(times, lambda t, b=boundary: exit_time_cdf(index, x0, b, t))
        comparison[f"ks_{boundary.value}"] = float(result.statistic)
        comparison[f"ks_pvalue_{boundary.value}"] = float(result.pvalue)

    if index.absorbs_at_zero:
        expected = splitting_probability(index.mu, x0)
        se = math.sqrt(expected * (1.0 - expected) / summary["exited"])
        comparison["splitting_expected"] = expected
        comparison["splitting_z"] = (summary["mass_one"] - expected) / se
    return comparison


def ks_distance(index: Index, x0: float, cfg: SimConfig, workers: int = None) -> float:
    """Largest KS distance over the exit boundaries for one simulation run"""
    comparison = empirical_vs_analytic(run_simulation(index, x0, cfg, workers), index, x0)
    return max(v for k, v in comparison.items() if k.startswith("ks_") and "pvalue" not in k)


def noise_floor(n_paths: int) -> float:
    """Monte Carlo floor for KS differences between two runs of n_paths"""
    return 1.5 / math.sqrt(n_paths)


def step_halving(index: Index, x0: float, cfg: SimConfig, workers: int = None) -> Dict:
    """
    KS distances at cfg.step and cfg.step / 2 with everything else fixed

    Returns:
        Dictionary with both distances, their difference and the noise floor
    """
    coarse = ks_distance(index, x0, cfg, workers)
    fine = ks_distance(index, x0, cfg.model_copy(update={"step": cfg.step / 2.0}), workers)
    return {"ks_h": coarse, "ks_half_h": fine, "change": abs(coarse - fine), "floor": noise_floor(cfg.n_paths)}


def bridge_comparison(index: Index, x0: float, cfg: SimConfig, workers: int = None) -> Dict:
    """KS distances with and without the bridge correction at the same step and seed"""
    with_bridge = ks_distance(index, x0, cfg.model_copy(update={"bridge_correction": True}), workers)
    without = ks_distance(index, x0, cfg.model_copy(update={"bridge_correction": False}), workers)
    return {"ks_bridge": with_bridge, "ks_no_bridge": without, "floor": noise_floor(cfg.n_paths)}



def check_anomalies(comparison: Dict, z_limit: float = 5.0):
    """Raise SimulationAnomalyError when the boundary mass drifts beyond z_limit standard errors"""
    z = comparison.get("splitting_z")
    if z is not None and abs(z) > z_limit:
        raise SimulationAnomalyError(
            f"exit mass at one is {z:+.1f} standard errors from the splitting probability"
        )


def check_timeouts(batch: SampleBatch, index: Index, x0: float, max_time: float, z_limit: float = 5.0) -> float:
    """
    Compare the timed-out fraction with P(no exit before max_time)

    Returns:
        The expected timeout probability

    Raises:
        SimulationAnomalyError: when the observed fraction exceeds it by more than z_limit standard errors
    """
    n = len(batch)
    expected = timeout_probability(index, x0, max_time)
    observed = float(np.sum(~batch.completed)) / n
    # variance floored at one path
    se = math.sqrt(max(expected * (1.0 - expected), 1.0 / n) / n)
    if observed - expected > z_limit * se:
        raise SimulationAnomalyError(
            f"{observed:.2%} of paths timed out at t={max_time:g}; expected {expected:.2e}"
        )
    return expected
