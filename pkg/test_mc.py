"""
Monte Carlo Tests
Reproducible streams, sample records, summaries and the comparison against the analytic laws
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

sys.path.append(str(Path(__file__).parent))

from src.errors import DomainError, InsufficientSamplesError, SimulationAnomalyError, SimulationTimeoutError
from src.exitlaw import Boundary, mean_exit_time
from src.mc import (
    EXIT_ONE,
    EXIT_ZERO,
    SAMPLE_FIELDS,
    TIMED_OUT,
    SampleBatch,
    Scheme,
    SimConfig,
    bridge_comparison,
    check_anomalies,
    check_timeouts,
    empirical_vs_analytic,
    run_simulation,
    simulate_exit,
    step_halving,
    stream_generator,
    summarize,
    timeout_probability,
)
from src.special import Index, ZeroBoundary

BROWNIAN_KILLED = Index(mu=-0.5, zero_boundary=ZeroBoundary.KILLING)
THREE_DIMENSIONAL = Index(mu=0.5)


def small_batch():
    return SampleBatch(
        exit_time=np.array([0.1, np.nan, 0.3]),
        boundary=np.array([EXIT_ONE, TIMED_OUT, EXIT_ZERO], dtype=np.int8),
        steps=np.array([100, 0, 300]),
        stream=np.array([0, 0, 1]),
        scheme=Scheme.EULER_ABSORB,
    )


@pytest.fixture(scope="module")
def brownian_run():
    cfg = SimConfig(step=1e-3, max_time=20.0, n_paths=4000, seed=7, batch=1000)
    return run_simulation(BROWNIAN_KILLED, 0.5, cfg, workers=1)


# ============================================================================
# CONFIGURATION AND STREAMS
# ============================================================================
def test_stream_layout():
    cfg = SimConfig(n_paths=2500, batch=1000)
    assert cfg.n_streams == 3
    assert [cfg.stream_size(s) for s in range(3)] == [1000, 1000, 500]
    assert cfg.bridge_correction


def test_scheme_follows_the_zero_convention():
    assert Scheme.for_index(BROWNIAN_KILLED) is Scheme.EULER_ABSORB
    assert Scheme.for_index(THREE_DIMENSIONAL) is Scheme.EULER_REFLECT
    assert Scheme.for_index(Index(mu=-0.3, zero_boundary=ZeroBoundary.REFLECTING)) is Scheme.EULER_REFLECT

    cfg = SimConfig(step=1e-3, n_paths=50, seed=2, bridge_correction=False)
    killed = run_simulation(BROWNIAN_KILLED, 0.5, cfg)
    reflected = run_simulation(THREE_DIMENSIONAL, 0.5, cfg)
    assert (killed.scheme, killed.bridge) == (Scheme.EULER_ABSORB, False)
    assert {row["scheme"] for row in reflected.rows()} == {"euler_reflect"}
    assert all(not sample.bridge for sample in killed.samples())


def test_sim_config_rejects_bad_step():
    with pytest.raises(ValidationError):
        SimConfig(step=0.0)


def test_streams_are_keyed_by_seed_and_stream():
    first = stream_generator(3, 1).standard_normal(5)
    assert np.array_equal(first, stream_generator(3, 1).standard_normal(5))
    assert not np.array_equal(first, stream_generator(3, 2).standard_normal(5))
    assert not np.array_equal(first, stream_generator(4, 1).standard_normal(5))


def test_same_seed_same_paths_whatever_the_workers():
    cfg = SimConfig(step=1e-3, n_paths=600, seed=11, batch=200)
    serial = run_simulation(THREE_DIMENSIONAL, 0.5, cfg, workers=1)
    parallel = run_simulation(THREE_DIMENSIONAL, 0.5, cfg, workers=2)
    np.testing.assert_array_equal(serial.exit_time, parallel.exit_time)
    np.testing.assert_array_equal(serial.boundary, parallel.boundary)
    np.testing.assert_array_equal(serial.stream, parallel.stream)


def test_more_paths_extend_the_same_streams():
    short = run_simulation(THREE_DIMENSIONAL, 0.5, SimConfig(step=1e-3, n_paths=400, seed=5, batch=200))
    longer = run_simulation(THREE_DIMENSIONAL, 0.5, SimConfig(step=1e-3, n_paths=600, seed=5, batch=200))
    np.testing.assert_array_equal(longer.exit_time[:400], short.exit_time)


def test_reflecting_and_killing_share_paths_away_from_zero():
    cfg = SimConfig(step=1e-3, n_paths=500, seed=17, batch=500)
    killed = run_simulation(Index(mu=-0.3, zero_boundary=ZeroBoundary.KILLING), 0.6, cfg)
    reflected = run_simulation(Index(mu=-0.3, zero_boundary=ZeroBoundary.REFLECTING), 0.6, cfg)
    # a path the killing run lets through to 1 never touched 0
    survivors = killed.boundary == EXIT_ONE
    assert survivors.any() and (~survivors).any()
    np.testing.assert_array_equal(reflected.exit_time[survivors], killed.exit_time[survivors])
    assert np.all(reflected.boundary == EXIT_ONE)


def test_start_must_be_inside():
    with pytest.raises(DomainError):
        run_simulation(THREE_DIMENSIONAL, 1.0, SimConfig(n_paths=10))


# ============================================================================
# SAMPLE RECORDS
# ============================================================================
def test_batch_views():
    batch = small_batch()
    assert len(batch) == 3
    assert batch.completed.tolist() == [True, False, True]
    assert batch.times_at(Boundary.ONE).tolist() == [0.1]
    assert batch.times_at(Boundary.ZERO).tolist() == [0.3]


def test_rows_skip_timeouts():
    rows = small_batch().rows()
    assert len(rows) == 2
    assert set(rows[0]) == set(SAMPLE_FIELDS)
    assert rows[0]["exit_time"] == "0.1000000000"
    assert rows[1]["boundary"] == "zero"
    assert rows[1]["scheme"] == "euler_absorb"


def test_samples_are_records():
    samples = small_batch().samples()
    assert [s.boundary for s in samples] == [Boundary.ONE, Boundary.ZERO]
    assert samples[1].stream == 1
    assert samples[1].steps == 300


def test_concatenate_keeps_order():
    joined = SampleBatch.concatenate([small_batch(), small_batch()])
    assert len(joined) == 6
    assert joined.stream.tolist() == [0, 0, 1, 0, 0, 1]


def test_single_path():
    cfg = SimConfig(step=1e-3, seed=2)
    sample = simulate_exit(THREE_DIMENSIONAL, 0.5, cfg, stream=4)
    assert sample.stream == 4
    assert sample.boundary is Boundary.ONE
    assert sample.exit_time == pytest.approx(sample.steps * 1e-3)


def test_single_path_timeout():
    cfg = SimConfig(step=1e-3, max_time=2e-3, seed=2)
    with pytest.raises(SimulationTimeoutError):
        simulate_exit(THREE_DIMENSIONAL, 0.5, cfg, stream=0)


# ============================================================================
# SUMMARIES
# ============================================================================
def test_summarize():
    summary = summarize(small_batch())
    assert summary["paths"] == 3
    assert summary["exited"] == 2
    assert summary["timeouts"] == 1
    assert summary["mass_one"] == 0.5
    assert summary["se_one"] == pytest.approx(math.sqrt(0.125))
    assert summary["mean_exit_time"] == pytest.approx(0.2)
    assert summary["var_exit_time"] == pytest.approx(0.02)


def test_summarize_needs_an_exit():
    batch = small_batch()
    batch.boundary[:] = TIMED_OUT
    with pytest.raises(InsufficientSamplesError):
        summarize(batch)


def test_splitting_of_brownian_motion(brownian_run):
    summary = summarize(brownian_run)
    assert summary["timeouts"] == 0
    assert abs(summary["mass_one"] - 0.5) <= 5 * summary["se_one"]


def test_mean_exit_time_of_brownian_motion(brownian_run):
    summary = summarize(brownian_run)
    se = math.sqrt(summary["var_exit_time"] / summary["exited"])
    expected = mean_exit_time(-0.5, 0.5, ZeroBoundary.KILLING)
    assert abs(summary["mean_exit_time"] - expected) <= 5 * se + 2e-3


def test_mean_exit_time_with_drift():
    cfg = SimConfig(step=1e-3, n_paths=3000, seed=13, batch=1000)
    summary = summarize(run_simulation(THREE_DIMENSIONAL, 0.5, cfg))
    assert summary["mass_one"] == 1.0
    assert summary["mean_exit_time"] == pytest.approx(mean_exit_time(0.5, 0.5), abs=0.02)


# ============================================================================
# COMPARISON AGAINST THE ANALYTIC LAWS
# ============================================================================
def test_exit_times_follow_the_analytic_laws(brownian_run):
    comparison = empirical_vs_analytic(brownian_run, BROWNIAN_KILLED, 0.5)
    assert comparison["ks_one"] < 0.05
    assert comparison["ks_zero"] < 0.05
    assert comparison["splitting_expected"] == 0.5
    check_anomalies(comparison)


def test_halving_the_step_stays_within_the_noise_floor():
    cfg = SimConfig(step=1e-3, n_paths=4000, seed=19, batch=1000)
    result = step_halving(THREE_DIMENSIONAL, 0.5, cfg, workers=1)
    assert result["floor"] == pytest.approx(1.5 / math.sqrt(4000))
    assert result["change"] < result["floor"]
    assert result["ks_half_h"] < 0.05


def test_bridge_correction_removes_the_late_exit_bias():
    cfg = SimConfig(step=1e-2, n_paths=4000, seed=23, batch=1000)
    result = bridge_comparison(THREE_DIMENSIONAL, 0.5, cfg, workers=1)
    assert result["ks_bridge"] < result["ks_no_bridge"]
    assert result["ks_no_bridge"] > result["floor"]


def test_comparison_needs_enough_exits():
    cfg = SimConfig(step=1e-3, n_paths=20, seed=1)
    batch = run_simulation(THREE_DIMENSIONAL, 0.5, cfg)
    with pytest.raises(InsufficientSamplesError):
        empirical_vs_analytic(batch, THREE_DIMENSIONAL, 0.5)


def test_anomaly_threshold():
    check_anomalies({"splitting_z": 4.9})
    check_anomalies({})
    with pytest.raises(SimulationAnomalyError):
        check_anomalies({"splitting_z": -5.1})


def test_timeouts_match_the_survival_probability():
    cfg = SimConfig(step=1e-3, max_time=0.05, n_paths=2000, seed=3, batch=1000)
    batch = run_simulation(BROWNIAN_KILLED, 0.5, cfg)
    expected = check_timeouts(batch, BROWNIAN_KILLED, 0.5, cfg.max_time)
    observed = float(np.mean(~batch.completed))
    assert 0.9 < expected < 1.0
    assert abs(observed - expected) < 5 * math.sqrt(expected * (1 - expected) / len(batch))


def test_excess_timeouts_are_anomalies():
    batch = SampleBatch.concatenate([small_batch()] * 40)
    batch.boundary[:] = TIMED_OUT
    assert timeout_probability(THREE_DIMENSIONAL, 0.5, 20.0) < 1e-20
    with pytest.raises(SimulationAnomalyError):
        check_timeouts(batch, THREE_DIMENSIONAL, 0.5, 20.0)
