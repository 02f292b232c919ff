"""
Special Function Tests
Bessel zeros, J and I evaluation, magnitude envelopes, ratio bounds and the zero-table cache
"""

import math
import sys
from pathlib import Path

import mpmath
import numpy as np
import pytest
from pydantic import ValidationError
from scipy import special as sp

sys.path.append(str(Path(__file__).parent))

from src.errors import DomainError
from src.special import (
    Index,
    SeriesConfig,
    ZeroBoundary,
    ZeroTable,
    bessel_i_scaled,
    bessel_j,
    bessel_j_deriv_at_zero,
    bessel_j_normalized,
    bessel_zeros,
    i_ratio_bounds,
    i_ratio_bounds_classical,
    i_recurrence_residual,
    j_envelope,
    j_envelope_constant,
    log_bessel_i_scaled,
)
from src.zero_store import ZeroStore

MUS = [-0.9, -0.5, 0.0, 0.5, 1.0, 2.5, 5.0, 10.0]


# ============================================================================
# INDEX AND CONFIGURATION RECORDS
# ============================================================================
def test_reflecting_index_below_minus_one_is_a_domain_error():
    with pytest.raises(DomainError):
        Index(mu=-1.5, zero_boundary=ZeroBoundary.REFLECTING)


def test_killing_needs_negative_index():
    with pytest.raises(DomainError):
        Index(mu=0.5, zero_boundary=ZeroBoundary.KILLING)
    assert Index(mu=-1.5, zero_boundary=ZeroBoundary.KILLING).absorbs_at_zero


def test_negative_index_must_choose_a_convention():
    with pytest.raises(DomainError):
        Index(mu=-0.3)


def test_series_config_rejects_nonpositive_tolerance():
    with pytest.raises(ValidationError):
        SeriesConfig(abs_tol=0.0)


# ============================================================================
# ZEROS
# ============================================================================
def test_first_zeros_of_j0():
    zeros = bessel_zeros(0.0, 5).zeros[:5]
    assert zeros[0] == pytest.approx(2.404825557695773, rel=1e-14)
    assert list(zeros) == sorted(zeros)


def test_half_integer_zeros():
    assert bessel_zeros(0.5, 3).zeros[:3] == pytest.approx([math.pi, 2 * math.pi, 3 * math.pi], rel=1e-14)
    assert bessel_zeros(-0.5, 3).zeros[:3] == pytest.approx(
        [math.pi / 2, 3 * math.pi / 2, 5 * math.pi / 2], rel=1e-14
    )


@pytest.mark.parametrize("mu", [0.0, 0.5, 1.0, 2.5, 5.0, 10.0])
def test_zeros_match_mpmath(mu):
    zeros = bessel_zeros(mu, 20).zeros
    for k in (1, 7, 20):
        assert zeros[k - 1] == pytest.approx(float(mpmath.besseljzero(mu, k)), rel=1e-13)


@pytest.mark.parametrize("mu", MUS)
def test_zeros_vanish_in_high_precision(mu):
    for z in bessel_zeros(mu, 30).zeros:
        assert abs(float(mpmath.besselj(mu, z))) <= 1e-12


@pytest.mark.parametrize("mu", MUS)
def test_zeros_interlace_with_next_order(mu):
    own = bessel_zeros(mu, 21).zeros
    above = bessel_zeros(mu + 1.0, 20).zeros
    for k in range(20):
        assert own[k] < above[k] < own[k + 1]


def test_extending_a_table_keeps_existing_zeros():
    short = bessel_zeros(1.5, 5)
    longer = bessel_zeros(1.5, 12, table=short)
    assert longer.zeros[:5] == short.zeros
    assert len(longer) == 12
    assert short.extended(3) is short


def test_zero_table_rejects_bad_index_and_order():
    with pytest.raises(DomainError):
        bessel_zeros(-1.0, 3)
    with pytest.raises(ValidationError):
        ZeroTable(mu=0.0, zeros=(3.0, 2.0), enclosure_width=0.0)


def test_zero_table_text_format():
    table = bessel_zeros(2.0, 4)
    text = table.to_text()
    assert text.splitlines()[0] == f"mu=2.0 n=4 tol={table.enclosure_width!r}"
    assert ZeroTable.from_text(text) == table


def test_zero_table_header_count_must_match():
    with pytest.raises(ValueError):
        ZeroTable.from_text("mu=0.0 n=3 tol=1e-15\n2.404825557695773\n")


@pytest.mark.parametrize("mu", [-0.5, 0.0, 3.0])
def test_normalizer_sign_alternates(mu):
    values = [bessel_j_deriv_at_zero(mu, k) for k in range(1, 7)]
    assert all(v * (-1) ** (k + 1) > 0 for k, v in enumerate(values, start=1))


def test_normalizer_closed_form_at_three_halves():
    for k in range(1, 6):
        expected = (-1) ** (k + 1) * math.sqrt(2.0 / (math.pi ** 2 * k))
        assert bessel_j_deriv_at_zero(0.5, k) == pytest.approx(expected, rel=1e-13)


# ============================================================================
# BESSEL FUNCTION EVALUATION
# ============================================================================
@pytest.mark.parametrize("mu", MUS)
@pytest.mark.parametrize("z", [1e-6, 0.3, 2.0, 17.5, 120.0])
def test_bessel_j_matches_mpmath(mu, z):
    expected = float(mpmath.besselj(mu, z))
    assert bessel_j(mu, z) == pytest.approx(expected, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("mu", [-0.9, -0.5, 0.0, 2.5])
def test_normalized_j_is_continuous_at_zero(mu):
    at_zero = 1.0 / (2.0 ** mu * math.gamma(mu + 1.0))
    assert bessel_j_normalized(mu, 0.0) == pytest.approx(at_zero, rel=1e-15)
    # the first correction z^2 / (4(mu+1)) is 2.5e-8 at mu = -0.9
    two_terms = at_zero * (1.0 - 1e-8 / (4.0 * (mu + 1.0)))
    assert bessel_j_normalized(mu, 1e-4) == pytest.approx(two_terms, rel=1e-12)
    z = 2e-3
    assert bessel_j_normalized(mu, z) == pytest.approx(float(mpmath.besselj(mu, z)) / z ** mu, rel=1e-13)


def test_negative_index_j_at_zero_is_unbounded():
    with pytest.raises(DomainError):
        bessel_j(-0.5, 0.0)
    assert bessel_j(0.0, 0.0) == 1.0
    assert bessel_j(2.0, 0.0) == 0.0


@pytest.mark.parametrize("mu", MUS)
@pytest.mark.parametrize("z", [1e-5, 0.7, 30.0, 600.0])
def test_scaled_i_matches_mpmath(mu, z):
    expected = float(mpmath.besseli(mu, z) * mpmath.exp(-z))
    assert bessel_i_scaled(mu, z) == pytest.approx(expected, rel=1e-12)


def test_log_scaled_i_survives_underflow():
    value = log_bessel_i_scaled(50.0, 1e-10)
    expected = float(mpmath.log(mpmath.besseli(50, mpmath.mpf("1e-10"))) - mpmath.mpf("1e-10"))
    assert value == pytest.approx(expected, rel=1e-10)


# ============================================================================
# ENVELOPES AND RATIO BOUNDS
# ============================================================================
@pytest.mark.parametrize("mu", MUS)
def test_j_envelope_dominates(mu):
    z = np.linspace(1e-3, 200.0, 5001)
    assert np.all(np.abs(sp.jv(mu, z)) <= j_envelope(mu, z))


def test_j_envelope_constant_is_stable_under_refinement():
    for mu in (-0.5, 0.0, 5.0):
        assert j_envelope_constant(mu, 200.0, 8000) == pytest.approx(j_envelope_constant(mu), rel=1e-2)


def test_ratio_bounds_sandwich_samples():
    rng = np.random.default_rng(11)
    for _ in range(500):
        mu = rng.uniform(-0.99, 10.0)
        x = rng.uniform(0.01, 40.0)
        y = x + (50.0 - x) * rng.uniform(0.01, 1.0)
        lower, upper = i_ratio_bounds(mu, x, y)
        ratio = math.exp(math.log(sp.ive(mu, y)) - math.log(sp.ive(mu, x)) + (y - x))
        assert lower < ratio < upper


def test_classical_bounds_where_valid():
    lower, upper = i_ratio_bounds_classical(2.0, 1.0, 3.0)
    ratio = sp.iv(2.0, 3.0) / sp.iv(2.0, 1.0)
    assert lower < ratio < upper
    assert i_ratio_bounds_classical(0.0, 1.0, 3.0)[0] is None
    assert i_ratio_bounds_classical(-0.7, 1.0, 3.0) == (None, None)


def test_ratio_bounds_domain():
    with pytest.raises(DomainError):
        i_ratio_bounds(0.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        i_ratio_bounds(-1.0, 1.0, 2.0)


@pytest.mark.parametrize("mu", MUS)
def test_i_recurrence_residual(mu):
    assert max(i_recurrence_residual(mu, z) for z in np.geomspace(0.01, 100.0, 20)) <= 1e-12


# ============================================================================
# ZERO STORE
# ============================================================================
def test_zero_store_persists_and_reuses(tmp_path):
    store = ZeroStore(tmp_path)
    first = store.get(0.0, 10)
    files = list(tmp_path.glob("zeros_v1_mu*.txt"))
    assert len(files) == 1

    reloaded = ZeroStore(tmp_path)
    again = reloaded.get(0.0, 10)
    assert again.zeros == first.zeros
    assert reloaded.get_stats()["hits"] == 1
    assert reloaded.get_stats()["misses"] == 0


def test_zero_store_grows_without_recomputing(tmp_path):
    store = ZeroStore(tmp_path)
    short = store.get(1.0, 4)
    longer = store.get(1.0, 6)
    assert longer.zeros[:4] == short.zeros[:4]
    assert len(longer) >= 8
    assert store.get_stats()["misses"] == 2


def test_zero_store_ignores_corrupt_files(tmp_path):
    store = ZeroStore(tmp_path)
    store._table_path(0.0).write_text("not a table\n")
    assert store.get(0.0, 3).zeros[0] == pytest.approx(2.404825557695773, rel=1e-14)


def test_zero_store_clear(tmp_path):
    store = ZeroStore(tmp_path)
    store.get(0.0, 3)
    store.get(0.5, 3)
    store.clear(0.0)
    assert [p.name for p in tmp_path.glob("*.txt")] == [store._table_path(0.5).name]
    store.clear()
    assert not list(tmp_path.glob("*.txt"))
    assert store.get_stats()["tables"] == {}


def test_memory_only_store(monkeypatch):
    monkeypatch.setattr("config.ZERO_CACHE_DIR", None)
    store = ZeroStore()
    assert store.get(0.0, 3).zeros[0] == pytest.approx(2.404825557695773, rel=1e-14)
    assert store._load(0.0) is None
    assert store.get_stats()["cache_dir"] is None
