"""Tests for the bit-flip fault-injection harness."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from mcaimem import codec, fault
from mcaimem.fault import (
    MAX_RATE,
    MODE_WITH_ENCODER,
    MODE_WITHOUT_ENCODER,
    MODES,
    InjectionConfig,
    SweepPoint,
    distortion,
    inject,
    sweep,
    sweep_to_csv,
)

int8_arrays = hnp.arrays(
    dtype=np.int8,
    shape=hnp.array_shapes(min_dims=1, max_dims=2, max_side=32),
    elements=st.integers(min_value=-128, max_value=127),
)


def uniform_int8(n: int, lo: int, hi: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).integers(lo, hi + 1, size=n, dtype=np.int8)


# -- configuration -----------------------------------------------------------------


def test_config_requires_exactly_one_scenario():
    with pytest.raises(ValueError):
        InjectionConfig()
    with pytest.raises(ValueError):
        InjectionConfig(rate=0.01, dwell_us=5.0)
    with pytest.raises(ValueError):
        InjectionConfig(rate=0.3)
    with pytest.raises(ValueError):
        InjectionConfig(rate=-0.01)
    with pytest.raises(ValueError):
        InjectionConfig(dwell_us=-1.0)
    InjectionConfig(rate=MAX_RATE)
    InjectionConfig(dwell_us=0.0)


def test_inject_requires_int8():
    with pytest.raises(ValueError):
        inject(np.zeros(4, dtype=np.float32), InjectionConfig(rate=0.01))
    with pytest.raises(ValueError):
        inject(np.zeros(4, dtype=np.uint8), InjectionConfig(rate=0.01))


# -- basic behavior ------------------------------------------------------------------


@given(int8_arrays, st.booleans())
def test_rate_zero_is_identity(values, encoder):
    cfg = InjectionConfig(rate=0.0, encoder_enabled=encoder)
    np.testing.assert_array_equal(inject(values, cfg), values)


def test_shape_and_dtype_preserved():
    values = uniform_int8(60, -8, 7).reshape(3, 20)
    out = inject(values, InjectionConfig(rate=0.25))
    assert out.shape == values.shape
    assert out.dtype == np.int8


def test_encoder_makes_zero_storage_immune():
    # encode(0) = 0x7f: no payload zeros exist, so nothing can flip
    zeros = np.zeros(4096, dtype=np.int8)
    out = inject(zeros, InjectionConfig(rate=MAX_RATE, encoder_enabled=True))
    np.testing.assert_array_equal(out, zeros)


def test_raw_zero_storage_is_fully_exposed():
    zeros = np.zeros(4096, dtype=np.int8)
    out = inject(zeros, InjectionConfig(rate=MAX_RATE, encoder_enabled=False, seed=3))
    assert np.any(out != 0)
    assert np.all(out >= 0)  # sign bit is exempt


def test_all_ones_storage_never_changes():
    minus_ones = np.full(512, -1, dtype=np.int8)  # 0xff in both stored forms
    for encoder in (True, False):
        out = inject(minus_ones, InjectionConfig(rate=MAX_RATE, encoder_enabled=encoder))
        np.testing.assert_array_equal(out, minus_ones)


def test_determinism_and_seed_sensitivity():
    values = uniform_int8(2048, -8, 7)
    cfg = InjectionConfig(rate=0.25, encoder_enabled=False, seed=5)
    np.testing.assert_array_equal(inject(values, cfg), inject(values, cfg))
    other = inject(values, InjectionConfig(rate=0.25, encoder_enabled=False, seed=6))
    assert np.any(other != inject(values, cfg))


# -- flip direction invariants ----------------------------------------------------------


@given(int8_arrays, st.sampled_from([0.01, 0.1, 0.25]), st.integers(0, 3))
def test_stored_bits_only_gain_ones_with_encoder(values, rate, seed):
    out = inject(values, InjectionConfig(rate=rate, encoder_enabled=True, seed=seed))
    before = codec.encode_tensor(values)
    after = codec.encode_tensor(out)
    assert not np.any((before & 0x7F) & ~after)
    assert np.array_equal(before & 0x80, after & 0x80)


@given(int8_arrays, st.sampled_from([0.01, 0.1, 0.25]), st.integers(0, 3))
def test_stored_bits_only_gain_ones_without_encoder(values, rate, seed):
    out = inject(values, InjectionConfig(rate=rate, encoder_enabled=False, seed=seed))
    before = values.view(np.uint8)
    after = out.view(np.uint8)
    assert not np.any((before & 0x7F) & ~after)
    assert np.array_equal(before & 0x80, after & 0x80)


def test_encoder_shrinks_magnitudes_raw_inflates_values():
    values = uniform_int8(4096, -100, 100, seed=1)
    with_enc = inject(values, InjectionConfig(rate=0.25, encoder_enabled=True))
    without = inject(values, InjectionConfig(rate=0.25, encoder_enabled=False))
    v32 = values.astype(np.int32)
    # encoded storage decays toward zero; raw storage decays upward
    # (positives inflate, negatives drift toward -1)
    assert np.all(np.abs(with_enc.astype(np.int32)) <= np.abs(v32))
    assert np.all(without.astype(np.int32) >= v32)
    # value sign never changes in either mode
    assert np.all((with_enc < 0) == (values < 0))
    assert np.all((without < 0) == (values < 0))
    # near-zero positives can inflate enormously only in raw form
    zeros = np.zeros(4096, dtype=np.int8)
    raw_hit = inject(zeros, InjectionConfig(rate=0.25, encoder_enabled=False))
    assert int(raw_hit.max()) >= 64


# -- distortion metrics --------------------------------------------------------------------


def test_distortion_single_value():
    report = distortion(
        np.array([0], dtype=np.int8), np.array([64], dtype=np.int8)
    )
    assert report.mean_absolute_error == 64.0
    assert report.mean_relative_error == 64.0  # relative to max(|0|, 1)
    assert report.max_absolute_error == 64
    assert report.flip_count == 1


def test_distortion_identity_is_zero():
    values = uniform_int8(100, -128, 127)
    report = distortion(values, values)
    assert report.mean_relative_error == 0.0
    assert report.mean_absolute_error == 0.0
    assert report.max_absolute_error == 0
    assert report.flip_count == 0


def test_distortion_shape_mismatch():
    with pytest.raises(ValueError):
        distortion(np.zeros(3, dtype=np.int8), np.zeros(4, dtype=np.int8))


def test_flip_count_bounded_by_exposed_zeros():
    values = uniform_int8(4096, -8, 7, seed=2)
    for encoder in (True, False):
        stored = (
            codec.encode_tensor(values) if encoder else values.view(np.uint8)
        )
        exposed = int(np.unpackbits(~stored & np.uint8(0x7F)).sum())
        out = inject(values, InjectionConfig(rate=MAX_RATE, encoder_enabled=encoder))
        assert distortion(values, out).flip_count <= exposed


# -- sweeps -----------------------------------------------------------------------------------


def test_sweep_cardinality_and_order():
    values = uniform_int8(512, -8, 7)
    rates = [0.01, 0.05, 0.1, 0.25]
    points = sweep(values, rates, seed=0)
    assert len(points) == 8
    assert [p.mode for p in points[:4]] == [MODE_WITH_ENCODER] * 4
    assert [p.mode for p in points[4:]] == [MODE_WITHOUT_ENCODER] * 4
    assert [p.rate for p in points[:4]] == rates


def test_sweep_monotone_in_rate():
    # common random numbers: a higher rate only ever adds flips
    values = uniform_int8(8192, -128, 127, seed=7)
    points = sweep(values, [0.01, 0.05, 0.1, 0.25], seed=1)
    for mode in MODES:
        series = [p for p in points if p.mode == mode]
        mre = [p.report.mean_relative_error for p in series]
        flips = [p.report.flip_count for p in series]
        assert all(b >= a for a, b in zip(mre, mre[1:]))
        assert all(b >= a for a, b in zip(flips, flips[1:]))


def test_sweep_encoder_dominates_on_zero_heavy_data():
    rng = np.random.default_rng(3)
    values = np.where(
        rng.random(16384) < 0.7, 0, rng.integers(-8, 8, size=16384)
    ).astype(np.int8)
    points = sweep(values, [0.01, 0.05, 0.1, 0.25], seed=0)
    by_rate = {}
    for p in points:
        by_rate.setdefault(p.rate, {})[p.mode] = p.report
    for rate, reports in by_rate.items():
        assert (
            reports[MODE_WITH_ENCODER].mean_relative_error
            <= reports[MODE_WITHOUT_ENCODER].mean_relative_error
        )


def test_mae_separation_at_one_percent():
    values = uniform_int8(65536, -8, 7, seed=11)
    points = sweep(values, [0.01], seed=2)
    with_enc = next(p for p in points if p.mode == MODE_WITH_ENCODER)
    without = next(p for p in points if p.mode == MODE_WITHOUT_ENCODER)
    assert (
        without.report.mean_absolute_error
        >= 5.0 * with_enc.report.mean_absolute_error
    )


def test_encoder_bounds_worst_case_near_zero():
    # [-8, 7] keeps stored zeros only in payload bits 0..2, so a flip
    # can move a value by at most 1+2+4 = 7
    values = uniform_int8(65536, -8, 7, seed=4)
    out = inject(values, InjectionConfig(rate=MAX_RATE, encoder_enabled=True))
    report = distortion(values, out)
    assert report.max_absolute_error <= 7
    assert report.mean_relative_error <= 1.75


def test_sweep_validation():
    values = uniform_int8(16, -8, 7)
    with pytest.raises(ValueError):
        sweep(values, [0.3])
    with pytest.raises(ValueError):
        sweep(values, [0.01], modes=("sideways",))


def test_sweep_to_csv():
    values = uniform_int8(256, -8, 7)
    points = sweep(values, [0.01, 0.25], seed=0)
    text = sweep_to_csv(points)
    lines = text.strip().splitlines()
    assert lines[0] == "rate,mode,mre,mae,max_abs,flips"
    assert len(lines) == 1 + len(points)
    first = lines[1].split(",")
    assert float(first[0]) == 0.01
    assert first[1] in MODES


# -- dwell scenarios ----------------------------------------------------------------------------


def test_dwell_zero_is_identity():
    values = uniform_int8(512, -128, 127)
    out = inject(values, InjectionConfig(dwell_us=0.0, encoder_enabled=False))
    np.testing.assert_array_equal(out, values)


def test_dwell_with_encoder_protects_zeros_forever():
    zeros = np.zeros(1024, dtype=np.int8)
    out = inject(zeros, InjectionConfig(dwell_us=50.0, encoder_enabled=True))
    np.testing.assert_array_equal(out, zeros)


def test_dwell_matches_retention_model(cal):
    # raw zeros expose 7 payload bits per byte; at 13 us and v_ref 0.8
    # a quarter of them should have crossed
    zeros = np.zeros(2048, dtype=np.int8)
    cfg = InjectionConfig(dwell_us=13.0, v_ref=0.8, encoder_enabled=False, seed=9)
    out = inject(zeros, cfg)
    flips = distortion(zeros, out).flip_count
    n = zeros.size * 7
    p = cal.flip_probability(13.0, 0.8)
    assert abs(flips / n - p) <= 3.0 * math.sqrt(p * (1 - p) / n)


def test_dwell_deterministic():
    values = uniform_int8(256, -8, 7)
    cfg = InjectionConfig(dwell_us=13.0, encoder_enabled=False, seed=1)
    np.testing.assert_array_equal(inject(values, cfg), inject(values, cfg))


def test_sweep_point_is_plain_record():
    point = SweepPoint(rate=0.01, mode=MODE_WITH_ENCODER, report=distortion(
        np.zeros(1, dtype=np.int8), np.zeros(1, dtype=np.int8)
    ))
    assert point.rate == 0.01
    assert point.report.flip_count == 0


def test_modes_tuple():
    assert MODES == ("with-encoder", "without-encoder")
    assert fault.MAX_RATE == 0.25
