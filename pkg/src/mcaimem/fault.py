"""Asymmetric 0-to-1 fault injection and distortion metrics.

The decay mechanism only ever turns stored zeros into ones, and only in
the seven payload bits (the sign bit lives in SRAM and is exempt).  The
harness perturbs INT8 tensors the same way, either at a fixed per-bit
flip rate or by routing the tensor through a real mixed-cell array for
a dwell time, and reports how much the values moved.

Two modes bracket the codec's value:  with the encoder, tensors are
encoded before injection and decoded after, so flips land on the zero
bits of the 1-dominant stored pattern; without it, flips land on the
raw payload bits directly, which for near-zero data means high place
values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import codec
from .codec import EncodedByte
from .mixed_array import ArrayConfig, MixedCellArray
from .retention import RetentionCalibration, default_calibration

MODE_WITH_ENCODER = "with-encoder"
MODE_WITHOUT_ENCODER = "without-encoder"
MODES = (MODE_WITH_ENCODER, MODE_WITHOUT_ENCODER)

MAX_RATE = 0.25

_BITS7 = np.arange(7)
_PLACES7 = (1 << _BITS7).astype(np.uint8)


@dataclass(frozen=True)
class InjectionConfig:
    """Fault scenario: a fixed flip rate or a dwell in a real array.

    Exactly one of ``rate`` (per-zero-bit flip probability, at most
    0.25) and ``dwell_us`` (hold time in a decaying array at ``v_ref``
    with refresh off) must be set.
    """

    rate: float | None = None
    dwell_us: float | None = None
    v_ref: float = 0.8
    encoder_enabled: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if (self.rate is None) == (self.dwell_us is None):
            raise ValueError("set exactly one of rate and dwell_us")
        if self.rate is not None and not 0.0 <= self.rate <= MAX_RATE:
            raise ValueError(f"rate must lie in [0, {MAX_RATE}], got {self.rate}")
        if self.dwell_us is not None and self.dwell_us < 0:
            raise ValueError(f"dwell_us must be nonnegative, got {self.dwell_us}")


@dataclass(frozen=True)
class DistortionReport:
    """Error metrics between an original tensor and its corrupted copy."""

    mean_relative_error: float
    mean_absolute_error: float
    max_absolute_error: int
    flip_count: int


def _check_int8(tensor) -> np.ndarray:
    arr = np.asarray(tensor)
    if arr.dtype != np.int8:
        raise ValueError(f"expected int8 tensor, got dtype {arr.dtype}")
    if arr.size == 0:
        raise ValueError("tensor must be non-empty")
    return arr


def _stored_form(values: np.ndarray, encoder_enabled: bool) -> np.ndarray:
    if encoder_enabled:
        return codec.encode_tensor(values)
    return values.view(np.uint8).copy()


def _value_form(stored: np.ndarray, encoder_enabled: bool) -> np.ndarray:
    if encoder_enabled:
        return codec.decode_tensor(stored)
    return stored.view(np.int8)


def _apply_rate_flips(stored_flat: np.ndarray, uniforms: np.ndarray, rate: float) -> np.ndarray:
    """Flip payload zero bits where the shared uniform draw is below rate.

    Reusing one uniform array across rates makes flip sets nested in
    rate, so distortion is monotone along a sweep.
    """
    zero_bits = ((stored_flat[:, None] >> _BITS7) & 1) == 0
    flips = zero_bits & (uniforms < rate)
    masks = (flips * _PLACES7).sum(axis=1).astype(np.uint8)
    return stored_flat | masks


def _dwell_through_array(
    stored_flat: np.ndarray,
    dwell_us: float,
    v_ref: float,
    seed: int,
    cal: RetentionCalibration,
) -> np.ndarray:
    """Write patterns into a real array, wait, and read them back."""
    bytes_per_row = 64
    rows = max(1, math.ceil(stored_flat.size / bytes_per_row))
    config = ArrayConfig(
        banks=1,
        rows_per_bank=rows,
        bytes_per_row=bytes_per_row,
        v_ref=v_ref,
        refresh_enabled=False,
    )
    array = MixedCellArray(config=config, cal=cal, seed=seed)
    for i, byte in enumerate(stored_flat):
        array.write((0, i // bytes_per_row, i % bytes_per_row), EncodedByte.from_byte(int(byte)), 0)
    t_ns = int(round(dwell_us * 1e3))
    out = np.empty_like(stored_flat)
    for row in range(rows):
        sensed = array.read_row(0, row, t_ns)
        start = row * bytes_per_row
        out[start : start + bytes_per_row] = sensed[: stored_flat.size - start]
    return out


def inject(tensor, cfg: InjectionConfig, cal: RetentionCalibration | None = None) -> np.ndarray:
    """Return a corrupted copy of an int8 tensor under the scenario.

    Only 0-to-1 flips in the stored payload are ever applied; the sign
    bit is exempt in both modes.  Deterministic for a given seed.
    """
    values = _check_int8(tensor)
    stored = _stored_form(values, cfg.encoder_enabled).reshape(-1)
    if cfg.rate is not None:
        rng = np.random.default_rng(cfg.seed)
        uniforms = rng.random((stored.size, 7))
        corrupted = _apply_rate_flips(stored, uniforms, cfg.rate)
    else:
        corrupted = _dwell_through_array(
            stored, cfg.dwell_us, cfg.v_ref, cfg.seed, cal or default_calibration()
        )
    return _value_form(corrupted, cfg.encoder_enabled).reshape(values.shape).copy()


def distortion(original, corrupted) -> DistortionReport:
    """Distortion metrics; relative error is |delta| / max(|original|, 1)."""
    orig = _check_int8(original)
    corr = _check_int8(corrupted)
    if orig.shape != corr.shape:
        raise ValueError(f"shape mismatch: {orig.shape} vs {corr.shape}")
    delta = np.abs(orig.astype(np.int32) - corr.astype(np.int32))
    denom = np.maximum(np.abs(orig.astype(np.int32)), 1)
    xor = orig.view(np.uint8) ^ corr.view(np.uint8)
    flips = int(np.unpackbits(xor.reshape(-1)).sum())
    return DistortionReport(
        mean_relative_error=float(np.mean(delta / denom)),
        mean_absolute_error=float(np.mean(delta)),
        max_absolute_error=int(delta.max()),
        flip_count=flips,
    )


@dataclass(frozen=True)
class SweepPoint:
    rate: float
    mode: str
    report: DistortionReport


def sweep(tensor, rates, modes=MODES, seed: int = 0) -> list[SweepPoint]:
    """Distortion at each (rate, mode) pair with common random numbers.

    One uniform draw per mode is shared across all rates, so increasing
    the rate only ever adds flips.
    """
    values = _check_int8(tensor)
    rates = [float(r) for r in rates]
    for r in rates:
        if not 0.0 <= r <= MAX_RATE:
            raise ValueError(f"rate must lie in [0, {MAX_RATE}], got {r}")
    for mode in modes:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; choices: {MODES}")
    seeds = np.random.SeedSequence(seed).spawn(len(modes))
    points: list[SweepPoint] = []
    for mode, mode_seed in zip(modes, seeds):
        encoder_enabled = mode == MODE_WITH_ENCODER
        stored = _stored_form(values, encoder_enabled).reshape(-1)
        uniforms = np.random.default_rng(mode_seed).random((stored.size, 7))
        for rate in rates:
            corrupted_stored = _apply_rate_flips(stored, uniforms, rate)
            corrupted = _value_form(corrupted_stored, encoder_enabled).reshape(values.shape)
            points.append(SweepPoint(rate=rate, mode=mode, report=distortion(values, corrupted)))
    return points


SWEEP_HEADER = "rate,mode,mre,mae,max_abs,flips"


def sweep_to_csv(points) -> str:
    """Serialize sweep results as ``rate,mode,mre,mae,max_abs,flips``."""
    lines = [SWEEP_HEADER]
    for pt in points:
        rep = pt.report
        lines.append(
            f"{pt.rate!r},{pt.mode},{rep.mean_relative_error!r},"
            f"{rep.mean_absolute_error!r},{rep.max_absolute_error},{rep.flip_count}"
        )
    return "\n".join(lines) + "\n"
