"""Data-dependent energy and area accounting for buffer technologies.

Static power (mW per MB) and per-byte access energy (pJ) are linear in
the stored-zero fraction between measured all-ones (min) and all-zeros
(max) endpoints of each technology.  SRAM is data independent.  The
mixed-cell buffer interpolates with the zero fraction of the *encoded*
bit patterns; plain eDRAM uses raw patterns.  RRAM has no static or
refresh component and its per-byte constants must be supplied by the
caller (none are shipped).

Refresh energy charges one row read per (bank, row) refresh event at
the configured refresh cadence.  System-level totals are computed on
the 1 MB reference array and scaled linearly to the evaluated buffer
capacity (108 KB and 8 MB presets scale by 108/1024 and 8).

Area is reported in SRAM-bit-equivalent units: an SRAM byte is 8 units,
the mixed-cell byte is 0.52 * 8 (one SRAM cell plus seven stretched
eDRAM cells), and a plain eDRAM byte is 0.48 * 8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .dataflow import AccelConfig, OperandStats, TraceStats
from .mixed_array import ArrayConfig, refresh_stagger_ns
from .retention import RetentionCalibration, default_calibration

MB_BYTES = 1 << 20


class Tech(str, Enum):
    SRAM = "sram"
    EDRAM = "edram"
    MCAIMEM = "mcaimem"
    RRAM = "rram"


@dataclass(frozen=True)
class TechEnergy:
    """Min/max endpoints: min at all-ones data, max at all-zeros data."""

    static_min_mw_per_mb: float
    static_max_mw_per_mb: float
    read_min_pj: float
    read_max_pj: float
    write_min_pj: float
    write_max_pj: float

    def __post_init__(self) -> None:
        pairs = (
            (self.static_min_mw_per_mb, self.static_max_mw_per_mb),
            (self.read_min_pj, self.read_max_pj),
            (self.write_min_pj, self.write_max_pj),
        )
        for lo, hi in pairs:
            if lo < 0 or hi < lo:
                raise ValueError(f"endpoints must satisfy 0 <= min <= max, got {lo}, {hi}")


# Measured 1 MB buffer characteristics per technology.
SRAM_ENERGY = TechEnergy(19.29, 19.29, 0.08, 0.08, 0.16, 0.16)
EDRAM_ENERGY = TechEnergy(0.84, 5.03, 0.00016, 0.14, 0.00016, 0.0184)
MCAIMEM_ENERGY = TechEnergy(3.15, 6.82, 0.01014, 0.1325, 0.02014, 0.0361)

# Cell-area ratios versus an SRAM byte of the same capacity.
DEFAULT_AREA_RATIOS = {
    Tech.SRAM: 1.0,
    Tech.EDRAM: 0.48,
    Tech.MCAIMEM: 0.52,
}

SRAM_UNITS_PER_BYTE = 8.0


@dataclass(frozen=True)
class EnergyParams:
    """Energy/area constants; RRAM access costs are caller-supplied."""

    sram: TechEnergy = SRAM_ENERGY
    edram: TechEnergy = EDRAM_ENERGY
    mcaimem: TechEnergy = MCAIMEM_ENERGY
    rram_read_pj: float | None = None
    rram_write_pj: float | None = None
    area_ratios: dict = field(default_factory=lambda: dict(DEFAULT_AREA_RATIOS))

    def for_tech(self, tech: Tech) -> TechEnergy:
        if tech == Tech.SRAM:
            return self.sram
        if tech == Tech.EDRAM:
            return self.edram
        if tech == Tech.MCAIMEM:
            return self.mcaimem
        if tech == Tech.RRAM:
            if self.rram_read_pj is None or self.rram_write_pj is None:
                raise ValueError(
                    "RRAM access energies are configuration-supplied; "
                    "set rram_read_pj and rram_write_pj"
                )
            return TechEnergy(0.0, 0.0, self.rram_read_pj, self.rram_read_pj,
                              self.rram_write_pj, self.rram_write_pj)
        raise ValueError(f"unknown tech {tech!r}")


def _lerp(lo: float, hi: float, frac: float) -> float:
    # two-sided form so frac 0 and 1 return the endpoints bit-exactly
    return lo * (1.0 - frac) + hi * frac


def _check_zero_fraction(zero_fraction: float) -> None:
    if not 0.0 <= zero_fraction <= 1.0:
        raise ValueError(f"zero_fraction must lie in [0, 1], got {zero_fraction}")


def static_power_mw(
    tech: Tech, zero_fraction: float, capacity_mb: float, params: EnergyParams | None = None
) -> float:
    """Static power in mW for a buffer of the given capacity and data mix."""
    _check_zero_fraction(zero_fraction)
    if capacity_mb < 0:
        raise ValueError(f"capacity_mb must be nonnegative, got {capacity_mb}")
    params = params or EnergyParams()
    if tech == Tech.RRAM:
        return 0.0
    te = params.for_tech(tech)
    return _lerp(te.static_min_mw_per_mb, te.static_max_mw_per_mb, zero_fraction) * capacity_mb


def access_energy_pj(
    tech: Tech, op: str, zero_fraction: float, params: EnergyParams | None = None
) -> float:
    """Per-byte access energy in pJ for 'read' or 'write'."""
    _check_zero_fraction(zero_fraction)
    params = params or EnergyParams()
    te = params.for_tech(tech)
    if op == "read":
        return _lerp(te.read_min_pj, te.read_max_pj, zero_fraction)
    if op == "write":
        return _lerp(te.write_min_pj, te.write_max_pj, zero_fraction)
    raise ValueError(f"op must be 'read' or 'write', got {op!r}")


def refresh_energy(
    config: ArrayConfig,
    cal: RetentionCalibration,
    duration_s: float,
    zero_fraction: float,
    params: EnergyParams | None = None,
    tech: Tech = Tech.MCAIMEM,
) -> tuple[float, int]:
    """(joules, event count) to refresh the array over a duration.

    The event count follows the staggered round-robin schedule (one row
    per bank every ``T_ref / rows_per_bank``), and each event costs one
    row read at the observed zero fraction.
    """
    if duration_s < 0:
        raise ValueError(f"duration_s must be nonnegative, got {duration_s}")
    if tech not in (Tech.EDRAM, Tech.MCAIMEM):
        raise ValueError(f"refresh applies to edram or mcaimem, not {tech}")
    stagger = refresh_stagger_ns(config, cal)
    count = config.banks * int(math.floor(duration_s * 1e9 / stagger))
    per_event_pj = config.bytes_per_row * access_energy_pj(tech, "read", zero_fraction, params)
    return count * per_event_pj * 1e-12, count


def area_units(
    tech: Tech, capacity_bytes: int, params: EnergyParams | None = None
) -> float:
    """Layout area in SRAM-bit-equivalent units."""
    if capacity_bytes < 0:
        raise ValueError(f"capacity_bytes must be nonnegative, got {capacity_bytes}")
    params = params or EnergyParams()
    try:
        ratio = params.area_ratios[Tech(tech)]
    except KeyError:
        raise ValueError(f"no area ratio configured for tech {tech}") from None
    return capacity_bytes * SRAM_UNITS_PER_BYTE * ratio


def stretched_cell_ratio(params: EnergyParams | None = None) -> float:
    """Area of one stretched eDRAM cell relative to an SRAM cell.

    The mixed byte spends 1 SRAM cell plus 7 stretched eDRAM cells in
    0.52 of an SRAM byte, so each stretched cell is (0.52*8 - 1) / 7.
    """
    params = params or EnergyParams()
    return (params.area_ratios[Tech.MCAIMEM] * 8.0 - 1.0) / 7.0


def ops_per_watt_gain(buffer_power_share: float, buffer_energy_ratio: float) -> float:
    """Fractional ops/W improvement when the buffer's energy is scaled.

    ``buffer_power_share`` is the buffer's share of total accelerator
    power; ``buffer_energy_ratio`` is new buffer energy over old (e.g.
    1/3.4 when the new buffer uses 3.4x less).  Power savings convert
    to throughput per watt as 1 / ((1 - share) + share * ratio) - 1.
    """
    if not 0.0 <= buffer_power_share <= 1.0:
        raise ValueError(f"share must lie in [0, 1], got {buffer_power_share}")
    if buffer_energy_ratio <= 0:
        raise ValueError(f"energy ratio must be positive, got {buffer_energy_ratio}")
    return 1.0 / ((1.0 - buffer_power_share) + buffer_power_share * buffer_energy_ratio) - 1.0


@dataclass(frozen=True)
class EnergyReport:
    """Energy breakdown of one scenario; all energies in joules."""

    static_energy_j: float
    read_energy_j: float
    write_energy_j: float
    refresh_energy_j: float
    duration_s: float
    refresh_count: int
    zero_fraction: float

    @property
    def total_j(self) -> float:
        return (
            self.static_energy_j
            + self.read_energy_j
            + self.write_energy_j
            + self.refresh_energy_j
        )

    def __add__(self, other: "EnergyReport") -> "EnergyReport":
        if not isinstance(other, EnergyReport):
            return NotImplemented
        total_dur = self.duration_s + other.duration_s
        if total_dur > 0:
            zf = (
                self.zero_fraction * self.duration_s
                + other.zero_fraction * other.duration_s
            ) / total_dur
        else:
            zf = self.zero_fraction
        return EnergyReport(
            static_energy_j=self.static_energy_j + other.static_energy_j,
            read_energy_j=self.read_energy_j + other.read_energy_j,
            write_energy_j=self.write_energy_j + other.write_energy_j,
            refresh_energy_j=self.refresh_energy_j + other.refresh_energy_j,
            duration_s=total_dur,
            refresh_count=self.refresh_count + other.refresh_count,
            zero_fraction=zf,
        )

    def to_dict(self) -> dict:
        return {
            "static_energy_j": self.static_energy_j,
            "read_energy_j": self.read_energy_j,
            "write_energy_j": self.write_energy_j,
            "refresh_energy_j": self.refresh_energy_j,
            "total_j": self.total_j,
            "duration_s": self.duration_s,
            "refresh_count": self.refresh_count,
            "zero_fraction": self.zero_fraction,
        }


REFERENCE_ARRAY = ArrayConfig()


@dataclass(frozen=True)
class SystemConfig:
    """Everything needed to price a workload on one buffer technology."""

    accel: AccelConfig
    params: EnergyParams = field(default_factory=EnergyParams)
    cal: RetentionCalibration = field(default_factory=default_calibration)
    v_ref: float = 0.8
    edram_v_ref: float = 0.5
    refresh_target_p: float = 0.01
    refresh_enabled: bool = True
    reference_array: ArrayConfig = REFERENCE_ARRAY


def _weighted_zero_fractions(stats: TraceStats, encoded: bool) -> tuple[float, float, float]:
    """(read zf, write zf, overall zf) weighted by byte traffic."""
    ops = stats.operand_stats
    if ops is None:
        return 0.0, 0.0, 0.0
    zf_if = ops.ifmap.zero_fraction(encoded)
    zf_fl = ops.filter.zero_fraction(encoded)
    zf_of = ops.ofmap.zero_fraction(encoded)
    read_bytes = stats.buffer_reads_bytes
    if read_bytes > 0:
        zf_read = (
            zf_if * stats.ifmap_read_bytes + zf_fl * stats.filter_read_bytes
        ) / read_bytes
    else:
        zf_read = 0.0
    zf_write = zf_of
    total_bytes = read_bytes + stats.buffer_writes_bytes
    if total_bytes > 0:
        zf_all = (
            zf_if * stats.ifmap_read_bytes
            + zf_fl * stats.filter_read_bytes
            + zf_of * stats.ofmap_write_bytes
        ) / total_bytes
    else:
        zf_all = 0.0
    return zf_read, zf_write, zf_all


def total_energy(stats: TraceStats, tech: Tech, system: SystemConfig) -> EnergyReport:
    """Full energy report for a workload's buffer traffic on one tech.

    Static and refresh components accrue over ``cycles / clock_hz``.
    Read energy is charged per operand class at that class's zero
    fraction; encoded fractions apply to the mixed-cell buffer, raw
    fractions to everything else.
    """
    tech = Tech(tech)
    duration_s = stats.cycles / system.accel.clock_hz
    encoded = tech == Tech.MCAIMEM
    zf_read, zf_write, zf_all = _weighted_zero_fractions(stats, encoded)
    ops = stats.operand_stats

    static_j = (
        static_power_mw(tech, zf_all, system.accel.capacity_mb, system.params)
        * 1e-3
        * duration_s
    )

    if ops is None:
        read_j = stats.buffer_reads_bytes * access_energy_pj(tech, "read", 0.0, system.params) * 1e-12
    else:
        read_j = (
            stats.ifmap_read_bytes
            * access_energy_pj(tech, "read", ops.ifmap.zero_fraction(encoded), system.params)
            + stats.filter_read_bytes
            * access_energy_pj(tech, "read", ops.filter.zero_fraction(encoded), system.params)
        ) * 1e-12
    write_j = stats.buffer_writes_bytes * access_energy_pj(tech, "write", zf_write, system.params) * 1e-12

    refresh_j, refresh_count = 0.0, 0
    if system.refresh_enabled and tech in (Tech.EDRAM, Tech.MCAIMEM):
        v = system.v_ref if tech == Tech.MCAIMEM else system.edram_v_ref
        ref_cfg = replace(
            system.reference_array, v_ref=v, refresh_target_p=system.refresh_target_p
        )
        ref_j, ref_count = refresh_energy(
            ref_cfg, system.cal, duration_s, zf_all, system.params, tech
        )
        scale = system.accel.capacity_mb / (ref_cfg.capacity_bytes / MB_BYTES)
        refresh_j = ref_j * scale
        refresh_count = round(ref_count * scale)

    return EnergyReport(
        static_energy_j=static_j,
        read_energy_j=read_j,
        write_energy_j=write_j,
        refresh_energy_j=refresh_j,
        duration_s=duration_s,
        refresh_count=refresh_count,
        zero_fraction=zf_all,
    )
