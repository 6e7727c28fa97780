"""Tests for the data-dependent energy and area model."""

import pytest

from mcaimem.dataflow import AccelConfig, OperandProfile, OperandStats, TraceStats
from mcaimem.energy import (
    EnergyParams,
    EnergyReport,
    SystemConfig,
    Tech,
    TechEnergy,
    access_energy_pj,
    area_units,
    ops_per_watt_gain,
    refresh_energy,
    static_power_mw,
    stretched_cell_ratio,
    total_energy,
)
from mcaimem.mixed_array import ArrayConfig

MB_ACCEL = AccelConfig(array_rows=4, array_cols=4, buffer_capacity_bytes=1 << 20)


def lerp(lo, hi, f):
    return lo * (1.0 - f) + hi * f


# -- per-technology endpoint table ----------------------------------------------


def test_static_power_endpoints_per_mb():
    # zero_fraction 1.0 is all-zeros data (max), 0.0 all-ones (min)
    assert static_power_mw(Tech.SRAM, 0.0, 1.0) == 19.29
    assert static_power_mw(Tech.SRAM, 1.0, 1.0) == 19.29
    assert static_power_mw(Tech.EDRAM, 0.0, 1.0) == 0.84
    assert static_power_mw(Tech.EDRAM, 1.0, 1.0) == 5.03
    assert static_power_mw(Tech.MCAIMEM, 0.0, 1.0) == 3.15
    assert static_power_mw(Tech.MCAIMEM, 1.0, 1.0) == 6.82


def test_access_energy_endpoints_pj():
    assert access_energy_pj(Tech.SRAM, "read", 0.0) == 0.08
    assert access_energy_pj(Tech.SRAM, "read", 1.0) == 0.08
    assert access_energy_pj(Tech.SRAM, "write", 0.0) == 0.16
    assert access_energy_pj(Tech.SRAM, "write", 1.0) == 0.16
    assert access_energy_pj(Tech.EDRAM, "read", 0.0) == 0.00016
    assert access_energy_pj(Tech.EDRAM, "read", 1.0) == 0.14
    assert access_energy_pj(Tech.EDRAM, "write", 0.0) == 0.00016
    assert access_energy_pj(Tech.EDRAM, "write", 1.0) == 0.0184
    assert access_energy_pj(Tech.MCAIMEM, "read", 0.0) == 0.01014
    assert access_energy_pj(Tech.MCAIMEM, "read", 1.0) == 0.1325
    assert access_energy_pj(Tech.MCAIMEM, "write", 0.0) == 0.02014
    assert access_energy_pj(Tech.MCAIMEM, "write", 1.0) == 0.0361


def test_sram_is_data_independent():
    for zf in (0.0, 0.25, 0.5, 1.0):
        assert static_power_mw(Tech.SRAM, zf, 2.0) == 2 * 19.29
        assert access_energy_pj(Tech.SRAM, "read", zf) == 0.08


def test_interpolation_is_two_sided():
    assert access_energy_pj(Tech.MCAIMEM, "read", 0.5) == (0.01014 + 0.1325) / 2
    assert static_power_mw(Tech.EDRAM, 0.25, 1.0) == lerp(0.84, 5.03, 0.25)


def test_access_energy_monotone_in_zero_fraction():
    for tech in (Tech.EDRAM, Tech.MCAIMEM):
        for op in ("read", "write"):
            grid = [access_energy_pj(tech, op, z / 10) for z in range(11)]
            assert all(b >= a for a, b in zip(grid, grid[1:]))


def test_domain_errors():
    with pytest.raises(ValueError):
        static_power_mw(Tech.SRAM, -0.1, 1.0)
    with pytest.raises(ValueError):
        static_power_mw(Tech.SRAM, 1.1, 1.0)
    with pytest.raises(ValueError):
        static_power_mw(Tech.SRAM, float("nan"), 1.0)
    with pytest.raises(ValueError):
        static_power_mw(Tech.SRAM, 0.5, -1.0)
    with pytest.raises(ValueError):
        access_energy_pj(Tech.SRAM, "erase", 0.5)
    with pytest.raises(ValueError):
        Tech("flash")


def test_tech_energy_validation():
    with pytest.raises(ValueError):
        TechEnergy(2.0, 1.0, 0.1, 0.1, 0.1, 0.1)
    with pytest.raises(ValueError):
        TechEnergy(-1.0, 1.0, 0.1, 0.1, 0.1, 0.1)


def test_rram_requires_configured_costs():
    with pytest.raises(ValueError):
        EnergyParams().for_tech(Tech.RRAM)
    params = EnergyParams(rram_read_pj=5.0, rram_write_pj=50.0)
    assert access_energy_pj(Tech.RRAM, "read", 0.7, params) == 5.0
    assert access_energy_pj(Tech.RRAM, "write", 0.0, params) == 50.0
    assert static_power_mw(Tech.RRAM, 0.5, 4.0, params) == 0.0


# -- refresh ---------------------------------------------------------------------


def test_refresh_energy_reference_scenario(cal):
    # 1 MB, 1 ms, all-ones data: 1,303,360 row events at 64 B x 0.01014 pJ
    joules, count = refresh_energy(ArrayConfig(), cal, 1e-3, 0.0)
    assert count == 1_303_360
    assert joules == pytest.approx(1_303_360 * 64 * 0.01014e-12, rel=1e-12)
    assert joules == pytest.approx(8.458285056e-07, rel=1e-12)


def test_refresh_energy_scales_with_v_ref(cal):
    counts = {}
    joules = {}
    for v_ref in (0.5, 0.6, 0.7, 0.8):
        j, c = refresh_energy(ArrayConfig(v_ref=v_ref), cal, 1e-3, 0.0)
        counts[v_ref], joules[v_ref] = c, j
    assert counts[0.5] == 12_603_072  # 64 * floor(256e6 / 1300)
    # raising the sense threshold cuts refresh work monotonically
    ordered = [joules[v] for v in (0.5, 0.6, 0.7, 0.8)]
    assert all(b < a for a, b in zip(ordered, ordered[1:]))
    assert counts[0.5] / counts[0.8] == pytest.approx(12.57 / 1.3, rel=1e-3)


def test_refresh_energy_edges(cal):
    assert refresh_energy(ArrayConfig(), cal, 0.0, 0.0) == (0.0, 0)
    with pytest.raises(ValueError):
        refresh_energy(ArrayConfig(), cal, -1.0, 0.0)
    with pytest.raises(ValueError):
        refresh_energy(ArrayConfig(), cal, 1e-3, 0.0, tech=Tech.SRAM)
    # zero-heavy rows cost more per refresh read
    hi, _ = refresh_energy(ArrayConfig(), cal, 1e-3, 0.9)
    lo, _ = refresh_energy(ArrayConfig(), cal, 1e-3, 0.1)
    assert hi > lo


# -- area ------------------------------------------------------------------------


def test_area_units():
    assert area_units(Tech.SRAM, 1) == 8.0
    assert area_units("sram", 16 * 1024) == 131072.0
    assert area_units(Tech.EDRAM, 1 << 20) == pytest.approx(0.48 * 8 * (1 << 20))
    ratio = area_units(Tech.MCAIMEM, 1 << 20) / area_units(Tech.SRAM, 1 << 20)
    assert ratio == pytest.approx(0.52, abs=1e-12)
    assert abs(ratio - 0.52) <= 0.005


def test_area_errors():
    with pytest.raises(ValueError):
        area_units(Tech.RRAM, 1024)  # no ratio configured by default
    with pytest.raises(ValueError):
        area_units(Tech.SRAM, -1)


def test_stretched_cell_ratio():
    # 1 SRAM cell + 7 stretched cells fit in 0.52 of an 8-cell SRAM byte
    assert stretched_cell_ratio() == pytest.approx((0.52 * 8 - 1) / 7, rel=1e-12)
    assert stretched_cell_ratio() == pytest.approx(0.45142857142857146, rel=1e-12)


# -- ops-per-watt ------------------------------------------------------------------


def test_ops_per_watt_gain_reference_points():
    assert ops_per_watt_gain(0.425, 1 / 3.4) == pytest.approx(3.0 / 7.0, rel=1e-12)
    assert ops_per_watt_gain(0.37, 1 / 3.4) == pytest.approx(0.35350318471337583, rel=1e-12)


def test_ops_per_watt_gain_edges():
    assert ops_per_watt_gain(0.0, 0.5) == 0.0
    assert ops_per_watt_gain(0.5, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert ops_per_watt_gain(1.0, 0.5) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        ops_per_watt_gain(1.2, 0.5)
    with pytest.raises(ValueError):
        ops_per_watt_gain(0.5, 0.0)
    with pytest.raises(ValueError):
        ops_per_watt_gain(0.5, -0.2)


# -- report arithmetic ---------------------------------------------------------------


def test_report_total_and_addition():
    a = EnergyReport(1e-6, 2e-6, 3e-6, 4e-6, duration_s=1.0, refresh_count=10, zero_fraction=0.2)
    b = EnergyReport(1e-6, 1e-6, 1e-6, 1e-6, duration_s=3.0, refresh_count=5, zero_fraction=0.6)
    assert a.total_j == pytest.approx(1e-5, rel=1e-12)
    total = a + b
    assert total.duration_s == 4.0
    assert total.refresh_count == 15
    assert total.total_j == pytest.approx(a.total_j + b.total_j, rel=1e-12)
    assert total.zero_fraction == pytest.approx((0.2 * 1 + 0.6 * 3) / 4, rel=1e-12)


def test_report_addition_zero_duration():
    a = EnergyReport(0, 0, 0, 0, duration_s=0.0, refresh_count=0, zero_fraction=0.3)
    b = EnergyReport(0, 0, 0, 0, duration_s=0.0, refresh_count=0, zero_fraction=0.9)
    assert (a + b).zero_fraction == 0.3


def test_report_to_dict_keys():
    report = EnergyReport(1.0, 2.0, 3.0, 4.0, 1.0, 7, 0.5)
    d = report.to_dict()
    assert d["total_j"] == 10.0
    assert set(d) == {
        "static_energy_j",
        "read_energy_j",
        "write_energy_j",
        "refresh_energy_j",
        "total_j",
        "duration_s",
        "refresh_count",
        "zero_fraction",
    }


# -- workload pricing -----------------------------------------------------------------


PROFILES = OperandStats(
    ifmap=OperandProfile(raw_zero_fraction=0.9, encoded_zero_fraction=0.2),
    filter=OperandProfile(raw_zero_fraction=0.8, encoded_zero_fraction=0.15),
    ofmap=OperandProfile(raw_zero_fraction=0.7, encoded_zero_fraction=0.18),
)
WORKLOAD = TraceStats(
    cycles=100_000,  # 1 ms at 100 MHz
    ifmap_read_bytes=1000,
    filter_read_bytes=500,
    ofmap_write_bytes=250,
    operand_stats=PROFILES,
)


def test_total_energy_sram_hand_check():
    system = SystemConfig(accel=MB_ACCEL)
    report = total_energy(WORKLOAD, Tech.SRAM, system)
    assert report.duration_s == pytest.approx(1e-3, rel=1e-12)
    assert report.static_energy_j == pytest.approx(19.29e-3 * 1e-3, rel=1e-12)
    assert report.read_energy_j == pytest.approx(1500 * 0.08e-12, rel=1e-12)
    assert report.write_energy_j == pytest.approx(250 * 0.16e-12, rel=1e-12)
    assert report.refresh_energy_j == 0.0
    assert report.refresh_count == 0


def test_total_energy_edram_uses_raw_fractions():
    system = SystemConfig(accel=MB_ACCEL)
    report = total_energy(WORKLOAD, Tech.EDRAM, system)
    zf_all = (0.9 * 1000 + 0.8 * 500 + 0.7 * 250) / 1750
    expected_read = (
        1000 * lerp(0.00016, 0.14, 0.9) + 500 * lerp(0.00016, 0.14, 0.8)
    ) * 1e-12
    expected_write = 250 * lerp(0.00016, 0.0184, 0.7) * 1e-12
    assert report.zero_fraction == pytest.approx(zf_all, rel=1e-12)
    assert report.static_energy_j == pytest.approx(
        lerp(0.84, 5.03, zf_all) * 1e-3 * 1e-3, rel=1e-12
    )
    assert report.read_energy_j == pytest.approx(expected_read, rel=1e-12)
    assert report.write_energy_j == pytest.approx(expected_write, rel=1e-12)
    # eDRAM baseline refreshes at its own low sense threshold
    _, count = refresh_energy(ArrayConfig(v_ref=0.5), system.cal, 1e-3, zf_all)
    assert report.refresh_count == count


def test_total_energy_mcaimem_uses_encoded_fractions(cal):
    system = SystemConfig(accel=MB_ACCEL)
    report = total_energy(WORKLOAD, Tech.MCAIMEM, system)
    zf_all = (0.2 * 1000 + 0.15 * 500 + 0.18 * 250) / 1750
    expected_read = (
        1000 * lerp(0.01014, 0.1325, 0.2) + 500 * lerp(0.01014, 0.1325, 0.15)
    ) * 1e-12
    expected_refresh = 1_303_360 * 64 * lerp(0.01014, 0.1325, zf_all) * 1e-12
    assert report.zero_fraction == pytest.approx(zf_all, rel=1e-12)
    assert report.read_energy_j == pytest.approx(expected_read, rel=1e-12)
    assert report.write_energy_j == pytest.approx(
        250 * lerp(0.02014, 0.0361, 0.18) * 1e-12, rel=1e-12
    )
    assert report.refresh_count == 1_303_360
    assert report.refresh_energy_j == pytest.approx(expected_refresh, rel=1e-12)


def test_total_energy_accepts_tech_strings():
    system = SystemConfig(accel=MB_ACCEL)
    by_enum = total_energy(WORKLOAD, Tech.MCAIMEM, system)
    by_name = total_energy(WORKLOAD, "mcaimem", system)
    assert by_enum == by_name


def test_refresh_scales_with_buffer_capacity(cal):
    half = AccelConfig(array_rows=4, array_cols=4, buffer_capacity_bytes=1 << 19)
    full_report = total_energy(WORKLOAD, Tech.MCAIMEM, SystemConfig(accel=MB_ACCEL))
    half_report = total_energy(WORKLOAD, Tech.MCAIMEM, SystemConfig(accel=half))
    assert half_report.refresh_energy_j == pytest.approx(
        full_report.refresh_energy_j / 2, rel=1e-12
    )
    assert half_report.refresh_count == round(full_report.refresh_count / 2)
    assert half_report.static_energy_j == pytest.approx(
        full_report.static_energy_j / 2, rel=1e-12
    )


def test_total_energy_additivity():
    a = TraceStats(60_000, 600, 300, 150, operand_stats=PROFILES)
    b = TraceStats(40_000, 400, 200, 100, operand_stats=PROFILES)
    system = SystemConfig(accel=MB_ACCEL)
    for tech in (Tech.SRAM, Tech.EDRAM, Tech.MCAIMEM):
        split = total_energy(a, tech, system) + total_energy(b, tech, system)
        merged = total_energy(a + b, tech, system)
        assert split.static_energy_j == pytest.approx(merged.static_energy_j, rel=1e-9)
        assert split.read_energy_j == pytest.approx(merged.read_energy_j, rel=1e-9)
        assert split.write_energy_j == pytest.approx(merged.write_energy_j, rel=1e-9)
        # refresh counts quantize per segment: merged can fire at most one
        # extra stagger slot per bank
        banks = system.reference_array.banks
        assert 0 <= merged.refresh_count - split.refresh_count <= banks
        assert merged.refresh_energy_j >= split.refresh_energy_j
        if merged.refresh_count:
            per_event = merged.refresh_energy_j / merged.refresh_count
            assert merged.refresh_energy_j - split.refresh_energy_j <= banks * per_event * 1.01


def test_zero_traffic_zero_cycles_is_all_zero():
    empty = TraceStats(0, 0, 0, 0, operand_stats=PROFILES)
    report = total_energy(empty, Tech.MCAIMEM, SystemConfig(accel=MB_ACCEL))
    assert report.total_j == 0.0
    assert report.refresh_count == 0
    assert report.duration_s == 0.0


def test_static_limit_all_ones_data():
    # no traffic, all-ones contents: the comparison collapses to the
    # static floor, 19.29 / 3.15 without refresh and ~4.8 with it
    ones = OperandProfile(raw_zero_fraction=0.0, encoded_zero_fraction=0.0)
    stats = TraceStats(1_000_000, 0, 0, 0, operand_stats=OperandStats(ones, ones, ones))
    quiet = SystemConfig(accel=MB_ACCEL, refresh_enabled=False)
    sram = total_energy(stats, Tech.SRAM, quiet)
    mca = total_energy(stats, Tech.MCAIMEM, quiet)
    assert sram.total_j / mca.total_j == pytest.approx(19.29 / 3.15, rel=1e-12)

    refreshing = SystemConfig(accel=MB_ACCEL)
    mca_refresh = total_energy(stats, Tech.MCAIMEM, refreshing)
    ratio = total_energy(stats, Tech.SRAM, refreshing).total_j / mca_refresh.total_j
    assert mca_refresh.refresh_energy_j > 0
    assert 4.7 <= ratio <= 4.95


def test_rram_write_heavy_direction():
    params = EnergyParams(rram_read_pj=5.0, rram_write_pj=50.0)
    stats = TraceStats(1000, 0, 0, 1_000_000, operand_stats=PROFILES)
    system = SystemConfig(accel=MB_ACCEL, params=params)
    rram = total_energy(stats, Tech.RRAM, system)
    sram = total_energy(stats, Tech.SRAM, system)
    assert rram.static_energy_j == 0.0
    assert rram.refresh_energy_j == 0.0
    assert rram.total_j > sram.total_j


def test_rram_unconfigured_raises():
    with pytest.raises(ValueError):
        total_energy(WORKLOAD, Tech.RRAM, SystemConfig(accel=MB_ACCEL))


def test_no_operand_stats_defaults_to_all_ones_pricing():
    bare = TraceStats(100_000, 1000, 500, 250, operand_stats=None)
    report = total_energy(bare, Tech.MCAIMEM, SystemConfig(accel=MB_ACCEL))
    assert report.zero_fraction == 0.0
    assert report.read_energy_j == pytest.approx(1500 * 0.01014e-12, rel=1e-12)
