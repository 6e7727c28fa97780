#!/usr/bin/env python3
"""Run the full analysis pipeline at desk scale and print the headline numbers.

Covers: retention calibration and refresh intervals, data-dependent
energy endpoints, system-level energy on the Eyeriss- and TPUv1-class
presets with a ResNet-50-like topology, area, ops-per-watt, the
fault-injection sweep, and the tiny INT8 classifier under injection.

Usage: python scripts/reproduce_results.py [--seed N]
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from mcaimem import classifier, codec, dataflow, energy, fault, mixed_array, retention

ROOT = Path(__file__).resolve().parents[1]


def section(title: str) -> None:
    print(f"\n=== {title} ===")


def retention_summary(cal: retention.RetentionCalibration) -> None:
    section("retention calibration")
    print(f"sigma = {cal.sigma:.6f}  beta = {cal.beta:.6f}  A = {cal.a_us:.6f} us")
    for anchor in cal.anchors:
        p = cal.flip_probability(anchor.t_us, anchor.v_ref)
        print(
            f"anchor t={anchor.t_us:7.3f} us v_ref={anchor.v_ref:.2f}: "
            f"target p={anchor.p:.4f}  model p={p:.6f}"
        )
    section("refresh interval vs v_ref")
    base = cal.refresh_interval_us(0.5, 0.01)
    print("v_ref  interval_us  vs_v0.5")
    for v_ref in (0.5, 0.6, 0.7, 0.8):
        t = cal.refresh_interval_us(v_ref, 0.01)
        print(f"{v_ref:.1f}    {t:9.3f}   {t / base:6.3f}x")


def refresh_energy_summary(cal: retention.RetentionCalibration) -> None:
    section("refresh energy, 1 MB array, 1 ms, half-zero data")
    print("v_ref  events      energy_uJ")
    for v_ref in (0.5, 0.6, 0.7, 0.8):
        cfg = mixed_array.ArrayConfig(v_ref=v_ref)
        joules, count = energy.refresh_energy(cfg, cal, 1e-3, 0.5)
        print(f"{v_ref:.1f}    {count:9d}  {joules * 1e6:9.3f}")


def endpoint_summary() -> None:
    section("per-technology endpoints (1 MB, zero fraction 0 and 1)")
    params = energy.EnergyParams()
    print("tech      static_mW[1s..0s]      read_pJ[1s..0s]        write_pJ[1s..0s]")
    for tech in (energy.Tech.SRAM, energy.Tech.EDRAM, energy.Tech.MCAIMEM):
        s0 = energy.static_power_mw(tech, 0.0, 1.0, params)
        s1 = energy.static_power_mw(tech, 1.0, 1.0, params)
        r0 = energy.access_energy_pj(tech, "read", 0.0, params)
        r1 = energy.access_energy_pj(tech, "read", 1.0, params)
        w0 = energy.access_energy_pj(tech, "write", 0.0, params)
        w1 = energy.access_energy_pj(tech, "write", 1.0, params)
        print(f"{tech.value:9s} {s0:8.4f} .. {s1:7.4f}   {r0:8.5f} .. {r1:7.4f}   {w0:8.5f} .. {w1:7.4f}")


def system_summary(seed: int) -> None:
    layers = dataflow.builtin_topology("resnet50_like")
    stats = dataflow.default_operand_stats(seed=seed)
    print(f"\noperand zero fractions (raw/encoded):")
    for name, prof in (("ifmap", stats.ifmap), ("filter", stats.filter), ("ofmap", stats.ofmap)):
        print(f"  {name:6s} raw={prof.raw_zero_fraction:.4f} encoded={prof.encoded_zero_fraction:.4f}")
    for preset_name in ("eyeriss", "tpuv1"):
        accel = dataflow.preset(preset_name)
        net = dataflow.run_network(layers, accel, stats)
        system = energy.SystemConfig(accel=accel, v_ref=0.8)
        section(f"{preset_name}: ResNet-50-like, {net.totals.cycles} cycles, {net.duration_s * 1e3:.2f} ms")
        print("tech      static_J     access_J     refresh_J    total_J      vs_sram")
        totals = {}
        for tech in (energy.Tech.SRAM, energy.Tech.EDRAM, energy.Tech.MCAIMEM):
            rep = energy.total_energy(net.totals, tech, system)
            totals[tech] = rep
            access = rep.read_energy_j + rep.write_energy_j
            ratio = totals[energy.Tech.SRAM].total_j / rep.total_j
            print(
                f"{tech.value:9s} {rep.static_energy_j:.4e}  {access:.4e}  "
                f"{rep.refresh_energy_j:.4e}  {rep.total_j:.4e}  {ratio:6.3f}x"
            )
        ratio = totals[energy.Tech.MCAIMEM].total_j / totals[energy.Tech.SRAM].total_j
        gain = energy.ops_per_watt_gain(accel.buffer_power_share, ratio)
        print(f"buffer share {accel.buffer_power_share:.3f}, measured energy ratio {ratio:.4f}"
              f" -> ops/W gain {gain * 100:.2f}%")
    section("area (1 MB equivalent)")
    cap = energy.MB_BYTES
    sram_area = energy.area_units(energy.Tech.SRAM, cap)
    for tech in (energy.Tech.SRAM, energy.Tech.EDRAM, energy.Tech.MCAIMEM):
        a = energy.area_units(tech, cap)
        print(f"{tech.value:9s} {a:12.0f} units  ({a / sram_area:.2f}x SRAM)")
    print(f"stretched eDRAM cell vs SRAM cell: {energy.stretched_cell_ratio():.4f}")


def fault_summary(seed: int) -> None:
    section("fault-injection sweep (zero-heavy activations, 64 KiB)")
    tensor = dataflow.synthetic_zero_heavy("activations", 65536, seed=seed)
    points = fault.sweep(tensor, [0.01, 0.05, 0.10, 0.25], seed=seed)
    print("rate   mode             MRE        MAE        max  flips")
    for pt in points:
        r = pt.report
        print(
            f"{pt.rate:.2f}   {pt.mode:16s} {r.mean_relative_error:9.5f}  "
            f"{r.mean_absolute_error:9.4f}  {r.max_absolute_error:4d}  {r.flip_count}"
        )

    fixture = ROOT / "tests" / "fixtures" / "tiny_classifier"
    if not (fixture / "model.json").exists():
        print("(tiny classifier fixture not built; run scripts/make_classifier_fixture.py)")
        return
    section("tiny INT8 classifier under injection")
    model = classifier.load_model(fixture / "model.json")
    inputs, labels = classifier.load_dataset(fixture / "dataset.bin")
    clean = classifier.accuracy(model, inputs, labels)
    print(f"clean accuracy: {clean:.4f}")
    print("rate   with-encoder  without-encoder")
    for rate in (0.01, 0.05, 0.10, 0.25):
        acc_with = classifier.accuracy(
            model, inputs, labels,
            fault.InjectionConfig(rate=rate, encoder_enabled=True, seed=seed),
        )
        acc_without = classifier.accuracy(
            model, inputs, labels,
            fault.InjectionConfig(rate=rate, encoder_enabled=False, seed=seed),
        )
        print(f"{rate:.2f}   {acc_with:12.4f}  {acc_without:15.4f}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    np.set_printoptions(precision=5)

    cal = retention.default_calibration()
    retention_summary(cal)
    refresh_energy_summary(cal)
    endpoint_summary()
    system_summary(args.seed)
    fault_summary(args.seed)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
