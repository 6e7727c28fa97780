"""Command line front end.

Subcommands: ``calibrate`` (fit the retention model), ``curves``
(flip-probability curves), ``memsim`` (replay an access trace through
the array), ``energy`` (price a workload across buffer technologies),
``inject`` (distortion sweep on a tensor), ``rerun`` (re-execute a
recorded manifest).

Every run writes its outputs plus a ``manifest.json`` recording the
tool version, command, seed, and fully resolved parameters; re-running
a manifest reproduces the outputs byte for byte.  Durations accept
ns/us/ms/s suffixes and are handled internally as integer nanoseconds.
All files are written atomically (temp file then rename).  Exit codes:
0 success, 2 usage, 3 domain or calibration error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import re
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, codec, dataflow, energy, fault, mixed_array, retention

TOOL_NAME = "mcaimem"
MANIFEST_NAME = "manifest.json"

_DURATION_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*(ns|us|ms|s)?\s*$")
_DURATION_SCALE = {"ns": 1.0, "us": 1e3, "ms": 1e6, "s": 1e9, None: 1.0}


def parse_duration_ns(text: str) -> int:
    """'12.57us' -> 12570; bare numbers are nanoseconds."""
    match = _DURATION_RE.match(str(text))
    if not match:
        raise ValueError(f"bad duration {text!r}; use e.g. 250ns, 12.57us, 1ms, 2s")
    value, unit = match.groups()
    return int(round(float(value) * _DURATION_SCALE[unit]))


def _parse_float_list(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in str(text).split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"bad numeric list {text!r}") from exc
    if not values:
        raise ValueError(f"empty numeric list {text!r}")
    return values


# argparse reports `type=` failures as usage errors (exit 2); the
# function names below appear in its error messages.
def duration(text: str) -> int:
    return parse_duration_ns(text)


def float_list(text: str) -> list[float]:
    return _parse_float_list(text)


# -- atomic output helpers ----------------------------------------------------

def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _rows_text(header: list[str], rows: list[list], fmt: str):
    """Render a table as CSV text or a JSON list of row objects."""
    if fmt == "csv":
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"
    return _json_text([dict(zip(header, row)) for row in rows])


def _table_name(base: str, fmt: str) -> str:
    return f"{base}.{'csv' if fmt == 'csv' else 'json'}"


def _load_config(params: dict) -> dict:
    path = params.get("config")
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def _calibration_from(params: dict, config: dict) -> retention.RetentionCalibration:
    if params.get("calibration"):
        return retention.RetentionCalibration.load(params["calibration"])
    if "calibration" in config:
        return retention.RetentionCalibration.from_dict(config["calibration"])
    return retention.default_calibration()


# -- command runners -----------------------------------------------------------
# Each runner takes (params, out_dir, fmt, seed) and returns output names.

def run_calibrate(params: dict, out_dir: Path, fmt: str, seed: int) -> list[str]:
    if params.get("anchors"):
        raw = json.loads(Path(params["anchors"]).read_text())
        anchors = tuple(retention.RetentionAnchor.from_dict(a) for a in raw)
    else:
        anchors = retention.DEFAULT_ANCHORS
    cal = retention.calibrate(anchors, v_dd=params.get("v_dd", retention.DEFAULT_V_DD))
    _atomic_write_text(out_dir / "calibration.json", cal.to_json() + "\n")
    return ["calibration.json"]


def run_curves(params: dict, out_dir: Path, fmt: str, seed: int) -> list[str]:
    config = _load_config(params)
    cal = _calibration_from(params, config)
    t_max_us = params["tmax_ns"] / 1e3
    rows = []
    for v_ref in sorted(params["vrefs"]):
        curve = cal.generate_curve(v_ref, t_max_us, params["points"])
        for t, p in zip(curve.t_us, curve.p_flip):
            rows.append([v_ref, float(t), float(p)])
    name = _table_name("curves", fmt)
    _atomic_write_text(out_dir / name, _rows_text(["v_ref", "t_us", "p_flip"], rows, fmt))
    return [name]


def run_memsim(params: dict, out_dir: Path, fmt: str, seed: int) -> list[str]:
    config = _load_config(params)
    array_cfg = mixed_array.ArrayConfig.from_dict(config.get("array", {}))
    cal = _calibration_from(params, config)
    ops = mixed_array.parse_trace(params["trace"])
    array = mixed_array.MixedCellArray(config=array_cfg, cal=cal, seed=seed)
    events = mixed_array.replay_trace(array, ops)

    event_rows = []
    data_bytes = []
    reads = writes = 0
    for ev in events:
        op = ev.op
        value_hex = f"{op.value:02x}" if op.value is not None else ""
        result_hex = f"{ev.result:02x}" if ev.result is not None else ""
        event_rows.append([op.t_ns, op.op, op.bank, op.row, op.col, value_hex, result_hex])
        if op.op == "W":
            writes += 1
            data_bytes.append(op.value)
        elif op.op == "R":
            reads += 1
            data_bytes.append(ev.result)

    duration_s = (max(op.t_ns for op in ops) / 1e9) if ops else 0.0
    if data_bytes:
        zf = codec.zero_bit_fraction(np.asarray(data_bytes, dtype=np.uint8))
    else:
        zf = 0.0
    energy_params = energy.EnergyParams()
    capacity_mb = array_cfg.capacity_bytes / energy.MB_BYTES
    static_j = energy.static_power_mw(energy.Tech.MCAIMEM, zf, capacity_mb, energy_params) * 1e-3 * duration_s
    read_j = reads * energy.access_energy_pj(energy.Tech.MCAIMEM, "read", zf, energy_params) * 1e-12
    write_j = writes * energy.access_energy_pj(energy.Tech.MCAIMEM, "write", zf, energy_params) * 1e-12
    refresh_events = array.refresh_events
    refresh_j = (
        refresh_events
        * array_cfg.bytes_per_row
        * energy.access_energy_pj(energy.Tech.MCAIMEM, "read", zf, energy_params)
        * 1e-12
    )
    report = energy.EnergyReport(
        static_energy_j=static_j,
        read_energy_j=read_j,
        write_energy_j=write_j,
        refresh_energy_j=refresh_j,
        duration_s=duration_s,
        refresh_count=refresh_events,
        zero_fraction=zf,
    )

    events_name = _table_name("events", fmt)
    header = ["t_ns", "op", "bank", "row", "col", "value_hex", "result_hex"]
    _atomic_write_text(out_dir / events_name, _rows_text(header, event_rows, fmt))
    _atomic_write_bytes(out_dir / "state.bin", array.dump_state())
    report_name = _table_name("report", fmt)
    if fmt == "csv":
        rd = report.to_dict()
        keys = sorted(rd)
        _atomic_write_text(out_dir / report_name, _rows_text(keys, [[rd[k] for k in keys]], "csv"))
    else:
        _atomic_write_text(out_dir / report_name, _json_text(report.to_dict()))
    return [events_name, "state.bin", report_name]


def run_energy(params: dict, out_dir: Path, fmt: str, seed: int) -> list[str]:
    config = _load_config(params)
    cal = _calibration_from(params, config)
    topology = params["topology"]
    if Path(topology).exists():
        layers = dataflow.parse_topology(topology)
    else:
        layers = dataflow.builtin_topology(topology)
    accel = dataflow.preset(params["preset"])

    if params.get("operand_stats"):
        stats = dataflow.OperandStats.from_dict(json.loads(Path(params["operand_stats"]).read_text()))
    elif "operand_stats" in config:
        stats = dataflow.OperandStats.from_dict(config["operand_stats"])
    else:
        stats = dataflow.default_operand_stats(seed=seed)

    energy_cfg = config.get("energy", {})
    energy_params = energy.EnergyParams(
        rram_read_pj=params.get("rram_read_pj", energy_cfg.get("rram_read_pj")),
        rram_write_pj=params.get("rram_write_pj", energy_cfg.get("rram_write_pj")),
    )
    edram_v_ref = float(energy_cfg.get("edram_v_ref", 0.5))
    vrefs = params["vrefs"]
    techs = [energy.Tech(t) for t in params["techs"]]

    net = dataflow.run_network(layers, accel, stats)

    def tech_rows(tech):
        if tech == energy.Tech.MCAIMEM:
            return [(tech, v) for v in sorted(vrefs)]
        if tech == energy.Tech.EDRAM:
            return [(tech, edram_v_ref)]
        return [(tech, None)]

    def system_for(tech, v_ref):
        return energy.SystemConfig(
            accel=accel,
            params=energy_params,
            cal=cal,
            v_ref=v_ref if (tech == energy.Tech.MCAIMEM and v_ref is not None) else 0.8,
            edram_v_ref=edram_v_ref,
        )

    combos = [pair for tech in techs for pair in tech_rows(tech)]

    layer_header = [
        "layer", "tech", "v_ref", "cycles",
        "ifmap_read_bytes", "filter_read_bytes", "ofmap_write_bytes",
        "static_j", "read_j", "write_j", "refresh_j", "total_j",
    ]
    layer_rows = []
    totals: dict = {}
    for tech, v_ref in combos:
        system = system_for(tech, v_ref)
        for spec, stats_layer in net.layers:
            report = energy.total_energy(stats_layer, tech, system)
            layer_rows.append([
                spec.name, tech.value, v_ref, stats_layer.cycles,
                stats_layer.ifmap_read_bytes, stats_layer.filter_read_bytes,
                stats_layer.ofmap_write_bytes,
                report.static_energy_j, report.read_energy_j,
                report.write_energy_j, report.refresh_energy_j, report.total_j,
            ])
        totals[(tech, v_ref)] = energy.total_energy(net.totals, tech, system)

    sram_total = totals.get((energy.Tech.SRAM, None))
    comparison_header = [
        "tech", "v_ref", "static_j", "read_j", "write_j", "refresh_j",
        "total_j", "sram_total_over_total", "area_ratio_vs_sram",
    ]
    comparison_rows = []
    for (tech, v_ref), report in totals.items():
        ratio = (sram_total.total_j / report.total_j) if (sram_total and report.total_j > 0) else None
        area_ratio = energy_params.area_ratios.get(tech)
        comparison_rows.append([
            tech.value, v_ref, report.static_energy_j, report.read_energy_j,
            report.write_energy_j, report.refresh_energy_j, report.total_j,
            ratio, area_ratio,
        ])

    outputs = []
    layers_name = _table_name("layers", fmt)
    _atomic_write_text(out_dir / layers_name, _rows_text(layer_header, layer_rows, fmt))
    outputs.append(layers_name)
    comparison_name = _table_name("comparison", fmt)
    _atomic_write_text(out_dir / comparison_name, _rows_text(comparison_header, comparison_rows, fmt))
    outputs.append(comparison_name)

    mcai_pairs = [pair for pair in totals if pair[0] == energy.Tech.MCAIMEM]
    summary = {
        "preset": params["preset"],
        "buffer_power_share": accel.buffer_power_share,
        "duration_s": net.duration_s,
        "total_cycles": net.totals.cycles,
    }
    if sram_total and mcai_pairs:
        operating = max(mcai_pairs, key=lambda pair: pair[1])
        mcai_total = totals[operating]
        ratio = mcai_total.total_j / sram_total.total_j
        share = accel.buffer_power_share
        summary.update(
            {
                "mcaimem_v_ref": operating[1],
                "sram_total_j": sram_total.total_j,
                "mcaimem_total_j": mcai_total.total_j,
                "buffer_energy_ratio": ratio,
                "ops_per_watt_gain": energy.ops_per_watt_gain(share, ratio),
                "ops_per_watt_gain_at_3.4x": energy.ops_per_watt_gain(share, 1.0 / 3.4),
            }
        )
    _atomic_write_text(out_dir / "summary.json", _json_text(summary))
    outputs.append("summary.json")
    return outputs


def run_inject(params: dict, out_dir: Path, fmt: str, seed: int) -> list[str]:
    tensor = codec.load_tensor(params["tensor"])
    if tensor.dtype != np.int8:
        raise ValueError(f"inject expects an int8 tensor, got {tensor.dtype}")
    mode_map = {
        "both": fault.MODES,
        "with": (fault.MODE_WITH_ENCODER,),
        "without": (fault.MODE_WITHOUT_ENCODER,),
    }
    modes = mode_map[params["modes"]]
    points = fault.sweep(tensor, params["rates"], modes=modes, seed=seed)
    name = _table_name("sweep", fmt)
    if fmt == "csv":
        _atomic_write_text(out_dir / name, fault.sweep_to_csv(points))
    else:
        rows = [
            [pt.rate, pt.mode, pt.report.mean_relative_error, pt.report.mean_absolute_error,
             pt.report.max_absolute_error, pt.report.flip_count]
            for pt in points
        ]
        _atomic_write_text(out_dir / name, _rows_text(fault.SWEEP_HEADER.split(","), rows, "json"))
    return [name]


RUNNERS = {
    "calibrate": run_calibrate,
    "curves": run_curves,
    "memsim": run_memsim,
    "energy": run_energy,
    "inject": run_inject,
}


def _execute(command: str, params: dict, out_dir: Path, fmt: str, seed: int) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = RUNNERS[command](params, out_dir, fmt, seed)
    manifest = {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": command,
        "seed": seed,
        "format": fmt,
        "params": params,
        "outputs": outputs,
    }
    _atomic_write_text(out_dir / MANIFEST_NAME, _json_text(manifest))


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="mixed SRAM/eDRAM AI-buffer simulator and analysis tool",
    )
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--out", default=".", help="output directory (default .)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    common.add_argument("--config", default=None, help="JSON config file")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", parents=[common], help="fit the retention model")
    p.add_argument("--anchors", default=None, help="JSON anchor list [{t_us,v_ref,p},...]")
    p.add_argument("--v-dd", type=float, default=retention.DEFAULT_V_DD, dest="v_dd")

    p = sub.add_parser("curves", parents=[common], help="flip-probability curves")
    p.add_argument("--vref", type=float_list, default=[0.5, 0.6, 0.7, 0.8],
                   help="comma list of sense thresholds")
    p.add_argument("--tmax", type=duration, default=20000,
                   help="curve time span (duration, default 20us)")
    p.add_argument("--points", type=int, default=201, help="grid points (default 201)")
    p.add_argument("--calibration", default=None, help="calibration JSON from 'calibrate'")

    p = sub.add_parser("memsim", parents=[common], help="replay an access trace")
    p.add_argument("--trace", required=True, help="trace CSV (t_ns,op,bank,row,col,value_hex)")
    p.add_argument("--calibration", default=None, help="calibration JSON from 'calibrate'")

    p = sub.add_parser("energy", parents=[common], help="price a workload per technology")
    p.add_argument("--topology", required=True, help="topology CSV path or builtin name")
    p.add_argument("--preset", required=True, choices=sorted(dataflow.PRESETS))
    p.add_argument("--tech", default="sram,edram,mcaimem", help="comma list or 'all'")
    p.add_argument("--vref", type=float_list, default=[0.8],
                   help="comma list of mixed-cell thresholds")
    p.add_argument("--operand-stats", default=None, dest="operand_stats",
                   help="JSON operand statistics (default: synthetic zero-heavy)")
    p.add_argument("--rram-read-pj", type=float, default=None, dest="rram_read_pj")
    p.add_argument("--rram-write-pj", type=float, default=None, dest="rram_write_pj")
    p.add_argument("--calibration", default=None, help="calibration JSON from 'calibrate'")

    p = sub.add_parser("inject", parents=[common], help="distortion sweep on a tensor")
    p.add_argument("--tensor", required=True, help="int8 tensor file (with .hdr sidecar)")
    p.add_argument("--rates", type=float_list, default=[0.01, 0.05, 0.1, 0.25],
                   help="comma list of flip rates")
    p.add_argument("--modes", choices=("both", "with", "without"), default="both")

    p = sub.add_parser("rerun", help="re-execute a recorded manifest")
    p.add_argument("manifest", help="path to manifest.json")
    p.add_argument("--out", default=None, help="output directory (default: manifest's)")

    return parser


def _params_from_args(args) -> dict:
    if args.command == "calibrate":
        return {"anchors": args.anchors, "v_dd": args.v_dd, "config": args.config}
    if args.command == "curves":
        return {
            "vrefs": args.vref,
            "tmax_ns": args.tmax,
            "points": args.points,
            "calibration": args.calibration,
            "config": args.config,
        }
    if args.command == "memsim":
        return {"trace": args.trace, "calibration": args.calibration, "config": args.config}
    if args.command == "energy":
        techs = args.tech.strip()
        if techs == "all":
            tech_list = [t.value for t in energy.Tech]
        else:
            tech_list = [tok.strip() for tok in techs.split(",") if tok.strip()]
        for tok in tech_list:
            energy.Tech(tok)  # validate early
        return {
            "topology": args.topology,
            "preset": args.preset,
            "techs": tech_list,
            "vrefs": args.vref,
            "operand_stats": args.operand_stats,
            "rram_read_pj": args.rram_read_pj,
            "rram_write_pj": args.rram_write_pj,
            "calibration": args.calibration,
            "config": args.config,
        }
    if args.command == "inject":
        return {
            "tensor": args.tensor,
            "rates": args.rates,
            "modes": args.modes,
            "config": args.config,
        }
    raise ValueError(f"unknown command {args.command}")


_DOMAIN_ERRORS = (
    ValueError,
    retention.CalibrationError,
    mixed_array.AddressError,
    mixed_array.TimeRegressionError,
    mixed_array.TraceError,
    dataflow.TopologyError,
    KeyError,
)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0

    try:
        if args.command == "rerun":
            manifest_path = Path(args.manifest)
            manifest = json.loads(manifest_path.read_text())
            if manifest.get("tool") != TOOL_NAME or manifest.get("command") not in RUNNERS:
                raise ValueError(f"{manifest_path} is not a {TOOL_NAME} manifest")
            out_dir = Path(args.out) if args.out else manifest_path.parent
            _execute(
                manifest["command"],
                manifest["params"],
                out_dir,
                manifest.get("format", "csv"),
                int(manifest.get("seed", 0)),
            )
        else:
            params = _params_from_args(args)
            _execute(args.command, params, Path(args.out), args.format, args.seed)
    except _DOMAIN_ERRORS as exc:
        print(f"{TOOL_NAME}: error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"{TOOL_NAME}: i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
