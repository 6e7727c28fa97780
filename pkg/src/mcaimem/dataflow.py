"""Output-stationary systolic-array front end for conv/FC workloads.

Each layer is lowered to the analytical model of an output-stationary
systolic array: ofmap pixels map to array rows, filters map to array
columns, and the reduction of length ``W = filter_h * filter_w *
channels`` streams through every PE.  A fold is one (row tile, column
tile) pass and pays the pipeline fill/drain overhead; buffer traffic
counts one access per operand stream (each ofmap pixel's window and
each filter cross the buffer port once, reused spatially inside the
array) and one write per ofmap element:

    folds  = ceil(N / array_rows) * ceil(M / array_cols)
    cycles = folds * (W + array_rows + array_cols - 2)
    reads  = (N + M) * W bytes      writes = N * M bytes

with ``N`` ofmap pixels and ``M`` filters.  Fully connected layers are
1x1 convolutions.  Convolutions are valid (no padding); ofmap dims are
``(ifmap - filter) // stride + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import codec


class TopologyError(ValueError):
    """Malformed workload topology file."""


@dataclass(frozen=True)
class LayerSpec:
    """One conv layer; FC layers use ifmap 1x1 with channels = inputs."""

    name: str
    ifmap_h: int
    ifmap_w: int
    filter_h: int
    filter_w: int
    channels: int
    num_filters: int
    stride: int = 1

    def __post_init__(self) -> None:
        for field in ("ifmap_h", "ifmap_w", "filter_h", "filter_w", "channels", "num_filters", "stride"):
            value = getattr(self, field)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"layer {self.name!r}: {field} must be >= 1, got {value}")
        if self.filter_h > self.ifmap_h or self.filter_w > self.ifmap_w:
            raise ValueError(
                f"layer {self.name!r}: filter {self.filter_h}x{self.filter_w} "
                f"does not fit in ifmap {self.ifmap_h}x{self.ifmap_w}"
            )

    @property
    def ofmap_h(self) -> int:
        return (self.ifmap_h - self.filter_h) // self.stride + 1

    @property
    def ofmap_w(self) -> int:
        return (self.ifmap_w - self.filter_w) // self.stride + 1

    @property
    def window_size(self) -> int:
        """Reduction length W: taps per output element."""
        return self.filter_h * self.filter_w * self.channels

    @property
    def num_windows(self) -> int:
        """N: number of ofmap pixels."""
        return self.ofmap_h * self.ofmap_w


@dataclass(frozen=True)
class AccelConfig:
    """Systolic array shape plus the on-chip buffer it drains."""

    array_rows: int
    array_cols: int
    buffer_capacity_bytes: int
    clock_hz: float = 1e8
    preset: str = "custom"
    buffer_power_share: float | None = None

    def __post_init__(self) -> None:
        if self.array_rows < 1 or self.array_cols < 1:
            raise ValueError("array dimensions must be >= 1")
        if self.buffer_capacity_bytes < 1:
            raise ValueError("buffer capacity must be >= 1 byte")
        if self.clock_hz <= 0:
            raise ValueError("clock_hz must be positive")

    @property
    def capacity_mb(self) -> float:
        return self.buffer_capacity_bytes / float(1 << 20)


# Measured buffer shares of total accelerator power: 42.5% for the
# Eyeriss-class design, 37% for the TPUv1-class design.
PRESETS: dict[str, AccelConfig] = {
    "eyeriss": AccelConfig(
        array_rows=12,
        array_cols=14,
        buffer_capacity_bytes=108 * 1024,
        clock_hz=1e8,
        preset="eyeriss",
        buffer_power_share=0.425,
    ),
    "tpuv1": AccelConfig(
        array_rows=256,
        array_cols=256,
        buffer_capacity_bytes=8 << 20,
        clock_hz=1e8,
        preset="tpuv1",
        buffer_power_share=0.37,
    ),
}


def preset(name: str) -> AccelConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; choices: {sorted(PRESETS)}"
        ) from None


@dataclass(frozen=True)
class OperandProfile:
    """Zero-bit fractions of one operand class, raw and encoded forms."""

    raw_zero_fraction: float
    encoded_zero_fraction: float

    def __post_init__(self) -> None:
        for field in ("raw_zero_fraction", "encoded_zero_fraction"):
            value = getattr(self, field)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{field} must lie in [0, 1], got {value}")

    def zero_fraction(self, encoded: bool) -> float:
        return self.encoded_zero_fraction if encoded else self.raw_zero_fraction

    @classmethod
    def from_tensor(cls, values: np.ndarray) -> "OperandProfile":
        values = np.asarray(values, dtype=np.int8)
        return cls(
            raw_zero_fraction=codec.zero_bit_fraction(values),
            encoded_zero_fraction=codec.zero_bit_fraction(codec.encode_tensor(values)),
        )


@dataclass(frozen=True)
class OperandStats:
    """Per-operand-class data statistics feeding the energy model."""

    ifmap: OperandProfile
    filter: OperandProfile
    ofmap: OperandProfile

    @classmethod
    def from_tensors(cls, ifmap, filt, ofmap) -> "OperandStats":
        return cls(
            ifmap=OperandProfile.from_tensor(ifmap),
            filter=OperandProfile.from_tensor(filt),
            ofmap=OperandProfile.from_tensor(ofmap),
        )

    def to_dict(self) -> dict:
        return {
            name: {
                "raw_zero_fraction": profile.raw_zero_fraction,
                "encoded_zero_fraction": profile.encoded_zero_fraction,
            }
            for name, profile in (
                ("ifmap", self.ifmap),
                ("filter", self.filter),
                ("ofmap", self.ofmap),
            )
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OperandStats":
        def prof(key):
            sub = d[key]
            return OperandProfile(
                raw_zero_fraction=float(sub["raw_zero_fraction"]),
                encoded_zero_fraction=float(sub["encoded_zero_fraction"]),
            )

        return cls(ifmap=prof("ifmap"), filter=prof("filter"), ofmap=prof("ofmap"))


@dataclass(frozen=True)
class TraceStats:
    """Cycle and buffer-traffic totals for one layer or a whole network."""

    cycles: int
    ifmap_read_bytes: int
    filter_read_bytes: int
    ofmap_write_bytes: int
    operand_stats: OperandStats | None = None

    @property
    def buffer_reads_bytes(self) -> int:
        return self.ifmap_read_bytes + self.filter_read_bytes

    @property
    def buffer_writes_bytes(self) -> int:
        return self.ofmap_write_bytes

    def __add__(self, other: "TraceStats") -> "TraceStats":
        if not isinstance(other, TraceStats):
            return NotImplemented
        return TraceStats(
            cycles=self.cycles + other.cycles,
            ifmap_read_bytes=self.ifmap_read_bytes + other.ifmap_read_bytes,
            filter_read_bytes=self.filter_read_bytes + other.filter_read_bytes,
            ofmap_write_bytes=self.ofmap_write_bytes + other.ofmap_write_bytes,
            operand_stats=self.operand_stats,
        )


def simulate_layer(
    spec: LayerSpec, accel: AccelConfig, operand_stats: OperandStats | None = None
) -> TraceStats:
    """Closed-form cycles and buffer traffic for one layer."""
    n = spec.num_windows
    m = spec.num_filters
    w = spec.window_size
    folds = math.ceil(n / accel.array_rows) * math.ceil(m / accel.array_cols)
    cycles = folds * (w + accel.array_rows + accel.array_cols - 2)
    return TraceStats(
        cycles=cycles,
        ifmap_read_bytes=n * w,
        filter_read_bytes=m * w,
        ofmap_write_bytes=n * m,
        operand_stats=operand_stats,
    )


@dataclass(frozen=True)
class NetworkStats:
    """Per-layer stats plus totals for a full topology run."""

    layers: tuple[tuple[LayerSpec, TraceStats], ...]
    totals: TraceStats
    accel: AccelConfig

    @property
    def duration_s(self) -> float:
        return self.totals.cycles / self.accel.clock_hz


def run_network(
    layers, accel: AccelConfig, operand_stats: OperandStats | None = None
) -> NetworkStats:
    """Simulate every layer and aggregate totals."""
    per_layer = tuple(
        (spec, simulate_layer(spec, accel, operand_stats)) for spec in layers
    )
    totals = TraceStats(0, 0, 0, 0, operand_stats=operand_stats)
    for _, stats in per_layer:
        totals = totals + stats
    return NetworkStats(layers=per_layer, totals=totals, accel=accel)


# -- topology files -----------------------------------------------------------

TOPOLOGY_HEADER = "name,ifmap_h,ifmap_w,filter_h,filter_w,channels,num_filters,stride"


def parse_topology(source) -> list[LayerSpec]:
    """Parse a topology CSV; trailing empty fields are tolerated.

    Raises :class:`TopologyError` naming the offending line.
    """
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text().splitlines()
    else:
        lines = [ln.rstrip("\n") for ln in source]
    if not lines:
        raise TopologyError("empty topology file")
    header = [f.strip() for f in lines[0].split(",") if f.strip()]
    if header != TOPOLOGY_HEADER.split(","):
        raise TopologyError(f"topology must start with header '{TOPOLOGY_HEADER}'")
    specs: list[LayerSpec] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split(",")]
        while fields and fields[-1] == "":
            fields.pop()
        if len(fields) != 8:
            raise TopologyError(f"line {lineno}: expected 8 fields, got {len(fields)}")
        name = fields[0]
        try:
            dims = [int(tok) for tok in fields[1:]]
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: {exc}") from exc
        try:
            specs.append(LayerSpec(name, *dims))
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: {exc}") from exc
    if not specs:
        raise TopologyError("topology file defines no layers")
    return specs


def builtin_topology(name: str) -> list[LayerSpec]:
    """Load a topology shipped with the package (e.g. 'resnet50_like')."""
    resource = resources.files("mcaimem.data").joinpath(f"{name}.csv")
    if not resource.is_file():
        raise ValueError(f"no builtin topology named {name!r}")
    return parse_topology(resource.read_text().splitlines())


# -- synthetic operand data ----------------------------------------------------

def synthetic_zero_heavy(kind: str, n: int, seed: int = 0) -> np.ndarray:
    """Deterministic INT8 tensors mimicking pruned-network buffer contents.

    'weights' is a mostly-zero symmetric distribution (pruned filters);
    'activations' is a mostly-zero nonnegative one (post-ReLU ifmaps).
    Both concentrate nonzero magnitudes near zero, which is the regime
    the sign-conditional encoding is built for.
    """
    kind_key = {"weights": 1, "activations": 2}.get(kind)
    if kind_key is None:
        raise ValueError(f"kind must be 'weights' or 'activations', got {kind!r}")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(kind_key,)))
    if kind == "weights":
        zero_p = 0.85
        magnitude = 1 + np.floor(rng.exponential(scale=3.0, size=n))
        sign = rng.choice(np.array([-1, 1], dtype=np.int16), size=n)
        values = sign * np.clip(magnitude, 1, 127).astype(np.int16)
    elif kind == "activations":
        zero_p = 0.7
        magnitude = 1 + np.floor(np.abs(rng.normal(loc=0.0, scale=5.0, size=n)))
        values = np.clip(magnitude, 1, 127).astype(np.int16)
    keep = rng.random(n) >= zero_p
    return (values * keep).astype(np.int8)


def default_operand_stats(seed: int = 0, n: int = 65536) -> OperandStats:
    """Zero-heavy operand statistics derived from the synthetic tensors."""
    return OperandStats.from_tensors(
        ifmap=synthetic_zero_heavy("activations", n, seed),
        filt=synthetic_zero_heavy("weights", n, seed + 1),
        ofmap=synthetic_zero_heavy("activations", n, seed + 2),
    )
