"""Bit-accurate mixed SRAM/eDRAM array with staggered refresh.

Every stored byte keeps its sign bit (bit 7) in an SRAM cell, which is
error free, and its seven payload bits in eDRAM cells.  A payload cell
holding 1 never decays.  A payload cell holding 0 is assigned a random
crossing time when it is charged (written or restored); once its age
exceeds that crossing time it reads as 1, and because sensing writes
back what was sensed, the flip becomes permanent.  Zeros that survive a
sense start a fresh charge epoch with a newly sampled crossing time.

Reads sense and restore the full addressed row, so a read is the same
physical operation as a refresh of that row plus data output.  With
refresh enabled, a global controller walks each bank's rows round-robin
with per-row period ``T_ref`` (from the retention calibration at the
configured v_ref and target flip probability) and stagger
``T_ref / rows_per_bank``; all banks refresh the same row index in
parallel.  Operation timestamps are caller-supplied nanoseconds and
must never decrease; pending refresh events up to an operation's
timestamp execute before the operation itself.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .codec import EncodedByte
from .retention import RetentionCalibration, default_calibration

_STATE_MAGIC = b"MCAS"
_STATE_VERSION = 1

_PAYLOAD_PLACES = (1 << np.arange(7)).astype(np.uint8)


class AddressError(IndexError):
    """Bank, row, or column outside the configured geometry."""


class TimeRegressionError(ValueError):
    """Operation timestamp precedes an already observed timestamp."""


class TraceError(ValueError):
    """Malformed access-trace record."""


@dataclass(frozen=True)
class ArrayConfig:
    """Array geometry and refresh policy.

    Defaults describe the 1 MB reference buffer: 64 banks of 256 rows
    by 64 bytes.
    """

    banks: int = 64
    rows_per_bank: int = 256
    bytes_per_row: int = 64
    v_ref: float = 0.8
    refresh_enabled: bool = True
    refresh_target_p: float = 0.01
    clock_hz: float = 1e8

    def __post_init__(self) -> None:
        for name in ("banks", "rows_per_bank", "bytes_per_row"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value}")
        if not 0.0 < self.v_ref < 1.0:
            raise ValueError(f"v_ref must lie in (0, 1), got {self.v_ref}")
        if not 0.0 < self.refresh_target_p < 1.0:
            raise ValueError(
                f"refresh_target_p must lie in (0, 1), got {self.refresh_target_p}"
            )
        if self.clock_hz <= 0:
            raise ValueError(f"clock_hz must be positive, got {self.clock_hz}")

    @property
    def capacity_bytes(self) -> int:
        return self.banks * self.rows_per_bank * self.bytes_per_row

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ArrayConfig":
        return cls(
            banks=int(d.get("banks", 64)),
            rows_per_bank=int(d.get("rows_per_bank", 256)),
            bytes_per_row=int(d.get("bytes_per_row", 64)),
            v_ref=float(d.get("v_ref", 0.8)),
            refresh_enabled=bool(d.get("refresh_enabled", True)),
            refresh_target_p=float(d.get("refresh_target_p", 0.01)),
            clock_hz=float(d.get("clock_hz", 1e8)),
        )


def refresh_period_ns(config: ArrayConfig, cal: RetentionCalibration) -> float:
    """Per-row refresh period implied by the config's v_ref and target."""
    return cal.refresh_interval_us(config.v_ref, config.refresh_target_p) * 1e3


def refresh_stagger_ns(config: ArrayConfig, cal: RetentionCalibration) -> float:
    """Spacing between consecutive row-refresh events within a bank."""
    return refresh_period_ns(config, cal) / config.rows_per_bank


def refresh_event_count(
    config: ArrayConfig, cal: RetentionCalibration, duration_ns: float
) -> int:
    """Number of (bank, row) refresh events in (0, duration_ns].

    Pure arithmetic on the stagger rule; one event per bank fires every
    ``stagger`` nanoseconds and all banks fire together.
    """
    if duration_ns < 0:
        raise ValueError(f"duration_ns must be nonnegative, got {duration_ns}")
    stagger = refresh_stagger_ns(config, cal)
    return config.banks * int(math.floor(duration_ns / stagger))


class MixedCellArray:
    """Trace-driven mixed-cell buffer holding serialized encoded bytes."""

    def __init__(
        self,
        config: ArrayConfig | None = None,
        cal: RetentionCalibration | None = None,
        seed: int = 0,
    ) -> None:
        self.config = config or ArrayConfig()
        self.cal = cal or default_calibration()
        self._seed = int(seed)
        self._rng = np.random.default_rng(self._seed)
        self._mu_ln_us = math.log(self.cal.t50_us(self.config.v_ref))
        self._sigma = self.cal.sigma
        self._period_ns = refresh_period_ns(self.config, self.cal)
        self._stagger_ns = self._period_ns / self.config.rows_per_bank

        shape = (self.config.banks, self.config.rows_per_bank, self.config.bytes_per_row)
        self._stored = np.zeros(shape, dtype=np.uint8)
        self._epoch_ns = np.zeros(shape + (7,), dtype=np.float64)
        self._cross_ns = np.empty(shape + (7,), dtype=np.float64)
        # all-zero initial contents: every payload cell starts a charge epoch at t=0
        self._cross_ns[...] = self._sample_crossing_ns(self._cross_ns.size).reshape(
            self._cross_ns.shape
        )
        self._last_refresh_ns = np.zeros(shape[:2], dtype=np.float64)

        self._now_ns: float = 0.0
        self._events_done = 0
        self.scheduled_refresh_events = 0
        self.manual_refresh_events = 0
        self.read_count = 0
        self.write_count = 0

    # -- internal helpers ------------------------------------------------

    def _sample_crossing_ns(self, n: int) -> np.ndarray:
        return self._rng.lognormal(mean=self._mu_ln_us, sigma=self._sigma, size=n) * 1e3

    def _check_addr(self, addr) -> tuple[int, int, int]:
        try:
            bank, row, col = (int(x) for x in addr)
        except (TypeError, ValueError) as exc:
            raise AddressError(f"address must be (bank, row, col), got {addr!r}") from exc
        cfg = self.config
        if not (0 <= bank < cfg.banks and 0 <= row < cfg.rows_per_bank and 0 <= col < cfg.bytes_per_row):
            raise AddressError(
                f"address {(bank, row, col)} outside geometry "
                f"({cfg.banks}, {cfg.rows_per_bank}, {cfg.bytes_per_row})"
            )
        return bank, row, col

    def _restore_row(self, bank_sel, row: int, t_ns: float) -> None:
        """Sense and write back one row (all banks when bank_sel is a slice).

        Decayed zeros (age >= crossing time) are written back as ones and
        stop decaying; surviving zeros restart their charge epoch at t_ns
        with fresh crossing-time samples.  Sample order is C order over
        (bank, column, bit), so replays with the same seed are identical.
        """
        cross = self._cross_ns[bank_sel, row]
        epoch = self._epoch_ns[bank_sel, row]
        flips = (t_ns - epoch) >= cross
        if flips.any():
            masks = (flips * _PAYLOAD_PLACES).sum(axis=-1).astype(np.uint8)
            self._stored[bank_sel, row] |= masks
            cross[flips] = np.inf
        survivors = np.isfinite(cross)
        n = int(survivors.sum())
        if n:
            epoch[survivors] = t_ns
            cross[survivors] = self._sample_crossing_ns(n)
        self._last_refresh_ns[bank_sel, row] = t_ns

    # -- public operations -----------------------------------------------

    def advance(self, t_ns) -> int:
        """Move time forward, executing refresh events due in (now, t_ns].

        Returns the number of (bank, row) refresh events executed.  The
        m-th event per bank fires at ``m * stagger`` and refreshes row
        ``(m - 1) % rows_per_bank`` of every bank simultaneously.
        """
        if t_ns < self._now_ns:
            raise TimeRegressionError(
                f"time moved backwards: {t_ns} < {self._now_ns}"
            )
        executed = 0
        if self.config.refresh_enabled:
            m_new = int(math.floor(t_ns / self._stagger_ns))
            rows = self.config.rows_per_bank
            for m in range(self._events_done + 1, m_new + 1):
                self._restore_row(slice(None), (m - 1) % rows, m * self._stagger_ns)
                executed += self.config.banks
            self._events_done = m_new
        self._now_ns = t_ns
        self.scheduled_refresh_events += executed
        return executed

    def write(self, addr, encoded: EncodedByte, t_ns) -> None:
        """Store a byte at (bank, row, col); zeros start new charge epochs."""
        self.advance(t_ns)
        bank, row, col = self._check_addr(addr)
        byte = encoded.to_byte()
        self._stored[bank, row, col] = byte
        zeros = ((byte >> np.arange(7)) & 1) == 0
        cell_cross = self._cross_ns[bank, row, col]
        cell_epoch = self._epoch_ns[bank, row, col]
        cell_epoch[:] = float(t_ns)
        cell_cross[:] = np.inf
        n = int(zeros.sum())
        if n:
            cell_cross[zeros] = self._sample_crossing_ns(n)
        self.write_count += 1

    def read(self, addr, t_ns) -> EncodedByte:
        """Sense a byte; the full addressed row is restored as a side effect."""
        self.advance(t_ns)
        bank, row, col = self._check_addr(addr)
        self._restore_row(bank, row, float(t_ns))
        self.read_count += 1
        return EncodedByte.from_byte(int(self._stored[bank, row, col]))

    def read_row(self, bank: int, row: int, t_ns) -> np.ndarray:
        """Sense a full row at once; equivalent to reading every column at t_ns."""
        self.advance(t_ns)
        self._check_addr((bank, row, 0))
        self._restore_row(bank, row, float(t_ns))
        self.read_count += self.config.bytes_per_row
        return self._stored[bank, row].copy()

    def refresh_row(self, bank: int, row: int, t_ns) -> None:
        """Explicitly restore one row of one bank (same physics as a read)."""
        self.advance(t_ns)
        self._check_addr((bank, row, 0))
        self._restore_row(bank, row, float(t_ns))
        self.manual_refresh_events += 1

    @property
    def now_ns(self) -> float:
        return self._now_ns

    @property
    def refresh_events(self) -> int:
        return self.scheduled_refresh_events + self.manual_refresh_events

    def row_age_ns(self, t_ns) -> np.ndarray:
        """Age of every (bank, row) since its last restore, at time t_ns."""
        return np.asarray(t_ns, dtype=np.float64) - self._last_refresh_ns

    def stored_bytes(self) -> np.ndarray:
        """Copy of the stored byte patterns, shape (banks, rows, cols)."""
        return self._stored.copy()

    # -- snapshots ---------------------------------------------------------

    def dump_state(self) -> bytes:
        """Serialize the full array state (versioned, lossless).

        Layout: magic, version, header length, JSON header (config, seed,
        RNG state, clocks, counters), then the raw cell arrays in order
        stored bytes, epoch times, crossing times, last-refresh times,
        all C-order little-endian.
        """
        header = {
            "format": "mcaimem-array-state",
            "version": _STATE_VERSION,
            "config": self.config.to_dict(),
            "calibration": self.cal.to_dict(),
            "seed": self._seed,
            "rng_state": self._rng.bit_generator.state,
            "now_ns": self._now_ns,
            "events_done": self._events_done,
            "scheduled_refresh_events": self.scheduled_refresh_events,
            "manual_refresh_events": self.manual_refresh_events,
            "read_count": self.read_count,
            "write_count": self.write_count,
        }
        blob = json.dumps(header, sort_keys=True).encode("utf-8")
        return b"".join(
            [
                _STATE_MAGIC,
                struct.pack("<IQ", _STATE_VERSION, len(blob)),
                blob,
                self._stored.tobytes(),
                self._epoch_ns.tobytes(),
                self._cross_ns.tobytes(),
                self._last_refresh_ns.tobytes(),
            ]
        )

    @classmethod
    def load_state(cls, blob: bytes) -> "MixedCellArray":
        """Rebuild an array from :meth:`dump_state` output."""
        prefix = len(_STATE_MAGIC) + struct.calcsize("<IQ")
        if len(blob) < prefix or blob[:4] != _STATE_MAGIC:
            raise ValueError("not an array state snapshot")
        version, header_len = struct.unpack("<IQ", blob[4:prefix])
        if version != _STATE_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        header = json.loads(blob[prefix : prefix + header_len].decode("utf-8"))
        config = ArrayConfig.from_dict(header["config"])
        cal = RetentionCalibration.from_dict(header["calibration"])
        array = cls(config=config, cal=cal, seed=int(header["seed"]))

        offset = prefix + header_len
        shape = (config.banks, config.rows_per_bank, config.bytes_per_row)

        def take(dtype, arr_shape):
            nonlocal offset
            count = int(np.prod(arr_shape))
            nbytes = count * np.dtype(dtype).itemsize
            chunk = np.frombuffer(blob, dtype=dtype, count=count, offset=offset)
            offset += nbytes
            return chunk.reshape(arr_shape).copy()

        array._stored = take(np.uint8, shape)
        array._epoch_ns = take(np.float64, shape + (7,))
        array._cross_ns = take(np.float64, shape + (7,))
        array._last_refresh_ns = take(np.float64, shape[:2])
        if offset != len(blob):
            raise ValueError("snapshot payload size mismatch")

        array._rng.bit_generator.state = header["rng_state"]
        array._now_ns = header["now_ns"]
        array._events_done = int(header["events_done"])
        array.scheduled_refresh_events = int(header["scheduled_refresh_events"])
        array.manual_refresh_events = int(header["manual_refresh_events"])
        array.read_count = int(header["read_count"])
        array.write_count = int(header["write_count"])
        return array


# -- access traces ----------------------------------------------------------

TRACE_HEADER = "t_ns,op,bank,row,col,value_hex"


@dataclass(frozen=True)
class TraceOp:
    """One trace record; value is the stored-byte pattern for writes."""

    t_ns: int
    op: str
    bank: int
    row: int
    col: int
    value: int | None = None


@dataclass(frozen=True)
class TraceEvent:
    """Replay outcome for one record; result is the sensed byte for reads."""

    op: TraceOp
    result: int | None = None


def parse_trace(source) -> list[TraceOp]:
    """Parse an access trace CSV (``t_ns,op,bank,row,col,value_hex``).

    ``op`` is R (read), W (write), or F (refresh row).  Writes require a
    two-digit hex value; reads and refreshes ignore the value column.
    Raises :class:`TraceError` naming the offending line.
    """
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text().splitlines()
    else:
        lines = [ln.rstrip("\n") for ln in source]
    if not lines or lines[0].strip() != TRACE_HEADER:
        raise TraceError(f"trace must start with header '{TRACE_HEADER}'")
    ops: list[TraceOp] = []
    previous_t = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 6:
            raise TraceError(f"line {lineno}: expected 6 fields, got {len(fields)}")
        t_text, op, bank, row, col, value_hex = fields
        try:
            t_ns = int(t_text)
            bank_i, row_i, col_i = int(bank), int(row), int(col)
        except ValueError as exc:
            raise TraceError(f"line {lineno}: {exc}") from exc
        if t_ns < 0:
            raise TraceError(f"line {lineno}: negative timestamp {t_ns}")
        if previous_t is not None and t_ns < previous_t:
            raise TraceError(
                f"line {lineno}: timestamp {t_ns} precedes previous {previous_t}"
            )
        previous_t = t_ns
        if op not in ("R", "W", "F"):
            raise TraceError(f"line {lineno}: op must be R, W, or F, got {op!r}")
        value = None
        if op == "W":
            if not value_hex:
                raise TraceError(f"line {lineno}: write requires value_hex")
            try:
                value = int(value_hex, 16)
            except ValueError as exc:
                raise TraceError(f"line {lineno}: bad value_hex {value_hex!r}") from exc
            if not 0 <= value <= 0xFF:
                raise TraceError(f"line {lineno}: value_hex out of byte range")
        ops.append(TraceOp(t_ns=t_ns, op=op, bank=bank_i, row=row_i, col=col_i, value=value))
    return ops


def format_trace(ops) -> str:
    """Serialize trace records back to the CSV form accepted by parse_trace."""
    lines = [TRACE_HEADER]
    for op in ops:
        value = f"{op.value:02x}" if op.value is not None else ""
        lines.append(f"{op.t_ns},{op.op},{op.bank},{op.row},{op.col},{value}")
    return "\n".join(lines) + "\n"


def replay_trace(array: MixedCellArray, ops) -> list[TraceEvent]:
    """Apply trace records in order, returning per-record outcomes."""
    events: list[TraceEvent] = []
    for op in ops:
        if op.op == "W":
            array.write((op.bank, op.row, op.col), EncodedByte.from_byte(op.value), op.t_ns)
            events.append(TraceEvent(op=op))
        elif op.op == "R":
            sensed = array.read((op.bank, op.row, op.col), op.t_ns)
            events.append(TraceEvent(op=op, result=sensed.to_byte()))
        else:
            array.refresh_row(op.bank, op.row, op.t_ns)
            events.append(TraceEvent(op=op))
    return events
