"""Sign-conditional INT8 recoding and stored-bit statistics.

The buffer keeps each value's sign bit in an SRAM cell and the seven
payload bits in eDRAM cells whose stored zeros decay upward over time.
To protect small-magnitude data, the payload is flipped (XOR 0x7f)
whenever the sign bit is 0, so near-zero values are stored 1-dominant
and a decayed 0-to-1 flip only perturbs low place values.  Hardware
cost is one inverter and seven XOR gates per byte.

Serialized form of an encoded byte is ``(sign_bit << 7) | payload``.
The byte-level map is an involution: applying it twice returns the
original bit pattern, and -128 follows the same rule as every other
negative value (sign 1, payload stored unchanged).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

PAYLOAD_BITS = 7
PAYLOAD_MASK = 0x7F
SIGN_BIT = 7

_BIT_POSITIONS = np.arange(8, dtype=np.uint8)


@dataclass(frozen=True)
class EncodedByte:
    """One stored byte: SRAM sign bit plus 7-bit eDRAM payload."""

    sign_bit: int
    payload: int

    def __post_init__(self) -> None:
        if self.sign_bit not in (0, 1):
            raise ValueError(f"sign_bit must be 0 or 1, got {self.sign_bit}")
        if not 0 <= self.payload <= PAYLOAD_MASK:
            raise ValueError(f"payload must be in [0, 127], got {self.payload}")

    def to_byte(self) -> int:
        return (self.sign_bit << SIGN_BIT) | self.payload

    @classmethod
    def from_byte(cls, value: int) -> "EncodedByte":
        if not 0 <= value <= 0xFF:
            raise ValueError(f"byte value must be in [0, 255], got {value}")
        return cls(sign_bit=(value >> SIGN_BIT) & 1, payload=value & PAYLOAD_MASK)


def encode(value: int) -> EncodedByte:
    """Encode one INT8 value.

    Positive-sign values (sign bit 0) store their payload inverted so
    that the stored pattern is 1-dominant near zero; negative values
    store the payload unchanged.
    """
    if not -128 <= value <= 127:
        raise ValueError(f"value out of INT8 range: {value}")
    raw = value & 0xFF
    sign = (raw >> SIGN_BIT) & 1
    payload = raw & PAYLOAD_MASK
    if sign == 0:
        payload ^= PAYLOAD_MASK
    return EncodedByte(sign_bit=sign, payload=payload)


def decode(encoded: EncodedByte) -> int:
    """Invert :func:`encode`, returning the INT8 value."""
    payload = encoded.payload
    if encoded.sign_bit == 0:
        payload ^= PAYLOAD_MASK
    raw = (encoded.sign_bit << SIGN_BIT) | payload
    return raw - 256 if raw >= 128 else raw


def encode_tensor(values: np.ndarray) -> np.ndarray:
    """Encode an int8 array into serialized encoded bytes (uint8).

    The element at each position is the ``to_byte()`` form of the
    corresponding :class:`EncodedByte`.
    """
    arr = np.asarray(values)
    if arr.dtype != np.int8:
        raise ValueError(f"expected int8 tensor, got dtype {arr.dtype}")
    raw = arr.view(np.uint8)
    flip = np.where(raw < 0x80, np.uint8(PAYLOAD_MASK), np.uint8(0))
    return raw ^ flip


def decode_tensor(encoded: np.ndarray) -> np.ndarray:
    """Decode serialized encoded bytes (uint8) back to int8 values."""
    arr = np.asarray(encoded)
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 tensor, got dtype {arr.dtype}")
    flip = np.where(arr < 0x80, np.uint8(PAYLOAD_MASK), np.uint8(0))
    return (arr ^ flip).view(np.int8)


def ones_histogram(encoded: np.ndarray) -> np.ndarray:
    """Per-bit-position fraction of ones over an array of stored bytes.

    Returns 8 floats indexed by bit position; index 7 is the sign bit.
    """
    arr = np.asarray(encoded)
    if arr.size == 0:
        raise ValueError("ones_histogram requires a non-empty array")
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 array, got dtype {arr.dtype}")
    flat = arr.reshape(-1)
    bits = (flat[:, None] >> _BIT_POSITIONS) & 1
    return bits.mean(axis=0, dtype=np.float64)


def zero_bit_fraction(data: np.ndarray) -> float:
    """Fraction of stored bits equal to 0 over an array of bytes.

    Accepts uint8 (stored patterns) or int8 (raw values, reinterpreted
    bitwise).  This is the data statistic that drives the data-dependent
    energy interpolation.
    """
    arr = np.asarray(data)
    if arr.dtype == np.int8:
        arr = arr.view(np.uint8)
    if arr.dtype != np.uint8:
        raise ValueError(f"expected int8 or uint8 array, got dtype {arr.dtype}")
    if arr.size == 0:
        raise ValueError("zero_bit_fraction requires a non-empty array")
    return 1.0 - float(ones_histogram(arr).mean())


def write_histogram_csv(path: str | Path, fractions: np.ndarray) -> None:
    """Write a per-bit ones histogram as ``bit_position,ones_fraction``."""
    fractions = np.asarray(fractions, dtype=np.float64)
    if fractions.shape != (8,):
        raise ValueError(f"expected 8 per-bit fractions, got shape {fractions.shape}")
    lines = ["bit_position,ones_fraction"]
    for pos in range(8):
        lines.append(f"{pos},{float(fractions[pos])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_tensor(path: str | Path, values: np.ndarray) -> None:
    """Write a tensor as raw little-endian bytes plus a text sidecar.

    The sidecar ``<path>.hdr`` records shape and dtype; int8 and uint8
    are the supported element types.
    """
    arr = np.ascontiguousarray(values)
    if arr.dtype not in (np.dtype(np.int8), np.dtype(np.uint8)):
        raise ValueError(f"unsupported tensor dtype {arr.dtype}")
    path = Path(path)
    path.write_bytes(arr.tobytes())
    shape = ",".join(str(d) for d in arr.shape)
    Path(str(path) + ".hdr").write_text(f"shape: {shape}\ndtype: {arr.dtype.name}\n")


def load_tensor(path: str | Path) -> np.ndarray:
    """Read a tensor written by :func:`save_tensor`."""
    path = Path(path)
    header_path = Path(str(path) + ".hdr")
    if not header_path.exists():
        raise FileNotFoundError(f"missing tensor header {header_path}")
    shape: tuple[int, ...] | None = None
    dtype: np.dtype | None = None
    for line in header_path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        key, _, value = line.partition(":")
        key = key.strip().lower()
        value = value.strip()
        if key == "shape":
            if value == "":
                shape = ()
            else:
                shape = tuple(int(tok) for tok in value.split(","))
        elif key == "dtype":
            if value not in ("int8", "uint8"):
                raise ValueError(f"unsupported tensor dtype {value!r} in {header_path}")
            dtype = np.dtype(value)
    if shape is None or dtype is None:
        raise ValueError(f"tensor header {header_path} must define shape and dtype")
    data = np.frombuffer(path.read_bytes(), dtype=dtype)
    expected = int(np.prod(shape)) if shape else 1
    if data.size != expected:
        raise ValueError(
            f"tensor payload {path} has {data.size} elements, header says {expected}"
        )
    return data.reshape(shape).copy()
