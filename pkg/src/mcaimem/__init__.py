"""Simulator and analysis library for a mixed SRAM/eDRAM AI buffer.

The package models an on-chip accelerator buffer whose bytes keep the
sign bit in SRAM and the payload in decaying eDRAM cells, with a
sign-conditional encoding that makes stored data 1-dominant so decay
(always 0 to 1) barely moves values.  It provides:

- :mod:`mcaimem.codec` - the encoding and stored-bit statistics
- :mod:`mcaimem.retention` - crossing-time model and calibration
- :mod:`mcaimem.mixed_array` - bit-accurate array with staggered refresh
- :mod:`mcaimem.energy` - data-dependent energy and area accounting
- :mod:`mcaimem.dataflow` - systolic-array workload front end
- :mod:`mcaimem.fault` - fault injection and distortion metrics
- :mod:`mcaimem.classifier` - tiny INT8 network for end-to-end studies
- :mod:`mcaimem.cli` - command line front end
"""

__version__ = "0.1.0"

from .codec import EncodedByte, decode, decode_tensor, encode, encode_tensor
from .retention import (
    DEFAULT_ANCHORS,
    CalibrationError,
    RetentionAnchor,
    RetentionCalibration,
    calibrate,
    default_calibration,
)
from .mixed_array import ArrayConfig, MixedCellArray
from .energy import EnergyParams, EnergyReport, SystemConfig, Tech, total_energy
from .dataflow import AccelConfig, LayerSpec, OperandStats, TraceStats, run_network
from .fault import DistortionReport, InjectionConfig, distortion, inject, sweep

__all__ = [
    "__version__",
    "EncodedByte",
    "encode",
    "decode",
    "encode_tensor",
    "decode_tensor",
    "RetentionAnchor",
    "RetentionCalibration",
    "CalibrationError",
    "DEFAULT_ANCHORS",
    "calibrate",
    "default_calibration",
    "ArrayConfig",
    "MixedCellArray",
    "EnergyParams",
    "EnergyReport",
    "SystemConfig",
    "Tech",
    "total_energy",
    "AccelConfig",
    "LayerSpec",
    "OperandStats",
    "TraceStats",
    "run_network",
    "InjectionConfig",
    "DistortionReport",
    "inject",
    "distortion",
    "sweep",
]
