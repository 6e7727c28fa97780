"""Asymmetric eDRAM retention: stored zeros decay upward, ones hold.

Cell leakage pulls the storage node toward the supply rail, so a stored
1 is replenished and never flips, while a stored 0 drifts up and reads
as 1 once it crosses the sense threshold ``v_ref``.  The time for a
stored 0 to cross the threshold is modeled as lognormal:

    t50(v_ref) = A * g(v_ref)**beta,   g(v) = -ln(1 - v / v_dd)
    p(t, v_ref) = Phi((ln t - ln t50(v_ref)) / sigma)

``t50`` is the median crossing time in microseconds, ``sigma`` the log
shape, and ``p`` the probability that a stored 0 has flipped by age
``t``.  Raising ``v_ref`` pushes the whole crossing-time distribution
out, which is what lets the scheduler stretch the refresh interval.

Parameters come from :func:`calibrate`, which solves the log-linear
system defined by measured (time, v_ref, flip probability) anchors.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import stats


class CalibrationError(ValueError):
    """Anchor set does not determine a positive-parameter model."""


class ExtrapolationWarning(UserWarning):
    """Result computed at a v_ref outside the calibrated anchor span."""


@dataclass(frozen=True)
class RetentionAnchor:
    """One measured point: flip probability p at age t_us and v_ref."""

    t_us: float
    v_ref: float
    p: float

    def to_dict(self) -> dict:
        return {"t_us": self.t_us, "v_ref": self.v_ref, "p": self.p}

    @classmethod
    def from_dict(cls, d: dict) -> "RetentionAnchor":
        return cls(t_us=float(d["t_us"]), v_ref=float(d["v_ref"]), p=float(d["p"]))


# Measured behavior of the cell at 85 C: 1% of stored zeros flip by
# 1.3 us at v_ref 0.5, by 12.57 us at v_ref 0.8, and a quarter have
# flipped 0.43 us after that second point.
DEFAULT_ANCHORS: tuple[RetentionAnchor, ...] = (
    RetentionAnchor(t_us=1.3, v_ref=0.5, p=0.01),
    RetentionAnchor(t_us=12.57, v_ref=0.8, p=0.01),
    RetentionAnchor(t_us=13.0, v_ref=0.8, p=0.25),
)

DEFAULT_V_DD = 1.0


@dataclass(frozen=True)
class FlipCurve:
    """Flip probability sampled on a uniform time grid at one v_ref."""

    v_ref: float
    t_us: np.ndarray
    p_flip: np.ndarray

    def __post_init__(self) -> None:
        if self.t_us.shape != self.p_flip.shape or self.t_us.ndim != 1:
            raise ValueError("curve arrays must be 1-d and the same length")
        if np.any(np.diff(self.t_us) <= 0):
            raise ValueError("curve time grid must be strictly increasing")
        if np.any(self.p_flip < 0) or np.any(self.p_flip > 1):
            raise ValueError("flip probabilities must lie in [0, 1]")
        if np.any(np.diff(self.p_flip) < 0):
            raise ValueError("flip probabilities must be nondecreasing in time")


@dataclass(frozen=True)
class RetentionCalibration:
    """Fitted crossing-time model plus the anchors that produced it."""

    v_dd: float
    sigma: float
    beta: float
    a_us: float
    anchors: tuple[RetentionAnchor, ...]

    def _g(self, v_ref):
        return -np.log(1.0 - np.asarray(v_ref, dtype=np.float64) / self.v_dd)

    def _check_v_ref(self, v_ref: float) -> None:
        if not 0.0 < v_ref < self.v_dd:
            raise ValueError(f"v_ref must lie in (0, {self.v_dd}), got {v_ref}")
        lo = min(a.v_ref for a in self.anchors)
        hi = max(a.v_ref for a in self.anchors)
        if v_ref < lo or v_ref > hi:
            warnings.warn(
                f"v_ref={v_ref} is outside the calibrated span [{lo}, {hi}]; "
                "extrapolating the crossing-time model",
                ExtrapolationWarning,
                stacklevel=3,
            )

    def t50_us(self, v_ref: float) -> float:
        """Median crossing time of a stored 0 at this threshold."""
        self._check_v_ref(v_ref)
        return self.a_us * float(self._g(v_ref)) ** self.beta

    def flip_probability(self, t_us, v_ref: float):
        """P(stored 0 reads as 1) at age ``t_us``; scalar or array times."""
        self._check_v_ref(v_ref)
        t = np.asarray(t_us, dtype=np.float64)
        if np.any(t < 0):
            raise ValueError("age must be nonnegative")
        ln_t50 = math.log(self.t50_us(v_ref))
        with np.errstate(divide="ignore"):
            z = (np.log(t) - ln_t50) / self.sigma
        p = stats.norm.cdf(z)
        p = np.where(t == 0, 0.0, p)
        return float(p) if np.isscalar(t_us) else p

    def sample_crossing_time(
        self, v_ref: float, rng: np.random.Generator, size=None
    ):
        """Draw crossing times (us) for stored zeros; deterministic per rng state."""
        self._check_v_ref(v_ref)
        mu = math.log(self.t50_us(v_ref))
        return rng.lognormal(mean=mu, sigma=self.sigma, size=size)

    def refresh_interval_us(self, v_ref: float, target_p: float = 0.01) -> float:
        """Largest age at which the flip probability is still target_p."""
        if not 0.0 < target_p < 1.0:
            raise ValueError(f"target_p must lie in (0, 1), got {target_p}")
        t50 = self.t50_us(v_ref)
        return t50 * math.exp(self.sigma * float(stats.norm.ppf(target_p)))

    def generate_curve(self, v_ref: float, t_max_us: float, n_points: int) -> FlipCurve:
        """Flip-probability curve on a uniform grid over [0, t_max_us]."""
        if n_points < 2:
            raise ValueError(f"n_points must be at least 2, got {n_points}")
        if t_max_us <= 0:
            raise ValueError(f"t_max_us must be positive, got {t_max_us}")
        t = np.linspace(0.0, t_max_us, n_points)
        p = self.flip_probability(t, v_ref)
        return FlipCurve(v_ref=v_ref, t_us=t, p_flip=np.asarray(p))

    def to_dict(self) -> dict:
        return {
            "v_dd": self.v_dd,
            "sigma": self.sigma,
            "beta": self.beta,
            "A": self.a_us,
            "anchors": [a.to_dict() for a in self.anchors],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RetentionCalibration":
        return cls(
            v_dd=float(d["v_dd"]),
            sigma=float(d["sigma"]),
            beta=float(d["beta"]),
            a_us=float(d["A"]),
            anchors=tuple(RetentionAnchor.from_dict(a) for a in d["anchors"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "RetentionCalibration":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RetentionCalibration":
        return cls.from_json(Path(path).read_text())


def calibrate(
    anchors=DEFAULT_ANCHORS, v_dd: float = DEFAULT_V_DD
) -> RetentionCalibration:
    """Fit (sigma, beta, A) from flip-probability anchors.

    Each anchor pins ``ln t = ln A + beta * ln g(v_ref) + sigma * z(p)``,
    which is linear in the parameters, so the fit is a least-squares
    solve; with exactly three independent anchors it is exact.  Needs at
    least three anchors spanning at least two distinct v_ref values, and
    at least one same-v_ref pair with distinct quantiles so sigma is
    identified.  Raises :class:`CalibrationError` when the system is
    degenerate or the fit produces non-positive sigma or beta.
    """
    anchors = tuple(
        a if isinstance(a, RetentionAnchor) else RetentionAnchor(*a) for a in anchors
    )
    if len(anchors) < 3:
        raise CalibrationError(f"need at least 3 anchors, got {len(anchors)}")
    for a in anchors:
        if a.t_us <= 0:
            raise CalibrationError(f"anchor time must be positive, got {a.t_us}")
        if not 0.0 < a.p < 1.0:
            raise CalibrationError(f"anchor probability must lie in (0, 1), got {a.p}")
        if not 0.0 < a.v_ref < v_dd:
            raise CalibrationError(
                f"anchor v_ref must lie in (0, {v_dd}), got {a.v_ref}"
            )
    if len({a.v_ref for a in anchors}) < 2:
        raise CalibrationError(
            "anchors cover a single v_ref; the threshold exponent is underdetermined"
        )

    g = [-math.log(1.0 - a.v_ref / v_dd) for a in anchors]
    design = np.array(
        [[1.0, math.log(gv), float(stats.norm.ppf(a.p))] for gv, a in zip(g, anchors)]
    )
    target = np.array([math.log(a.t_us) for a in anchors])
    if np.linalg.matrix_rank(design) < 3:
        raise CalibrationError(
            "anchors are degenerate; add a same-v_ref quantile pair and a second v_ref"
        )
    solution, *_ = np.linalg.lstsq(design, target, rcond=None)
    ln_a, beta, sigma = (float(x) for x in solution)
    if sigma <= 0:
        raise CalibrationError(f"fit produced non-positive sigma ({sigma:.4g})")
    if beta <= 0:
        raise CalibrationError(f"fit produced non-positive beta ({beta:.4g})")
    return RetentionCalibration(
        v_dd=v_dd, sigma=sigma, beta=beta, a_us=math.exp(ln_a), anchors=anchors
    )


@lru_cache(maxsize=1)
def default_calibration() -> RetentionCalibration:
    """Calibration fitted to :data:`DEFAULT_ANCHORS` (cached)."""
    return calibrate(DEFAULT_ANCHORS, DEFAULT_V_DD)
