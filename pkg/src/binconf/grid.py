"""Equidistant discretization of a label range into bin midpoints."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """K equally spaced midpoints covering ``[y_min, y_max]``.

    The first midpoint is ``y_min`` and the last is ``y_max``; a label belongs
    to the bin whose midpoint is closest.
    """

    y_min: float
    y_max: float
    k_bins: int
    midpoints: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        y_min, y_max, k = float(self.y_min), float(self.y_max), int(self.k_bins)
        if not (np.isfinite(y_min) and np.isfinite(y_max)):
            raise GridError(f"grid bounds must be finite, got ({y_min}, {y_max})")
        if y_max <= y_min:
            raise GridError(f"degenerate label range: y_max={y_max} <= y_min={y_min}")
        if k < 2:
            raise GridError(f"need at least 2 bins, got k_bins={k}")
        mids = np.linspace(y_min, y_max, k)
        mids.flags.writeable = False
        object.__setattr__(self, "y_min", y_min)
        object.__setattr__(self, "y_max", y_max)
        object.__setattr__(self, "k_bins", k)
        object.__setattr__(self, "midpoints", mids)

    @property
    def spacing(self) -> float:
        return (self.y_max - self.y_min) / (self.k_bins - 1)

    def to_dict(self) -> dict:
        return {"y_min": self.y_min, "y_max": self.y_max, "k_bins": self.k_bins}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(float(d["y_min"]), float(d["y_max"]), int(d["k_bins"]))

    def fingerprint(self) -> str:
        """Short hash identifying the grid; used to refuse mismatched artifacts."""
        raw = np.array([self.y_min, self.y_max, self.k_bins], dtype="<f8").tobytes()
        return hashlib.sha256(raw).hexdigest()[:16]


def build_grid(y_min: float, y_max: float, k_bins: int) -> Grid:
    return Grid(y_min, y_max, k_bins)


def grid_from_labels(y, k_bins: int) -> Grid:
    """Grid spanning the observed range of (training) labels."""
    y = np.asarray(y, dtype=float)
    return Grid(float(y.min()), float(y.max()), k_bins)


def nearest_bin(grid: Grid, y):
    """Index of the midpoint closest to ``y``; ties go to the lower index.

    Values outside the grid clamp to the first or last bin. Accepts a scalar
    or an array and returns the same shape.
    """
    arr = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("nearest_bin requires finite labels")
    mids = grid.midpoints
    k = grid.k_bins
    # candidate neighbours: the midpoint at or below y and the one after it
    lo = np.searchsorted(mids, arr, side="right") - 1
    lo = np.clip(lo, 0, k - 2)
    hi = lo + 1
    d_lo = np.abs(arr - mids[lo])
    d_hi = np.abs(arr - mids[hi])
    idx = np.where(d_hi < d_lo, hi, lo)
    if np.ndim(idx) == 0:
        return int(idx)
    return idx.astype(np.intp)
