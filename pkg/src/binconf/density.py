"""Discrete bin densities, their piecewise-linear interpolant, and superlevel sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid

MIN_INTERVAL_WIDTH = 1e-12


@dataclass(frozen=True)
class DiscreteDensity:
    """Probability vector over the midpoints of ``grid``."""

    grid: Grid
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.shape != (self.grid.k_bins,):
            raise ValueError(f"expected {self.grid.k_bins} probabilities, got shape {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)


@dataclass(frozen=True)
class PredictionSet:
    """A finite union of disjoint closed intervals, sorted by left endpoint."""

    intervals: np.ndarray
    threshold: float

    def __post_init__(self):
        iv = np.array(self.intervals, dtype=float).reshape(-1, 2)
        iv.flags.writeable = False
        object.__setattr__(self, "intervals", iv)

    @property
    def n_intervals(self) -> int:
        return len(self.intervals)

    @property
    def is_empty(self) -> bool:
        return len(self.intervals) == 0

    @property
    def is_singleton(self) -> bool:
        return len(self.intervals) == 1

    @property
    def length(self) -> float:
        return set_length(self)

    def contains(self, y) -> np.ndarray | bool:
        y = np.asarray(y, dtype=float)
        if self.is_empty:
            out = np.zeros(y.shape, dtype=bool)
        else:
            lo, hi = self.intervals[:, 0], self.intervals[:, 1]
            out = np.any((y[..., None] >= lo) & (y[..., None] <= hi), axis=-1)
        return bool(out) if out.ndim == 0 else out

    def issuperset(self, other: "PredictionSet", tol: float = 1e-9) -> bool:
        """True if every interval of ``other`` lies inside one of ours."""
        for lo, hi in other.intervals:
            if not np.any((self.intervals[:, 0] <= lo + tol) & (self.intervals[:, 1] >= hi - tol)):
                return False
        return True


def interpolate(d: DiscreteDensity, y):
    """Linear interpolation of the bin probabilities at ``y``.

    Zero outside ``[y_min, y_max]``. Vectorized over ``y``.
    """
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("interpolate requires finite y")
    out = np.interp(y, d.grid.midpoints, d.probs, left=0.0, right=0.0)
    return float(out) if out.ndim == 0 else out


def superlevel_set(d: DiscreteDensity, threshold: float) -> PredictionSet:
    """Exact set ``{z : interpolate(d, z) >= threshold}`` as merged closed intervals."""
    g = d.grid
    t = float(threshold)
    if t <= 0.0:
        # includes -inf: the interpolant is nonnegative on the whole grid
        return PredictionSet(np.array([[g.y_min, g.y_max]]), t)
    if not np.isfinite(t):
        raise ValueError(f"threshold must be finite or -inf, got {threshold!r}")

    p = d.probs
    x = g.midpoints
    h = g.spacing
    a, b = p[:-1], p[1:]
    x0, x1 = x[:-1], x[1:]
    a_in, b_in = a >= t, b >= t

    lo = np.full(a.shape, np.nan)
    hi = np.full(a.shape, np.nan)
    both = a_in & b_in
    lo[both], hi[both] = x0[both], x1[both]
    # descending through t: keep the left part up to the crossing
    down = a_in & ~b_in
    lo[down] = x0[down]
    hi[down] = x0[down] + (a[down] - t) / (a[down] - b[down]) * h
    # ascending through t: keep the right part from the crossing
    up = ~a_in & b_in
    lo[up] = x1[up] - (b[up] - t) / (b[up] - a[up]) * h
    hi[up] = x1[up]

    keep = ~np.isnan(lo)
    merged: list[list[float]] = []
    for s, e in zip(lo[keep], hi[keep]):
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    intervals = [iv for iv in merged if iv[1] - iv[0] >= MIN_INTERVAL_WIDTH]
    return PredictionSet(np.array(intervals, dtype=float).reshape(-1, 2), t)


def set_length(s: PredictionSet) -> float:
    if s.is_empty:
        return 0.0
    return float(np.sum(s.intervals[:, 1] - s.intervals[:, 0]))


def point_predict(d: DiscreteDensity, mode: str = "expectation") -> float:
    if mode == "expectation":
        return float(d.grid.midpoints @ d.probs)
    if mode == "argmax":
        # np.argmax returns the first maximum, i.e. the lower index on ties
        return float(d.grid.midpoints[int(np.argmax(d.probs))])
    raise ValueError(f"unknown point prediction mode {mode!r}")


def sample_curve(d: DiscreteDensity, m_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the interpolant on ``m_points`` uniform points over the grid range."""
    if m_points < 2:
        raise ValueError("m_points must be at least 2")
    z = np.linspace(d.grid.y_min, d.grid.y_max, m_points)
    return z, interpolate(d, z)
