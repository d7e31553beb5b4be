"""Split-conformal calibration with the finite-sample order-statistic rule."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .density import DiscreteDensity, PredictionSet, interpolate, superlevel_set
from .grid import Grid
from .model import ModelState, predict_probs


@dataclass(frozen=True)
class CalibrationResult:
    """Sorted calibration scores and the threshold picked from them.

    ``k_order`` is 1-based; ``k_order == 0`` means too few scores for the
    requested ``alpha`` and the threshold is ``-inf`` (every label accepted).
    """

    scores: np.ndarray
    alpha: float
    threshold: float
    k_order: int

    @property
    def n_scores(self) -> int:
        return len(self.scores)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "k_order": self.k_order,
            "threshold": self.threshold,
            "n_scores": self.n_scores,
            "scores": [float(s) for s in self.scores],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationResult":
        return cls(np.array(d["scores"], dtype=float), float(d["alpha"]), float(d["threshold"]), int(d["k_order"]))


def order_index(n: int, alpha: float) -> int:
    """``floor(alpha * (n + 1))``, guarded against representation error.

    ``0.1 * 10`` must give 1, not 0.9999...; we round to 12 decimals first.
    """
    return int(math.floor(round(alpha * (n + 1), 12)))


def calibrate(scores, alpha: float) -> CalibrationResult:
    """Pick the ``floor(alpha (n+1))``-th smallest conformity score as threshold.

    A test point is accepted when its score is at least the threshold, which
    gives coverage of at least ``1 - alpha`` under exchangeability.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    s = np.sort(np.asarray(scores, dtype=float).reshape(-1))
    if len(s) == 0:
        raise ValueError("no calibration scores")
    k = order_index(len(s), alpha)
    if k < 1:
        warnings.warn(
            f"{len(s)} calibration scores are too few for alpha={alpha}; sets will cover the full range",
            RuntimeWarning,
            stacklevel=2,
        )
        return CalibrationResult(s, float(alpha), -math.inf, 0)
    return CalibrationResult(s, float(alpha), float(s[k - 1]), k)


def densities(model: ModelState, grid: Grid, X) -> list[DiscreteDensity]:
    return [DiscreteDensity(grid, q) for q in predict_probs(model, X)]


def conformity_scores(model: ModelState, grid: Grid, X, y) -> np.ndarray:
    """Interpolated predicted density evaluated at each true label."""
    y = np.asarray(y, dtype=float).reshape(-1)
    probs = predict_probs(model, X)
    if len(probs) != len(y):
        raise ValueError(f"{len(probs)} feature rows but {len(y)} labels")
    return np.array([interpolate(DiscreteDensity(grid, q), yi) for q, yi in zip(probs, y)])


def predict_set(model: ModelState, grid: Grid, calib: CalibrationResult, x) -> PredictionSet:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return superlevel_set(DiscreteDensity(grid, predict_probs(model, x)[0]), calib.threshold)


def predict_sets(model: ModelState, grid: Grid, calib: CalibrationResult, X) -> list[PredictionSet]:
    return [superlevel_set(d, calib.threshold) for d in densities(model, grid, X)]


def coverage_mc_check(n_cal: int, alpha: float, trials: int = 100_000, seed: int = 0) -> float:
    """Monte Carlo coverage of the calibration rule on i.i.d. uniform scores.

    Each trial draws ``n_cal`` calibration scores and one test score; the
    test point is covered when its score reaches the calibrated threshold.
    """
    if trials < 1000:
        raise ValueError("use at least 1000 trials")
    k = order_index(n_cal, alpha)
    if k < 1:
        return 1.0
    rng = np.random.default_rng(seed)
    covered = 0
    chunk = max(1, 2_000_000 // (n_cal + 1))
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        u = rng.random((m, n_cal + 1))
        thr = np.partition(u[:, :n_cal], k - 1, axis=1)[:, k - 1]
        covered += int(np.count_nonzero(u[:, n_cal] >= thr))
        done += m
    return covered / trials


def analytic_coverage(n_cal: int, alpha: float) -> float:
    """Exact coverage of the rule for continuous exchangeable scores."""
    k = order_index(n_cal, alpha)
    return 1.0 if k < 1 else (n_cal + 1 - k) / (n_cal + 1)
