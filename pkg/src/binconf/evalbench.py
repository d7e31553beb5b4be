"""Metrics, sweeps, ablations and report/plot-data writers."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from .conformal import CalibrationResult
from .data import Dataset, SplitSpec, split, standardize
from .density import DiscreteDensity, PredictionSet, point_predict, sample_curve, superlevel_set
from .grid import Grid
from .loss import entropy
from .model import ModelState, predict_probs
from .pipeline import AbsResidualBaseline, BinnedConformalRegressor, PipelineConfig


@dataclass
class EvalReport:
    coverage: float
    mean_length: float
    singleton_fraction: float
    records: list[dict] = field(repr=False)
    seed: int = 0
    config: dict = field(default_factory=dict)
    alpha: float | None = None

    @property
    def lengths(self) -> np.ndarray:
        return np.array([r["length"] for r in self.records])

    @property
    def n(self) -> int:
        return len(self.records)

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "coverage": self.coverage,
            "mean_length": self.mean_length,
            "singleton_fraction": self.singleton_fraction,
            "n_test": self.n,
            "seed": self.seed,
            "config": self.config,
        }


def _format_intervals(s: PredictionSet) -> str:
    if s.is_empty:
        return "EMPTY"
    return ";".join(f"{float(lo)!r},{float(hi)!r}" for lo, hi in s.intervals)


def report_from_sets(sets, truths, points, seed=0, config=None, alpha=None) -> EvalReport:
    """Aggregate per-example sets into coverage, mean length and singleton share."""
    truths = np.asarray(truths, dtype=float)
    records = []
    covered = 0
    for i, (s, y, pt) in enumerate(zip(sets, truths, points)):
        hit = bool(s.contains(y))
        covered += hit
        records.append({
            "index": i,
            "truth": float(y),
            "point_prediction": float(pt),
            "residual": float(abs(pt - y)),
            "length": s.length,
            "n_intervals": s.n_intervals,
            "covered": hit,
            "intervals": _format_intervals(s),
        })
    n = len(records)
    return EvalReport(
        coverage=covered / n,
        mean_length=float(np.mean([r["length"] for r in records])),
        singleton_fraction=float(np.mean([r["n_intervals"] == 1 for r in records])),
        records=records,
        seed=seed,
        config=dict(config or {}),
        alpha=alpha,
    )


def evaluate(model: ModelState, grid: Grid, calib: CalibrationResult, test: Dataset,
             point_mode: str = "expectation", seed: int = 0, config: dict | None = None) -> EvalReport:
    """Coverage (boundary inclusive), mean set length and singleton share on ``test``."""
    dens = [DiscreteDensity(grid, q) for q in predict_probs(model, test.features)]
    sets = [superlevel_set(d, calib.threshold) for d in dens]
    points = [point_predict(d, point_mode) for d in dens]
    return report_from_sets(sets, test.labels, points, seed, config, calib.alpha)


def evaluate_regressor(reg: BinnedConformalRegressor, test: Dataset, point_mode: str = "expectation") -> EvalReport:
    return evaluate(reg.model, reg.grid, reg.calibration, test, point_mode, reg.config.seed, reg.config.to_dict())


def evaluate_baseline(base: AbsResidualBaseline, test: Dataset) -> EvalReport:
    sets = base.predict_sets(test.features)
    return report_from_sets(sets, test.labels, base.predict_mean(test.features),
                            base.config.seed, base.config.to_dict(), base.calibration.alpha)


# -- experiment orchestration ------------------------------------------------

def prepare(ds: Dataset, fractions=(0.5, 0.25, 0.25), seed: int = 0, standardize_labels: bool = False):
    """Seeded train/cal/test split, standardized with training statistics."""
    parts = split(ds, SplitSpec(tuple(fractions), seed))
    return standardize(*parts, labels=standardize_labels)


def run_once(ds: Dataset, config: PipelineConfig, alpha: float = 0.1, fractions=(0.5, 0.25, 0.25),
             standardize_labels: bool = False):
    """Split, train, calibrate and evaluate; returns ``(regressor, report, splits)``."""
    train, cal, test = prepare(ds, fractions, config.seed, standardize_labels)
    reg = BinnedConformalRegressor(config).fit(train)
    reg.calibrate(cal, alpha)
    return reg, evaluate_regressor(reg, test), (train, cal, test)


def alpha_sweep(reg: BinnedConformalRegressor, test: Dataset, alphas) -> list[EvalReport]:
    """Recalibrate the already trained model at each alpha; no retraining."""
    alphas = list(alphas)
    if any(not 0 < a < 1 for a in alphas):
        raise ValueError("alphas must lie in (0, 1)")
    if alphas != sorted(alphas):
        raise ValueError("alphas must be sorted ascending")
    saved = reg.calibration
    reports = []
    try:
        for a in alphas:
            reg.recalibrate(a)
            reports.append(evaluate_regressor(reg, test))
    finally:
        reg.calibration = saved
    return reports


def bin_count_sweep(ds: Dataset, k_list, config: PipelineConfig, alpha: float = 0.1,
                    fractions=(0.5, 0.25, 0.25), standardize_labels: bool = False) -> list[dict]:
    """Retrain once per bin count with the same seed and splits."""
    rows = []
    for k in k_list:
        if k < 2:
            raise ValueError(f"bin count must be >= 2, got {k}")
        _, rep, _ = run_once(ds, replace(config, k_bins=int(k)), alpha, fractions, standardize_labels)
        rows.append({"k_bins": int(k), "coverage": rep.coverage, "mean_length": rep.mean_length})
    return rows


def mean_entropy(reg: BinnedConformalRegressor, X) -> float:
    return float(np.mean(entropy(predict_probs(reg.model, X))))


def ablation_run(ds: Dataset, variants, config: PipelineConfig, alpha: float = 0.1,
                 fractions=(0.5, 0.25, 0.25), standardize_labels: bool = False) -> list[dict]:
    """One model per loss variant, shared seed and splits.

    Besides coverage and length, reports the mean entropy of the predicted
    test densities, which shows how sharp each objective makes them.
    """
    variants = list(variants)
    if not variants:
        raise ValueError("no variants given")
    rows = []
    for v in variants:
        reg, rep, (_, _, test) = run_once(ds, replace(config, variant=v), alpha, fractions, standardize_labels)
        rows.append({
            "variant": v,
            "coverage": rep.coverage,
            "mean_length": rep.mean_length,
            "mean_entropy": mean_entropy(reg, test.features),
        })
    return rows


# -- analysis ----------------------------------------------------------------

def spearman(a, b) -> float:
    """Spearman rank correlation; 0 when either side is constant."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return 0.0
    return float(spearmanr(a, b)[0])


def residual_length_correlation(report: EvalReport) -> float:
    """Rank correlation between |point prediction - truth| and set length."""
    if report.n < 10:
        raise ValueError(f"need at least 10 examples, got {report.n}")
    return spearman([r["residual"] for r in report.records], report.lengths)


def emit_density_curve(model: ModelState, grid: Grid, x, m_points: int = 200, path=None) -> np.ndarray:
    """``(m_points, 2)`` array of (z, score) over the grid; optionally written as CSV."""
    q = predict_probs(model, np.atleast_2d(x))[0]
    z, score = sample_curve(DiscreteDensity(grid, q), m_points)
    out = np.column_stack([z, score])
    if path is not None:
        Path(path).write_text(_rows_to_csv(["z", "score"], out.tolist()))
    return out


# -- writers -----------------------------------------------------------------

def report_basename(dataset: str, variant: str, seed: int, alpha: float) -> str:
    return f"{dataset}_{variant}_{int(seed)}_{float(alpha)!r}"


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


REPORT_COLUMNS = ["index", "truth", "point_prediction", "residual", "length", "n_intervals", "covered", "intervals"]


def report_csv(report: EvalReport) -> str:
    return _rows_to_csv(REPORT_COLUMNS, ([r[c] for c in REPORT_COLUMNS] for r in report.records))


def records_csv(rows: list[dict]) -> str:
    header = list(rows[0]) if rows else []
    return _rows_to_csv(header, ([r[c] for c in header] for r in rows))


def to_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_report(report: EvalReport, out_dir, basename: str) -> tuple[Path, Path]:
    """Write ``<basename>.csv`` (per example) and ``<basename>.json`` (summary)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{basename}.csv"
    json_path = out_dir / f"{basename}.json"
    csv_path.write_text(report_csv(report))
    json_path.write_text(to_json(report.summary()))
    return csv_path, json_path
