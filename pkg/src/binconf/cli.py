"""Command-line front end.

Configuration is a flat JSON object; ``--set key=value`` and the dedicated
flags override file values. ``BINCONF_OUTPUT_DIR`` overrides the output
directory named in the file. Exit codes: 0 success, 1 usage or config
error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import warnings
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import evalbench
from .conformal import CalibrationResult, calibrate, conformity_scores, predict_sets
from .data import GENERATORS, DataError, Dataset, Scaler, load_csv
from .grid import Grid
from .loss import VARIANTS
from .model import dump_checkpoint, load_checkpoint
from .pipeline import AbsResidualBaseline, BinnedConformalRegressor, PipelineConfig

OUTPUT_ENV = "BINCONF_OUTPUT_DIR"

_PIPELINE_KEYS = {f.name for f in fields(PipelineConfig)}
DEFAULTS = {
    "dataset": None,
    "csv": None,
    "label_column": None,
    "n": 2000,
    "fractions": [0.5, 0.25, 0.25],
    "alpha": 0.1,
    "standardize_labels": None,
    "output_dir": "runs",
    "alphas": [0.05, 0.1, 0.2, 0.4],
    "k_list": [2, 5, 10, 25, 50, 100],
    "variants": ["main", "no_entropy", "mle", "mle_entropy"],
    "baseline": False,
    **{f.name: f.default for f in fields(PipelineConfig)},
}
# keys that do not change what gets trained or calibrated
_NON_SNAPSHOT = {"output_dir", "alphas", "k_list", "variants", "baseline", "alpha"}


class ConfigError(ValueError):
    pass


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- configuration -----------------------------------------------------------

def load_config(path=None, overrides=None) -> dict:
    cfg = dict(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{p}: config must be a JSON object")
        cfg.update(_checked(doc))
    if overrides:
        cfg.update(_checked(overrides))
    if os.environ.get(OUTPUT_ENV) and not (overrides and "output_dir" in overrides):
        cfg["output_dir"] = os.environ[OUTPUT_ENV]
    return validate(cfg)


def _checked(doc: dict) -> dict:
    unknown = sorted(set(doc) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return doc


def validate(cfg: dict) -> dict:
    if (cfg["dataset"] is None) == (cfg["csv"] is None):
        raise ConfigError("exactly one of 'dataset' (generator name) or 'csv' (path) must be given")
    if cfg["dataset"] is not None and cfg["dataset"] not in GENERATORS:
        raise ConfigError(f"dataset: unknown generator {cfg['dataset']!r}; choose from {sorted(GENERATORS)}")
    if cfg["csv"] is not None and not cfg["label_column"]:
        raise ConfigError("label_column is required with csv")
    if not 0 < float(cfg["alpha"]) < 1:
        raise ConfigError(f"alpha: must lie in (0, 1), got {cfg['alpha']}")
    if int(cfg["n"]) < 4:
        raise ConfigError(f"n: too small ({cfg['n']})")
    try:
        pipeline_config(cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def pipeline_config(cfg: dict) -> PipelineConfig:
    pc = PipelineConfig(**{k: cfg[k] for k in _PIPELINE_KEYS})
    if pc.variant not in VARIANTS:
        raise ConfigError(f"variant: unknown loss variant {pc.variant!r}")
    if pc.k_bins < 2:
        raise ConfigError(f"k_bins: must be >= 2, got {pc.k_bins}")
    return pc


def snapshot(cfg: dict) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if k not in _NON_SNAPSHOT}


def snapshot_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(snapshot(cfg), sort_keys=True).encode()).hexdigest()[:16]


def dataset_name(cfg: dict) -> str:
    return cfg["dataset"] or Path(cfg["csv"]).stem


def load_dataset(cfg: dict) -> Dataset:
    if cfg["dataset"] is not None:
        return GENERATORS[cfg["dataset"]](int(cfg["n"]), int(cfg["seed"]))
    return load_csv(cfg["csv"], cfg["label_column"])


def standardize_labels(cfg: dict) -> bool:
    if cfg["standardize_labels"] is not None:
        return bool(cfg["standardize_labels"])
    return cfg["csv"] is not None


def prepared_splits(cfg: dict):
    return evalbench.prepare(load_dataset(cfg), cfg["fractions"], int(cfg["seed"]), standardize_labels(cfg))


def out_dir(cfg: dict) -> Path:
    d = Path(cfg["output_dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d


# -- commands ----------------------------------------------------------------

def cmd_gen_data(cfg, args):
    if cfg["dataset"] is None:
        raise ConfigError("gen-data needs a generator 'dataset'")
    ds = load_dataset(cfg)
    header = [f"x{i}" for i in range(ds.n_features)] + ["y"]
    rows = np.column_stack([ds.features, ds.labels]).tolist()
    path = out_dir(cfg) / f"{cfg['dataset']}_{cfg['seed']}.csv"
    path.write_text(evalbench._rows_to_csv(header, rows))
    print(path)


def cmd_train(cfg, args):
    train, _, _ = prepared_splits(cfg)
    reg = BinnedConformalRegressor(pipeline_config(cfg)).fit(train)
    meta = {
        "grid": reg.grid.to_dict(),
        "grid_fingerprint": reg.grid.fingerprint(),
        "feature_scaler": train.feature_scaler.to_dict(),
        "label_scaler": train.label_scaler.to_dict(),
        "config": snapshot(cfg),
        "config_hash": snapshot_hash(cfg),
    }
    d = out_dir(cfg)
    (d / "model.ckpt").write_bytes(dump_checkpoint(reg.model, meta))
    (d / "loss_history.csv").write_text(
        evalbench._rows_to_csv(["epoch", "loss"], [[i, float(v)] for i, v in enumerate(reg.history)]))
    print(d / "model.ckpt")


def _read_checkpoint(path):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"checkpoint not found: {p}")
    return load_checkpoint(p.read_bytes())


def cmd_calibrate(cfg, args):
    model, meta = _read_checkpoint(args.checkpoint or out_dir(cfg) / "model.ckpt")
    if meta["config_hash"] != snapshot_hash(cfg):
        raise RuntimeError("checkpoint was trained with a different configuration; refusing to calibrate")
    grid = Grid.from_dict(meta["grid"])
    _, cal, _ = prepared_splits(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        calib = calibrate(conformity_scores(model, grid, cal.features, cal.labels), float(cfg["alpha"]))
    doc = {
        **calib.to_dict(),
        "grid_fingerprint": meta["grid_fingerprint"],
        "config_hash": meta["config_hash"],
        "config": meta["config"],
    }
    path = out_dir(cfg) / "calibration.json"
    path.write_text(evalbench.to_json(doc))
    print(path)


def _parse_features(args, n_features):
    if args.features is not None:
        ds_rows = []
        p = Path(args.features)
        if not p.is_file():
            raise FileNotFoundError(f"features file not found: {p}")
        with p.open(newline="") as fh:
            reader = csv.reader(fh)
            next(reader, None)
            for rownum, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    ds_rows.append([float(c) for c in row[:n_features]])
                except ValueError:
                    raise DataError(f"{p}: row {rownum}: non-numeric feature") from None
        return np.array(ds_rows, dtype=float).reshape(-1, n_features)
    rows = [[float(v) for v in chunk.split(",")] for chunk in args.x.split(";")]
    return np.array(rows, dtype=float).reshape(-1, n_features)


def format_set_line(s, label_scaler: Scaler) -> str:
    if s.is_empty:
        return "EMPTY"
    pairs = label_scaler.inverse(s.intervals.reshape(-1, 1)).reshape(-1, 2)
    return ";".join(f"{float(lo)!r},{float(hi)!r}" for lo, hi in pairs)


def cmd_predict(cfg, args):
    model, meta = _read_checkpoint(args.checkpoint)
    cal_path = Path(args.calibration)
    if not cal_path.is_file():
        raise FileNotFoundError(f"calibration not found: {cal_path}")
    cal_doc = json.loads(cal_path.read_text())
    if cal_doc["grid_fingerprint"] != meta["grid_fingerprint"] or cal_doc["config_hash"] != meta["config_hash"]:
        raise RuntimeError("calibration does not belong to this checkpoint (grid or config differs); refusing to run")
    if args.features is None and args.x is None:
        raise UsageError("predict needs --features CSV or --x values")
    grid = Grid.from_dict(meta["grid"])
    calib = CalibrationResult.from_dict(cal_doc)
    fs = Scaler.from_dict(meta["feature_scaler"])
    ls = Scaler.from_dict(meta["label_scaler"])
    X = fs.transform(_parse_features(args, model.config.input_dim))
    for s in predict_sets(model, grid, calib, X):
        print(format_set_line(s, ls))


def cmd_evaluate(cfg, args):
    pc = pipeline_config(cfg)
    train, cal, test = prepared_splits(cfg)
    alpha = float(cfg["alpha"])
    reg = BinnedConformalRegressor(pc).fit(train)
    reg.calibrate(cal, alpha)
    rep = evalbench.evaluate_regressor(reg, test)
    name = dataset_name(cfg)
    paths = evalbench.write_report(rep, out_dir(cfg), evalbench.report_basename(name, pc.variant, pc.seed, alpha))
    if cfg["baseline"]:
        base = AbsResidualBaseline(pc).fit(train)
        base.calibrate(cal, alpha)
        brep = evalbench.evaluate_baseline(base, test)
        paths += evalbench.write_report(brep, out_dir(cfg), evalbench.report_basename(name, "absresidual", pc.seed, alpha))
    for p in paths:
        print(p)


def cmd_sweep_alpha(cfg, args):
    pc = pipeline_config(cfg)
    train, cal, test = prepared_splits(cfg)
    reg = BinnedConformalRegressor(pc).fit(train)
    reg.calibrate(cal, float(cfg["alpha"]))
    reports = evalbench.alpha_sweep(reg, test, cfg["alphas"])
    rows = [{"alpha": r.alpha, "coverage": r.coverage, "mean_length": r.mean_length} for r in reports]
    path = out_dir(cfg) / f"{dataset_name(cfg)}_{pc.variant}_{pc.seed}_sweep_alpha.csv"
    path.write_text(evalbench.records_csv(rows))
    print(path)


def cmd_sweep_bins(cfg, args):
    pc = pipeline_config(cfg)
    rows = evalbench.bin_count_sweep(load_dataset(cfg), cfg["k_list"], pc, float(cfg["alpha"]),
                                     cfg["fractions"], standardize_labels(cfg))
    path = out_dir(cfg) / f"{dataset_name(cfg)}_{pc.variant}_{pc.seed}_sweep_bins.csv"
    path.write_text(evalbench.records_csv(rows))
    print(path)


def cmd_ablate(cfg, args):
    pc = pipeline_config(cfg)
    rows = evalbench.ablation_run(load_dataset(cfg), cfg["variants"], pc, float(cfg["alpha"]),
                                  cfg["fractions"], standardize_labels(cfg))
    path = out_dir(cfg) / f"{dataset_name(cfg)}_ablation_{pc.seed}_{float(cfg['alpha'])!r}.csv"
    path.write_text(evalbench.records_csv(rows))
    print(path)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "calibrate": cmd_calibrate,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "sweep-alpha": cmd_sweep_alpha,
    "sweep-bins": cmd_sweep_bins,
    "ablate": cmd_ablate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="binconf", description="Binned-softmax conformal regression")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat JSON config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key; VALUE is parsed as JSON when possible")
        sp.add_argument("--dataset")
        sp.add_argument("--csv")
        sp.add_argument("--label-column")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--output-dir")
        if name in ("calibrate", "predict"):
            sp.add_argument("--checkpoint", required=name == "predict")
        if name == "predict":
            sp.add_argument("--calibration", required=True)
            sp.add_argument("--features", help="CSV with a header row and feature columns")
            sp.add_argument("--x", help="inline rows: '1.0,2.0;3.0,4.0'")
    return parser


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    for key in ("dataset", "csv", "label_column", "seed", "alpha", "output_dir"):
        val = getattr(args, key)
        if val is not None:
            out[key] = val
    return out


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        needs_data = args.command != "predict"
        overrides = _overrides(args)
        if needs_data:
            cfg = load_config(args.config, overrides)
        else:
            cfg = {}
        COMMANDS[args.command](cfg, args)
        return 0
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - every runtime failure maps to exit code 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
