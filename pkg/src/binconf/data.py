"""Synthetic generators, CSV loading, standardization and seeded splits."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Scaler:
    """Per-column affine map ``(v - shift) / scale``."""

    shift: np.ndarray
    scale: np.ndarray

    @classmethod
    def identity(cls, n_cols: int) -> "Scaler":
        return cls(np.zeros(n_cols), np.ones(n_cols))

    def transform(self, v):
        return (np.asarray(v, dtype=float) - self.shift) / self.scale

    def inverse(self, v):
        return np.asarray(v, dtype=float) * self.scale + self.shift

    def to_dict(self) -> dict:
        return {"shift": [float(s) for s in self.shift], "scale": [float(s) for s in self.scale]}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.array(d["shift"], dtype=float), np.array(d["scale"], dtype=float))


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_scaler: Scaler | None = None
    label_scaler: Scaler | None = None
    name: str = "data"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.labels, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if len(y) < 1:
            raise DataError("dataset is empty")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains non-finite values")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if self.feature_scaler is None:
            object.__setattr__(self, "feature_scaler", Scaler.identity(X.shape[1]))
        if self.label_scaler is None:
            object.__setattr__(self, "label_scaler", Scaler.identity(1))

    def __len__(self):
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        return replace(self, features=self.features[idx], labels=self.labels[idx])


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple[float, ...] = (0.5, 0.25, 0.25)
    seed: int = 0

    def __post_init__(self):
        if any(f <= 0 for f in self.fractions):
            raise DataError(f"split fractions must be positive, got {self.fractions}")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise DataError(f"split fractions must sum to 1, got {sum(self.fractions)}")


# -- generators --------------------------------------------------------------

def gen_heteroscedastic(n: int, seed: int = 0) -> Dataset:
    """``x ~ U[-2, 2]``, ``y | x ~ N(0, |x|)`` with ``|x|`` the variance."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2.0, 2.0, size=n)
    y = rng.standard_normal(n) * np.sqrt(np.abs(x))
    return Dataset(x[:, None], y, name="heteroscedastic")


def gen_bimodal(n: int, seed: int = 0, dim: int = 4, pair_noise: float = 0.1, label_noise: float = 0.1) -> Dataset:
    """Pairs of nearby feature points carrying labels near +1 and -1.

    Each pair is ``c + d`` and ``c - d`` with ``c ~ U[-1, 1]^dim`` and
    ``d ~ N(0, pair_noise**2 I)``; one member gets ``+1``, the other ``-1``,
    both with Gaussian label noise of std ``label_noise``.
    """
    if n % 2:
        raise DataError(f"bimodal generator needs an even n, got {n}")
    rng = np.random.default_rng(seed)
    half = n // 2
    c = rng.uniform(-1.0, 1.0, size=(half, dim))
    d = rng.normal(0.0, pair_noise, size=(half, dim))
    X = np.empty((n, dim))
    X[0::2] = c + d
    X[1::2] = c - d
    y = np.empty(n)
    y[0::2] = 1.0
    y[1::2] = -1.0
    y += rng.normal(0.0, label_noise, size=n)
    return Dataset(X, y, name="bimodal")


def lei_fork_mean(x):
    x = np.asarray(x, dtype=float)
    return (x - 1.0) ** 2 * (x + 1.0)


def lei_fork_gap(x):
    x = np.asarray(x, dtype=float)
    return 4.0 * np.sqrt(np.where(x >= -0.5, x + 0.5, 0.0))


def lei_fork_variance(x):
    return 0.25 + np.abs(np.asarray(x, dtype=float))


def gen_lei_fork(n: int, seed: int = 0) -> Dataset:
    """Equal mixture of ``N(f - g, s2)`` and ``N(f + g, s2)`` over ``x ~ U[-1.5, 1.5]``.

    ``f = (x-1)^2 (x+1)``, ``g = 4 sqrt((x + 1/2) 1{x >= -1/2})``,
    ``s2 = 1/4 + |x|``. Unimodal for ``x < -1/2``, bimodal beyond.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.5, 1.5, size=n)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    y = lei_fork_mean(x) + sign * lei_fork_gap(x) + rng.standard_normal(n) * np.sqrt(lei_fork_variance(x))
    return Dataset(x[:, None], y, name="lei_fork")


def gen_lognormal(n: int, seed: int = 0, dim: int = 4) -> Dataset:
    """Standard log-normal labels, independent of ``N(0, I)`` features."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, dim))
    y = np.exp(rng.standard_normal(n))
    return Dataset(X, y, name="lognormal")


GENERATORS = {
    "heteroscedastic": gen_heteroscedastic,
    "bimodal": gen_bimodal,
    "lei_fork": gen_lei_fork,
    "lognormal": gen_lognormal,
}


# -- CSV ---------------------------------------------------------------------

def load_csv(path, label_column: str) -> Dataset:
    """Read a headered numeric CSV; the named column becomes the label.

    Rows with missing or non-numeric (including NaN/inf) cells are rejected
    with the offending row number (1-based, header is row 1).
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"CSV file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not found in header {header}")
        li = header.index(label_column)
        rows = []
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {rownum} has {len(row)} cells, expected {len(header)}")
            vals = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}: row {rownum}, column {col!r}: cannot parse {cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: row {rownum}, column {col!r}: non-finite value {cell!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.array(rows, dtype=float)
    X = np.delete(arr, li, axis=1)
    return Dataset(X, arr[:, li], name=path.stem)


# -- scaling and splitting ---------------------------------------------------

def _fit_scaler(cols: np.ndarray) -> Scaler:
    shift = cols.mean(axis=0)
    scale = cols.std(axis=0)
    const = scale <= 0
    if np.any(const):
        warnings.warn(f"{int(const.sum())} constant column(s); using scale 1", RuntimeWarning, stacklevel=3)
        scale = np.where(const, 1.0, scale)
    return Scaler(shift, scale)


def standardize(train: Dataset, *others: Dataset, labels: bool = True, features: bool = True):
    """Z-score features and (optionally) labels using ``train`` statistics.

    Returns the transformed train set followed by each of ``others``, all
    carrying the fitted scalers.
    """
    if len(train) < 2:
        raise DataError("standardize needs at least 2 training rows")
    fs = _fit_scaler(train.features) if features else Scaler.identity(train.n_features)
    ls = _fit_scaler(train.labels[:, None]) if labels else Scaler.identity(1)
    out = []
    for ds in (train, *others):
        out.append(replace(
            ds,
            features=fs.transform(ds.features),
            labels=ls.transform(ds.labels[:, None])[:, 0],
            feature_scaler=fs,
            label_scaler=ls,
        ))
    return out[0] if not others else tuple(out)


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, ...]:
    """Seeded permutation followed by contiguous slicing by ``spec.fractions``."""
    n = len(ds)
    perm = np.random.default_rng(spec.seed).permutation(n)
    bounds = np.round(np.cumsum((0.0,) + tuple(spec.fractions)) * n).astype(int)
    bounds[-1] = n
    parts = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi <= lo:
            raise DataError(f"split {spec.fractions} of {n} rows leaves an empty part")
        parts.append(ds.subset(perm[lo:hi]))
    return tuple(parts)
