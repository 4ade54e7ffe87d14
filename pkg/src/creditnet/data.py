"""CSV ingestion, imputation, standardization, splitting, synthetic data.

All statistics (medians, means, stds, winsor bounds) are fitted on one split
and carry a ``fitted_on`` tag. Applying statistics to a val/test frame raises
``LeakageError`` unless they were fitted on the training split.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, DataError, LeakageError, SchemaError, ShapeError
from .tensor_ops import sigmoid

MISSING_DEFAULT = ("", "NA", "NaN", "nan", "null", "NULL")


# ---------------------------------------------------------------------------
# frames and configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureFrame:
    """An immutable design matrix plus binary labels.

    Missing cells are NaN in ``X`` and flagged in ``missing``; both are
    cleared by imputation. ``split_tag`` is one of full/train/val/test.
    """

    feature_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    missing: Optional[np.ndarray] = None
    standardized: bool = False
    stats: Optional["StandardizeStats"] = None
    split_tag: str = "full"

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=np.float64))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.int64))
        if self.X.ndim != 2:
            raise ShapeError(f"X must be 2-D, got shape {self.X.shape}")
        if self.X.shape[1] != len(self.feature_names):
            raise ShapeError(
                f"{len(self.feature_names)} feature names but X has "
                f"{self.X.shape[1]} columns"
            )
        if self.y.shape != (self.X.shape[0],):
            raise ShapeError(f"y shape {self.y.shape} != ({self.X.shape[0]},)")
        bad = ~np.isin(self.y, (0, 1))
        if np.any(bad):
            raise DataError(f"labels must be 0/1, found {np.unique(self.y[bad])!r}")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_missing_cells(self) -> int:
        return 0 if self.missing is None else int(np.sum(self.missing))

    def take(self, idx: np.ndarray, split_tag: str) -> "FeatureFrame":
        return replace(
            self,
            X=self.X[idx],
            y=self.y[idx],
            missing=None if self.missing is None else self.missing[idx],
            split_tag=split_tag,
        )


@dataclass(frozen=True)
class SchemaConfig:
    """Column contract for a credit CSV."""

    label_column: str
    feature_columns: tuple[str, ...]
    missing_markers: tuple[str, ...] = MISSING_DEFAULT
    imputation: str = "median"  # "median" | "mean" | "constant"
    constant_value: float = 0.0

    def __post_init__(self):
        if not self.feature_columns:
            raise SchemaError("feature_columns must be non-empty")
        if self.label_column in self.feature_columns:
            raise SchemaError(
                f"label column {self.label_column!r} cannot also be a feature"
            )
        if self.imputation not in ("median", "mean", "constant"):
            raise ConfigError(f"unknown imputation policy {self.imputation!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "SchemaConfig":
        imputation = d.get("imputation", "median")
        constant_value = 0.0
        if isinstance(imputation, dict):
            constant_value = float(imputation.get("value", 0.0))
            imputation = imputation.get("kind", "constant")
        return cls(
            label_column=d["label_column"],
            feature_columns=tuple(d.get("feature_columns", ())) or cls._need_features(d),
            missing_markers=tuple(d.get("missing_markers", MISSING_DEFAULT)),
            imputation=imputation,
            constant_value=constant_value,
        )

    @staticmethod
    def _need_features(d):
        raise SchemaError("schema dict is missing feature_columns")

    @classmethod
    def from_json(cls, path) -> "SchemaConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def infer(cls, header: Sequence[str], label_column: str,
              missing_markers: Sequence[str] = MISSING_DEFAULT,
              imputation: str = "median") -> "SchemaConfig":
        """Build a schema taking every named non-label header column as a feature."""
        if label_column not in header:
            raise SchemaError(f"label column {label_column!r} not in header {list(header)!r}")
        features = tuple(c for c in header if c and c != label_column)
        return cls(label_column, features, tuple(missing_markers), imputation)

    def to_dict(self) -> dict:
        return {
            "label_column": self.label_column,
            "feature_columns": list(self.feature_columns),
            "missing_markers": list(self.missing_markers),
            "imputation": (
                {"kind": "constant", "value": self.constant_value}
                if self.imputation == "constant"
                else self.imputation
            ),
        }


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple[float, float, float] = (0.7, 0.15, 0.15)
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        fr = tuple(float(f) for f in self.fractions)
        object.__setattr__(self, "fractions", fr)
        if len(fr) != 3 or any(not (0.0 < f < 1.0) for f in fr):
            raise ConfigError(f"fractions must be three values in (0,1), got {fr}")
        if abs(sum(fr) - 1.0) > 1e-12:
            raise ConfigError(f"fractions must sum to 1, got {sum(fr)!r}")


class Splits(NamedTuple):
    train: FeatureFrame
    val: FeatureFrame
    test: FeatureFrame


# ---------------------------------------------------------------------------
# CSV loading
# ---------------------------------------------------------------------------

def load_csv(path, schema: SchemaConfig, subsample: Optional[int] = None,
             seed: int = 0) -> FeatureFrame:
    """Parse a comma-separated UTF-8 file with a header row.

    Cells matching ``schema.missing_markers`` become NaN and are flagged for
    later imputation. Any other unparseable cell raises ``DataError`` with
    its line number. ``subsample`` keeps a seeded random subset of rows.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    markers = set(schema.missing_markers)

    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} is empty") from None
        col_index = {name: i for i, name in enumerate(header)}
        for needed in (schema.label_column, *schema.feature_columns):
            if needed not in col_index:
                raise SchemaError(f"column {needed!r} not found in header of {path}")
        label_i = col_index[schema.label_column]
        feat_is = [col_index[c] for c in schema.feature_columns]

        width = max(label_i, *feat_is) + 1
        rows, labels, miss = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < width:
                raise DataError(f"line {line_no}: expected at least {width} columns, "
                                f"got {len(row)}")
            cell = row[label_i].strip()
            try:
                label = int(float(cell))
            except ValueError:
                raise DataError(f"line {line_no}: bad label {cell!r}") from None
            values = np.empty(len(feat_is))
            missing_row = np.zeros(len(feat_is), dtype=bool)
            for j, fi in enumerate(feat_is):
                cell = row[fi].strip()
                if cell in markers:
                    values[j] = np.nan
                    missing_row[j] = True
                else:
                    try:
                        values[j] = float(cell)
                    except ValueError:
                        raise DataError(
                            f"line {line_no}: bad value {cell!r} in column "
                            f"{schema.feature_columns[j]!r}"
                        ) from None
            rows.append(values)
            labels.append(label)
            miss.append(missing_row)

    if not rows:
        raise DataError(f"{path} contains a header but no data rows")
    X = np.vstack(rows)
    y = np.asarray(labels)
    missing = np.vstack(miss)

    if subsample is not None and subsample < X.shape[0]:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(X.shape[0], size=int(subsample), replace=False))
        X, y, missing = X[keep], y[keep], missing[keep]

    return FeatureFrame(feature_names=tuple(schema.feature_columns),
                        X=X, y=y, missing=missing)


# ---------------------------------------------------------------------------
# imputation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImputeStats:
    fill_values: np.ndarray
    fitted_on: str

    def to_dict(self) -> dict:
        return {"fill_values": self.fill_values.tolist(), "fitted_on": self.fitted_on}

    @classmethod
    def from_dict(cls, d: dict) -> "ImputeStats":
        return cls(np.asarray(d["fill_values"], dtype=np.float64), d["fitted_on"])


def _guard_leakage(frame: FeatureFrame, fitted_on: str, what: str) -> None:
    if frame.split_tag in ("val", "test") and fitted_on != "train":
        raise LeakageError(
            f"{what} statistics fitted on {fitted_on!r} split applied to "
            f"{frame.split_tag!r} split"
        )


def fit_imputer(frame: FeatureFrame, schema: SchemaConfig) -> ImputeStats:
    """Per-column fill values from this frame (use the training split)."""
    fills = np.empty(frame.n_features)
    for j in range(frame.n_features):
        col = frame.X[:, j]
        observed = col[~np.isnan(col)]
        if schema.imputation == "constant":
            fills[j] = schema.constant_value
        elif observed.size == 0:
            raise DataError(
                f"column {frame.feature_names[j]!r} is entirely missing; "
                f"{schema.imputation} imputation impossible"
            )
        elif schema.imputation == "median":
            fills[j] = np.median(observed)
        else:
            fills[j] = np.mean(observed)
    return ImputeStats(fill_values=fills, fitted_on=frame.split_tag)


def impute(frame: FeatureFrame, schema: Optional[SchemaConfig] = None,
           stats: Optional[ImputeStats] = None) -> FeatureFrame:
    """Fill missing cells; fit values come from ``stats`` or from ``frame`` itself."""
    if stats is None:
        if schema is None:
            raise ConfigError("impute needs a schema when no fitted stats are given")
        stats = fit_imputer(frame, schema)
    _guard_leakage(frame, stats.fitted_on, "imputation")
    if stats.fill_values.shape[0] != frame.n_features:
        raise SchemaError(
            f"imputer fitted on {stats.fill_values.shape[0]} features, "
            f"frame has {frame.n_features}"
        )
    X = frame.X.copy()
    nan_mask = np.isnan(X)
    X[nan_mask] = np.broadcast_to(stats.fill_values, X.shape)[nan_mask]
    return replace(frame, X=X, missing=np.zeros_like(nan_mask))


# ---------------------------------------------------------------------------
# winsorization (optional, default off)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WinsorStats:
    lower: np.ndarray
    upper: np.ndarray
    fitted_on: str

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist(),
                "fitted_on": self.fitted_on}

    @classmethod
    def from_dict(cls, d: dict) -> "WinsorStats":
        return cls(np.asarray(d["lower"]), np.asarray(d["upper"]), d["fitted_on"])


def winsorize_fit(frame: FeatureFrame, lower_q: float, upper_q: float) -> WinsorStats:
    if not (0.0 <= lower_q < upper_q <= 1.0):
        raise ConfigError(f"bad winsor quantiles ({lower_q}, {upper_q})")
    lo = np.nanquantile(frame.X, lower_q, axis=0)
    hi = np.nanquantile(frame.X, upper_q, axis=0)
    return WinsorStats(lower=lo, upper=hi, fitted_on=frame.split_tag)


def winsorize_apply(frame: FeatureFrame, stats: WinsorStats) -> FeatureFrame:
    _guard_leakage(frame, stats.fitted_on, "winsorization")
    if stats.lower.shape[0] != frame.n_features:
        raise SchemaError("winsor stats feature count mismatch")
    return replace(frame, X=np.clip(frame.X, stats.lower, stats.upper))


# ---------------------------------------------------------------------------
# standardization
# ---------------------------------------------------------------------------

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class StandardizeStats:
    mean: np.ndarray
    std: np.ndarray  # population std; exact zeros mark constant columns
    fitted_on: str

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "fitted_on": self.fitted_on}

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizeStats":
        return cls(np.asarray(d["mean"]), np.asarray(d["std"]), d["fitted_on"])


def standardize_fit(frame: FeatureFrame) -> StandardizeStats:
    """Per-column mean and population std from this frame (use the training split)."""
    if frame.n_missing_cells:
        raise DataError("standardize_fit requires an imputed frame (missing cells present)")
    mean = np.mean(frame.X, axis=0)
    std = np.std(frame.X, axis=0)  # ddof=0
    std = np.where(std < STD_FLOOR, 0.0, std)
    return StandardizeStats(mean=mean, std=std, fitted_on=frame.split_tag)


def standardize_apply(frame: FeatureFrame, stats: StandardizeStats) -> FeatureFrame:
    """x' = (x - mean) / std per column; constant columns map to all zeros."""
    _guard_leakage(frame, stats.fitted_on, "standardization")
    if stats.mean.shape[0] != frame.n_features:
        raise SchemaError(
            f"standardizer fitted on {stats.mean.shape[0]} features, "
            f"frame has {frame.n_features}"
        )
    safe_std = np.where(stats.std == 0.0, 1.0, stats.std)
    Xs = (frame.X - stats.mean) / safe_std
    Xs[:, stats.std == 0.0] = 0.0
    return replace(frame, X=Xs, standardized=True, stats=stats)


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------

def _largest_remainder(n: int, fractions: Sequence[float]) -> list[int]:
    raw = [n * f for f in fractions]
    sizes = [int(np.floor(r)) for r in raw]
    short = n - sum(sizes)
    order = np.argsort([-(r - np.floor(r)) for r in raw], kind="stable")
    for i in range(short):
        sizes[order[i]] += 1
    return sizes


def split(frame: FeatureFrame, spec: SplitSpec) -> Splits:
    """Deterministic seeded 3-way split; stratified mode preserves the label
    ratio within one sample per split."""
    n = frame.n_rows
    if n < 10:
        raise ConfigError(f"need at least 10 rows to split, got {n}")
    rng = np.random.default_rng(spec.seed)

    buckets: list[list[np.ndarray]] = [[], [], []]
    if spec.stratified:
        for cls in (0, 1):
            idx = np.flatnonzero(frame.y == cls)
            idx = rng.permutation(idx)
            sizes = _largest_remainder(idx.size, spec.fractions)
            stops = np.cumsum(sizes)
            buckets[0].append(idx[: stops[0]])
            buckets[1].append(idx[stops[0]: stops[1]])
            buckets[2].append(idx[stops[1]:])
    else:
        idx = rng.permutation(n)
        sizes = _largest_remainder(n, spec.fractions)
        stops = np.cumsum(sizes)
        buckets[0].append(idx[: stops[0]])
        buckets[1].append(idx[stops[0]: stops[1]])
        buckets[2].append(idx[stops[1]:])

    parts = [np.sort(np.concatenate(b)) for b in buckets]
    for name, p in zip(("train", "val", "test"), parts):
        if p.size == 0:
            raise ConfigError(f"{name} split received 0 rows (n={n}, "
                              f"fractions={spec.fractions})")
    return Splits(
        train=frame.take(parts[0], "train"),
        val=frame.take(parts[1], "val"),
        test=frame.take(parts[2], "test"),
    )


# ---------------------------------------------------------------------------
# synthetic data with a computable Bayes-optimal score
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthSpec:
    """Generative recipe: labels are Bernoulli(sigmoid(logit)) draws where

    logit = linear . x  +  sum coeff * x_i * x_j   (long-range pairs)
                        +  sum coeff * prod(x[start:start+width])  (local motifs)
    """

    linear: tuple[float, ...] = ()
    pairs: tuple[tuple[int, int, float], ...] = ()
    motifs: tuple[tuple[int, int, float], ...] = ()  # (start, width, coeff)

    def logits(self, X: np.ndarray) -> np.ndarray:
        n_features = X.shape[1]
        w = np.zeros(n_features)
        if len(self.linear) > n_features:
            raise ConfigError("more linear weights than features")
        w[: len(self.linear)] = self.linear
        z = X @ w
        for i, j, coeff in self.pairs:
            if not (0 <= i < n_features and 0 <= j < n_features):
                raise ConfigError(f"pair ({i},{j}) out of range for {n_features} features")
            z = z + coeff * X[:, i] * X[:, j]
        for start, width, coeff in self.motifs:
            if not (0 <= start and start + width <= n_features and width >= 1):
                raise ConfigError(f"motif ({start},{width}) out of range")
            z = z + coeff * np.prod(X[:, start: start + width], axis=1)
        return z


SYNTH_PRESETS = ("noise", "strong-single", "linear", "long-range",
                 "local-motif", "local-and-long", "xor-pair")


def synth_preset(name: str, n_features: int) -> SynthSpec:
    """Named generator recipes used by experiments and the CLI."""
    far = n_features - 1
    if name == "noise":
        return SynthSpec()
    if name == "strong-single":
        return SynthSpec(linear=(5.0,))
    if name == "linear":
        return SynthSpec(linear=(3.0, -3.0, 2.0, -1.5, 1.0)[: n_features])
    if name in ("long-range", "xor-pair"):
        return SynthSpec(pairs=((0, far, 3.0),))
    if name == "local-motif":
        return SynthSpec(motifs=((1, 2, 3.0),))
    if name == "local-and-long":
        return SynthSpec(linear=(0.0, 0.5), pairs=((0, far, 2.0),),
                         motifs=((2, 2, 2.0),))
    raise ConfigError(f"unknown synth preset {name!r}; known: {SYNTH_PRESETS}")


def synth_generate(n: int, n_features: int, seed: int,
                   spec: SynthSpec) -> tuple[FeatureFrame, np.ndarray]:
    """Draw a synthetic frame plus its true logits (the Bayes-optimal scores)."""
    if n < 100:
        raise ConfigError(f"synthetic datasets need n >= 100, got {n}")
    if n_features < 1:
        raise ConfigError("n_features must be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n_features))
    logit = spec.logits(X)
    y = (rng.random(n) < sigmoid(logit)).astype(np.int64)
    frame = FeatureFrame(
        feature_names=tuple(f"f{i}" for i in range(n_features)),
        X=X, y=y,
        missing=np.zeros((n, n_features), dtype=bool),
    )
    return frame, logit


# ---------------------------------------------------------------------------
# end-to-end preparation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PreprocessStats:
    """Everything fitted on train that eval-time data must be pushed through."""

    impute: ImputeStats
    standardize: StandardizeStats
    winsor: Optional[WinsorStats] = None

    def to_dict(self) -> dict:
        return {
            "impute": self.impute.to_dict(),
            "standardize": self.standardize.to_dict(),
            "winsor": None if self.winsor is None else self.winsor.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessStats":
        return cls(
            impute=ImputeStats.from_dict(d["impute"]),
            standardize=StandardizeStats.from_dict(d["standardize"]),
            winsor=None if d.get("winsor") is None else WinsorStats.from_dict(d["winsor"]),
        )


def prepare_splits(frame: FeatureFrame, schema: SchemaConfig, spec: SplitSpec,
                   winsor_quantiles: Optional[tuple[float, float]] = None,
                   ) -> tuple[Splits, PreprocessStats]:
    """Split, then impute/winsorize/standardize every split with train-fitted stats."""
    raw = split(frame, spec)
    imp = fit_imputer(raw.train, schema)
    parts = [impute(f, schema, imp) for f in raw]
    win = None
    if winsor_quantiles is not None:
        win = winsorize_fit(parts[0], *winsor_quantiles)
        parts = [winsorize_apply(f, win) for f in parts]
    std = standardize_fit(parts[0])
    parts = [standardize_apply(f, std) for f in parts]
    return Splits(*parts), PreprocessStats(impute=imp, standardize=std, winsor=win)


def apply_preprocess(frame: FeatureFrame, stats: PreprocessStats) -> FeatureFrame:
    """Push a raw frame through train-fitted imputation/winsor/standardization."""
    out = impute(frame, stats=stats.impute)
    if stats.winsor is not None:
        out = winsorize_apply(out, stats.winsor)
    return standardize_apply(out, stats.standardize)
