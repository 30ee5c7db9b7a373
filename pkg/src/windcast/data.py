"""CSV ingestion, min-max scaling and supervised-set construction.

A time series arrives as a CSV with an ISO-8601 timestamp column, a power
column and optional weather-forecast feature columns. From it we build
either lag-window samples (autoregressive mode) or feature-aligned samples
(weather mode), then split chronologically into train/validation/test.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .errors import (
    DataError,
    EmptyDataError,
    InsufficientDataError,
    IntegrityError,
    ParseError,
    SchemaError,
    ShapeError,
)


@dataclass(frozen=True)
class CsvSchema:
    """Names of the columns to pull out of a CSV file."""

    timestamp_col: str
    target_col: str
    feature_cols: tuple[str, ...] = ()


@dataclass
class TimeSeriesFrame:
    """One time series: strictly increasing timestamps, a target column
    and equally long named feature columns."""

    timestamps: list[datetime]
    target: np.ndarray
    target_name: str
    features: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.timestamps)


def load_csv(path: str, schema: CsvSchema) -> TimeSeriesFrame:
    """Parse a CSV file into a frame, sorted ascending by timestamp.

    Rejects missing columns, unparsable or non-finite cells (with the
    offending row number) and duplicate timestamps.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read data file {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataError(f"{path}: file is empty") from None
        wanted = (schema.timestamp_col, schema.target_col, *schema.feature_cols)
        for name in wanted:
            if name not in header:
                raise SchemaError(f"{path}: missing column {name!r}")
        idx = {name: header.index(name) for name in wanted}

        rows: list[tuple[datetime, float, tuple[float, ...]]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ts = datetime.fromisoformat(row[idx[schema.timestamp_col]])
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}: row {lineno}: bad timestamp ({exc})") from None
            try:
                target = float(row[idx[schema.target_col]])
                feats = tuple(float(row[idx[c]]) for c in schema.feature_cols)
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}: row {lineno}: bad number ({exc})") from None
            for value in (target, *feats):
                if not np.isfinite(value):
                    raise ParseError(f"{path}: row {lineno}: non-finite value {value!r}")
            rows.append((ts, target, feats))

    if not rows:
        raise EmptyDataError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    for a, b in zip(rows, rows[1:]):
        if a[0] == b[0]:
            raise IntegrityError(f"{path}: duplicate timestamp {a[0].isoformat()}")

    target = np.array([r[1] for r in rows], dtype=float)
    features = {
        name: np.array([r[2][j] for r in rows], dtype=float)
        for j, name in enumerate(schema.feature_cols)
    }
    return TimeSeriesFrame(
        timestamps=[r[0] for r in rows],
        target=target,
        target_name=schema.target_col,
        features=features,
    )


@dataclass
class Scaler:
    """Per-column min/max for mapping columns onto [0, 1]."""

    columns: dict[str, tuple[float, float]]

    def to_dict(self) -> dict:
        return {name: [lo, hi] for name, (lo, hi) in self.columns.items()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Scaler":
        return cls({name: (float(lo), float(hi)) for name, (lo, hi) in doc.items()})


def fit_scaler(frame: TimeSeriesFrame) -> Scaler:
    """Record min and max of the target and every feature column."""
    if len(frame) == 0:
        raise EmptyDataError("cannot fit a scaler on an empty frame")
    columns = {frame.target_name: (float(frame.target.min()), float(frame.target.max()))}
    for name, col in frame.features.items():
        columns[name] = (float(col.min()), float(col.max()))
    return Scaler(columns)


def apply_column(scaler: Scaler, name: str, values: np.ndarray) -> np.ndarray:
    """Map one column to [0, 1]; a constant column maps to all zeros."""
    lo, hi = scaler.columns[name]
    if hi == lo:
        return np.zeros_like(np.asarray(values, dtype=float))
    return (np.asarray(values, dtype=float) - lo) / (hi - lo)


def invert_column(scaler: Scaler, name: str, values: np.ndarray) -> np.ndarray:
    """Undo apply_column; identity for non-constant columns."""
    lo, hi = scaler.columns[name]
    return lo + np.asarray(values, dtype=float) * (hi - lo)


def apply_scaler(frame: TimeSeriesFrame, scaler: Scaler) -> TimeSeriesFrame:
    """Return a copy of the frame with every column scaled to [0, 1]."""
    return TimeSeriesFrame(
        timestamps=list(frame.timestamps),
        target=apply_column(scaler, frame.target_name, frame.target),
        target_name=frame.target_name,
        features={
            name: apply_column(scaler, name, col) for name, col in frame.features.items()
        },
    )


@dataclass
class SupervisedSet:
    """Feature matrix, target vector and the feature names that label X's
    columns. target_indices maps each sample back to its frame row."""

    x: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    target_indices: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 2 or self.y.ndim != 1:
            raise ShapeError("X must be 2-D and Y 1-D")
        if self.x.shape[0] != self.y.shape[0]:
            raise ShapeError(
                f"X has {self.x.shape[0]} rows but Y has {self.y.shape[0]}"
            )
        if len(self.feature_names) != self.x.shape[1]:
            raise ShapeError(
                f"{len(self.feature_names)} feature names for {self.x.shape[1]} columns"
            )

    def __len__(self) -> int:
        return self.x.shape[0]


def make_lag_windows(target, lag: int, horizon: int = 1) -> SupervisedSet:
    """Build autoregressive samples from a single series.

    Sample i uses values[i .. i+lag-1] as features (chronological order)
    and values[i+lag+horizon-1] as the target, giving
    n = len - lag - horizon + 1 samples. Column j holds the value lag-j
    steps before delivery, so the names run lag_L .. lag_1 with lag_1 the
    most recent observation.
    """
    values = np.asarray(target, dtype=float)
    if lag < 1 or horizon < 1:
        raise SchemaError("lag and horizon must be >= 1")
    n = len(values) - lag - horizon + 1
    if n < 1:
        raise InsufficientDataError(
            f"series of length {len(values)} too short for lag {lag}, horizon {horizon}"
        )
    x = np.lib.stride_tricks.sliding_window_view(values, lag)[:n].copy()
    first_target = lag + horizon - 1
    y = values[first_target : first_target + n].copy()
    names = tuple(f"lag_{lag - j}" for j in range(lag))
    return SupervisedSet(x, y, names, target_indices=np.arange(first_target, first_target + n))


def make_nwp_set(
    frame: TimeSeriesFrame,
    feature_columns,
    horizon_alignment: int = 0,
) -> SupervisedSet:
    """Build samples from weather-forecast columns aligned with the target.

    Feature values are treated as forecasts valid at delivery time, so the
    default alignment pairs row i with target row i. A positive
    horizon_alignment instead pairs features at i with the target at
    i + horizon_alignment.
    """
    names = tuple(feature_columns)
    if not names:
        raise SchemaError("at least one feature column is required")
    for name in names:
        if name not in frame.features:
            raise SchemaError(f"unknown feature column {name!r}")
    if horizon_alignment < 0:
        raise SchemaError("horizon_alignment must be >= 0")
    n = len(frame) - horizon_alignment
    if n < 1:
        raise InsufficientDataError("alignment leaves no rows")
    x = np.column_stack([frame.features[name][:n] for name in names])
    y = frame.target[horizon_alignment : horizon_alignment + n].copy()
    return SupervisedSet(x, y, names, target_indices=np.arange(horizon_alignment, horizon_alignment + n))


def chronological_split(
    sset: SupervisedSet,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
) -> tuple[SupervisedSet, SupervisedSet, SupervisedSet]:
    """Split into contiguous train/validation/test slices, no shuffling.

    Train and validation sizes are floored; leftover rows go to test.
    """
    if any(r <= 0 for r in ratios):
        raise SchemaError("split ratios must be positive")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise SchemaError(f"split ratios must sum to 1, got {sum(ratios)}")
    n = len(sset)
    n_train = int(n * ratios[0])
    n_val = int(n * ratios[1])
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise InsufficientDataError(f"{n} samples cannot fill a {ratios} split")

    def piece(lo: int, hi: int) -> SupervisedSet:
        ti = None if sset.target_indices is None else sset.target_indices[lo:hi].copy()
        return SupervisedSet(sset.x[lo:hi].copy(), sset.y[lo:hi].copy(), sset.feature_names, ti)

    return (
        piece(0, n_train),
        piece(n_train, n_train + n_val),
        piece(n_train + n_val, n),
    )
