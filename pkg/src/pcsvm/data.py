"""Loading, validation, scaling, and splitting of binary-labeled tabular datasets.

Supported on-disk formats:

* KEEL: ``@relation`` / ``@attribute <name> <type>`` / ``@data`` header lines,
  comma-separated rows, class attribute last.  ``@inputs`` / ``@outputs``
  lines are tolerated and ignored.
* CSV: optional header row, class column selectable by index.

The minority class is always mapped to label +1.  For files where the two
class counts tie, an explicit ``minority_value`` must be supplied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "DatasetFormatError",
    "FoldPlan",
    "Scaler",
    "imbalance_ratio",
    "load_dataset",
    "standardize",
    "stratified_kfold",
    "synth_imbalanced",
]


class DatasetFormatError(ValueError):
    """Malformed dataset file; message names the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix with binary labels in {+1, -1}.

    Arrays are frozen after construction, so a Dataset can be shared
    read-only across parallel fold workers.
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = "unnamed"
    attribute_names: tuple[str, ...] = ()

    def __post_init__(self):
        feats = np.array(self.features, dtype=np.float64, copy=True, order="C")
        labs = np.array(self.labels, dtype=np.int64, copy=True)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n, d = feats.shape
        if n < 2 or d < 1:
            raise ValueError(f"need n >= 2 rows and d >= 1 columns, got {n}x{d}")
        if labs.shape != (n,):
            raise ValueError("labels length must match feature rows")
        if not np.all(np.isfinite(feats)):
            bad = int(np.flatnonzero(~np.isfinite(feats).all(axis=1))[0])
            raise ValueError(f"non-finite feature values (first bad row index {bad})")
        if not np.isin(labs, (-1, 1)).all():
            raise ValueError("every label must be exactly +1 or -1")
        names = tuple(self.attribute_names) or tuple(f"x{i}" for i in range(d))
        if len(names) != d:
            raise ValueError("attribute_names length must match feature columns")
        feats.flags.writeable = False
        labs.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)
        object.__setattr__(self, "attribute_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_pos(self) -> int:
        return int(np.sum(self.labels == 1))

    @property
    def n_neg(self) -> int:
        return int(np.sum(self.labels == -1))

    def subset(self, indices, name: str | None = None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx],
                       name=name or self.name, attribute_names=self.attribute_names)


@dataclass(frozen=True)
class FoldPlan:
    """Stratified fold assignment: ``assignments[i]`` is the fold of row i."""

    k: int
    seed: int
    assignments: np.ndarray

    def __post_init__(self):
        a = np.array(self.assignments, dtype=np.int64, copy=True)
        if a.ndim != 1 or not ((a >= 0) & (a < self.k)).all():
            raise ValueError("assignments must be fold indices in [0, k)")
        a.flags.writeable = False
        object.__setattr__(self, "assignments", a)

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """(train_indices, test_indices) for one fold."""
        test = np.flatnonzero(self.assignments == fold)
        train = np.flatnonzero(self.assignments != fold)
        return train, test


@dataclass(frozen=True)
class Scaler:
    """Per-feature affine scaling fitted on training data only.

    Apply to test folds with :meth:`transform` so their statistics never
    leak into the fit.
    """

    mean: np.ndarray
    scale: np.ndarray

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.scale

    def transform_dataset(self, ds: Dataset) -> Dataset:
        return Dataset(self.transform(ds.features), ds.labels,
                       name=ds.name, attribute_names=ds.attribute_names)


def imbalance_ratio(ds: Dataset) -> float:
    """Negative-to-positive class count ratio (IR = N- / N+)."""
    n_pos = ds.n_pos
    if n_pos == 0:
        raise ValueError("imbalance ratio undefined: no positive instances")
    if ds.n_neg == 0:
        raise ValueError("imbalance ratio undefined: no negative instances")
    return ds.n_neg / n_pos


def standardize(ds: Dataset) -> tuple[Dataset, Scaler]:
    """Zero-mean, unit-variance features (population std; constant columns -> 0)."""
    mean = ds.features.mean(axis=0)
    std = ds.features.std(axis=0)
    scale = np.where(std > 0.0, std, 1.0)
    scaler = Scaler(mean=mean, scale=scale)
    return scaler.transform_dataset(ds), scaler


def stratified_kfold(ds: Dataset, k: int, seed: int) -> FoldPlan:
    """Deterministic stratified k-fold assignment.

    Each class is shuffled with the seeded generator and dealt round-robin,
    so per-fold class counts differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    assignments = np.empty(ds.n, dtype=np.int64)
    for cls in (1, -1):
        idx = np.flatnonzero(ds.labels == cls)
        if idx.size < k:
            label = "minority" if cls == 1 else "majority"
            raise ValueError(
                f"insufficient {label} samples: class {cls:+d} has {idx.size} < k={k}")
        perm = rng.permutation(idx)
        assignments[perm] = np.arange(perm.size) % k
    return FoldPlan(k=k, seed=seed, assignments=assignments)


def synth_imbalanced(n_neg: int, n_pos: int, separation: float, seed: int) -> Dataset:
    """Two 2-D Gaussian clouds: negatives at the origin, positives offset
    by ``separation`` along the first axis.  Reproducible by seed."""
    if n_pos < 2:
        raise ValueError("need n_pos >= 2")
    if n_neg < 2:
        raise ValueError("need n_neg >= 2")
    rng = np.random.default_rng(seed)
    neg = rng.normal(size=(n_neg, 2))
    pos = rng.normal(size=(n_pos, 2))
    pos[:, 0] += separation
    features = np.vstack([neg, pos])
    labels = np.concatenate([np.full(n_neg, -1), np.full(n_pos, 1)])
    return Dataset(features, labels, name=f"synth_{n_neg}n_{n_pos}p_s{separation}")


# ---------------------------------------------------------------------------
# file loading

_NUMERIC_KEEL_TYPES = ("real", "integer", "numeric")


def load_dataset(path, fmt: str = "keel", *, minority_value: str | None = None,
                 csv_has_header: bool = False, csv_class_column: int = -1) -> Dataset:
    """Load a binary-labeled dataset and map its minority class to +1.

    ``minority_value`` overrides the by-count minority rule; it is required
    when the two classes tie.  For CSV input, ``csv_class_column`` selects
    the class column (default: last) and ``csv_has_header`` consumes the
    first row as attribute names.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if fmt == "keel":
        return _load_keel(path, minority_value)
    if fmt == "csv":
        return _load_csv(path, minority_value, csv_has_header, csv_class_column)
    raise ValueError(f"unknown dataset format {fmt!r}")


def _parse_keel_attribute(line: str, lineno: int) -> tuple[str, str]:
    """Returns (name, kind) with kind 'numeric' or 'nominal:v1,v2,...'."""
    body = line.split(None, 1)[1] if len(line.split(None, 1)) > 1 else ""
    if not body:
        raise DatasetFormatError("@attribute line missing name", lineno)
    if "{" in body:
        name = body[:body.index("{")].strip()
        values = body[body.index("{") + 1:body.rindex("}")]
        vals = [v.strip() for v in values.split(",")]
        return name, "nominal:" + ",".join(vals)
    parts = body.split(None, 1)
    name = parts[0].strip()
    type_text = parts[1].strip().lower() if len(parts) > 1 else ""
    base = type_text.split("[")[0].strip()
    if base not in _NUMERIC_KEEL_TYPES:
        raise DatasetFormatError(f"unsupported attribute type {type_text!r}", lineno)
    return name, "numeric"


def _load_keel(path: Path, minority_value: str | None) -> Dataset:
    attrs: list[tuple[str, str]] = []
    rows: list[tuple[int, list[str]]] = []
    in_data = False
    name = path.stem
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if in_data:
                rows.append((lineno, [c.strip() for c in line.split(",")]))
                continue
            lowered = line.lower()
            if lowered.startswith("@relation"):
                parts = line.split(None, 1)
                if len(parts) > 1:
                    name = parts[1].strip()
            elif lowered.startswith("@attribute"):
                attrs.append(_parse_keel_attribute(line, lineno))
            elif lowered.startswith(("@inputs", "@input", "@outputs", "@output")):
                continue
            elif lowered.startswith("@data"):
                in_data = True
            else:
                raise DatasetFormatError(f"unrecognized header line {line!r}", lineno)
    if not in_data:
        raise DatasetFormatError("missing @data section")
    if len(attrs) < 2:
        raise DatasetFormatError("need at least one feature attribute plus a class attribute")
    *feature_attrs, (class_name, class_kind) = attrs
    for attr_name, kind in feature_attrs:
        if kind != "numeric":
            raise DatasetFormatError(
                f"nominal non-class attribute {attr_name!r} is not supported")
    class_values: list[str] | None = None
    if class_kind.startswith("nominal:"):
        class_values = class_kind[len("nominal:"):].split(",")
        if len(class_values) != 2:
            raise DatasetFormatError(
                f"class attribute {class_name!r} must have exactly 2 values, "
                f"got {len(class_values)}")
    return _assemble(rows, len(feature_attrs), [a for a, _ in feature_attrs],
                     name, minority_value, declared_class_values=class_values)


def _load_csv(path: Path, minority_value: str | None, has_header: bool,
              class_column: int) -> Dataset:
    rows: list[tuple[int, list[str]]] = []
    header: list[str] | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            cells = [c.strip() for c in line.split(",")]
            if has_header and header is None:
                header = cells
                continue
            rows.append((lineno, cells))
    if not rows:
        raise DatasetFormatError("no data rows")
    width = len(rows[0][1])
    col = class_column if class_column >= 0 else width + class_column
    if not 0 <= col < width:
        raise DatasetFormatError(f"class column {class_column} out of range for width {width}")
    reordered = []
    for lineno, cells in rows:
        if len(cells) != width:
            raise DatasetFormatError(
                f"expected {width} columns, got {len(cells)}", lineno)
        reordered.append((lineno, cells[:col] + cells[col + 1:] + [cells[col]]))
    if header is not None:
        names = header[:col] + header[col + 1:]
    else:
        names = [f"x{i}" for i in range(width - 1)]
    return _assemble(reordered, width - 1, names, path.stem, minority_value,
                     declared_class_values=None)


def _assemble(rows, n_features: int, attr_names: list[str], name: str,
              minority_value: str | None, declared_class_values) -> Dataset:
    features = np.empty((len(rows), n_features))
    class_cells: list[str] = []
    for r, (lineno, cells) in enumerate(rows):
        if len(cells) != n_features + 1:
            raise DatasetFormatError(
                f"expected {n_features + 1} columns, got {len(cells)}", lineno)
        for c in range(n_features):
            try:
                value = float(cells[c])
            except ValueError:
                raise DatasetFormatError(
                    f"non-numeric feature cell {cells[c]!r}", lineno) from None
            if not np.isfinite(value):
                raise DatasetFormatError(
                    f"non-finite feature cell {cells[c]!r}", lineno)
            features[r, c] = value
        class_cells.append(cells[-1])
    distinct = sorted(set(class_cells))
    if len(distinct) == 1:
        raise DatasetFormatError(f"single-class dataset (only {distinct[0]!r} present)")
    if len(distinct) != 2:
        raise DatasetFormatError(
            f"non-binary class column: {len(distinct)} distinct values {distinct[:5]}")
    if declared_class_values is not None:
        undeclared = set(distinct) - set(declared_class_values)
        if undeclared:
            raise DatasetFormatError(
                f"class values {sorted(undeclared)} not declared in header")
    counts = {v: class_cells.count(v) for v in distinct}
    if minority_value is not None:
        if minority_value not in counts:
            raise DatasetFormatError(
                f"minority value {minority_value!r} not among class values {distinct}")
        positive = minority_value
    elif counts[distinct[0]] == counts[distinct[1]]:
        raise DatasetFormatError(
            f"class counts tie ({counts}); pass minority_value to pick the +1 class")
    else:
        positive = min(counts, key=counts.get)
    labels = np.where(np.asarray(class_cells) == positive, 1, -1)
    return Dataset(features, labels, name=name, attribute_names=tuple(attr_names))
