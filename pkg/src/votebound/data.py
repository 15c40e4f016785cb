"""Synthetic generators, tabular ingestion, preprocessing, and splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataFormatError, DomainError


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix with integer labels in {0..K-1}.

    ``preprocessing`` records the transforms applied so far; ``vocabs``
    holds the ordinal-encoding tables for categorical CSV columns (None
    when the source was fully numeric).
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    split: str = "full"
    preprocessing: tuple = ()
    seed: int | None = None
    vocabs: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
            raise DomainError("features must be n-by-d and labels length n")
        if not np.all(np.isfinite(X)):
            raise DomainError("features contain missing or non-finite values")
        if y.size and (y.min() < 0 or y.max() >= self.class_count):
            raise DomainError("labels out of range for class_count")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def d(self) -> int:
        return self.features.shape[1]


# Two-moons geometry, fixed so golden tests stay stable: both arcs have
# radius 1; the upper arc is the half circle (cos t, sin t), t in [0, pi],
# and the lower arc is its point reflection (1 - cos t, 0.5 - sin t), i.e.
# the same crescent offset by (+1, -0.5) in bounding box. The union spans
# [-1, 2] x [-0.5, 1] and is mapped affinely onto [-2, 2]^2 before noise.
_MOON_X_LO, _MOON_X_HI = -1.0, 2.0
_MOON_Y_LO, _MOON_Y_HI = -0.5, 1.0


def gen_two_moons(n: int, noise_std: float = 0.05, rng: np.random.Generator | None = None) -> Dataset:
    """Two interleaving half-circles, one class each, in [-2, 2]^2.

    Gaussian coordinate noise with the given standard deviation is added
    after scaling. Labels are balanced to within one example.
    """
    if n < 2:
        raise DomainError("need at least 2 examples")
    if noise_std < 0:
        raise DomainError("noise_std must be nonnegative")
    if rng is None:
        rng = np.random.default_rng()
    n0 = n // 2
    n1 = n - n0
    t0 = rng.uniform(0.0, math.pi, n0)
    t1 = rng.uniform(0.0, math.pi, n1)
    upper = np.column_stack([np.cos(t0), np.sin(t0)])
    lower = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    X = np.vstack([upper, lower])
    X[:, 0] = -2.0 + 4.0 * (X[:, 0] - _MOON_X_LO) / (_MOON_X_HI - _MOON_X_LO)
    X[:, 1] = -2.0 + 4.0 * (X[:, 1] - _MOON_Y_LO) / (_MOON_Y_HI - _MOON_Y_LO)
    if noise_std > 0:
        X = X + rng.normal(0.0, noise_std, X.shape)
    y = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    perm = rng.permutation(n)
    return Dataset(X[perm], y[perm], 2, preprocessing=("two_moons",))


def gen_two_gaussians(n: int, rng: np.random.Generator | None = None) -> Dataset:
    """Two Gaussian blobs at (-1, 0) and (1, 0) with variances (0.1, 1),
    one class each, nearly separable along the first coordinate."""
    if n < 2:
        raise DomainError("need at least 2 examples")
    if rng is None:
        rng = np.random.default_rng()
    n0 = n // 2
    n1 = n - n0
    std = np.sqrt([0.1, 1.0])
    X0 = rng.normal(0.0, 1.0, (n0, 2)) * std + np.array([-1.0, 0.0])
    X1 = rng.normal(0.0, 1.0, (n1, 2)) * std + np.array([1.0, 0.0])
    y = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    X = np.vstack([X0, X1])
    perm = rng.permutation(n)
    return Dataset(X[perm], y[perm], 2, preprocessing=("two_gaussians",))


def add_input_noise(data: Dataset, sigma2: float, rng: np.random.Generator) -> Dataset:
    """Add i.i.d. coordinate-wise Gaussian noise of variance sigma2."""
    if sigma2 < 0:
        raise DomainError("noise variance must be nonnegative")
    if sigma2 == 0:
        return data
    X = data.features + rng.normal(0.0, math.sqrt(sigma2), data.features.shape)
    return replace(data, features=X, preprocessing=data.preprocessing + (f"noise({sigma2})",))


def _parse_token(tok: str):
    try:
        return float(tok)
    except ValueError:
        return None


def load_csv(path, label_col: int = -1, has_header: bool = False, vocabs: dict | None = None) -> Dataset:
    """Load a CSV file into a Dataset.

    Columns whose values do not all parse as numbers are treated as
    categorical and ordinal-encoded in order of first appearance. When a
    ``vocabs`` mapping from a previous load is supplied, its codes are
    reused and unseen categories receive the reserved code len(vocab).
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if has_header and line_no == 1:
                continue
            rows.append((line_no, row))
    if not rows:
        raise DataFormatError("file holds no data rows")
    width = len(rows[0][1])
    for line_no, row in rows:
        if len(row) != width:
            raise DataFormatError(
                f"expected {width} fields, found {len(row)}", line_number=line_no
            )
    label_idx = label_col if label_col >= 0 else width + label_col
    feat_idx = [j for j in range(width) if j != label_idx]

    columns = {j: [row[j].strip() for _, row in rows] for j in range(width)}
    fitted = {} if vocabs is None else dict(vocabs)
    X = np.empty((len(rows), len(feat_idx)))
    for out_j, j in enumerate(feat_idx):
        vals = columns[j]
        parsed = [_parse_token(v) for v in vals]
        if all(p is not None for p in parsed) and j not in fitted:
            X[:, out_j] = parsed
            continue
        vocab = fitted.get(j)
        if vocab is None:
            vocab = {}
            for v in vals:
                if v not in vocab:
                    vocab[v] = len(vocab)
            fitted[j] = vocab
        reserved = len(vocab)
        X[:, out_j] = [vocab.get(v, reserved) for v in vals]

    label_tokens = columns[label_idx]
    parsed = [_parse_token(v) for v in label_tokens]
    if all(p is not None for p in parsed):
        classes = sorted(set(parsed))
    else:
        classes = sorted(set(label_tokens))
        parsed = label_tokens
    code = {c: k for k, c in enumerate(classes)}
    y = np.array([code[v] for v in parsed], dtype=np.int64)
    return Dataset(X, y, len(classes), preprocessing=("csv",), vocabs=fitted or None)


def load_libsvm(path) -> Dataset:
    """Load a sparse 'label index:value' text file into a dense Dataset."""
    labels = []
    entries = []
    max_feature = 0
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            lab = _parse_token(parts[0])
            if lab is None:
                raise DataFormatError(f"unparseable label {parts[0]!r}", line_number=line_no)
            feats = {}
            for item in parts[1:]:
                if ":" not in item:
                    raise DataFormatError(
                        f"expected index:value, found {item!r}", line_number=line_no
                    )
                idx_s, val_s = item.split(":", 1)
                try:
                    idx = int(idx_s)
                except ValueError:
                    raise DataFormatError(
                        f"unparseable feature index {idx_s!r}", line_number=line_no
                    ) from None
                val = _parse_token(val_s)
                if val is None or idx < 1:
                    raise DataFormatError(
                        f"unparseable feature {item!r}", line_number=line_no
                    )
                feats[idx] = val
                max_feature = max(max_feature, idx)
            labels.append(lab)
            entries.append(feats)
    if not labels:
        raise DataFormatError("file holds no data rows")
    X = np.zeros((len(labels), max_feature))
    for i, feats in enumerate(entries):
        for idx, val in feats.items():
            X[i, idx - 1] = val
    classes = sorted(set(labels))
    code = {c: k for k, c in enumerate(classes)}
    y = np.array([code[v] for v in labels], dtype=np.int64)
    return Dataset(X, y, len(classes), preprocessing=("libsvm",))


def load_tabular(path, fmt: str = "csv", **kwargs) -> Dataset:
    """Dispatch to the CSV or LIBSVM loader."""
    if fmt == "csv":
        return load_csv(path, **kwargs)
    if fmt == "libsvm":
        return load_libsvm(path, **kwargs)
    raise DomainError(f"unknown tabular format {fmt!r}")


def split_dataset(data: Dataset, test_fraction: float = 0.2, rng: np.random.Generator | None = None):
    """Random partition into train and test; train gets ceil((1-f) * n) rows."""
    if not 0.0 < test_fraction < 1.0:
        raise DomainError("test_fraction must be in (0, 1)")
    if rng is None:
        rng = np.random.default_rng()
    n = data.n
    n_train = math.ceil((1.0 - test_fraction) * n)
    perm = rng.permutation(n)
    tr, te = perm[:n_train], perm[n_train:]
    train = replace(data, features=data.features[tr], labels=data.labels[tr], split="train")
    test = replace(data, features=data.features[te], labels=data.labels[te], split="test")
    return train, test


@dataclass(frozen=True)
class TrainStats:
    """Per-column standardization statistics fitted on a training split."""

    mean: np.ndarray
    std: np.ndarray


def fit_train_stats(train: Dataset) -> TrainStats:
    """Column means and standard deviations; constant columns get std 1e-12."""
    mu = train.features.mean(axis=0)
    sd = np.maximum(train.features.std(axis=0), 1e-12)
    return TrainStats(mu, sd)


def preprocess(data: Dataset, train_stats: TrainStats) -> Dataset:
    """Z-score features using statistics from the training split only."""
    X = (data.features - train_stats.mean) / train_stats.std
    return replace(data, features=X, preprocessing=data.preprocessing + ("zscore",))
