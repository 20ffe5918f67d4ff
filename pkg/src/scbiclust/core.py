"""Data containers, standardization, CSV I/O, seeded streams and BCSS.

Everything here is shared by the clustering, null-model and benchmark
modules.  Indices are 0-based throughout.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "BiclustError",
    "ConstantFeature",
    "RaggedRows",
    "NonNumeric",
    "DataMatrix",
    "Partition",
    "Bicluster",
    "rng_stream",
    "standardize",
    "restandardize",
    "read_csv",
    "write_csv",
    "bcss",
    "pairwise_bcss",
]


class BiclustError(Exception):
    """Base class for errors raised by this package."""


class InputError(BiclustError):
    """Bad user input (file contents, arguments)."""


class NumericError(BiclustError):
    """A numerical routine could not proceed."""


class ConstantFeature(InputError):
    def __init__(self, j: int):
        super().__init__(f"feature {j} has zero variance")
        self.j = j


class RaggedRows(InputError):
    def __init__(self, line: int):
        super().__init__(f"line {line}: field count differs from first row")
        self.line = line


class NonNumeric(InputError):
    def __init__(self, line: int, field: int, text: str = ""):
        super().__init__(f"line {line}, field {field}: cannot parse {text!r} as a number")
        self.line = line
        self.field = field


@dataclass(frozen=True)
class DataMatrix:
    """Dense n x p matrix; rows are observations, columns features."""

    values: np.ndarray
    feature_names: Optional[tuple] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise InputError("data matrix must be two-dimensional")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise InputError(f"data matrix has shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("data matrix contains NaN or infinite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.feature_names is not None:
            names = tuple(str(s) for s in self.feature_names)
            if len(names) != v.shape[1]:
                raise InputError("feature_names length does not match column count")
            object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape


def _as_array(X) -> np.ndarray:
    return X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)


@dataclass(frozen=True)
class Partition:
    """Two-cluster assignment with labels in {1, 2}."""

    labels: np.ndarray

    def __post_init__(self):
        lab = np.array(self.labels, dtype=np.int8)
        if lab.ndim != 1 or not np.all((lab == 1) | (lab == 2)):
            raise ValueError("partition labels must be a 1-D vector of 1s and 2s")
        if np.all(lab == 1) or np.all(lab == 2):
            raise ValueError("both clusters of a partition must be nonempty")
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @classmethod
    def from_mask(cls, in_first) -> "Partition":
        return cls(np.where(np.asarray(in_first, dtype=bool), 1, 2))

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def n1(self) -> int:
        return int(np.count_nonzero(self.labels == 1))

    @property
    def n2(self) -> int:
        return self.n - self.n1

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)

    def smaller(self) -> np.ndarray:
        """Indices of the smaller cluster; on a size tie, the one holding row 0."""
        n1, n2 = self.n1, self.n2
        if n1 < n2:
            return self.members(1)
        if n2 < n1:
            return self.members(2)
        return self.members(int(self.labels[0]))

    def same_as(self, other: "Partition") -> bool:
        """Equality up to swapping the two labels."""
        a = self.labels == 1
        b = other.labels == 1
        return bool(np.array_equal(a, b) or np.array_equal(a, ~b))


@dataclass
class Bicluster:
    """A discovered submatrix together with the statistics that produced it."""

    rows: np.ndarray
    cols: np.ndarray
    kind: str
    weights: np.ndarray
    ks_statistic: float
    ks_p_value: float
    m: int
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.unique(np.asarray(self.rows, dtype=int))
        self.cols = np.unique(np.asarray(self.cols, dtype=int))
        if self.kind not in ("mean", "variance"):
            raise ValueError(f"unknown bicluster kind {self.kind!r}")

    @property
    def valid(self) -> bool:
        return self.rows.size >= 2 and self.cols.size >= 2

    def mask(self, n: int, p: int) -> np.ndarray:
        out = np.zeros((n, p), dtype=bool)
        out[np.ix_(self.rows, self.cols)] = True
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rows": [int(i) for i in self.rows],
            "cols": [int(j) for j in self.cols],
            "m": int(self.m),
            "ks_statistic": float(self.ks_statistic),
            "ks_p_value": float(self.ks_p_value),
            "weights": [float(x) for x in self.weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Bicluster":
        return cls(
            rows=d["rows"],
            cols=d["cols"],
            kind=d["kind"],
            weights=np.asarray(d["weights"], dtype=float),
            ks_statistic=d["ks_statistic"],
            ks_p_value=d["ks_p_value"],
            m=d["m"],
        )


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``.

    Streams with different keys are statistically independent and do not
    depend on the order in which they are created, so serial and parallel
    replicate loops draw identical numbers.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def standardize(X, drop_constant: bool = False):
    """Center each column and scale it to unit sample standard deviation.

    The standard deviation uses divisor ``n - 1``.

    Parameters
    ----------
    X : DataMatrix or array_like
    drop_constant : bool
        If set, zero-variance columns are removed (with a warning) instead of
        raising :class:`ConstantFeature`.

    Returns
    -------
    DataMatrix, or ``(DataMatrix, kept_columns)`` when ``drop_constant`` is set.
    """
    names = X.feature_names if isinstance(X, DataMatrix) else None
    A = _as_array(X)
    if A.shape[0] < 2:
        raise InputError("standardization needs at least two observations")
    mu = A.mean(axis=0)
    C = A - mu
    sd = np.sqrt((C * C).sum(axis=0) / (A.shape[0] - 1))
    const = ~(sd > 0)
    # exact-constant columns can leave round-off residue after centering
    const |= sd <= 1e-14 * np.maximum(np.abs(mu), 1.0)
    keep = np.flatnonzero(~const)
    if const.any():
        if not drop_constant:
            raise ConstantFeature(int(np.flatnonzero(const)[0]))
        warnings.warn(f"dropping {int(const.sum())} constant feature(s)", stacklevel=2)
    Z = C[:, keep] / sd[keep]
    # second pass removes the residual mean left by the first
    Z -= Z.mean(axis=0)
    Z /= np.sqrt((Z * Z).sum(axis=0) / (A.shape[0] - 1))
    kept_names = None if names is None else tuple(names[j] for j in keep)
    out = DataMatrix(Z, kept_names)
    if drop_constant:
        return out, keep
    return out


def restandardize(A: np.ndarray) -> np.ndarray:
    """Standardize columns, leaving zero-variance columns at zero."""
    C = A - A.mean(axis=0)
    sd = np.sqrt((C * C).sum(axis=0) / (A.shape[0] - 1))
    ok = sd > 1e-12
    C[:, ok] /= sd[ok]
    C[:, ~ok] = 0.0
    return C


def read_csv(path, has_header: bool = False) -> DataMatrix:
    """Read a comma-separated numeric matrix.

    Line numbers in error messages are 1-based file lines; field numbers
    are 1-based as well.
    """
    rows = []
    names = None
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, start=1):
            if not rec or (len(rec) == 1 and rec[0].strip() == ""):
                continue
            if has_header and names is None:
                names = [s.strip() for s in rec]
                width = len(names)
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise RaggedRows(lineno)
            vals = []
            for k, text in enumerate(rec, start=1):
                try:
                    x = float(text)
                except ValueError:
                    raise NonNumeric(lineno, k, text) from None
                if not np.isfinite(x):
                    raise NonNumeric(lineno, k, text)
                vals.append(x)
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return DataMatrix(np.array(rows, dtype=float), names)


def write_csv(path, X, header: bool = False) -> None:
    """Write a matrix with 17 significant digits (exact float round-trip)."""
    A = _as_array(X)
    with open(path, "w", newline="") as fh:
        if header:
            names = getattr(X, "feature_names", None) or [f"f{j}" for j in range(A.shape[1])]
            fh.write(",".join(names) + "\n")
        for row in A:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def bcss(X, part: Partition) -> np.ndarray:
    """Per-feature between-cluster sum of squares, centroid form.

    ``b_j = sum_k n_k (mean_kj - mean_j)^2``.  This is exactly half the
    pairwise form ``(1/n) sum_{i,i'} d_ii'j - sum_k (1/n_k) sum_{C_k} d_ii'j``
    (see :func:`pairwise_bcss`), and has expectation 1 per feature for unit
    variance noise under a fixed partition.
    """
    A = _as_array(X)
    lab = part.labels
    if lab.size != A.shape[0]:
        raise ValueError("partition length does not match row count")
    grand = A.mean(axis=0)
    b = np.zeros(A.shape[1])
    for k in (1, 2):
        sel = lab == k
        nk = np.count_nonzero(sel)
        diff = A[sel].mean(axis=0) - grand
        b += nk * diff * diff
    return np.maximum(b, 0.0)


def pairwise_bcss(X, part: Partition) -> np.ndarray:
    """Brute-force pairwise-distance form of the per-feature BCSS.

    O(n^2 p); intended as a cross-check for :func:`bcss`.
    """
    A = _as_array(X)
    n = A.shape[0]
    lab = part.labels
    D = (A[:, None, :] - A[None, :, :]) ** 2
    total = D.sum(axis=(0, 1)) / n
    within = np.zeros(A.shape[1])
    for k in (1, 2):
        sel = lab == k
        within += D[np.ix_(sel, sel)].sum(axis=(0, 1)) / np.count_nonzero(sel)
    return total - within


def top_features(w: np.ndarray, m: int) -> np.ndarray:
    """Indices of the ``m`` largest weights, ties to the lower index."""
    w = np.asarray(w, dtype=float)
    order = np.lexsort((np.arange(w.size), -w))
    return np.sort(order[:m])


def as_index_array(idx: Sequence[int]) -> np.ndarray:
    return np.unique(np.asarray(list(idx), dtype=int))
