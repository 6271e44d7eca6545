"""Sample storage, normalization, CSV ingestion, and space-filling designs."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

DUPLICATE_TOL = 1e-12


class SchemaError(ValueError):
    """CSV is missing a requested column or contains a non-numeric cell."""


@dataclass(frozen=True)
class SamplePoint:
    """One input vector and its scalar response."""

    x: np.ndarray
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "y", float(self.y))


def _as_arrays(points) -> tuple[np.ndarray, np.ndarray]:
    """Stack SamplePoints (or (n, M)/(n,) arrays) into X, y arrays."""
    if isinstance(points, tuple) and len(points) == 2:
        X = np.atleast_2d(np.asarray(points[0], dtype=float))
        y = np.asarray(points[1], dtype=float).ravel()
    else:
        pts = list(points)
        if not pts:
            raise ValueError("empty point list")
        X = np.vstack([p.x for p in pts])
        y = np.array([p.y for p in pts], dtype=float)
    if X.shape[0] != y.shape[0]:
        raise ValueError("mismatched point/response counts")
    return X, y


@dataclass(frozen=True)
class MultiFidelityDataset:
    """Paired cheap/expensive sample sets with optional normalization maps.

    Coordinates are raw units unless ``normalization`` is set, in which case
    every coordinate lies in [0, 1] and ``normalization`` holds the
    per-dimension ``(min, max)`` of the raw data.
    """

    x_cheap: np.ndarray
    y_cheap: np.ndarray
    x_expensive: np.ndarray
    y_expensive: np.ndarray
    normalization: np.ndarray | None = None  # (M, 2) raw (min, max) per dim

    def __post_init__(self):
        xc = np.atleast_2d(np.asarray(self.x_cheap, dtype=float))
        xe = np.atleast_2d(np.asarray(self.x_expensive, dtype=float))
        yc = np.asarray(self.y_cheap, dtype=float).ravel()
        ye = np.asarray(self.y_expensive, dtype=float).ravel()
        if xc.shape[1] != xe.shape[1]:
            raise ValueError("cheap and expensive inputs have different dimensions")
        if xc.shape[0] < 1 or xe.shape[0] < 1:
            raise ValueError("need at least one sample per fidelity level")
        if xc.shape[0] != yc.shape[0] or xe.shape[0] != ye.shape[0]:
            raise ValueError("mismatched point/response counts")
        if xc.shape[0] < xe.shape[0]:
            warnings.warn(
                "fewer cheap than expensive samples; co-kriging expects N_c >= N_e",
                stacklevel=3,
            )
        object.__setattr__(self, "x_cheap", xc)
        object.__setattr__(self, "y_cheap", yc)
        object.__setattr__(self, "x_expensive", xe)
        object.__setattr__(self, "y_expensive", ye)
        if self.normalization is not None:
            norm = np.asarray(self.normalization, dtype=float).reshape(-1, 2)
            object.__setattr__(self, "normalization", norm)

    @property
    def dim(self) -> int:
        return self.x_cheap.shape[1]

    @property
    def n_cheap(self) -> int:
        return self.x_cheap.shape[0]

    @property
    def n_expensive(self) -> int:
        return self.x_expensive.shape[0]

    @property
    def cheap(self) -> list[SamplePoint]:
        return [SamplePoint(x, y) for x, y in zip(self.x_cheap, self.y_cheap)]

    @property
    def expensive(self) -> list[SamplePoint]:
        return [SamplePoint(x, y) for x, y in zip(self.x_expensive, self.y_expensive)]

    @classmethod
    def from_points(cls, cheap, expensive) -> "MultiFidelityDataset":
        xc, yc = _as_arrays(cheap)
        xe, ye = _as_arrays(expensive)
        return cls(x_cheap=xc, y_cheap=yc, x_expensive=xe, y_expensive=ye)

    def to_raw(self, x_norm: np.ndarray) -> np.ndarray:
        if self.normalization is None:
            return np.asarray(x_norm, dtype=float)
        lo, hi = self.normalization[:, 0], self.normalization[:, 1]
        return lo + np.asarray(x_norm, dtype=float) * (hi - lo)

    def to_normalized(self, x_raw: np.ndarray) -> np.ndarray:
        if self.normalization is None:
            return np.asarray(x_raw, dtype=float)
        lo, hi = self.normalization[:, 0], self.normalization[:, 1]
        return (np.asarray(x_raw, dtype=float) - lo) / (hi - lo)


def _check_duplicates(X: np.ndarray, label: str) -> None:
    n = X.shape[0]
    if n < 2:
        return
    d2 = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
    iu = np.triu_indices(n, k=1)
    bad = np.where(d2[iu] <= DUPLICATE_TOL**2)[0]
    if bad.size:
        i, j = iu[0][bad[0]], iu[1][bad[0]]
        raise ValueError(
            f"duplicate {label} points at rows {i} and {j} "
            f"(normalized distance <= {DUPLICATE_TOL}); remove duplicates before fitting"
        )


def normalize(dataset: MultiFidelityDataset) -> MultiFidelityDataset:
    """Map all coordinates to [0, 1] per dimension over the cheap+expensive union.

    Idempotent: an already-normalized dataset is returned unchanged.  Raises
    if any dimension is constant across the union.
    """
    if dataset.normalization is not None:
        return dataset
    union = np.vstack([dataset.x_cheap, dataset.x_expensive])
    lo = union.min(axis=0)
    hi = union.max(axis=0)
    flat = np.where(hi <= lo)[0]
    if flat.size:
        raise ValueError(f"dimension {flat[0]} is constant at {lo[flat[0]]}; cannot normalize")
    scale = hi - lo
    xc = (dataset.x_cheap - lo) / scale
    xe = (dataset.x_expensive - lo) / scale
    _check_duplicates(xc, "cheap")
    _check_duplicates(xe, "expensive")
    return MultiFidelityDataset(
        x_cheap=xc,
        y_cheap=dataset.y_cheap,
        x_expensive=xe,
        y_expensive=dataset.y_expensive,
        normalization=np.column_stack([lo, hi]),
    )


def ingest_csv(path, fidelity: str, column_map: dict) -> list[SamplePoint]:
    """Read one fidelity level from a headered CSV.

    ``column_map`` maps roles to header names: ``{"x": [...input columns...],
    "y": "output column"}``.  Row order and raw units are preserved.
    """
    if fidelity not in ("cheap", "expensive"):
        raise ValueError(f"fidelity must be 'cheap' or 'expensive', got {fidelity!r}")
    x_cols = list(column_map["x"]) if not isinstance(column_map["x"], str) else [column_map["x"]]
    y_col = column_map["y"]
    points: list[SamplePoint] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        headers = reader.fieldnames or []
        for col in x_cols + [y_col]:
            if col not in headers:
                raise SchemaError(f"column {col!r} not found in {path} (headers: {headers})")
        for i, row in enumerate(reader):
            try:
                x = np.array([float(row[c]) for c in x_cols])
                y = float(row[y_col])
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"non-numeric cell in {path} at data row {i}: {exc}") from exc
            points.append(SamplePoint(x=x, y=y))
    if not points:
        warnings.warn(f"{path} contained headers but no data rows", stacklevel=2)
    return points


def latin_hypercube(n: int, dim: int, seed: int) -> np.ndarray:
    """Stratified design: per dimension, exactly one sample in each stratum
    [i/n, (i+1)/n).  Deterministic given the seed."""
    if n < 1:
        raise ValueError("latin_hypercube requires n >= 1")
    if dim < 1:
        raise ValueError("latin_hypercube requires dim >= 1")
    rng = np.random.default_rng(seed)
    out = np.empty((n, dim))
    for j in range(dim):
        perm = rng.permutation(n)
        out[:, j] = (perm + rng.random(n)) / n
    return out


@dataclass(frozen=True)
class DistributionSpec:
    """Independent per-dimension input law: uniform or truncated Gaussian."""

    kind: str  # "uniform" | "gaussian-truncated"
    lower: np.ndarray
    upper: np.ndarray
    mean: np.ndarray | None = None
    stddev: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian-truncated"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise ValueError("lower < upper must hold in every dimension")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if self.kind == "gaussian-truncated":
            if self.mean is None or self.stddev is None:
                raise ValueError("gaussian-truncated requires mean and stddev")
            mu = np.broadcast_to(np.asarray(self.mean, dtype=float), lo.shape).copy()
            sd = np.broadcast_to(np.asarray(self.stddev, dtype=float), lo.shape).copy()
            if np.any(sd <= 0):
                raise ValueError("stddev must be positive")
            object.__setattr__(self, "mean", mu)
            object.__setattr__(self, "stddev", sd)
        else:
            object.__setattr__(self, "mean", None)
            object.__setattr__(self, "stddev", None)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def _truncnorm_ab(self):
        a = (self.lower - self.mean) / self.stddev
        b = (self.upper - self.mean) / self.stddev
        return a, b

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "lower": self.lower.tolist(), "upper": self.upper.tolist()}
        if self.kind == "gaussian-truncated":
            out["mean"] = self.mean.tolist()
            out["stddev"] = self.stddev.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionSpec":
        return cls(
            kind=d["kind"],
            lower=np.asarray(d["lower"], dtype=float),
            upper=np.asarray(d["upper"], dtype=float),
            mean=np.asarray(d["mean"], dtype=float) if d.get("mean") is not None else None,
            stddev=np.asarray(d["stddev"], dtype=float) if d.get("stddev") is not None else None,
        )


def sample_distribution(spec: DistributionSpec, n: int, seed: int) -> np.ndarray:
    """Draw n vectors from the spec's law; truncated Gaussians via inverse CDF
    on the truncated interval (exact, rejection-free)."""
    if n < 1:
        raise ValueError("sample_distribution requires n >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random((n, spec.dim))
    if spec.kind == "uniform":
        return spec.lower + u * (spec.upper - spec.lower)
    a, b = spec._truncnorm_ab()
    out = np.empty((n, spec.dim))
    for j in range(spec.dim):
        out[:, j] = stats.truncnorm.ppf(u[:, j], a[j], b[j], loc=spec.mean[j], scale=spec.stddev[j])
    return np.clip(out, spec.lower, spec.upper)


def pdf(spec: DistributionSpec, x) -> float:
    """Product of per-dimension marginal densities; zero outside the box."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[0] != spec.dim:
        raise ValueError(f"point dimension {x.shape[0]} does not match spec dimension {spec.dim}")
    if np.any(x < spec.lower) or np.any(x > spec.upper):
        return 0.0
    if spec.kind == "uniform":
        return float(np.prod(1.0 / (spec.upper - spec.lower)))
    a, b = spec._truncnorm_ab()
    dens = stats.truncnorm.pdf(x, a, b, loc=spec.mean, scale=spec.stddev)
    return float(np.prod(dens))


def pdf_batch(spec: DistributionSpec, X: np.ndarray) -> np.ndarray:
    """Vectorized pdf over rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.dim:
        raise ValueError("point dimension does not match spec dimension")
    inside = np.all((X >= spec.lower) & (X <= spec.upper), axis=1)
    if spec.kind == "uniform":
        val = float(np.prod(1.0 / (spec.upper - spec.lower)))
        return np.where(inside, val, 0.0)
    a, b = spec._truncnorm_ab()
    dens = np.ones(X.shape[0])
    for j in range(spec.dim):
        dens *= stats.truncnorm.pdf(X[:, j], a[j], b[j], loc=spec.mean[j], scale=spec.stddev[j])
    return np.where(inside, dens, 0.0)
