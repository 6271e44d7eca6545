"""Derivative-aware infill criteria and the iterative sample-selection loop.

Six criteria over a candidate grid, all of the form PDF * s_hat * (...),
so every criterion vanishes at existing expensive samples where both the
predictor uncertainty and the nearest-sample distance are zero:

    C1          PDF * s
    C2          PDF * s * |f'| * dmin
    C3          PDF * s * |f' * f''| * dmin
    C4          PDF * s * |f' + f''| * dmin
    C5a / C5b   PDF * s * (|f' + f''| * dmin + D)

where D compares the universal-cubic predictor against the Gaussian (5a)
or cubic (5b) predictor fitted to the same data.  In one dimension the
formulas apply literally; for M > 1 the derivative factors are reduced to
Euclidean norms of the gradient and Hessian-diagonal vectors (product for
C3, sum of norms for C4/C5).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cokriging, kriging
from .dataset import DistributionSpec, latin_hypercube, pdf_batch

CRITERIA = ("C1", "C2", "C3", "C4", "C5a", "C5b")
_ALIASES = {"1": "C1", "2": "C2", "3": "C3", "4": "C4", "5a": "C5a", "5b": "C5b"}
C5_FAMILIES = ("universal-cubic", "gaussian", "cubic")
DEFAULT_FLOOR = 1e-12
_DUPLICATE_GUARD = 1e-9


class CriterionExhausted(RuntimeError):
    """The criterion is (numerically) zero everywhere on the candidate grid."""


@dataclass(frozen=True)
class CriterionSpec:
    id: str
    distribution: DistributionSpec
    grid_resolution: int = 101  # per dimension for M <= 2; LHS size for M > 2
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        cid = _ALIASES.get(str(self.id), str(self.id))
        if cid not in CRITERIA:
            raise ValueError(f"unknown criterion {self.id!r}; expected one of {CRITERIA}")
        object.__setattr__(self, "id", cid)


@dataclass(frozen=True)
class InfillResult:
    chosen_point: np.ndarray
    criterion_values: np.ndarray
    grid: np.ndarray
    iteration: int
    model_snapshot: object


def delta_xi(samples, x) -> float:
    """Distance from x to the nearest existing sample."""
    S = np.atleast_2d(np.asarray(samples, dtype=float))
    if S.shape[0] < 1:
        raise ValueError("delta_xi requires at least one existing sample")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(np.sqrt(np.min(np.sum((S - x) ** 2, axis=1))))


def _is_cokriging(model) -> bool:
    return isinstance(model, cokriging.CoKrigingModel)


def _mod_samples(model) -> np.ndarray:
    return model.x_expensive_raw if _is_cokriging(model) else model.x_raw


def _mod_predict(model, X):
    return cokriging.predict(model, X) if _is_cokriging(model) else kriging.predict(model, X)


def _mod_variance(model, X):
    return cokriging.variance(model, X) if _is_cokriging(model) else kriging.variance(model, X)


def _mod_grad(model, x):
    return cokriging.predict_grad(model, x) if _is_cokriging(model) else kriging.predict_grad(model, x)


def _mod_hess(model, x):
    return (cokriging.predict_hess_diag(model, x) if _is_cokriging(model)
            else kriging.predict_hess_diag(model, x))


def _primary(models):
    if isinstance(models, dict):
        return models["universal-cubic"]
    return models


def _require_trio(models):
    if not isinstance(models, dict) or any(f not in models for f in C5_FAMILIES):
        raise ValueError(
            "criteria C5a/C5b require three fitted models keyed by kernel family: "
            f"{C5_FAMILIES}"
        )


def criterion_grid(spec: CriterionSpec, models, X: np.ndarray) -> np.ndarray:
    """Criterion values at each candidate row of X (raw units)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    model = _primary(models)
    if spec.id in ("C5a", "C5b"):
        _require_trio(models)
    dens = pdf_batch(spec.distribution, X)
    s = np.sqrt(np.maximum(np.asarray(_mod_variance(model, X), dtype=float), 0.0))
    out = dens * s
    if spec.id == "C1":
        return out
    samples = _mod_samples(model)
    dmin = np.sqrt(
        np.min(np.sum((X[:, None, :] - samples[None, :, :]) ** 2, axis=-1), axis=1)
    )
    M = X.shape[1]
    deriv = np.empty(X.shape[0])
    for i, x in enumerate(X):
        if out[i] == 0.0:  # PDF * s already kills the criterion here
            deriv[i] = 0.0
            continue
        g = _mod_grad(model, x)
        h = _mod_hess(model, x)
        if M == 1:
            gv, hv = float(g[0]), float(h[0])
            if spec.id == "C2":
                deriv[i] = abs(gv)
            elif spec.id == "C3":
                deriv[i] = abs(gv * hv)
            else:
                deriv[i] = abs(gv + hv)
        else:
            gn, hn = float(np.linalg.norm(g)), float(np.linalg.norm(h))
            if spec.id == "C2":
                deriv[i] = gn
            elif spec.id == "C3":
                deriv[i] = gn * hn
            else:
                deriv[i] = gn + hn
    if spec.id in ("C2", "C3", "C4"):
        return out * deriv * dmin
    # C5a / C5b
    comparator = models["gaussian"] if spec.id == "C5a" else models["cubic"]
    f_uc = np.asarray(_mod_predict(models["universal-cubic"], X), dtype=float)
    f_cmp = np.asarray(_mod_predict(comparator, X), dtype=float)
    return out * (deriv * dmin + np.abs(f_uc - f_cmp))


def criterion(spec: CriterionSpec, models, x) -> float:
    return float(criterion_grid(spec, models, np.atleast_2d(np.asarray(x, dtype=float)))[0])


def candidate_grid(spec: CriterionSpec, seed: int = 0) -> np.ndarray:
    """Tensor grid over the distribution box for M <= 2, LHS for M > 2."""
    lo, hi = spec.distribution.lower, spec.distribution.upper
    M = lo.shape[0]
    if M <= 2:
        axes = [np.linspace(lo[j], hi[j], spec.grid_resolution) for j in range(M)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])
    return lo + latin_hypercube(spec.grid_resolution, M, seed) * (hi - lo)


def _argmax_lexicographic(values: np.ndarray, X: np.ndarray) -> int:
    top = float(np.max(values))
    tied = np.where(values == top)[0]
    if tied.size == 1:
        return int(tied[0])
    order = np.lexsort(X[tied].T[::-1])  # lowest coordinates first
    return int(tied[order[0]])


def _refit_models(models, x_new, y_new, seed):
    def one(m):
        if _is_cokriging(m):
            return cokriging.refit_with_expensive(m, x_new, y_new, seed=seed)
        X = np.vstack([m.x_raw, np.atleast_1d(x_new)[None, :]])
        y = np.append(m.y, y_new)
        return kriging.fit((X, y), m.params.family, seed, nugget=m.nugget)

    if isinstance(models, dict):
        return {fam: one(m) for fam, m in models.items()}
    return one(models)


def infill_step(spec: CriterionSpec, models, truth_oracle, iteration: int = 0,
                seed: int = 0) -> InfillResult:
    """One infill iteration: argmax of the criterion on the candidate grid,
    oracle evaluation, expensive-set append, refit.

    Raises CriterionExhausted when the grid maximum falls at/below the
    configured floor or lands on an existing sample.
    """
    model = _primary(models)
    X = candidate_grid(spec, seed=seed + iteration)
    values = criterion_grid(spec, models, X)
    if float(np.max(values)) <= spec.floor:
        raise CriterionExhausted(
            f"criterion {spec.id} at/below floor {spec.floor} everywhere on the grid"
        )
    idx = _argmax_lexicographic(values, X)
    chosen = X[idx]
    if delta_xi(_mod_samples(model), chosen) <= _DUPLICATE_GUARD:
        raise CriterionExhausted(
            f"criterion {spec.id} argmax coincides with an existing sample"
        )
    y_new = float(truth_oracle(chosen))
    refitted = _refit_models(models, chosen, y_new, seed)
    return InfillResult(chosen_point=chosen, criterion_values=values, grid=X,
                        iteration=iteration, model_snapshot=refitted)


def run_infill(spec: CriterionSpec, models, truth_oracle, n_iterations: int,
               seed: int = 0) -> tuple[list[InfillResult], object]:
    """Run up to n_iterations infill steps; stops early when exhausted."""
    results = []
    current = models
    for it in range(n_iterations):
        try:
            res = infill_step(spec, current, truth_oracle, iteration=it, seed=seed)
        except CriterionExhausted:
            break
        results.append(res)
        current = res.model_snapshot
    return results, current


def suggest(spec: CriterionSpec, models, k: int = 10, seed: int = 0) -> list[tuple[np.ndarray, float]]:
    """Ranked candidate points without oracle evaluation (CSV-backed data)."""
    X = candidate_grid(spec, seed=seed)
    values = criterion_grid(spec, models, X)
    order = np.argsort(-values, kind="stable")
    return [(X[i], float(values[i])) for i in order[:k]]
