"""Analytic benchmark function pairs, training designs, and MSE/R2 harness.

Four cases: two 1-D pairs on [0, 1] (one with a linear low/high relation,
one nonlinear) and the 32- and 100-dimensional pairs on [-3, 3]^M.  The
1-D low-fidelity function is defined from the high-fidelity one so the
pair stays exactly self-consistent:

    lin1d:    y_L = 0.5*y_H + 10*(x - 0.5) - 5
    nonlin1d: y_H = 0.1*y_L^2 + 10

High-dim:     y_H = (x_0 - 1)^2 + sum_i (2*x_i^2 - x_{i-1}^2)^2
              y_L = 0.8*y_H - 0.4*sum_i x_i*x_{i+1} - 50
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dataset import MultiFidelityDataset, latin_hypercube


def _forrester_hf(x):
    x = np.asarray(x, dtype=float)
    return (6.0 * x - 2.0) ** 2 * np.sin(12.0 * x - 4.0)


def _forrester_lf(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * _forrester_hf(x) + 10.0 * (x - 0.5) - 5.0


def _nonlin_lf(x):
    return _forrester_lf(x)


def _nonlin_hf(x):
    return 0.1 * _nonlin_lf(x) ** 2 + 10.0


def _highdim_hf(X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    head = (X[:, 0] - 1.0) ** 2
    tail = (2.0 * X[:, 1:] ** 2 - X[:, :-1] ** 2) ** 2
    return head + tail.sum(axis=1)


def _highdim_lf(X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cross = (X[:, :-1] * X[:, 1:]).sum(axis=1)
    return 0.8 * _highdim_hf(X) - 0.4 * cross - 50.0


@dataclass(frozen=True)
class BenchmarkCase:
    name: str
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    lf: Callable
    hf: Callable
    default_lf_count: int
    default_hf_count: int
    hf_locations: np.ndarray | None = None  # fixed 1-D designs; None -> LHS


def _case_1d(name, hf, lf, hf_locs):
    return BenchmarkCase(
        name=name, dim=1, lower=np.zeros(1), upper=np.ones(1),
        lf=lf, hf=hf, default_lf_count=21, default_hf_count=len(hf_locs),
        hf_locations=np.asarray(hf_locs, dtype=float).reshape(-1, 1),
    )


CASES: dict[str, BenchmarkCase] = {
    "lin1d": _case_1d("lin1d", _forrester_hf, _forrester_lf, [0.0, 0.35, 0.75, 1.0]),
    "nonlin1d": _case_1d("nonlin1d", _nonlin_hf, _nonlin_lf, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]),
    "dim32": BenchmarkCase(
        name="dim32", dim=32, lower=np.full(32, -3.0), upper=np.full(32, 3.0),
        lf=_highdim_lf, hf=_highdim_hf, default_lf_count=20_000, default_hf_count=500,
    ),
    "dim100": BenchmarkCase(
        name="dim100", dim=100, lower=np.full(100, -3.0), upper=np.full(100, 3.0),
        lf=_highdim_lf, hf=_highdim_hf, default_lf_count=100_000, default_hf_count=2_000,
    ),
}

# The 1-D co-kriging test uses a different expensive design than the
# neural-surrogate benchmark on the same function pair.
COKRIGING_HF_LIN1D = np.array([[0.0], [0.35], [0.65], [1.0]])


def get_case(name: str) -> BenchmarkCase:
    if name not in CASES:
        raise ValueError(f"unknown benchmark case {name!r}; expected one of {sorted(CASES)}")
    return CASES[name]


def _check_domain(case: BenchmarkCase, X: np.ndarray) -> None:
    X = np.atleast_2d(X)
    if X.shape[1] != case.dim:
        raise ValueError(f"{case.name} expects dimension {case.dim}, got {X.shape[1]}")
    low = np.where(X < case.lower - 1e-12)
    high = np.where(X > case.upper + 1e-12)
    if low[0].size:
        j = low[1][0]
        raise ValueError(f"input below lower bound {case.lower[j]} in dimension {j}")
    if high[0].size:
        j = high[1][0]
        raise ValueError(f"input above upper bound {case.upper[j]} in dimension {j}")


def eval_hf(case: BenchmarkCase, x) -> np.ndarray:
    X = np.atleast_2d(np.asarray(x, dtype=float))
    _check_domain(case, X)
    out = case.hf(X[:, 0]) if case.dim == 1 else case.hf(X)
    return np.asarray(out, dtype=float).ravel()


def eval_lf(case: BenchmarkCase, x) -> np.ndarray:
    X = np.atleast_2d(np.asarray(x, dtype=float))
    _check_domain(case, X)
    out = case.lf(X[:, 0]) if case.dim == 1 else case.lf(X)
    return np.asarray(out, dtype=float).ravel()


def _scale(case: BenchmarkCase, U: np.ndarray) -> np.ndarray:
    return case.lower + U * (case.upper - case.lower)


def make_training_set(case: BenchmarkCase, lf_count: int | None = None,
                      hf_count: int | None = None, seed: int = 0, *,
                      hf_locations: np.ndarray | None = None) -> MultiFidelityDataset:
    """Default designs: uniform 1-D grids (LF) with the fixed expensive
    locations, Latin hypercubes for the high-dimensional cases."""
    lf_count = case.default_lf_count if lf_count is None else lf_count
    hf_count = case.default_hf_count if hf_count is None else hf_count
    if lf_count < 1 or hf_count < 1:
        raise ValueError("training counts must be >= 1")
    if case.dim == 1:
        x_lf = np.linspace(case.lower[0], case.upper[0], lf_count).reshape(-1, 1)
        if hf_locations is not None:
            x_hf = np.asarray(hf_locations, dtype=float).reshape(-1, 1)
        elif case.hf_locations is not None and hf_count == case.default_hf_count:
            x_hf = case.hf_locations
        else:
            x_hf = np.linspace(case.lower[0], case.upper[0], hf_count).reshape(-1, 1)
    else:
        x_lf = _scale(case, latin_hypercube(lf_count, case.dim, seed))
        x_hf = _scale(case, latin_hypercube(hf_count, case.dim, seed + 1))
    return MultiFidelityDataset(
        x_cheap=x_lf, y_cheap=eval_lf(case, x_lf),
        x_expensive=x_hf, y_expensive=eval_hf(case, x_hf),
    )


def test_points(case: BenchmarkCase, n_test: int, seed: int = 0) -> np.ndarray:
    """Dense uniform grid in 1-D, seeded LHS in higher dimensions."""
    if case.dim == 1:
        return np.linspace(case.lower[0], case.upper[0], n_test).reshape(-1, 1)
    return _scale(case, latin_hypercube(n_test, case.dim, seed))


def evaluate_surrogate(case: BenchmarkCase, predictor: Callable, n_test: int = 1000,
                       seed: int = 0) -> dict:
    """MSE and R2 of a predictor against the analytic high-fidelity truth.

    ``predictor`` takes an (n, M) array and returns n predictions.
    """
    X = test_points(case, n_test, seed)
    truth = eval_hf(case, X)
    pred = np.asarray(predictor(X), dtype=float).ravel()
    mse = float(np.mean((pred - truth) ** 2))
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    r2 = 1.0 - float(np.sum((pred - truth) ** 2)) / ss_tot if ss_tot > 0 else float(mse == 0.0)
    return {"mse": mse, "r2": r2}
