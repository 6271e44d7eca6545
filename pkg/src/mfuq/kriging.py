"""Ordinary kriging: concentrated-likelihood MLE, predictor, variance,
and analytic predictor derivatives.

All linear algebra goes through Cholesky factors; explicit matrix inverses
are never formed.  Inputs are normalized to the unit box internally so the
length-scale search region is scale-free; predictions and derivatives are
reported in raw units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize

from . import kernels
from .dataset import _as_arrays, _check_duplicates
from .kernels import KernelParams, make_params

DEFAULT_NUGGET = 1e-10
THETA_BOUNDS = (1e-2, 1e2)
# Refinement may follow likelihood ridges below the seeded grid (degenerate
# smooth limits, e.g. an exactly-linear difference process).
THETA_REFINE_FLOOR = 1e-8
UC_BOUNDS = (0.05, 0.95)
_SIGMA2_FLOOR = 1e-300


@dataclass(frozen=True)
class KrigingModel:
    """Fitted ordinary-kriging model (immutable; concurrent predict is safe)."""

    x_norm: np.ndarray
    y: np.ndarray
    params: KernelParams
    mu: float
    sigma2: float
    chol: tuple
    alpha: np.ndarray
    rinv_ones: np.ndarray
    nugget: float
    lo: np.ndarray
    hi: np.ndarray
    ll: float
    grid_best_ll: float

    @property
    def dim(self) -> int:
        return self.x_norm.shape[1]

    @property
    def n(self) -> int:
        return self.x_norm.shape[0]

    @property
    def x_raw(self) -> np.ndarray:
        return self.lo + self.x_norm * (self.hi - self.lo)

    def _normalize(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)

    def to_dict(self) -> dict:
        return {
            "kind": "kriging",
            "kernel": self.params.to_dict(),
            "mu": self.mu,
            "sigma2": self.sigma2,
            "nugget": self.nugget,
            "points": {"x": self.x_raw.tolist(), "y": self.y.tolist()},
            "normalization": {"lo": self.lo.tolist(), "hi": self.hi.tolist()},
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "KrigingModel":
        lo = np.asarray(d["normalization"]["lo"], dtype=float)
        hi = np.asarray(d["normalization"]["hi"], dtype=float)
        x_raw = np.asarray(d["points"]["x"], dtype=float)
        y = np.asarray(d["points"]["y"], dtype=float)
        params = KernelParams.from_dict(d["kernel"])
        x_norm = (x_raw - lo) / (hi - lo)
        return _finalize(x_norm, y, params, d["nugget"], lo, hi, ll=np.nan, grid_ll=np.nan)

    @classmethod
    def load(cls, path) -> "KrigingModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _chol_gram(params, X, nugget):
    K = kernels.gram(params, X, X)
    K[np.diag_indices_from(K)] += nugget
    return cho_factor(K, lower=True)


# Candidates whose kernel matrix is worse-conditioned than this are rejected:
# beyond it Cholesky can slip through on a (possibly indefinite) matrix with
# garbage solves and a spuriously high likelihood.
COND_LIMIT = 1e12
_COND_SVD_MAX_N = 512


def well_conditioned(K: np.ndarray) -> bool:
    if K.shape[0] <= _COND_SVD_MAX_N:
        return np.linalg.cond(K) <= COND_LIMIT
    # large systems: cheap Cholesky-diagonal proxy
    try:
        c = cho_factor(K, lower=True)
    except np.linalg.LinAlgError:
        return False
    diag = np.diag(c[0])
    return (diag.max() / diag.min()) ** 2 <= COND_LIMIT


def _mle_pieces(params, X, y, nugget):
    """(mu, sigma2, logdet, chol, alpha, rinv_ones) or None if unusable."""
    K = kernels.gram(params, X, X)
    K[np.diag_indices_from(K)] += nugget
    if not well_conditioned(K):
        return None
    try:
        c = cho_factor(K, lower=True)
    except np.linalg.LinAlgError:
        return None
    diag = np.diag(c[0])
    ones = np.ones(X.shape[0])
    rinv_ones = cho_solve(c, ones)
    rinv_y = cho_solve(c, y)
    denom = ones @ rinv_ones
    if denom <= 0:
        return None
    mu = (ones @ rinv_y) / denom
    resid = y - mu
    alpha = rinv_y - mu * rinv_ones
    sigma2 = float(resid @ alpha) / X.shape[0]
    if sigma2 < 0:  # indefinite solve leaked through
        return None
    logdet = 2.0 * float(np.sum(np.log(diag)))
    return mu, sigma2, logdet, c, alpha, rinv_ones


def concentrated_loglik(params, X, y, nugget=DEFAULT_NUGGET) -> float:
    """Profile log-likelihood with mu and sigma^2 at their closed-form maximizers."""
    pieces = _mle_pieces(params, X, y, nugget)
    if pieces is None:
        return -np.inf
    _, sigma2, logdet, _, _, _ = pieces
    n = X.shape[0]
    return -0.5 * n * np.log(2.0 * np.pi) - 0.5 * n * np.log(max(sigma2, _SIGMA2_FLOOR)) - 0.5 * logdet


def _unpack_vec(vec, family, dim, theta_bounds):
    lo = min(np.log10(theta_bounds[0]), np.log10(THETA_REFINE_FLOOR))
    lt = np.clip(vec[:dim], lo, np.log10(theta_bounds[1]))
    theta = 10.0**lt
    if family == "universal-cubic":
        rho = np.clip(vec[dim : 2 * dim], *UC_BOUNDS)
        gamma = np.clip(vec[2 * dim :], *UC_BOUNDS)
        # keep the cubic's stationary point outside the unit box so the
        # search never proposes plateaued (indefiniteness-prone) factors
        theta = np.minimum(theta, 2.0 / (1.0 - gamma))
        return make_params(family, theta, rho, gamma)
    return make_params(family, theta)


def _pack_params(params: KernelParams):
    vec = [np.log10(params.theta)]
    if params.family == "universal-cubic":
        vec += [params.rho_uc, params.gamma_uc]
    return np.concatenate(vec)


def search_hyperparams(X, y, family, seed=0, nugget=DEFAULT_NUGGET, theta_bounds=THETA_BOUNDS,
                       n_multistart=3):
    """Maximize the concentrated likelihood: log-uniform grid seeds, then
    Nelder-Mead refinement from the best candidates.

    Returns (params, best_ll, best_grid_ll).
    """
    dim = X.shape[1]
    rng = np.random.default_rng(seed)

    def nll(vec):
        return -concentrated_loglik(_unpack_vec(vec, family, dim, theta_bounds), X, y, nugget)

    lts = np.linspace(np.log10(theta_bounds[0]), np.log10(theta_bounds[1]), 13)
    seeds = []
    if family == "universal-cubic":
        for lt in lts:
            for r in (0.2, 0.5, 0.8):
                for g in (0.2, 0.5, 0.8):
                    seeds.append(np.concatenate([np.full(dim, lt), np.full(dim, r), np.full(dim, g)]))
    else:
        seeds = [np.full(dim, lt) for lt in lts]
    if dim > 1:
        span = np.log10(theta_bounds[1]) - np.log10(theta_bounds[0])
        for _ in range(8):
            lt = np.log10(theta_bounds[0]) + span * rng.random(dim)
            if family == "universal-cubic":
                seeds.append(np.concatenate([lt, 0.05 + 0.9 * rng.random(dim), 0.05 + 0.9 * rng.random(dim)]))
            else:
                seeds.append(lt)

    scored = [(nll(v), i, v) for i, v in enumerate(seeds)]
    scored.sort(key=lambda t: (t[0], t[1]))
    best_grid_nll = scored[0][0]
    if not np.isfinite(best_grid_nll):
        raise RuntimeError(
            "hyperparameter search found no finite likelihood on the seed grid; "
            "check for duplicate or degenerate training points"
        )

    best_nll, best_vec = best_grid_nll, scored[0][2]
    for _, _, v0 in scored[:n_multistart]:
        res = minimize(nll, v0, method="Nelder-Mead",
                       options={"maxiter": 400 * len(v0), "xatol": 1e-5, "fatol": 1e-10})
        if res.fun < best_nll:
            best_nll, best_vec = res.fun, res.x
    params = _unpack_vec(best_vec, family, dim, theta_bounds)
    return params, -best_nll, -best_grid_nll


def _finalize(x_norm, y, params, nugget, lo, hi, ll, grid_ll) -> KrigingModel:
    pieces = _mle_pieces(params, x_norm, y, nugget)
    if pieces is None:
        raise np.linalg.LinAlgError(
            "correlation matrix is singular even after the nugget; "
            "remove duplicate or near-duplicate training points"
        )
    mu, sigma2, _, c, alpha, rinv_ones = pieces
    return KrigingModel(
        x_norm=x_norm, y=np.asarray(y, dtype=float), params=params, mu=mu, sigma2=sigma2,
        chol=c, alpha=alpha, rinv_ones=rinv_ones, nugget=nugget,
        lo=np.asarray(lo, dtype=float), hi=np.asarray(hi, dtype=float),
        ll=ll, grid_best_ll=grid_ll,
    )


def fit(points, family: str = "gaussian", seed: int = 0, *, nugget: float = DEFAULT_NUGGET,
        normalize_inputs: bool = True, theta_bounds=THETA_BOUNDS) -> KrigingModel:
    """Fit ordinary kriging to (x, y) samples.

    ``points`` is a list of SamplePoint or an ``(X, y)`` tuple of arrays.
    Inputs are mapped to the unit box internally unless ``normalize_inputs``
    is False (callers that pre-normalized, e.g. the difference process in
    co-kriging).
    """
    X, y = _as_arrays(points)
    if X.shape[0] < 2:
        raise ValueError("kriging requires at least 2 training points")
    if normalize_inputs:
        lo = X.min(axis=0)
        hi = X.max(axis=0)
        flat = np.where(hi <= lo)[0]
        if flat.size:
            raise ValueError(f"input dimension {flat[0]} is constant; cannot normalize")
        x_norm = (X - lo) / (hi - lo)
    else:
        lo = np.zeros(X.shape[1])
        hi = np.ones(X.shape[1])
        x_norm = X.copy()
    _check_duplicates(x_norm, "training")
    params, ll, grid_ll = search_hyperparams(x_norm, y, family, seed=seed, nugget=nugget,
                                             theta_bounds=theta_bounds)
    assert ll >= grid_ll - 1e-9, "refinement must not fall below the best grid candidate"
    return _finalize(x_norm, y, params, nugget, lo, hi, ll, grid_ll)


def _corr_to_train(model: KrigingModel, xn: np.ndarray) -> np.ndarray:
    """Correlations between query points and the training set.

    The nugget is treated as part of the zero-distance covariance, so a
    query coinciding with a training point reproduces the regularized Gram
    column exactly; the predictor then interpolates and the variance
    vanishes there regardless of conditioning.
    """
    K = kernels.gram(model.params, xn, model.x_norm)
    K[K >= 1.0] += model.nugget
    return K


def predict(model: KrigingModel, x) -> float | np.ndarray:
    """Kriging mean at one point (M,) or a batch (n, M)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xn = model._normalize(np.atleast_2d(x))
    if xn.shape[1] != model.dim:
        raise ValueError(f"point dimension {xn.shape[1]} does not match model dimension {model.dim}")
    K = _corr_to_train(model, xn)
    out = model.mu + K @ model.alpha
    return float(out[0]) if single else out


def variance(model: KrigingModel, x) -> float | np.ndarray:
    """Mean-square prediction error, clamped at zero."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xn = model._normalize(np.atleast_2d(x))
    if xn.shape[1] != model.dim:
        raise ValueError(f"point dimension {xn.shape[1]} does not match model dimension {model.dim}")
    K = _corr_to_train(model, xn)  # (q, n)
    rinv_r = cho_solve(model.chol, K.T)  # (n, q)
    quad = np.einsum("qn,nq->q", K, rinv_r)
    ones_term = 1.0 - K @ model.rinv_ones
    denom = float(np.ones(model.n) @ model.rinv_ones)
    s2 = model.sigma2 * (1.0 - quad + ones_term**2 / denom)
    s2 = np.maximum(s2, 0.0)
    return float(s2[0]) if single else s2


def predict_grad(model: KrigingModel, x) -> np.ndarray:
    """Analytic gradient of the predictor at one point, raw units."""
    x = np.asarray(x, dtype=float)
    xn = model._normalize(x)
    if xn.shape[0] != model.dim:
        raise ValueError(f"point dimension {xn.shape[0]} does not match model dimension {model.dim}")
    _, dr, _ = kernels.bundle(model.params, model.x_norm, xn)
    return (dr.T @ model.alpha) / (model.hi - model.lo)


def predict_hess_diag(model: KrigingModel, x) -> np.ndarray:
    """Analytic second derivative of the predictor per dimension, raw units."""
    x = np.asarray(x, dtype=float)
    xn = model._normalize(x)
    if xn.shape[0] != model.dim:
        raise ValueError(f"point dimension {xn.shape[0]} does not match model dimension {model.dim}")
    _, _, d2r = kernels.bundle(model.params, model.x_norm, xn)
    return (d2r.T @ model.alpha) / (model.hi - model.lo) ** 2
