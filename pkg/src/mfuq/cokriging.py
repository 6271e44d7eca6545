"""Two-fidelity co-kriging.

The expensive process is modeled as ``rho`` times the cheap process plus an
independent difference process.  Fitting proceeds in stages: kriging on the
cheap data, then a comprehensive search for the scaling parameter ``rho``
(grid step 0.01 on [-5, 5] plus golden-section refinement) jointly with the
difference-process hyperparameters via the concentrated likelihood of
``d = f_e - rho * f_c(xi_e)``.  For a candidate difference kernel the
likelihood profile over the whole rho grid is evaluated in closed form from
three Cholesky solves, which keeps the mandated 1001-point sweep cheap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize

from . import kernels, kriging
from .dataset import MultiFidelityDataset, normalize
from .kernels import KernelParams, make_params
from .kriging import DEFAULT_NUGGET, THETA_BOUNDS

RHO_RANGE = (-5.0, 5.0)
RHO_STEP = 0.01
_EXACT_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class CoKrigingModel:
    """Fitted co-kriging model (immutable; concurrent predict is safe)."""

    data: MultiFidelityDataset  # normalized
    cheap: kriging.KrigingModel
    diff_params: KernelParams
    rho: float
    mu_d: float
    sigma_d2: float
    mu_hat: float
    chol_C: tuple
    alpha: np.ndarray
    cinv_ones: np.ndarray
    nugget: float
    jitter: float
    variance_denominator: str
    ll_d: float
    grid_best_ll: float

    @property
    def dim(self) -> int:
        return self.data.dim

    @property
    def sigma_c2(self) -> float:
        return self.cheap.sigma2

    @property
    def lo(self) -> np.ndarray:
        return self.data.normalization[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.data.normalization[:, 1]

    @property
    def x_expensive_raw(self) -> np.ndarray:
        return self.data.to_raw(self.data.x_expensive)

    def to_dict(self) -> dict:
        return {
            "kind": "cokriging",
            "cheap_model": self.cheap.to_dict(),
            "diff_kernel": self.diff_params.to_dict(),
            "rho": self.rho,
            "mu_d": self.mu_d,
            "sigma_d2": self.sigma_d2,
            "mu_hat": self.mu_hat,
            "nugget": self.nugget,
            "variance_denominator": self.variance_denominator,
            "data": {
                "x_cheap": self.data.to_raw(self.data.x_cheap).tolist(),
                "y_cheap": self.data.y_cheap.tolist(),
                "x_expensive": self.x_expensive_raw.tolist(),
                "y_expensive": self.data.y_expensive.tolist(),
            },
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CoKrigingModel":
        raw = MultiFidelityDataset(
            x_cheap=np.asarray(d["data"]["x_cheap"], dtype=float),
            y_cheap=np.asarray(d["data"]["y_cheap"], dtype=float),
            x_expensive=np.asarray(d["data"]["x_expensive"], dtype=float),
            y_expensive=np.asarray(d["data"]["y_expensive"], dtype=float),
        )
        ds = normalize(raw)
        cheap = kriging.KrigingModel.from_dict(d["cheap_model"])
        diff_params = KernelParams.from_dict(d["diff_kernel"])
        return _finalize(ds, cheap, diff_params, d["rho"], d["mu_d"], d["sigma_d2"],
                         d["nugget"], d["variance_denominator"], np.nan, np.nan)

    @classmethod
    def load(cls, path) -> "CoKrigingModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def cheap_values_at_expensive(ds: MultiFidelityDataset, cheap: kriging.KrigingModel) -> np.ndarray:
    """f_c at every expensive site: the exact cheap sample when one coincides,
    the fitted cheap predictor otherwise (covers non-nested designs)."""
    out = np.empty(ds.n_expensive)
    for i, xe in enumerate(ds.x_expensive):
        d2 = np.sum((ds.x_cheap - xe) ** 2, axis=1)
        jmin = int(np.argmin(d2))
        if d2[jmin] <= _EXACT_MATCH_TOL**2:
            out[i] = ds.y_cheap[jmin]
        else:
            out[i] = kriging.predict(cheap, xe[None, :])[0]
    return out


def _profile_over_rho(diff_params, xe, fe, fce, rho_grid, nugget):
    """Concentrated log-likelihood of d(rho) for every rho at fixed kernel.

    Returns (ll array over rho_grid, logdet) or None when Rd is not PD.
    """
    ne = xe.shape[0]
    K = kernels.gram(diff_params, xe, xe)
    K[np.diag_indices_from(K)] += nugget
    if not kriging.well_conditioned(K):
        return None
    try:
        c = cho_factor(K, lower=True)
    except np.linalg.LinAlgError:
        return None
    diag = np.diag(c[0])
    ones = np.ones(ne)
    w1 = cho_solve(c, ones)
    we = cho_solve(c, fe)
    wc = cho_solve(c, fce)
    s1 = ones @ w1
    if s1 <= 0:
        return None
    q_ee = fe @ we
    q_ec = fe @ wc
    q_cc = fce @ wc
    s_e = ones @ we
    s_c = ones @ wc
    quad = q_ee - 2.0 * rho_grid * q_ec + rho_grid**2 * q_cc
    lin = s_e - rho_grid * s_c
    sigma_d2 = (quad - lin**2 / s1) / ne
    logdet = 2.0 * float(np.sum(np.log(diag)))
    ll = np.where(
        sigma_d2 < 0, -np.inf,
        -0.5 * ne * np.log(2.0 * np.pi)
        - 0.5 * ne * np.log(np.maximum(sigma_d2, 1e-300))
        - 0.5 * logdet,
    )
    return ll, c, w1, we, wc


def _diff_mle(diff_params, xe, d, nugget):
    """Closed-form (mu_d, sigma_d2, loglik) for a fixed d vector."""
    pieces = kriging._mle_pieces(diff_params, xe, d, nugget)
    if pieces is None:
        return None
    mu_d, sigma_d2, logdet, _, _, _ = pieces
    ne = xe.shape[0]
    ll = -0.5 * ne * np.log(2.0 * np.pi) - 0.5 * ne * np.log(max(sigma_d2, 1e-300)) - 0.5 * logdet
    return mu_d, sigma_d2, ll


def _search_rho_and_diff(xe, fe, fce, family, seed, nugget, theta_bounds):
    """Joint search: rho on its mandated grid, kernel hyperparameters by
    seeded grid + Nelder-Mead, then golden-section refinement of rho."""
    dim = xe.shape[1]
    lo, hi = RHO_RANGE
    rho_grid = np.round(np.arange(lo, hi + RHO_STEP / 2, RHO_STEP), 10)
    rng = np.random.default_rng(seed)

    def best_over_rho(vec):
        params = kriging._unpack_vec(vec, family, dim, theta_bounds)
        prof = _profile_over_rho(params, xe, fe, fce, rho_grid, nugget)
        if prof is None:
            return np.inf, -1
        ll = prof[0]
        idx = int(np.argmax(ll))
        return -ll[idx], idx

    lts = np.linspace(np.log10(theta_bounds[0]), np.log10(theta_bounds[1]), 13)
    if family == "universal-cubic":
        seeds = [np.concatenate([np.full(dim, lt), np.full(dim, r), np.full(dim, g)])
                 for lt in lts for r in (0.2, 0.5, 0.8) for g in (0.2, 0.5, 0.8)]
    else:
        seeds = [np.full(dim, lt) for lt in lts]
    if dim > 1:
        span = np.log10(theta_bounds[1]) - np.log10(theta_bounds[0])
        for _ in range(8):
            lt = np.log10(theta_bounds[0]) + span * rng.random(dim)
            if family == "universal-cubic":
                seeds.append(np.concatenate([lt, 0.05 + 0.9 * rng.random(dim),
                                             0.05 + 0.9 * rng.random(dim)]))
            else:
                seeds.append(lt)

    scored = []
    for i, v in enumerate(seeds):
        f, idx = best_over_rho(v)
        scored.append((f, i, v, idx))
    scored.sort(key=lambda t: (t[0], t[1]))
    best_grid_nll = scored[0][0]
    if not np.isfinite(best_grid_nll):
        raise RuntimeError(
            "co-kriging rho search found no finite likelihood over the grid; "
            "the expensive design may contain duplicates or be degenerate"
        )

    best_nll, best_vec, best_idx = scored[0][0], scored[0][2], scored[0][3]
    for f0, _, v0, _ in scored[:3]:
        res = minimize(lambda v: best_over_rho(v)[0], v0, method="Nelder-Mead",
                       options={"maxiter": 400 * len(v0), "xatol": 1e-5, "fatol": 1e-10})
        if res.fun < best_nll:
            best_nll = res.fun
            best_vec = res.x
            best_idx = best_over_rho(res.x)[1]
    params = kriging._unpack_vec(best_vec, family, dim, theta_bounds)

    # Golden-section refinement of rho inside the winning cell, kernel fixed.
    def nll_rho(rho):
        out = _diff_mle(params, xe, fe - rho * fce, nugget)
        return np.inf if out is None else -out[2]

    a = rho_grid[max(best_idx - 1, 0)]
    b = rho_grid[min(best_idx + 1, len(rho_grid) - 1)]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c1 = b - invphi * (b - a)
    c2 = a + invphi * (b - a)
    f1, f2 = nll_rho(c1), nll_rho(c2)
    for _ in range(60):
        if b - a < 1e-10:
            break
        if f1 <= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - invphi * (b - a)
            f1 = nll_rho(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (b - a)
            f2 = nll_rho(c2)
    rho = float(c1 if f1 <= f2 else c2)
    if nll_rho(rho) > best_nll:  # keep the grid winner if refinement stalled
        rho = float(rho_grid[best_idx])

    out = _diff_mle(params, xe, fe - rho * fce, nugget)
    if out is None:
        raise RuntimeError(
            "difference-process likelihood degenerate at the selected "
            f"(rho={rho}, kernel) candidate despite a finite search profile"
        )
    mu_d, sigma_d2, ll = out
    assert ll >= -best_grid_nll - 1e-9, "refined likelihood fell below the best grid candidate"
    return rho, params, mu_d, sigma_d2, ll, -best_grid_nll


def _assemble_c(ds, cheap, diff_params, rho, sigma_d2, nugget):
    xc, xe = ds.x_cheap, ds.x_expensive
    sc2 = cheap.sigma2
    rcc = kernels.gram(cheap.params, xc, xc)
    rce = kernels.gram(cheap.params, xc, xe)
    ree = kernels.gram(cheap.params, xe, xe)
    rdd = kernels.gram(diff_params, xe, xe)
    top = np.hstack([sc2 * rcc, rho * sc2 * rce])
    bot = np.hstack([rho * sc2 * rce.T, rho**2 * sc2 * ree + sigma_d2 * rdd])
    C = np.vstack([top, bot])
    jitter = max(nugget * float(np.mean(np.diag(C))), nugget)
    C[np.diag_indices_from(C)] += jitter
    return C, jitter


def _finalize(ds, cheap, diff_params, rho, mu_d, sigma_d2, nugget, variance_denominator,
              ll_d, grid_ll) -> CoKrigingModel:
    C, jitter = _assemble_c(ds, cheap, diff_params, rho, sigma_d2, nugget)
    if not np.allclose(C, C.T, atol=1e-12 * max(1.0, float(np.max(np.abs(C))))):
        raise np.linalg.LinAlgError("assembled covariance is not symmetric")
    try:
        chol_C = cho_factor(C, lower=True)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "augmented covariance is singular after the nugget; check for "
            "duplicate sites across fidelity levels"
        ) from exc
    f = np.concatenate([ds.y_cheap, ds.y_expensive])
    ones = np.ones(f.shape[0])
    cinv_ones = cho_solve(chol_C, ones)
    # Two-level mean: cheap field mu_c, expensive field rho*mu_c + mu_d.
    # (A single GLS constant breaks the rho-scaling equivalence between
    # co-kriging on f_e = rho*f_c and plain kriging on the cheap data.)
    mean_vec = np.concatenate([
        np.full(ds.n_cheap, cheap.mu),
        np.full(ds.n_expensive, rho * cheap.mu + mu_d),
    ])
    alpha = cho_solve(chol_C, f - mean_vec)
    cinv_f = cho_solve(chol_C, f)
    mu_hat = float(ones @ cinv_f) / float(ones @ cinv_ones)
    return CoKrigingModel(
        data=ds, cheap=cheap, diff_params=diff_params, rho=rho, mu_d=mu_d,
        sigma_d2=sigma_d2, mu_hat=mu_hat, chol_C=chol_C, alpha=alpha,
        cinv_ones=cinv_ones, nugget=nugget, jitter=jitter,
        variance_denominator=variance_denominator, ll_d=ll_d, grid_best_ll=grid_ll,
    )


def fit(dataset: MultiFidelityDataset, family: str = "gaussian", seed: int = 0, *,
        nugget: float = DEFAULT_NUGGET, variance_denominator: str = "as_printed",
        theta_bounds=THETA_BOUNDS, cheap_model: kriging.KrigingModel | None = None) -> CoKrigingModel:
    """Fit co-kriging to a two-fidelity dataset.

    ``cheap_model`` lets callers reuse an already-fitted cheap kriging model
    when only the expensive set changed (adaptive infill); it must have been
    fitted on this dataset's normalized cheap data.
    """
    if variance_denominator not in ("as_printed", "ones"):
        raise ValueError("variance_denominator must be 'as_printed' or 'ones'")
    ds = normalize(dataset)
    if ds.n_expensive < 2:
        raise ValueError("co-kriging requires at least 2 expensive points")
    if ds.n_cheap < 2:
        raise ValueError("co-kriging requires at least 2 cheap points")
    if cheap_model is None:
        cheap_model = kriging.fit((ds.x_cheap, ds.y_cheap), family, seed,
                                  nugget=nugget, normalize_inputs=False,
                                  theta_bounds=theta_bounds)
    fce = cheap_values_at_expensive(ds, cheap_model)
    rho, diff_params, mu_d, sigma_d2, ll_d, grid_ll = _search_rho_and_diff(
        ds.x_expensive, ds.y_expensive, fce, family, seed, nugget, theta_bounds)
    return _finalize(ds, cheap_model, diff_params, rho, mu_d, sigma_d2, nugget,
                     variance_denominator, ll_d, grid_ll)


def refit_with_expensive(model: CoKrigingModel, x_new_raw, y_new: float, seed: int = 0) -> CoKrigingModel:
    """Refit after appending one expensive sample, reusing the cheap model."""
    x_new_raw = np.atleast_1d(np.asarray(x_new_raw, dtype=float))
    raw = MultiFidelityDataset(
        x_cheap=model.data.to_raw(model.data.x_cheap),
        y_cheap=model.data.y_cheap,
        x_expensive=np.vstack([model.x_expensive_raw, x_new_raw[None, :]]),
        y_expensive=np.append(model.data.y_expensive, float(y_new)),
    )
    ds = normalize(raw)
    return fit(ds, family=model.cheap.params.family, seed=seed, nugget=model.nugget,
               variance_denominator=model.variance_denominator, cheap_model=model.cheap)


def _cvec(model: CoKrigingModel, xn: np.ndarray) -> np.ndarray:
    """Covariance columns c(xi) for a batch of normalized points, (Nc+Ne, q).

    Queries coinciding with an expensive site get the assembly jitter added
    so they reproduce the corresponding regularized covariance column, which
    makes the predictor interpolate expensive data exactly.
    """
    kc = kernels.gram(model.cheap.params, model.data.x_cheap, xn)
    ke = kernels.gram(model.cheap.params, model.data.x_expensive, xn)
    kd = kernels.gram(model.diff_params, model.data.x_expensive, xn)
    sc2 = model.sigma_c2
    top = model.rho * sc2 * kc
    bot = model.rho**2 * sc2 * ke + model.sigma_d2 * kd
    bot[(ke >= 1.0) & (kd >= 1.0)] += model.jitter
    return np.vstack([top, bot])


def predict(model: CoKrigingModel, x) -> float | np.ndarray:
    """Co-kriging mean prediction at one raw-unit point (M,) or batch (n, M)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xn = model.data.to_normalized(np.atleast_2d(x))
    if xn.shape[1] != model.dim:
        raise ValueError(f"point dimension {xn.shape[1]} does not match model dimension {model.dim}")
    c = _cvec(model, xn)
    mean_e = model.rho * model.cheap.mu + model.mu_d
    out = mean_e + c.T @ model.alpha
    return float(out[0]) if single else out


def variance(model: CoKrigingModel, x) -> float | np.ndarray:
    """Mean-square-error estimate, clamped at zero.

    The last term's denominator follows ``model.variance_denominator``:
    ``as_printed`` divides by c^T C^-1 c, ``ones`` by 1^T C^-1 1.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xn = model.data.to_normalized(np.atleast_2d(x))
    if xn.shape[1] != model.dim:
        raise ValueError(f"point dimension {xn.shape[1]} does not match model dimension {model.dim}")
    c = _cvec(model, xn)  # (N, q)
    cinv_c = cho_solve(model.chol_C, c)
    quad = np.einsum("nq,nq->q", c, cinv_c)
    ones_term = 1.0 - c.T @ model.cinv_ones
    if model.variance_denominator == "as_printed":
        denom = np.where(quad > 1e-300, quad, np.inf)
    else:
        denom = float(np.ones(model.alpha.shape[0]) @ model.cinv_ones)
    s2 = model.rho**2 * model.sigma_c2 + model.sigma_d2 - quad + ones_term**2 / denom
    s2 = np.maximum(s2, 0.0)
    return float(s2[0]) if single else s2


def _dc_bundles(model: CoKrigingModel, xn: np.ndarray):
    _, drc, d2rc = kernels.bundle(model.cheap.params, model.data.x_cheap, xn)
    _, dre, d2re = kernels.bundle(model.cheap.params, model.data.x_expensive, xn)
    _, drd, d2rd = kernels.bundle(model.diff_params, model.data.x_expensive, xn)
    sc2 = model.sigma_c2
    dc = np.vstack([model.rho * sc2 * drc, model.rho**2 * sc2 * dre + model.sigma_d2 * drd])
    d2c = np.vstack([model.rho * sc2 * d2rc, model.rho**2 * sc2 * d2re + model.sigma_d2 * d2rd])
    return dc, d2c


def predict_grad(model: CoKrigingModel, x) -> np.ndarray:
    """Analytic gradient of the co-kriging predictor, raw units."""
    x = np.asarray(x, dtype=float)
    xn = model.data.to_normalized(x)
    if xn.shape[0] != model.dim:
        raise ValueError(f"point dimension {xn.shape[0]} does not match model dimension {model.dim}")
    dc, _ = _dc_bundles(model, xn)
    scale = model.hi - model.lo
    return (dc.T @ model.alpha) / scale


def predict_hess_diag(model: CoKrigingModel, x) -> np.ndarray:
    """Analytic per-dimension second derivative of the predictor, raw units."""
    x = np.asarray(x, dtype=float)
    xn = model.data.to_normalized(x)
    if xn.shape[0] != model.dim:
        raise ValueError(f"point dimension {xn.shape[0]} does not match model dimension {model.dim}")
    _, d2c = _dc_bundles(model, xn)
    scale = model.hi - model.lo
    return (d2c.T @ model.alpha) / scale**2
