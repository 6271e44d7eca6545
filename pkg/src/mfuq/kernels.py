"""Correlation kernels with analytic first and second derivatives.

Three families are supported, each a product of one-dimensional factors:

* ``gaussian``         k_j(h) = exp(-theta_j * h^2)
* ``cubic``            k_j(h) = 1 - 3*u^2 + 2*u^3,  u = min(1, theta_j*|h|)
* ``universal-cubic``  k_j(h) = 1 - 2A*s^2/2... see below

with ``h = a_j - b_j``.  The universal-cubic factor uses the theta-scaled
signed distance ``s = theta_j * h`` and per-dimension shape parameters
``rho_j, gamma_j`` in (0, 1):

    k_j = 1 - 3(1-rho_j)/(2+gamma_j) * s^2 + (1-rho_j)(1-gamma_j)/(2+gamma_j) * |s|^3

which satisfies k_j(0) = 1 and k_j(s=1) = rho_j.  Every one-dimensional
factor is floored at ``FACTOR_FLOOR`` to keep products strictly positive;
a floored factor contributes zero first/second derivative.

Assembly of Gram matrices and of the (r, dr/dx, d2r/dx2) bundles used by
predictors runs either through numba kernels or a vectorized numpy
fallback (see :mod:`mfuq._accel`); both multiply the per-dimension factors
in the same order so results agree to the last few ulps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _accel

FACTOR_FLOOR = 1e-12

FAMILIES = ("gaussian", "cubic", "universal-cubic")
_FAMILY_CODE = {"gaussian": 0, "cubic": 1, "universal-cubic": 2}


@dataclass(frozen=True)
class KernelParams:
    """Correlation family plus per-dimension hyperparameters.

    ``theta`` must be positive; ``rho_uc``/``gamma_uc`` are required for the
    universal-cubic family and must lie in the open interval (0, 1).
    """

    family: str
    theta: np.ndarray
    rho_uc: np.ndarray | None = None
    gamma_uc: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if np.any(theta <= 0) or not np.all(np.isfinite(theta)):
            raise ValueError("theta must be positive and finite in every dimension")
        object.__setattr__(self, "theta", theta)
        if self.family == "universal-cubic":
            if self.rho_uc is None or self.gamma_uc is None:
                raise ValueError("universal-cubic kernel requires rho_uc and gamma_uc")
            for name in ("rho_uc", "gamma_uc"):
                arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
                if arr.shape != theta.shape:
                    arr = np.full_like(theta, float(arr))
                if np.any(arr <= 0.0) or np.any(arr >= 1.0):
                    raise ValueError(f"{name} must lie in the open interval (0, 1)")
                object.__setattr__(self, name, arr)
        else:
            object.__setattr__(self, "rho_uc", None)
            object.__setattr__(self, "gamma_uc", None)

    @property
    def dim(self) -> int:
        return self.theta.shape[0]

    def _packed(self):
        """(family code, theta, rho, gamma) with dummy shape arrays for non-UC."""
        code = _FAMILY_CODE[self.family]
        if self.family == "universal-cubic":
            return code, self.theta, self.rho_uc, self.gamma_uc
        dummy = np.full_like(self.theta, 0.5)
        return code, self.theta, dummy, dummy

    def to_dict(self) -> dict:
        out = {"family": self.family, "theta": self.theta.tolist()}
        if self.family == "universal-cubic":
            out["rho_uc"] = self.rho_uc.tolist()
            out["gamma_uc"] = self.gamma_uc.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "KernelParams":
        return cls(
            family=d["family"],
            theta=np.asarray(d["theta"], dtype=float),
            rho_uc=np.asarray(d["rho_uc"], dtype=float) if "rho_uc" in d else None,
            gamma_uc=np.asarray(d["gamma_uc"], dtype=float) if "gamma_uc" in d else None,
        )


def make_params(family: str, theta, rho_uc=None, gamma_uc=None) -> KernelParams:
    """Build KernelParams, broadcasting scalar hyperparameters to all dims."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    dim = theta.shape[0]

    def _expand(v):
        if v is None:
            return None
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        return np.full(dim, arr[0]) if arr.shape[0] == 1 and dim > 1 else arr

    if family == "universal-cubic":
        rho_uc = _expand(0.5 if rho_uc is None else rho_uc)
        gamma_uc = _expand(0.5 if gamma_uc is None else gamma_uc)
    return KernelParams(family=family, theta=theta, rho_uc=rho_uc, gamma_uc=gamma_uc)


# --------------------------------------------------------------------------
# Pure-numpy factor math.  Each function returns per-dimension arrays for a
# batch of signed distances h (any shape); the factor floor suppresses the
# derivatives wherever it binds.
# --------------------------------------------------------------------------

def _factors_numpy(code, theta, rho, gamma, h, want_derivs):
    """Per-dimension (k, k', k'') for signed distances h of shape (..., M)."""
    if code == 0:  # gaussian
        q = theta * h * h
        k = np.exp(-q)
        if not want_derivs:
            kf = np.maximum(k, FACTOR_FLOOR)
            return kf, None, None
        d1 = -2.0 * theta * h * k
        d2 = (4.0 * theta * q - 2.0 * theta) * k
    elif code == 1:  # cubic spline correlation
        u = np.minimum(1.0, theta * np.abs(h))
        k = 1.0 - 3.0 * u * u + 2.0 * u * u * u
        if not want_derivs:
            kf = np.maximum(k, FACTOR_FLOOR)
            return kf, None, None
        inside = theta * np.abs(h) < 1.0
        sgn = np.sign(h)
        d1 = np.where(inside, 6.0 * theta * (u * u - u) * sgn, 0.0)
        d2 = np.where(inside, (12.0 * u - 6.0) * theta * theta, 0.0)
    elif code == 2:  # universal cubic
        a2 = 3.0 * (1.0 - rho) / (2.0 + gamma)
        b3 = (1.0 - rho) * (1.0 - gamma) / (2.0 + gamma)
        s = theta * h
        sa = np.abs(s)
        # Beyond the stationary point s* = 2/(1-gamma) the cubic turns back
        # up and eventually exceeds 1; hold the factor at its minimum there.
        s_star = 2.0 / (1.0 - gamma)
        sa_c = np.minimum(sa, s_star)
        k = 1.0 - a2 * sa_c * sa_c + b3 * sa_c * sa_c * sa_c
        if not want_derivs:
            kf = np.maximum(k, FACTOR_FLOOR)
            return kf, None, None
        inside = sa < s_star
        d1 = np.where(inside, (-2.0 * a2 * s + 3.0 * b3 * s * sa) * theta, 0.0)
        d2 = np.where(inside, (-2.0 * a2 + 6.0 * b3 * sa) * theta * theta, 0.0)
    else:  # pragma: no cover
        raise ValueError(f"bad family code {code}")
    floored = k <= FACTOR_FLOOR
    kf = np.maximum(k, FACTOR_FLOOR)
    d1 = np.where(floored, 0.0, d1)
    d2 = np.where(floored, 0.0, d2)
    return kf, d1, d2


def _gram_numpy(code, theta, rho, gamma, A, B):
    n, m = A.shape[0], B.shape[0]
    K = np.ones((n, m))
    for j in range(A.shape[1]):
        h = A[:, j, None] - B[None, :, j]
        kf, _, _ = _factors_numpy(code, theta[j], rho[j], gamma[j], h, False)
        K *= kf
    return K


def _bundle_numpy(code, theta, rho, gamma, X, x):
    n, M = X.shape
    h = x[None, :] - X  # derivative taken with respect to the query point
    kf, d1, d2 = _factors_numpy(code, theta[None, :], rho[None, :], gamma[None, :], h, True)
    pre = np.ones((n, M))
    for j in range(1, M):
        pre[:, j] = pre[:, j - 1] * kf[:, j - 1]
    suf = np.ones((n, M))
    for j in range(M - 2, -1, -1):
        suf[:, j] = suf[:, j + 1] * kf[:, j + 1]
    loo = pre * suf
    r = pre[:, M - 1] * kf[:, M - 1]
    dr = d1 * loo
    d2r = d2 * loo
    return r, dr, d2r


# --------------------------------------------------------------------------
# Numba kernels (same arithmetic, same multiply order).
# --------------------------------------------------------------------------

if _accel.HAS_NUMBA:
    from ._kernels_numba import _bundle_numba, _gram_numba


def gram(params: KernelParams, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Correlation matrix K[i, l] = k(A[i], B[l])."""
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    if A.shape[1] != params.dim or B.shape[1] != params.dim:
        raise ValueError(
            f"point dimension {A.shape[1]}/{B.shape[1]} does not match kernel dimension {params.dim}"
        )
    code, theta, rho, gamma = params._packed()
    if _accel.numba_enabled():
        return _gram_numba(code, theta, rho, gamma, A, B)
    return _gram_numpy(code, theta, rho, gamma, A, B)


def bundle(params: KernelParams, X: np.ndarray, x: np.ndarray):
    """Correlation vector r and its query-point derivatives against a point set.

    Returns ``(r, dr, d2r)`` with shapes (n,), (n, M), (n, M):
    ``r[i] = k(x, X[i])``, ``dr[i, j] = d r[i] / d x_j`` and
    ``d2r[i, j] = d^2 r[i] / d x_j^2``.
    """
    X = np.ascontiguousarray(X, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    if x.shape[0] != params.dim or X.shape[1] != params.dim:
        raise ValueError(
            f"point dimension {x.shape[0]}/{X.shape[1]} does not match kernel dimension {params.dim}"
        )
    code, theta, rho, gamma = params._packed()
    if _accel.numba_enabled():
        return _bundle_numba(code, theta, rho, gamma, X, x)
    return _bundle_numpy(code, theta, rho, gamma, X, x)


# --------------------------------------------------------------------------
# Scalar operations.  k is the full product over dimensions; k_prime and
# k_double_prime are its first/second partial derivatives in one coordinate
# of ``a`` (for 1-D inputs these coincide with the one-dimensional factor
# derivatives, matching the finite-difference oracle in any dimension).
# --------------------------------------------------------------------------

def k(params: KernelParams, a, b) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape or a.shape[0] != params.dim:
        raise ValueError("a and b must both match the kernel dimension")
    return float(gram(params, a[None, :], b[None, :])[0, 0])


def k_prime(params: KernelParams, a, b, j: int) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape or a.shape[0] != params.dim:
        raise ValueError("a and b must both match the kernel dimension")
    if not 0 <= j < params.dim:
        raise ValueError(f"dimension index {j} out of range for dim {params.dim}")
    _, dr, _ = bundle(params, b[None, :], a)
    return float(dr[0, j])


def k_double_prime(params: KernelParams, a, b, j: int) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape or a.shape[0] != params.dim:
        raise ValueError("a and b must both match the kernel dimension")
    if not 0 <= j < params.dim:
        raise ValueError(f"dimension index {j} out of range for dim {params.dim}")
    _, _, d2r = bundle(params, b[None, :], a)
    return float(d2r[0, j])
