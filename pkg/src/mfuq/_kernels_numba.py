"""Numba twins of the kernel assembly loops in :mod:`mfuq.kernels`.

The factor arithmetic and multiply order mirror the numpy fallback exactly
so the two backends agree to roundoff.
"""

from __future__ import annotations

import numpy as np
from numba import njit

FACTOR_FLOOR = 1e-12


@njit(cache=True, inline="always")
def _factor(code, theta, rho, gamma, h):
    """One-dimensional (k, k', k'') at signed distance h."""
    if code == 0:
        q = theta * h * h
        k = np.exp(-q)
        d1 = -2.0 * theta * h * k
        d2 = (4.0 * theta * q - 2.0 * theta) * k
    elif code == 1:
        ah = theta * abs(h)
        u = ah if ah < 1.0 else 1.0
        k = 1.0 - 3.0 * u * u + 2.0 * u * u * u
        if ah < 1.0:
            sgn = 0.0
            if h > 0.0:
                sgn = 1.0
            elif h < 0.0:
                sgn = -1.0
            d1 = 6.0 * theta * (u * u - u) * sgn
            d2 = (12.0 * u - 6.0) * theta * theta
        else:
            d1 = 0.0
            d2 = 0.0
    else:
        a2 = 3.0 * (1.0 - rho) / (2.0 + gamma)
        b3 = (1.0 - rho) * (1.0 - gamma) / (2.0 + gamma)
        s = theta * h
        sa = abs(s)
        s_star = 2.0 / (1.0 - gamma)
        sa_c = sa if sa < s_star else s_star
        k = 1.0 - a2 * sa_c * sa_c + b3 * sa_c * sa_c * sa_c
        if sa < s_star:
            d1 = (-2.0 * a2 * s + 3.0 * b3 * s * sa) * theta
            d2 = (-2.0 * a2 + 6.0 * b3 * sa) * theta * theta
        else:
            d1 = 0.0
            d2 = 0.0
    if k <= FACTOR_FLOOR:
        return FACTOR_FLOOR, 0.0, 0.0
    return k, d1, d2


@njit(cache=True)
def _gram_numba(code, theta, rho, gamma, A, B):
    n = A.shape[0]
    m = B.shape[0]
    M = A.shape[1]
    K = np.ones((n, m))
    for j in range(M):
        for i in range(n):
            for l in range(m):
                kf, _, _ = _factor(code, theta[j], rho[j], gamma[j], A[i, j] - B[l, j])
                K[i, l] *= kf
    return K


@njit(cache=True)
def _bundle_numba(code, theta, rho, gamma, X, x):
    n = X.shape[0]
    M = X.shape[1]
    kf = np.empty((n, M))
    d1 = np.empty((n, M))
    d2 = np.empty((n, M))
    for i in range(n):
        for j in range(M):
            f, g, s = _factor(code, theta[j], rho[j], gamma[j], x[j] - X[i, j])
            kf[i, j] = f
            d1[i, j] = g
            d2[i, j] = s
    pre = np.ones((n, M))
    for j in range(1, M):
        for i in range(n):
            pre[i, j] = pre[i, j - 1] * kf[i, j - 1]
    suf = np.ones((n, M))
    for j in range(M - 2, -1, -1):
        for i in range(n):
            suf[i, j] = suf[i, j + 1] * kf[i, j + 1]
    r = np.empty(n)
    dr = np.empty((n, M))
    d2r = np.empty((n, M))
    for i in range(n):
        r[i] = pre[i, M - 1] * kf[i, M - 1]
        for j in range(M):
            loo = pre[i, j] * suf[i, j]
            dr[i, j] = d1[i, j] * loo
            d2r[i, j] = d2[i, j] * loo
    return r, dr, d2r
