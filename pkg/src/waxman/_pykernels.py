"""Numpy fallback for the compiled kernels in ``_ckernels.pyx``.

Same functions, same return conventions.  Used when the extension is not
built, and as the reference side of the kernel benchmark.
"""
import math

import numpy as np
from scipy.linalg import solve_triangular

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_DEGENERATE = 2


def lu_factor(a):
    lu = np.array(a, dtype=np.complex128, order="C", copy=True)
    n = lu.shape[0]
    perm = np.arange(n, dtype=np.intp)
    min_piv = math.inf
    for k in range(n):
        col = np.abs(lu[k:, k])
        ip = k + int(np.argmax(col))
        best = float(col[ip - k])
        if ip != k:
            lu[[k, ip]] = lu[[ip, k]]
            perm[[k, ip]] = perm[[ip, k]]
        min_piv = min(min_piv, best)
        if best == 0.0:
            continue
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm, min_piv


def _solve(lu, perm, b):
    y = solve_triangular(lu, b[perm], lower=True, unit_diagonal=True,
                         check_finite=False)
    return solve_triangular(lu, y, lower=False, check_finite=False)


def lu_solve(lu, perm, b):
    return _solve(lu, perm, np.asarray(b, dtype=np.complex128))


def lu_solve_columns(lu, perm, B):
    return _solve(lu, perm, np.asarray(B, dtype=np.complex128))


def grid_logabsdet(H, eps_values):
    # batched partial-pivoting elimination over all grid points at once
    H = np.asarray(H, dtype=np.complex128)
    eps = np.asarray(eps_values, dtype=np.complex128)
    n = H.shape[0]
    m = np.broadcast_to(H, (eps.size, n, n)).copy()
    idx = np.arange(n)
    m[:, idx, idx] -= eps[:, None]
    rows = np.arange(eps.size)
    acc = np.zeros(eps.size)
    for k in range(n):
        ip = k + np.argmax(np.abs(m[:, k:, k]), axis=1)
        top = m[rows, k].copy()
        m[rows, k] = m[rows, ip]
        m[rows, ip] = top
        piv = m[:, k, k]
        apiv = np.abs(piv)
        with np.errstate(divide="ignore", invalid="ignore"):
            acc += np.log(apiv)
            factors = np.where(apiv[:, None] > 0, m[:, k + 1:, k] / piv[:, None], 0)
        m[:, k + 1:, k + 1:] -= factors[:, :, None] * m[:, k, None, k + 1:]
    acc[np.isnan(acc)] = -np.inf
    return acc


def _project(x, right, left, pairing):
    for k in range(right.shape[0]):
        x = x - right[k] * ((left[k] @ x) / pairing[k])
    return x


def _overlap(x, left):
    nx = np.max(np.abs(x))
    if nx == 0.0 or left.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(left @ x)) / nx)


def fixed_point(lu, perm, V, r, u0, tol_vector, tol_lambda, max_iterations,
                min_denominator, right, left, pairing, reproject):
    rc = np.conj(np.asarray(r, dtype=np.complex128))
    V = np.asarray(V, dtype=np.complex128)
    right = np.asarray(right, dtype=np.complex128)
    left = np.asarray(left, dtype=np.complex128)
    projecting = right.shape[0] > 0
    u = np.array(u0, dtype=np.complex128, copy=True)
    status = STATUS_MAX_ITER
    iters, last_delta, drift, overlap = 0, math.inf, 0.0, 0.0
    lam_prev = None

    if projecting:
        u = _project(u, right, left, pairing)
    d = rc @ u
    if not abs(d) > min_denominator * np.max(np.abs(u)):
        return STATUS_DEGENERATE, u, complex(math.nan), 0, last_delta, drift, overlap
    u = u / d

    for it in range(max_iterations):
        w = _solve(lu, perm, V @ u)
        if projecting and reproject:
            w = _project(w, right, left, pairing)
        d = rc @ w
        if not abs(d) > min_denominator * np.max(np.abs(w)):
            status = STATUS_DEGENERATE
            break
        lam = 1.0 / d
        w = w / d
        delta = float(np.max(np.abs(w - u)))
        u = w
        drift = max(drift, abs(rc @ u - 1.0))
        if projecting:
            overlap = max(overlap, _overlap(u, left))
        iters, last_delta = it + 1, delta
        if (lam_prev is not None and delta <= tol_vector
                and abs(lam - lam_prev) <= tol_lambda * max(1.0, abs(lam_prev))):
            status = STATUS_CONVERGED
            break
        lam_prev = lam

    lam_final = complex(math.nan)
    if status != STATUS_DEGENERATE:
        w = _solve(lu, perm, V @ u)
        if projecting and reproject:
            w = _project(w, right, left, pairing)
        d = rc @ w
        if abs(d) > min_denominator * np.max(np.abs(w)):
            lam_final = complex(1.0 / d)
        else:
            status = STATUS_DEGENERATE
    return status, u, lam_final, iters, last_delta, drift, overlap
