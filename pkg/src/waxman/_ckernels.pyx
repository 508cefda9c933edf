# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: dense complex LU, triangular solves and the inner
fixed-point loop.  ``_pykernels`` mirrors every function here with the same
signature and return convention."""

import numpy as np

from libc.math cimport log, hypot, INFINITY, NAN

ctypedef double complex cplx

cdef enum:
    _CONVERGED = 0
    _MAX_ITER = 1
    _DEGENERATE = 2

STATUS_CONVERGED = _CONVERGED
STATUS_MAX_ITER = _MAX_ITER
STATUS_DEGENERATE = _DEGENERATE


cdef inline double cabs_(cplx z) noexcept nogil:
    return hypot(z.real, z.imag)


cdef double _factor_inplace(cplx[:, ::1] m, Py_ssize_t[::1] p) noexcept nogil:
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t i, j, k, ip, t
    cdef double best, v, min_piv = INFINITY
    cdef cplx piv, l, tmp
    cdef cplx *rowk
    cdef cplx *rowi
    for k in range(n):
        ip = k
        best = cabs_(m[k, k])
        for i in range(k + 1, n):
            v = cabs_(m[i, k])
            if v > best:
                best = v
                ip = i
        if ip != k:
            for j in range(n):
                tmp = m[k, j]
                m[k, j] = m[ip, j]
                m[ip, j] = tmp
            t = p[k]
            p[k] = p[ip]
            p[ip] = t
        if best < min_piv:
            min_piv = best
        if best == 0.0:
            continue
        piv = m[k, k]
        rowk = &m[k, 0]
        for i in range(k + 1, n):
            rowi = &m[i, 0]
            l = rowi[k] / piv
            rowi[k] = l
            if l.real != 0.0 or l.imag != 0.0:
                for j in range(k + 1, n):
                    rowi[j] = rowi[j] - l * rowk[j]
    return min_piv


cdef void _solve_into(const cplx[:, ::1] lu, const Py_ssize_t[::1] p,
                      const cplx[::1] b, cplx[::1] x) noexcept nogil:
    cdef Py_ssize_t n = lu.shape[0]
    cdef Py_ssize_t i, j
    cdef cplx s
    for i in range(n):
        s = b[p[i]]
        for j in range(i):
            s = s - lu[i, j] * x[j]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for j in range(i + 1, n):
            s = s - lu[i, j] * x[j]
        x[i] = s / lu[i, i]


cdef void _matvec_into(const cplx[:, ::1] a, const cplx[::1] x, cplx[::1] y) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j
    cdef cplx s
    for i in range(n):
        s = 0
        for j in range(n):
            s = s + a[i, j] * x[j]
        y[i] = s


cdef inline cplx _vdot(const cplx[::1] a, const cplx[::1] b) noexcept nogil:
    cdef Py_ssize_t i
    cdef cplx s = 0
    for i in range(a.shape[0]):
        s = s + a[i].conjugate() * b[i]
    return s


cdef inline double _norm_inf(const cplx[::1] a) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0, v
    for i in range(a.shape[0]):
        v = cabs_(a[i])
        if v > s:
            s = v
    return s


cdef void _project(cplx[::1] x, const cplx[:, ::1] right, const cplx[:, ::1] left,
                   const cplx[::1] pairing) noexcept nogil:
    # x <- prod_k (I - right_k left_k^T / pairing_k) x, bilinear pairing
    cdef Py_ssize_t k, i
    cdef Py_ssize_t n = x.shape[0]
    cdef cplx c
    for k in range(right.shape[0]):
        c = 0
        for i in range(n):
            c = c + left[k, i] * x[i]
        c = c / pairing[k]
        for i in range(n):
            x[i] = x[i] - c * right[k, i]


cdef double _overlap(const cplx[::1] x, const cplx[:, ::1] left) noexcept nogil:
    cdef Py_ssize_t k, i
    cdef double worst = 0.0, v, nx
    cdef cplx c
    nx = _norm_inf(x)
    if nx == 0.0:
        return 0.0
    for k in range(left.shape[0]):
        c = 0
        for i in range(x.shape[0]):
            c = c + left[k, i] * x[i]
        v = cabs_(c) / nx
        if v > worst:
            worst = v
    return worst


def lu_factor(a):
    """Partial-pivoting LU of a square complex matrix.

    Returns ``(lu, perm, min_pivot)`` where ``a[perm] == L @ U`` with the unit
    lower factor stored below the diagonal of ``lu``.
    """
    lu = np.array(a, dtype=np.complex128, order="C", copy=True)
    n = lu.shape[0]
    perm = np.arange(n, dtype=np.intp)
    cdef double min_piv = _factor_inplace(lu, perm)
    return lu, perm, min_piv


def lu_solve(lu, perm, b):
    cdef const cplx[:, ::1] lu_v = np.ascontiguousarray(lu, dtype=np.complex128)
    cdef const Py_ssize_t[::1] p_v = np.ascontiguousarray(perm, dtype=np.intp)
    cdef const cplx[::1] b_v = np.ascontiguousarray(b, dtype=np.complex128)
    x = np.empty(lu_v.shape[0], dtype=np.complex128)
    _solve_into(lu_v, p_v, b_v, x)
    return x


def lu_solve_columns(lu, perm, B):
    cdef const cplx[:, ::1] b_v = np.ascontiguousarray(B, dtype=np.complex128)
    cdef const cplx[:, ::1] lu_v = np.ascontiguousarray(lu, dtype=np.complex128)
    cdef const Py_ssize_t[::1] p_v = np.ascontiguousarray(perm, dtype=np.intp)
    cdef Py_ssize_t n = lu_v.shape[0], k = b_v.shape[1], i, j
    X = np.empty((n, k), dtype=np.complex128)
    cdef cplx[:, ::1] x_v = X
    cdef cplx[::1] col = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] out = np.empty(n, dtype=np.complex128)
    with nogil:
        for j in range(k):
            for i in range(n):
                col[i] = b_v[i, j]
            _solve_into(lu_v, p_v, col, out)
            for i in range(n):
                x_v[i, j] = out[i]
    return X


def grid_logabsdet(H, eps_values):
    """log|det(H - eps I)| for every eps; -inf at exactly singular points."""
    cdef const cplx[:, ::1] h = np.ascontiguousarray(H, dtype=np.complex128)
    cdef const cplx[::1] ev = np.ascontiguousarray(eps_values, dtype=np.complex128)
    cdef Py_ssize_t n = h.shape[0], npts = ev.shape[0], q, i, j
    out = np.empty(npts, dtype=np.float64)
    cdef double[::1] o = out
    cdef cplx[:, ::1] m = np.empty((n, n), dtype=np.complex128)
    cdef Py_ssize_t[::1] p = np.empty(n, dtype=np.intp)
    cdef double acc, v
    with nogil:
        for q in range(npts):
            for i in range(n):
                p[i] = i
                for j in range(n):
                    m[i, j] = h[i, j]
                m[i, i] = m[i, i] - ev[q]
            _factor_inplace(m, p)
            acc = 0.0
            for i in range(n):
                v = cabs_(m[i, i])
                if v == 0.0:
                    acc = -INFINITY
                    break
                acc = acc + log(v)
            o[q] = acc
    return out


def fixed_point(lu, perm, V, r, u0, double tol_vector, double tol_lambda,
                Py_ssize_t max_iterations, double min_denominator,
                right, left, pairing, bint reproject):
    """Iterate u <- G V u / <r|G V u> with G applied through the LU factors.

    Returns ``(status, u, lam, iterations, last_delta, drift, overlap)``.
    ``drift`` is the worst |<r|u_n> - 1| seen; ``overlap`` the worst
    |left_k^T u_n| / ||u_n|| against the deflated pairs.
    """
    cdef const cplx[:, ::1] lu_v = np.ascontiguousarray(lu, dtype=np.complex128)
    cdef const Py_ssize_t[::1] p_v = np.ascontiguousarray(perm, dtype=np.intp)
    cdef const cplx[:, ::1] V_v = np.ascontiguousarray(V, dtype=np.complex128)
    cdef const cplx[::1] r_v = np.ascontiguousarray(r, dtype=np.complex128)
    cdef const cplx[:, ::1] R_v = np.ascontiguousarray(right, dtype=np.complex128)
    cdef const cplx[:, ::1] L_v = np.ascontiguousarray(left, dtype=np.complex128)
    cdef const cplx[::1] pr_v = np.ascontiguousarray(pairing, dtype=np.complex128)
    cdef Py_ssize_t n = lu_v.shape[0], i, it
    cdef bint projecting = R_v.shape[0] > 0

    u_arr = np.array(u0, dtype=np.complex128, copy=True)
    w_arr = np.empty(n, dtype=np.complex128)
    y_arr = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] u = u_arr
    cdef cplx[::1] w = w_arr
    cdef cplx[::1] y = y_arr

    cdef int status = _MAX_ITER
    cdef Py_ssize_t iters = 0
    cdef double last_delta = INFINITY, drift = 0.0, overlap = 0.0, delta, v
    cdef cplx d, lam = 0, lam_prev = 0, lam_final
    cdef bint have_prev = False

    with nogil:
        if projecting:
            _project(u, R_v, L_v, pr_v)
        d = _vdot(r_v, u)
        if not (cabs_(d) > min_denominator * _norm_inf(u)):
            status = _DEGENERATE
        else:
            for i in range(n):
                u[i] = u[i] / d
            for it in range(max_iterations):
                _matvec_into(V_v, u, y)
                _solve_into(lu_v, p_v, y, w)
                if projecting and reproject:
                    _project(w, R_v, L_v, pr_v)
                d = _vdot(r_v, w)
                if not (cabs_(d) > min_denominator * _norm_inf(w)):
                    status = _DEGENERATE
                    break
                lam = 1.0 / d
                delta = 0.0
                for i in range(n):
                    w[i] = w[i] / d
                    v = cabs_(w[i] - u[i])
                    if v > delta:
                        delta = v
                    u[i] = w[i]
                v = cabs_(_vdot(r_v, u) - 1.0)
                if v > drift:
                    drift = v
                if projecting:
                    v = _overlap(u, L_v)
                    if v > overlap:
                        overlap = v
                iters = it + 1
                last_delta = delta
                if have_prev and delta <= tol_vector and \
                        cabs_(lam - lam_prev) <= tol_lambda * max(1.0, cabs_(lam_prev)):
                    status = _CONVERGED
                    break
                lam_prev = lam
                have_prev = True

        lam_final = NAN
        if status != _DEGENERATE:
            _matvec_into(V_v, u, y)
            _solve_into(lu_v, p_v, y, w)
            if projecting and reproject:
                _project(w, R_v, L_v, pr_v)
            d = _vdot(r_v, w)
            if cabs_(d) > min_denominator * _norm_inf(w):
                lam_final = 1.0 / d
            else:
                status = _DEGENERATE

    return status, u_arr, complex(lam_final), iters, last_delta, drift, overlap
