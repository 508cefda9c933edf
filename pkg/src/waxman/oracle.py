"""Brute-force reference eigenvalues from the characteristic determinant.

Everything here is built on ``waxman.linalg`` alone: log|det(H - eps I)| from
LU pivots on a grid, Newton polishing with the trace-of-inverse derivative,
and Maehly deflation to pick up roots the grid seeds missed.  None of it
touches the fixed-point machinery, so it can judge that machinery.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _backend
from .errors import IncompleteSpectrum, InputError, NewtonStall, ZeroDerivative, ZeroVector
from .linalg import as_matrix, bilinear, lu_factor, lu_solve, lu_solve_columns, norm_inf

ROOT_RESIDUAL_RTOL = 1e-8


class LogDet(NamedTuple):
    """det = exp(log_magnitude) * exp(i phase); ``log_magnitude`` is -inf when singular."""

    log_magnitude: float
    phase: float

    @property
    def singular(self) -> bool:
        return self.log_magnitude == -math.inf

    def value(self) -> complex:
        if self.singular:
            return 0j
        return cmath.rect(math.exp(self.log_magnitude), self.phase)


@dataclass(frozen=True)
class OracleConfig:
    """``box=None`` means the Gershgorin bounding box padded by 10%."""

    box: tuple | None = None
    samples_re: int | None = None
    samples_im: int | None = None
    newton_tol: float = 1e-12
    newton_max: int = 50
    dedupe_tol: float = 1e-8

    def __post_init__(self):
        if self.box is not None:
            re_lo, re_hi, im_lo, im_hi = self.box
            if not (re_lo < re_hi and im_lo < im_hi):
                raise InputError(f"degenerate grid rectangle {self.box}")
        for s in (self.samples_re, self.samples_im):
            if s is not None and s < 2:
                raise InputError("grid sample counts must be at least 2")


def _shifted(H, epsilon):
    A = H.copy()
    A[np.diag_indices_from(A)] -= epsilon
    return A


def char_logdet(H, epsilon) -> LogDet:
    """log det(H - eps I) from the LU pivots, with the permutation sign folded
    into the phase."""
    H = as_matrix(H, "H")
    f = lu_factor(_shifted(H, complex(epsilon)))
    diag = np.diag(f.lu)
    if np.any(diag == 0):
        return LogDet(-math.inf, 0.0)
    log_mag = float(np.sum(np.log(np.abs(diag))))
    phase = float(np.sum(np.angle(diag)))
    if f.parity() < 0:
        phase += math.pi
    phase = math.remainder(phase, 2 * math.pi)
    if phase == -math.pi:
        phase = math.pi
    return LogDet(log_mag, phase)


def _trace_of_inverse(f):
    return complex(np.trace(lu_solve_columns(f, np.eye(f.n, dtype=np.complex128))))


def newton_root(H, eps0, cfg: OracleConfig = None, known=()) -> complex:
    """Newton on det(H - eps I) using d/deps log det = -tr((H - eps I)^-1).

    ``known`` roots are divided out (Maehly deflation) so that repeated calls
    converge to new roots.  Stops when ``|step| <= newton_tol (1 + |eps|)`` or
    when the shifted matrix is flagged singular.
    """
    cfg = cfg or OracleConfig()
    H = as_matrix(H, "H")
    eps = complex(eps0)
    known = [complex(k) for k in known]
    last_step = math.inf
    for _ in range(cfg.newton_max):
        f = lu_factor(_shifted(H, eps))
        if f.singular:
            return eps
        slope = _trace_of_inverse(f) + sum(1.0 / (eps - k) for k in known)
        if abs(slope) < 1e-14:
            raise ZeroDerivative(f"log-det derivative vanishes at eps={eps!r}")
        step = 1.0 / slope
        eps += step
        if abs(step) <= cfg.newton_tol * (1.0 + abs(eps)):
            return eps
        last_step = abs(step)
    raise NewtonStall(f"Newton did not settle in {cfg.newton_max} steps (last |step| {last_step:.3e})")


def gershgorin_box(H, pad=0.10):
    H = as_matrix(H, "H")
    centers = np.diag(H)
    radii = np.sum(np.abs(H), axis=1) - np.abs(centers)
    re_lo, re_hi = np.min(centers.real - radii), np.max(centers.real + radii)
    im_lo, im_hi = np.min(centers.imag - radii), np.max(centers.imag + radii)
    w = max(re_hi - re_lo, im_hi - im_lo, 1e-3)
    return (re_lo - pad * w, re_hi + pad * w, im_lo - pad * w, im_hi + pad * w)


def residual_norm(T, V, lam, epsilon, u) -> float:
    """``||(T - lam V) u - eps u||_inf / ||u||_inf``."""
    u = np.asarray(u, dtype=np.complex128)
    nu = norm_inf(u)
    if nu == 0.0:
        raise ZeroVector("residual of the zero vector is undefined")
    T = np.asarray(T, dtype=np.complex128)
    V = np.asarray(V, dtype=np.complex128)
    r = T @ u - complex(lam) * (V @ u) - complex(epsilon) * u
    return norm_inf(r) / nu


def eigvec(H, epsilon, left=False, iterations=3, seed=0):
    """Inverse iteration for the (right, or left with ``H^T``) eigenvector at a
    computed eigenvalue.  Returns ``(vector, residual)``."""
    H = as_matrix(H, "H")
    M = H.T if left else H
    n = M.shape[0]
    scale = max(norm_inf(M), 1e-300)
    shift = complex(epsilon)
    f = lu_factor(_shifted(M, shift))
    if f.singular:
        # eps is exact to rounding; back off so the factorization is usable
        shift = shift + 1e-12 * scale
        f = lu_factor(_shifted(M, shift))
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
    for _ in range(iterations):
        x = lu_solve(f, x)
        x = x / x[np.argmax(np.abs(x))]
    res = norm_inf(M @ x - complex(epsilon) * x) / norm_inf(x)
    return x, res


def _local_minima(values):
    """Indices of 8-neighbour local minima (boundary included) of a 2-D array."""
    padded = np.pad(values, 1, constant_values=np.inf)
    core = padded[1:-1, 1:-1]
    is_min = np.ones_like(core, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = padded[1 + di:padded.shape[0] - 1 + di, 1 + dj:padded.shape[1] - 1 + dj]
            is_min &= core <= nb
    idx = np.argwhere(is_min)
    order = np.argsort(values[is_min], kind="stable")
    return idx[order]


def _is_new(root, roots, tol):
    return all(abs(root - r) > tol * max(1.0, abs(r)) for r in roots)


def eig_all_small(H, cfg: OracleConfig = None) -> list:
    """All eigenvalues of a small dense matrix as roots of det(H - eps I).

    Newton is launched from every grid local minimum of log|det|; if that
    leaves roots unfound, deflated Newton runs from the remaining minima and
    then from the grid corners.  Each root is accepted only if inverse
    iteration gives a residual ``<= 1e-8 ||H||``.  Returned sorted by
    (real, imag).  Warns IncompleteSpectrum when fewer than n roots are found.
    """
    cfg = cfg or OracleConfig()
    H = as_matrix(H, "H")
    n = H.shape[0]
    scale = max(norm_inf(H), 1e-300)
    box = cfg.box if cfg.box is not None else gershgorin_box(H)
    nre = cfg.samples_re or min(120, max(24, 4 * n))
    nim = cfg.samples_im or nre
    re = np.linspace(box[0], box[1], nre)
    im = np.linspace(box[2], box[3], nim)
    grid = re[None, :] + 1j * im[:, None]
    values = _backend.kernels.grid_logabsdet(H, grid.ravel()).reshape(grid.shape)
    seeds = [grid[i, j] for i, j in _local_minima(values)]

    roots = []

    def accept(root):
        if not (cmath.isfinite(root) and _is_new(root, roots, cfg.dedupe_tol)):
            return False
        _, res = eigvec(H, root)
        if res <= ROOT_RESIDUAL_RTOL * scale:
            roots.append(root)
            return True
        return False

    for s in seeds:
        if len(roots) >= n:
            break
        try:
            accept(newton_root(H, s, cfg))
        except (NewtonStall, ZeroDerivative):
            continue

    if len(roots) < n:
        extra = seeds + [complex(box[0], box[2]), complex(box[1], box[3]),
                         complex(box[0], box[3]), complex(box[1], box[2])]
        for s in extra:
            if len(roots) >= n:
                break
            for _ in range(n):
                if len(roots) >= n:
                    break
                try:
                    root = newton_root(H, s + 1e-3 * (box[1] - box[0]), cfg, known=roots)
                    # polish against the undeflated determinant
                    root = newton_root(H, root, cfg)
                except (NewtonStall, ZeroDerivative):
                    break
                if not accept(root):
                    break

    if len(roots) < n:
        warnings.warn(f"located {len(roots)} of {n} eigenvalues", IncompleteSpectrum,
                      stacklevel=2)
    return sorted(roots, key=lambda z: (z.real, z.imag))


class Reachable(NamedTuple):
    epsilon: complex
    spectral_radius: float
    gap_ratio: float


def budget_gap_ratio(tol_vector, max_iterations) -> float:
    """Smallest gap ratio for which ``max_iterations`` power steps shrink the
    start error by ``tol_vector``."""
    return (1.0 / tol_vector) ** (1.0 / max_iterations)


def dominant_branch_roots(T, V, lambda_ex, deflate=(), cfg: OracleConfig = None,
                          rtol=1e-7, min_gap_ratio=1.0 + 1e-6) -> list:
    """Eigenvalues eps of ``T - lambda_ex V`` at which 1/lambda_ex is the dominant
    eigenvalue of ``P (T - eps)^-1 V P``.

    These are the roots a Green's-operator fixed-point iteration can land on.
    ``deflate`` holds already-found eigenvalues; their oracle right/left
    vectors define the biorthogonal projector P (identity when empty).
    Returns Reachable records with the spectral radius and the ratio between
    the two largest moduli (the asymptotic convergence factor is its inverse);
    roots whose ratio does not exceed ``min_gap_ratio`` are left out.
    """
    T = as_matrix(T, "T")
    V = as_matrix(V, "V")
    H = T - float(lambda_ex) * V
    n = H.shape[0]
    roots = eig_all_small(H, cfg)
    P = np.eye(n, dtype=np.complex128)
    excluded = [complex(e) for e in deflate]
    for e in excluded:
        right, _ = eigvec(H, e)
        left, _ = eigvec(H, e, left=True)
        P = P - np.outer(right, left) / bilinear(left, right)
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IncompleteSpectrum)
        for eps in roots:
            if any(abs(eps - e) <= 1e-6 * max(1.0, abs(e)) for e in excluded):
                continue
            f = lu_factor(_shifted(T, eps))
            if f.singular:
                continue
            K = P @ lu_solve_columns(f, V) @ P
            mu = np.sort(np.abs(eig_all_small(K, cfg)))[::-1]
            if mu.size == 0:
                continue
            rho = float(mu[0])
            second = float(mu[1]) if mu.size > 1 else 0.0
            ratio = rho / second if second > 0 else math.inf
            if abs(rho * lambda_ex - 1.0) <= rtol and ratio > min_gap_ratio:
                out.append(Reachable(eps, rho, ratio))
    return out
