"""Dense complex linear algebra shared by every solver module.

Vectors and matrices are plain ``numpy`` complex128 arrays; scalars are
Python ``complex``.  The LU factorization and triangular solves go through
the active kernel backend (see ``waxman._backend``).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _backend
from .errors import DimensionMismatch, InputError, SingularFactorization

PIVOT_RTOL = 1e-13


def as_matrix(A, name="matrix") -> np.ndarray:
    """Validate and convert to a square, finite, C-contiguous complex128 array."""
    M = np.ascontiguousarray(A, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError(f"{name} has non-finite entries")
    return M


def as_vector(x, n=None, name="vector") -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 1-D array, got shape {v.shape}")
    if n is not None and v.size != n:
        raise DimensionMismatch(f"{name} has length {v.size}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} has non-finite entries")
    return v


def norm_inf(A) -> float:
    """Max-row-sum norm for matrices, max-modulus for vectors."""
    A = np.asarray(A)
    if A.ndim == 1:
        return float(np.max(np.abs(A))) if A.size else 0.0
    return float(np.max(np.sum(np.abs(A), axis=1)))


@dataclass(frozen=True)
class LUFactorization:
    """``A[perm] = L @ U``; unit-lower L below the diagonal of ``lu``, U on and above."""

    lu: np.ndarray
    perm: np.ndarray
    singular: bool
    min_pivot: float
    scale: float

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    @property
    def lower(self) -> np.ndarray:
        return np.tril(self.lu, -1) + np.eye(self.n)

    @property
    def upper(self) -> np.ndarray:
        return np.triu(self.lu)

    def permutation_matrix(self) -> np.ndarray:
        """P with ``P @ A == L @ U``."""
        return np.eye(self.n)[self.perm]

    def parity(self) -> int:
        """+1 or -1, the sign of the row permutation."""
        seen = np.zeros(self.n, dtype=bool)
        sign = 1
        for start in range(self.n):
            if seen[start]:
                continue
            length, j = 0, start
            while not seen[j]:
                seen[j] = True
                j = self.perm[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
        return sign


def lu_factor(A) -> LUFactorization:
    """LU with partial pivoting.  Near-singularity is flagged, never raised.

    The flag trips when the smallest pivot falls below ``1e-13 * ||A||_inf``
    (or is exactly zero).
    """
    return _factor(as_matrix(A))


def _factor(A) -> LUFactorization:
    # A is already a validated complex128 square array
    lu, perm, min_pivot = _backend.kernels.lu_factor(A)
    scale = float(np.abs(A).sum(axis=1).max())
    singular = min_pivot == 0.0 or min_pivot < PIVOT_RTOL * scale
    return LUFactorization(lu, perm, bool(singular), float(min_pivot), scale)


def lu_solve(f: LUFactorization, b) -> np.ndarray:
    if f.singular:
        raise SingularFactorization(
            f"factorization is singular (min pivot {f.min_pivot:.3e}, scale {f.scale:.3e})")
    b = as_vector(b, f.n, "right-hand side")
    return _backend.kernels.lu_solve(f.lu, f.perm, b)


def lu_solve_columns(f: LUFactorization, B) -> np.ndarray:
    """Solve for every column of ``B`` at once."""
    if f.singular:
        raise SingularFactorization("factorization is singular")
    B = np.asarray(B, dtype=np.complex128)
    if B.ndim != 2 or B.shape[0] != f.n:
        raise DimensionMismatch(f"right-hand sides have shape {B.shape}, expected ({f.n}, k)")
    return _backend.kernels.lu_solve_columns(f.lu, f.perm, B)


def matvec(A, x) -> np.ndarray:
    A = np.asarray(A, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    if A.ndim != 2 or x.ndim != 1 or A.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"cannot apply {A.shape} matrix to vector of shape {x.shape}")
    return A @ x


def inner(r, u) -> complex:
    """``<r|u> = sum(conj(r_i) * u_i)``; conjugate-linear in the bra."""
    r = np.asarray(r, dtype=np.complex128)
    u = np.asarray(u, dtype=np.complex128)
    if r.shape != u.shape or r.ndim != 1:
        raise DimensionMismatch(f"inner product of shapes {r.shape} and {u.shape}")
    return complex(np.vdot(r, u))


def bilinear(w, u) -> complex:
    """Unconjugated pairing ``w^T u`` used for left/right eigenvector projectors."""
    w = np.asarray(w, dtype=np.complex128)
    u = np.asarray(u, dtype=np.complex128)
    if w.shape != u.shape or w.ndim != 1:
        raise DimensionMismatch(f"pairing of shapes {w.shape} and {u.shape}")
    return complex(w @ u)


class PolarScalar(NamedTuple):
    magnitude: float
    phase: float

    def to_complex(self) -> complex:
        return from_polar(self)


def to_polar(z) -> PolarScalar:
    """Magnitude and full-quadrant phase in (-pi, pi]; the phase of 0 is 0."""
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InputError(f"cannot take polar form of non-finite {z!r}")
    phase = math.atan2(z.imag, z.real) + 0.0  # folds -0.0 into 0.0
    if phase == -math.pi:
        phase = math.pi
    return PolarScalar(math.hypot(z.real, z.imag), phase)


def from_polar(p) -> complex:
    magnitude, phase = p
    return cmath.rect(magnitude, phase)
