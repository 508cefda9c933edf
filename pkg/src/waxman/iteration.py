"""Inner fixed-point loop at a fixed trial energy.

For a chosen eps the map ``u -> G_eps V u / <r|G_eps V u>`` is iterated until
the vector settles; the coupling is then read off as
``lambda(eps) = 1 / <r|G_eps V u>``.  The iteration converges to the dominant
eigenvector of ``G_eps V``, i.e. the coupling of smallest modulus at that eps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DegenerateDenominator, InputError
from .linalg import as_matrix, as_vector, inner, norm_inf
from .resolvent import Resolvent, apply_green_v, make_resolvent

START_SEED = 0
RESEED = 1

_EMPTY = np.zeros((0, 0), dtype=np.complex128)


def seeded_vector(n, seed) -> np.ndarray:
    """Reproducible complex vector with real and imaginary parts in [-1, 1]."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, n) + 1j * rng.uniform(-1.0, 1.0, n)


@dataclass(frozen=True)
class EigenProblem:
    """``(T - lambda_ex V) u = eps u`` with reference vector ``r`` (all ones by default)."""

    T: np.ndarray
    V: np.ndarray
    lambda_ex: float
    r: np.ndarray = None

    def __post_init__(self):
        T = as_matrix(self.T, "T")
        V = as_matrix(self.V, "V")
        if T.shape != V.shape:
            raise InputError(f"T is {T.shape} but V is {V.shape}")
        lam = float(self.lambda_ex)
        if not (math.isfinite(lam) and lam > 0):
            raise InputError(f"lambda_ex must be a positive real, got {self.lambda_ex!r}")
        r = np.ones(T.shape[0], dtype=np.complex128) if self.r is None else self.r
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "lambda_ex", lam)
        object.__setattr__(self, "r", as_vector(r, T.shape[0], "reference vector"))

    @property
    def n(self) -> int:
        return self.T.shape[0]

    @property
    def t_norm(self) -> float:
        return norm_inf(self.T)

    def hamiltonian(self) -> np.ndarray:
        return self.T - self.lambda_ex * self.V

    def transposed(self) -> "EigenProblem":
        return EigenProblem(self.T.T, self.V.T, self.lambda_ex, self.r)

    def with_potential(self, V) -> "EigenProblem":
        return EigenProblem(self.T, V, self.lambda_ex, self.r)


@dataclass(frozen=True)
class InnerConfig:
    tol_vector: float = 1e-10
    tol_lambda: float = 1e-10
    max_iterations: int = 4000
    min_denominator: float = 1e-13

    def __post_init__(self):
        for name in ("tol_vector", "tol_lambda", "min_denominator"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if int(self.max_iterations) < 1:
            raise InputError("max_iterations must be a positive integer")


@dataclass(frozen=True)
class InnerResult:
    u: np.ndarray
    lam: complex
    iterations: int
    converged: bool
    last_delta: float
    epsilon: complex = 0j
    norm_drift: float = 0.0
    overlap: float = 0.0
    reseeded: bool = False


def _denominator(r, w, min_denominator):
    d = inner(r, w)
    scale = norm_inf(w)
    if not abs(d) > min_denominator * scale:
        raise DegenerateDenominator(
            f"|<r|G V u>| = {abs(d):.3e} against ||G V u|| = {scale:.3e}")
    return d


def iterate_once(res: Resolvent, V, r, u_n, min_denominator=1e-13) -> np.ndarray:
    """One step ``|n+1> = G V |n> / <r|G V|n>``."""
    w = apply_green_v(res, V, u_n)
    return w / _denominator(r, w, min_denominator)


def lambda_of(res: Resolvent, V, r, u, min_denominator=1e-13) -> complex:
    """Coupling ``1 / <r|G V u>`` for a vector normalized against ``r``."""
    w = apply_green_v(res, V, u)
    return 1.0 / _denominator(r, w, min_denominator)


def run_fixed_point(problem: EigenProblem, epsilon, u0=None, cfg: InnerConfig = None, *,
                    resolvent: Resolvent = None, projector=None) -> InnerResult:
    """Iterate to a fixed point at ``epsilon`` and extract lambda.

    ``u0`` defaults to a seeded random vector and is renormalized so that
    ``<r|u0> = 1``.  A degenerate denominator triggers one reseed of the start
    vector before the error is raised.  Non-convergence within
    ``cfg.max_iterations`` is reported through ``converged=False``.

    ``projector`` (see ``waxman.deflation.Projector``) restricts the iteration
    to the complement of previously found states.
    """
    cfg = cfg or InnerConfig()
    epsilon = complex(epsilon)
    res = resolvent if resolvent is not None else make_resolvent(problem.T, epsilon)
    start = seeded_vector(problem.n, START_SEED) if u0 is None else as_vector(u0, problem.n, "u0")

    if projector is None:
        right = left = _EMPTY.reshape(0, problem.n)
        pairing = np.zeros(0, dtype=np.complex128)
        reproject = False
    else:
        right, left, pairing, reproject = (projector.right, projector.left,
                                           projector.pairing, projector.reproject)

    reseeded = False
    for attempt in range(2):
        status, u, lam, iters, delta, drift, overlap = _backend.kernels.fixed_point(
            res.factorization.lu, res.factorization.perm, problem.V, problem.r, start,
            float(cfg.tol_vector), float(cfg.tol_lambda), int(cfg.max_iterations),
            float(cfg.min_denominator), right, left, pairing, bool(reproject))
        if status != _backend.kernels.STATUS_DEGENERATE:
            break
        if attempt == 0:
            start = seeded_vector(problem.n, RESEED)
            reseeded = True
    else:
        raise DegenerateDenominator(
            f"<r|G V u> vanished at eps={epsilon!r} after reseeding the start vector; "
            "the reference vector is orthogonal to the dominant direction")

    return InnerResult(
        u=u, lam=complex(lam), iterations=int(iters),
        converged=status == _backend.kernels.STATUS_CONVERGED,
        last_delta=float(delta), epsilon=epsilon, norm_drift=float(drift),
        overlap=float(overlap), reseeded=reseeded)
