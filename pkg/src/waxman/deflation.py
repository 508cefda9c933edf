"""Excited states by projecting found states out of the iteration.

For a non-Hermitian H the right eigenvectors are not orthogonal, so the
projector uses left eigenvectors: ``P = prod_k (I - u_k w_k^T / (w_k^T u_k))``
with the unconjugated pairing.  The left vectors come from the same
fixed-point machinery run on the transposed problem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DefectivePair, DeflationBreakdown, InputError, SingularResolvent
from .iteration import START_SEED, EigenProblem, InnerConfig, run_fixed_point, seeded_vector
from .linalg import as_vector, bilinear, norm_inf
from .search import SearchConfig, SolveReport, solve_ground

PAIRING_RTOL = 1e-10
OVERLAP_TOL = 1e-6
LEFT_NUDGE = 1e-8


@dataclass(frozen=True)
class EigenPair:
    epsilon: complex
    right: np.ndarray
    left: np.ndarray
    pairing: complex

    @classmethod
    def build(cls, epsilon, right, left):
        right = as_vector(right, name="right eigenvector")
        left = as_vector(left, right.size, "left eigenvector")
        pairing = bilinear(left, right)
        if not abs(pairing) > PAIRING_RTOL * np.linalg.norm(left) * np.linalg.norm(right):
            raise DefectivePair(f"left/right pairing {abs(pairing):.3e} at eps={epsilon!r}")
        return cls(complex(epsilon), right, left, pairing)


@dataclass(frozen=True)
class Projector:
    """Deflation data in the layout the kernels take."""

    right: np.ndarray
    left: np.ndarray
    pairing: np.ndarray
    reproject: bool = True

    @classmethod
    def from_pairs(cls, pairs, reproject=True):
        return cls(np.array([p.right for p in pairs], dtype=np.complex128),
                   np.array([p.left for p in pairs], dtype=np.complex128),
                   np.array([p.pairing for p in pairs], dtype=np.complex128),
                   reproject)


def solve_left(problem: EigenProblem, pair_epsilon, cfg_inner: InnerConfig = None) -> np.ndarray:
    """Left eigenvector ``w`` with ``w^T H = eps w^T`` at a converged eps.

    Runs the fixed-point iteration on ``(T^T, V^T)``; eps is nudged by a
    relative ``1e-8`` only if ``T^T - eps I`` is singular.
    """
    cfg_inner = cfg_inner or InnerConfig()
    eps = complex(pair_epsilon)
    tp = problem.transposed()
    try:
        out = run_fixed_point(tp, eps, None, cfg_inner)
    except SingularResolvent:
        out = run_fixed_point(tp, eps * (1.0 + LEFT_NUDGE), None, cfg_inner)
    if not out.converged:
        raise DeflationBreakdown(
            f"left-vector iteration did not converge at eps={eps!r} "
            f"({out.iterations} iterations, last change {out.last_delta:.2e})")
    if not math.isclose(abs(out.lam), problem.lambda_ex, rel_tol=1e-6):
        raise DeflationBreakdown(
            f"transposed iteration found coupling {out.lam!r}, not {problem.lambda_ex}")
    return out.u


def deflate_vector(x, pairs) -> np.ndarray:
    """Apply ``prod_k (I - right_k left_k^T / pairing_k)`` to ``x``."""
    x = as_vector(x, name="x").copy()
    for p in pairs:
        if not abs(p.pairing) > PAIRING_RTOL * np.linalg.norm(p.left) * np.linalg.norm(p.right):
            raise DefectivePair(f"pairing {abs(p.pairing):.3e} too small at eps={p.epsilon!r}")
        x -= p.right * (bilinear(p.left, x) / p.pairing)
    return x


def max_overlap(u, pairs) -> float:
    """``max_k |left_k^T u| / ||u||_inf``."""
    nu = norm_inf(u)
    if nu == 0 or not pairs:
        return 0.0
    return max(abs(bilinear(p.left, u)) for p in pairs) / nu


def solve_excited(problem: EigenProblem, k: int, cfg: SearchConfig = None,
                  cfg_inner: InnerConfig = None, *, reproject=True) -> list:
    """Ground state plus ``k`` further states, in discovery order.

    Each new search starts from a deflated vector and, with ``reproject``
    (the default), re-applies the projector after every inner iteration.
    ``reproject=False`` projects the start vector only.  Stops early and
    returns what it has if a search fails to converge.
    """
    k = int(k)
    if k < 1:
        raise InputError("k must be at least 1")
    if k + 1 > problem.n:
        raise InputError(f"cannot find {k + 1} states of a {problem.n}x{problem.n} problem")
    cfg_inner = cfg_inner or InnerConfig()
    reports = [solve_ground(problem, cfg, cfg_inner)]
    pairs = []
    for _ in range(k):
        last = reports[-1]
        if not last.converged:
            break
        pairs.append(EigenPair.build(last.epsilon, last.u, solve_left(problem, last.epsilon,
                                                                      cfg_inner)))
        projector = Projector.from_pairs(pairs, reproject)
        u0 = deflate_vector(seeded_vector(problem.n, START_SEED), pairs)
        rep = solve_ground(problem, cfg, cfg_inner, u0=u0, projector=projector,
                           exclude=[r.epsilon for r in reports])
        if rep.converged and reproject and max_overlap(rep.u, pairs) > OVERLAP_TOL:
            raise DeflationBreakdown(
                f"state {len(reports)} overlaps a deflated state by {max_overlap(rep.u, pairs):.2e}")
        reports.append(rep)
    return reports
