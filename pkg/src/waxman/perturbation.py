"""Real ground states: shift V by i*delta*I so the search runs off the real axis.

Because the shift is a multiple of the identity, ``T - lam (V + i delta I)``
equals ``H - i lam delta I``: the eigenvectors are untouched and every
eigenvalue moves by exactly ``-i lam delta``, which is undone afterwards.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidDelta
from .iteration import EigenProblem, InnerConfig
from .linalg import as_matrix
from .oracle import residual_norm
from .search import SearchConfig, SolveReport, solve_ground


@dataclass(frozen=True)
class PerturbationConfig:
    delta: float = 0.1
    tol_real: float = 1e-8

    def __post_init__(self):
        _check_delta(self.delta)
        if not self.tol_real > 0:
            raise InvalidDelta("tol_real must be positive")


def _check_delta(delta):
    if not (0.0 < delta < 1.0):
        raise InvalidDelta(f"delta must lie in (0, 1), got {delta!r}")


def perturb_potential(V, delta) -> np.ndarray:
    """``V + i delta I``."""
    _check_delta(delta)
    Vp = as_matrix(V, "V").copy()
    Vp[np.diag_indices_from(Vp)] += 1j * delta
    return Vp


def solve_real_ground(problem: EigenProblem, pcfg: PerturbationConfig = None,
                      cfg: SearchConfig = None, cfg_inner: InnerConfig = None,
                      **kwargs) -> SolveReport:
    """Solve the perturbed problem, then shift eps back by ``+i lambda_ex delta``.

    The residual is recomputed against the unperturbed (T, V, lambda_ex).  A
    shifted-back eps with ``|Im eps| > tol_real`` is kept but flagged in
    ``report.warnings``.
    """
    pcfg = pcfg or PerturbationConfig()
    perturbed = problem.with_potential(perturb_potential(problem.V, pcfg.delta))
    rep = solve_ground(perturbed, cfg, cfg_inner, **kwargs)
    shift = 1j * problem.lambda_ex * pcfg.delta
    eps = rep.epsilon + shift
    residual = residual_norm(problem.T, problem.V, problem.lambda_ex, eps, rep.u) \
        if np.all(np.isfinite(rep.u)) else math.inf
    warnings = list(rep.warnings)
    if abs(eps.imag) > pcfg.tol_real:
        warnings.append(f"shifted-back eigenvalue has |Im eps| = {abs(eps.imag):.3e} "
                        f"> tol_real = {pcfg.tol_real:.1e}")
    converged = rep.converged and residual <= rep.residual_tol
    return replace(rep, epsilon=eps, perturbed_epsilon=rep.epsilon, residual=residual,
                   converged=converged, warnings=warnings)
