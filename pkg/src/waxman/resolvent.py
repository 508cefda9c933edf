"""Green's operator ``G_eps = (T - eps I)^-1``, held as one LU factorization per eps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularResolvent
from .linalg import LUFactorization, _factor, as_matrix, lu_solve, matvec, norm_inf


@dataclass(frozen=True)
class Resolvent:
    epsilon: complex
    factorization: LUFactorization
    t_norm: float

    @property
    def n(self) -> int:
        return self.factorization.n

    def solve(self, b) -> np.ndarray:
        """Apply ``G_eps`` to ``b``."""
        return lu_solve(self.factorization, b)


def make_resolvent(T, epsilon) -> Resolvent:
    """Factor ``T - eps I``.

    Raises SingularResolvent when the factorization is flagged singular, i.e.
    eps is numerically an eigenvalue of T.
    """
    T = as_matrix(T, "T")
    return _make(T, complex(epsilon), norm_inf(T))


def _make(T, epsilon, t_norm) -> Resolvent:
    # T validated by the caller; used on the hot path of the outer search
    A = T.copy()
    A.flat[::A.shape[0] + 1] -= epsilon
    f = _factor(A)
    if f.singular:
        raise SingularResolvent(
            f"T - eps I is singular at eps={epsilon!r} (min pivot {f.min_pivot:.3e})")
    return Resolvent(epsilon, f, t_norm)


def apply_green_v(res: Resolvent, V, u) -> np.ndarray:
    """``G_eps V u``."""
    return res.solve(matvec(V, u))
