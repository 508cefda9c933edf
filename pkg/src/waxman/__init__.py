"""Green's-method (Waxman) eigensolver for non-Hermitian coupling problems
``(T - lambda V) u = eps u`` with a real target coupling."""
from . import _backend
from .deflation import EigenPair, Projector, deflate_vector, solve_excited, solve_left
from .errors import *  # noqa: F401,F403
from .iteration import (EigenProblem, InnerConfig, InnerResult, iterate_once, lambda_of,
                        run_fixed_point)
from .linalg import (PolarScalar, bilinear, from_polar, inner, lu_factor, lu_solve, matvec,
                     to_polar)
from .io import ProblemFileSet, RunConfig, gen_random, read_matrix, write_matrix
from .oracle import (OracleConfig, char_logdet, dominant_branch_roots, eig_all_small, newton_root,
                     residual_norm)
from .perturbation import PerturbationConfig, perturb_potential, solve_real_ground
from .resolvent import Resolvent, apply_green_v, make_resolvent
from .search import (ScanCurve, SearchConfig, SolveReport, refine_magnitude, refine_phase,
                     scan_magnitude, scan_phase, solve_ground)

__version__ = "0.1.0"
backend = _backend.name
