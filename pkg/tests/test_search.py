import cmath
import math

import numpy as np
import pytest

from waxman.errors import BracketFailure, InputError, NoBracket
from waxman.io import gen_random
from waxman.iteration import EigenProblem, InnerConfig, lambda_of
from waxman.linalg import norm_inf
from waxman.oracle import residual_norm
from waxman.resolvent import make_resolvent
from waxman.search import (SearchConfig, refine_magnitude, refine_phase, scan_magnitude,
                           scan_phase, solve_ground)

from conftest import as_complex


def scalar(t, v, lam=2.0):
    return EigenProblem(np.array([[t]]), np.array([[v]]), lam)


class TestScan:
    def test_affine_scalar_ray(self, backend):
        curve = scan_magnitude(scalar(2.0, 1.0), 0.0, (0.5, 1.5), 0.5)
        assert np.allclose(curve.column("abs_eps"), [0.5, 1.0, 1.5], rtol=0, atol=1e-15)
        assert np.allclose(curve.column("abs_lambda"), [1.5, 1.0, 0.5], rtol=1e-14)
        assert np.all(curve.column("converged"))

    def test_imaginary_ray(self):
        curve = scan_magnitude(scalar(2.0, 1.0), math.pi / 2, (1.0, 1.5), 1.0)
        assert len(curve) == 1
        assert curve.samples[0].lam.magnitude == pytest.approx(math.sqrt(5), rel=1e-14)
        assert curve.samples[0].lam.phase == pytest.approx(math.atan2(-1, 2), rel=1e-14)

    def test_pole_on_grid_is_nudged(self):
        curve = scan_magnitude(scalar(2.0, 1.0), 0.0, (1.0, 3.0), 1.0)
        pole = curve.samples[1]
        assert pole.eps.magnitude == 2.0 * (1 + 1e-8)
        assert pole.converged
        assert pole.lam.magnitude == pytest.approx(2e-8, rel=1e-6)

    def test_failed_nudge_recorded_as_not_converged(self):
        # the nudged magnitude lands exactly on the second pole
        p = EigenProblem(np.diag([2.0, 2.0 * (1 + 1e-8)]), np.eye(2), 2.0)
        curve = scan_magnitude(p, 0.0, (1.0, 3.0), 1.0)
        pole = curve.samples[1]
        assert pole.eps.magnitude == 2.0 * (1 + 1e-8)
        assert not pole.converged and pole.inner_iterations == 0
        assert math.isnan(curve.samples[1].lam.magnitude)

    def test_scan_phase_on_circle(self):
        curve = scan_phase(scalar(2.0, 1.0), 1.0, (-1.0, 1.0), 0.5)
        eps = [cmath.rect(1.0, p) for p in curve.column("phase_eps")]
        lam = [cmath.rect(m, p) for m, p in zip(curve.column("abs_lambda"),
                                                 curve.column("phase_lambda"))]
        assert np.allclose(lam, [2 - e for e in eps], rtol=1e-14)

    def test_empty_grid_rejected(self):
        with pytest.raises(InputError):
            scan_magnitude(scalar(2.0, 1.0), 0.0, (1.0, 1.0), 0.1)


class TestRefineMagnitude:
    def test_real_scalar(self, backend):
        m = refine_magnitude(scalar(2.0, 1.0, 1.0), 0.0, (0.5, 1.7))
        assert m == pytest.approx(1.0, abs=1e-9)

    def test_tangent_ray(self):
        # |lambda| = sqrt(4 + (1 - m)^2) only touches 2 at m = 1; the level is
        # reached to tol_mag, which pins m to about sqrt(8 tol_mag)
        m = refine_magnitude(scalar(2 + 1j, 1.0), math.pi / 2, (0.5, 1.6))
        assert abs(m - 1.0) <= 1e-4

    def test_diagonal_ground_ray(self, backend):
        p = EigenProblem(np.diag([1 + 0.5j, 4.0]), np.eye(2), 2.0)
        target = -1 + 0.5j
        m = refine_magnitude(p, cmath.phase(target), (0.5, 2.0))
        assert m == pytest.approx(abs(target), abs=1e-8)

    def test_no_sign_change(self):
        with pytest.raises(BracketFailure):
            refine_magnitude(scalar(2.0, 1.0, 1.0), 0.0, (0.1, 0.5))

    def test_bad_bracket(self):
        with pytest.raises(InputError):
            refine_magnitude(scalar(2.0, 1.0, 1.0), 0.0, (1.5, 0.5))


class TestRefinePhase:
    def test_tangent_circle(self):
        p = refine_phase(scalar(2 + 1j, 1.0), 1.0)
        assert p == pytest.approx(math.pi / 2, abs=1e-4)

    def test_real_scalar(self, backend):
        assert refine_phase(scalar(2.0, 1.0), 1.0) == pytest.approx(0.0, abs=1e-9)

    def test_oracle_phase(self, suites):
        entry = suites["ground_20"][0]
        T, V = gen_random(20, entry["seed"], "complex-general")
        p = EigenProblem(T, V, suites["lambda_ex"])
        root = as_complex(entry["reachable"])[0]
        phase = refine_phase(p, abs(root), (cmath.phase(root) - 0.05, cmath.phase(root) + 0.05))
        assert phase == pytest.approx(cmath.phase(root), abs=1e-6)

    def test_no_root(self):
        # lambda = 3 - eps stays in the right half plane with phase != 0 off the axis
        with pytest.raises(BracketFailure):
            refine_phase(scalar(3.0, 1.0), 1.0, (0.2, 0.6))


def assert_solved(problem, report):
    assert report.converged
    assert report.magnitude_error <= report.tol_mag
    assert report.phase_error <= report.tol_phase
    assert report.residual <= 1e-8 * norm_inf(problem.T)
    assert report.residual == residual_norm(problem.T, problem.V, problem.lambda_ex,
                                            report.epsilon, report.u)
    res = make_resolvent(problem.T, report.epsilon)
    assert abs(lambda_of(res, problem.V, problem.r, report.u) - report.lambda_achieved) \
        <= 1e-12 * abs(report.lambda_achieved)


class TestSolveGround:
    def test_scalar_fold(self, backend):
        # eps = i is a tangency of both polar coordinates
        p = scalar(2 + 1j, 1.0)
        report = solve_ground(p)
        assert_solved(p, report)
        assert abs(report.epsilon - 1j) <= 1e-9
        assert abs(report.lambda_achieved - 2) <= 1e-8

    def test_diagonal(self, backend):
        p = EigenProblem(np.diag([1 + 0.5j, 4.0]), np.eye(2), 2.0)
        report = solve_ground(p)
        assert_solved(p, report)
        # dlambda/deps = -1 here, so eps inherits the tolerance on lambda
        bound = math.hypot(1, 1) * p.lambda_ex * report.tol_mag
        assert abs(report.epsilon - (-1 + 0.5j)) <= bound
        assert np.allclose(report.u, [1, 0], atol=1e-9)

    @pytest.mark.parametrize("index", [0, 5, 12])
    def test_random_20(self, suites, index):
        entry = suites["ground_20"][index]
        T, V = gen_random(20, entry["seed"], "complex-general")
        p = EigenProblem(T, V, suites["lambda_ex"])
        report = solve_ground(p)
        assert_solved(p, report)
        roots = as_complex(entry["spectrum"])
        assert np.min(np.abs(roots - report.epsilon)) <= 1e-6
        assert len(report.trace) > 0 and report.outer_cycles >= 1

    def test_no_bracket(self):
        cfg = SearchConfig(eps_mag_stop=0.5, eps_mag_step=0.05)
        with pytest.raises(NoBracket):
            solve_ground(scalar(2.0, 1.0, 1.0), cfg)

    def test_exclude_skips_known_root(self):
        p = EigenProblem(np.diag([1 + 0.5j, 4.0]), np.eye(2), 2.0)
        report = solve_ground(p, exclude=[-1 + 0.5j])
        assert abs(report.epsilon - (-1 + 0.5j)) > 1e-6

    def test_deterministic(self):
        p = EigenProblem(*gen_random(8, 3, "complex-general"), 2.0)
        a, b = solve_ground(p), solve_ground(p)
        assert a.epsilon == b.epsilon
        assert np.array_equal(a.u, b.u)


class TestSearchConfig:
    def test_rejects_nonpositive(self):
        with pytest.raises(InputError):
            SearchConfig(tol_mag=0)
        with pytest.raises(InputError):
            SearchConfig(eps_mag_step=-1.0)
        with pytest.raises(InputError):
            SearchConfig(max_secant_steps=0)

    def test_default_window(self):
        p = EigenProblem(np.diag([1.0, 3.0]), np.eye(2), 2.0)
        lo, hi, step = SearchConfig().window(p)
        assert hi == pytest.approx(1.05 * 5)
        assert step == pytest.approx(hi / 100) and lo == step

    def test_inner_config_passthrough(self):
        p = scalar(2 + 1j, 1.0)
        report = solve_ground(p, cfg_inner=InnerConfig(max_iterations=50))
        assert report.converged
