import ast
import math
import pathlib
import warnings

import numpy as np
import pytest

import waxman.oracle
from waxman.errors import IncompleteSpectrum, InputError, ZeroDerivative, ZeroVector
from waxman.io import gen_random
from waxman.linalg import norm_inf
from waxman.oracle import (OracleConfig, budget_gap_ratio, char_logdet, dominant_branch_roots,
                           eig_all_small, eigvec, newton_root, residual_norm)

from conftest import as_complex


def cofactor_det(A):
    n = len(A)
    if n == 1:
        return A[0][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in A[1:]]
        total += (-1) ** j * A[0][j] * cofactor_det(minor)
    return total


class TestCharLogdet:
    def test_diagonal(self, backend):
        ld = char_logdet(np.diag([1.0, 2.0]), 0.0)
        assert ld.log_magnitude == pytest.approx(math.log(2), rel=1e-15)
        assert ld.phase == 0.0

    def test_identity(self):
        assert char_logdet(np.eye(3), 0.0) == (0.0, 0.0)

    def test_singular_marker(self):
        ld = char_logdet(np.diag([1.0, 2 + 1j]), 2 + 1j)
        assert ld.singular and ld.log_magnitude == -math.inf
        assert ld.value() == 0

    def test_negative_determinant_phase(self):
        ld = char_logdet(np.array([[0.0, 1.0], [1.0, 0.0]]), 0.0)
        assert ld.log_magnitude == 0.0
        assert ld.phase == pytest.approx(math.pi)
        assert -math.pi < ld.phase <= math.pi

    def test_against_cofactor_expansion(self, backend, rng):
        for _ in range(200):
            n = int(rng.integers(1, 7))
            H = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            eps = complex(*rng.standard_normal(2))
            expected = cofactor_det((H - eps * np.eye(n)).tolist())
            got = char_logdet(H, eps).value()
            assert abs(got - expected) <= 1e-10 * abs(expected)

    def test_no_overflow(self):
        ld = char_logdet(1e200 * np.eye(300), 0.0)
        assert ld.log_magnitude == pytest.approx(300 * 200 * math.log(10), rel=1e-14)


class TestNewtonRoot:
    def test_swap_matrix(self):
        assert newton_root(np.array([[0.0, 1.0], [1.0, 0.0]]), 0.9) == pytest.approx(1.0, abs=1e-12)

    def test_scalar(self):
        assert newton_root(np.array([[3.0]]), 2.5) == pytest.approx(3.0, abs=1e-12)

    def test_symmetric_saddle(self):
        with pytest.raises(ZeroDerivative):
            newton_root(np.array([[0.0, 1.0], [1.0, 0.0]]), 0.0)

    def test_complex_root(self, rng):
        H = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        exact = np.linalg.eigvals(H)
        root = newton_root(H, exact[0] + 0.01)
        assert np.min(np.abs(exact - root)) <= 1e-10


class TestEigAllSmall:
    def test_diagonal(self):
        roots = eig_all_small(np.diag([1.0, 2 + 1j]))
        assert np.allclose(roots, [1, 2 + 1j], atol=1e-12)

    def test_rotation(self):
        roots = eig_all_small(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert np.allclose(roots, [-1j, 1j], atol=1e-12)

    def test_random_6(self, rng):
        H = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        roots = eig_all_small(H)
        assert len(roots) == 6
        for z in roots:
            assert eigvec(H, z)[1] <= 1e-8 * norm_inf(H)

    def test_roots_drive_logdet_down(self, rng):
        H = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        for z in eig_all_small(H):
            polished = newton_root(H, z)
            ld = char_logdet(H, polished)
            assert ld.singular or ld.log_magnitude < math.log(1e-8 * norm_inf(H))

    def test_matches_lapack(self):
        # cross-check against an unrelated eigensolver, never used by the package
        for seed in (0, 1, 2):
            T, V = gen_random(20, seed, "complex-general")
            H = T - 2.0 * V
            ours = np.array(eig_all_small(H))
            ref = np.linalg.eigvals(H)
            assert ours.size == 20
            assert max(np.min(np.abs(ref - z)) for z in ours) <= 1e-9

    def test_multiplicity_collapses(self):
        with pytest.warns(IncompleteSpectrum):
            roots = eig_all_small(np.eye(3))
        assert np.allclose(roots, [1.0])

    def test_bad_config(self):
        with pytest.raises(InputError):
            OracleConfig(box=(1, 0, 0, 1))
        with pytest.raises(InputError):
            OracleConfig(samples_re=1)


class TestResidualNorm:
    def test_exact_pair(self):
        assert residual_norm(np.diag([1 + 0.5j, 4.0]), np.eye(2), 2.0, -1 + 0.5j, [1, 0]) == 0

    def test_non_eigen_direction(self):
        assert residual_norm(np.diag([1.0, 2.0]), np.zeros((2, 2)), 2.0, 1.0, [0, 1]) == 1.0

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            residual_norm(np.eye(2), np.eye(2), 1.0, 0.0, [0, 0])


class TestFrozenSuites:
    @pytest.mark.parametrize("key,n,kind", [("ground_20", 20, "complex-general"),
                                            ("real_20", 20, "real-symmetric"),
                                            ("excited_10", 10, "complex-general")])
    def test_spectra_match_lapack(self, suites, key, n, kind):
        for entry in suites[key]:
            T, V = gen_random(n, entry["seed"], kind)
            ref = np.linalg.eigvals(T - suites["lambda_ex"] * V)
            frozen = as_complex(entry["spectrum"])
            assert frozen.size == n
            assert max(np.min(np.abs(ref - z)) for z in frozen) <= 1e-9
            for z in as_complex(entry["reachable"]):
                assert np.min(np.abs(frozen - z)) <= 1e-9

    def test_live_rederivation(self, suites):
        gap = suites["min_gap_ratio"]
        for entry in suites["ground_20"][:2]:
            T, V = gen_random(20, entry["seed"], "complex-general")
            with warnings.catch_warnings():
                warnings.simplefilter("error")
                live = [r.epsilon for r in dominant_branch_roots(T, V, suites["lambda_ex"],
                                                                 min_gap_ratio=gap)]
            frozen = as_complex(entry["reachable"])
            assert len(live) >= len(frozen)
            for z in frozen:
                assert min(abs(z - w) for w in live) <= 1e-10

    def test_budget_ratio(self, suites):
        assert budget_gap_ratio(1e-10, 4000) == suites["min_gap_ratio"]
        assert budget_gap_ratio(1e-10, 4000) ** 4000 == pytest.approx(1e10)


def test_dominant_branch_diagonal():
    # G V at eps = -1 + 0.5i is diag(1/2, 1/(5 - 0.5i)); 1/2 dominates
    roots = dominant_branch_roots(np.diag([1 + 0.5j, 4.0]), np.eye(2), 2.0)
    assert len(roots) == 1
    assert roots[0].epsilon == pytest.approx(-1 + 0.5j, abs=1e-12)
    assert roots[0].gap_ratio == pytest.approx(abs(5 - 0.5j) / 2, rel=1e-10)


def test_oracle_is_independent_of_the_iteration():
    tree = ast.parse(pathlib.Path(waxman.oracle.__file__).read_text())
    imported = {node.module for node in ast.walk(tree)
                if isinstance(node, ast.ImportFrom) and node.module}
    assert imported & {"iteration", "search", "resolvent", "deflation", "perturbation"} == set()
