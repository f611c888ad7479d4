from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lngeom import linalg
from lngeom.errors import (
    ConvergenceError,
    DegenerateInputError,
    InvalidDimensionError,
    NonFiniteError,
    ShapeError,
)


def frac_projector(alpha):
    """I - alpha alpha^T / alpha^T alpha in exact rational arithmetic."""
    alpha = [Fraction(a) for a in alpha]
    nn = sum(a * a for a in alpha)
    n = len(alpha)
    return [[(1 if i == j else 0) - alpha[i] * alpha[j] / nn for j in range(n)] for i in range(n)]


def projector_distance(u, v):
    return np.linalg.norm(u @ u.T - v @ v.T)


class TestConstructors:
    def test_vector_is_read_only_copy(self):
        src = [1.0, 2.0, 3.0]
        v = linalg.vector(src)
        with pytest.raises(ValueError):
            v[0] = 5.0

    @pytest.mark.parametrize("bad", [[1.0], [], [[1.0, 2.0]]])
    def test_vector_shape(self, bad):
        with pytest.raises(ShapeError):
            linalg.vector(bad)

    def test_vector_finite(self):
        with pytest.raises(NonFiniteError):
            linalg.vector([1.0, np.nan])
        with pytest.raises(NonFiniteError):
            linalg.vector([np.inf, 1.0])

    def test_sym_matrix_exact_symmetry(self):
        a = np.array([[1.0, 2.0 + 1e-15], [2.0, 3.0]])
        s = linalg.sym_matrix(a)
        assert np.array_equal(s, s.T)

    def test_sym_matrix_rejects_asymmetric(self):
        with pytest.raises(ShapeError):
            linalg.sym_matrix([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(ShapeError):
            linalg.sym_matrix([[1.0, 2.0, 3.0]])


class TestKernels:
    def test_matvec_identity(self):
        v = np.array([0.3, -1.2, 7.0])
        assert np.array_equal(linalg.matvec(linalg.identity(3), v), v)

    def test_mean_via_dot(self):
        assert linalg.dot([1, 2, 3], np.ones(3)) / 3 == 2.0

    def test_norm(self):
        assert linalg.norm([3.0, 4.0]) == 5.0

    def test_scale_add(self):
        assert np.array_equal(linalg.add(linalg.scale(2.0, [1.0, 2.0]), [1.0, 1.0]), [3.0, 5.0])

    @pytest.mark.parametrize(
        "call",
        [
            lambda: linalg.dot([1, 2], [1, 2, 3]),
            lambda: linalg.add([1, 2], [1, 2, 3]),
            lambda: linalg.matvec(np.eye(2), [1, 2, 3]),
            lambda: linalg.matmul(np.eye(2), np.eye(3)),
        ],
    )
    def test_dimension_mismatch(self, call):
        with pytest.raises(ShapeError):
            call()


class TestProjectors:
    def test_mean_projector_n2(self):
        assert np.array_equal(linalg.mean_projector(2), [[0.5, -0.5], [-0.5, 0.5]])

    def test_mean_projector_centers(self):
        np.testing.assert_allclose(linalg.mean_projector(3) @ [1.0, 2.0, 3.0], [-1.0, 0.0, 1.0], atol=1e-15)

    @pytest.mark.parametrize("n", [2, 3, 5, 17, 64])
    def test_mean_projector_properties(self, n):
        p = linalg.mean_projector(n)
        assert np.linalg.norm(p @ p - p) <= 1e-12
        assert np.array_equal(p, p.T)
        assert np.abs(p @ np.ones(n)).max() <= 1e-14
        assert abs(np.trace(p) - (n - 1)) <= 1e-12

    @pytest.mark.parametrize("n", [2, 3, 8, 20])
    def test_mean_projector_spectrum(self, n):
        eig = linalg.symmetric_eigen(linalg.mean_projector(n))
        expected = np.r_[0.0, np.ones(n - 1)]
        np.testing.assert_allclose(eig.eigenvalues, expected, atol=1e-10)

    @pytest.mark.parametrize("n", [1, 0, -3, 2.5])
    def test_mean_projector_bad_dimension(self, n):
        with pytest.raises(InvalidDimensionError):
            linalg.mean_projector(n)

    @pytest.mark.parametrize("alpha", [(1.0, 1.0), (3.0, 3.0), (-0.2, -0.2)])
    def test_alpha_projector_ones_direction(self, alpha):
        np.testing.assert_allclose(linalg.alpha_projector(alpha), [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)

    def test_alpha_projector_hand_value(self):
        exact = frac_projector([1, Fraction(1, 2)])
        assert exact == [[Fraction(1, 5), Fraction(-2, 5)], [Fraction(-2, 5), Fraction(4, 5)]]
        np.testing.assert_allclose(linalg.alpha_projector([1.0, 0.5]), np.array(exact, dtype=float), atol=1e-15)

    def test_alpha_projector_axis(self):
        assert np.array_equal(linalg.alpha_projector([0.0, 0.0, 1.0]), np.diag([1.0, 1.0, 0.0]))

    def test_alpha_projector_zero(self):
        with pytest.raises(DegenerateInputError):
            linalg.alpha_projector([0.0, 0.0])

    @settings(max_examples=200, deadline=None)
    @given(arrays(np.float64, st.integers(2, 12), elements=st.floats(-1e3, 1e3)))
    def test_alpha_projector_idempotent(self, alpha):
        if np.linalg.norm(alpha) < 1e-6:
            return
        p = linalg.alpha_projector(alpha)
        assert np.linalg.norm(p @ p - p) <= 1e-12
        assert np.array_equal(p, p.T)
        assert np.linalg.norm(p @ alpha) <= 1e-12 * np.linalg.norm(alpha)


class TestDrazin:
    def test_values(self):
        np.testing.assert_array_equal(linalg.drazin_inverse_diag([1.0, 2.0, 4.0]), np.diag([1.0, 0.5, 0.25]))
        np.testing.assert_array_equal(linalg.drazin_inverse_diag([1.0, 0.0, 2.0]), np.diag([1.0, 0.0, 0.5]))
        np.testing.assert_array_equal(linalg.drazin_inverse_diag([0.0, 0.0]), np.zeros((2, 2)))

    def test_relative_zero_threshold(self):
        d = linalg.drazin_inverse_diag([1.0, 1e-13, 5e-12])
        assert d[1, 1] == 0.0
        assert d[2, 2] == pytest.approx(2e11)

    @settings(max_examples=200, deadline=None)
    @given(
        arrays(
            np.float64,
            st.integers(2, 10),
            elements=st.one_of(st.just(0.0), st.floats(-1e3, -1e-3), st.floats(1e-3, 1e3)),
        )
    )
    def test_drazin_identities(self, g):
        gm, d = np.diag(g), linalg.drazin_inverse_diag(g)
        np.testing.assert_allclose(d @ gm @ d, d, rtol=4e-16, atol=0)
        np.testing.assert_allclose(gm @ d @ gm, gm, rtol=4e-16, atol=0)


class TestSymmetricEigen:
    def test_identity(self):
        eig = linalg.symmetric_eigen(np.eye(3))
        assert np.array_equal(eig.eigenvalues, [1.0, 1.0, 1.0])

    def test_two_by_two(self):
        # characteristic polynomial (2 - x)^2 - 1 = 0  ->  x = 1, 3
        eig = linalg.symmetric_eigen([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(eig.eigenvalues, [1.0, 3.0], atol=1e-15)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(eig.eigenvectors[:, 0], [s, -s], atol=1e-15)
        np.testing.assert_allclose(eig.eigenvectors[:, 1], [s, s], atol=1e-15)

    def test_diagonal(self):
        eig = linalg.symmetric_eigen(np.diag([4.0, 1.0, 9.0]))
        assert np.array_equal(eig.eigenvalues, [1.0, 4.0, 9.0])
        assert np.array_equal(eig.eigenvectors, np.eye(3)[:, [1, 0, 2]])

    def test_zero_matrix(self):
        eig = linalg.symmetric_eigen(np.zeros((4, 4)))
        assert np.array_equal(eig.eigenvalues, np.zeros(4))
        assert np.array_equal(eig.eigenvectors, np.eye(4))

    def test_sign_convention(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(9, 9))
        eig = linalg.symmetric_eigen(a + a.T)
        for col in eig.eigenvectors.T:
            assert col[np.argmax(np.abs(col))] >= 0

    def test_convergence_failure(self):
        a = np.array([[1.0, 2.0, 0.5], [2.0, -1.0, 0.3], [0.5, 0.3, 4.0]])
        with pytest.raises(ConvergenceError) as info:
            linalg.symmetric_eigen(a, max_sweeps=1)
        assert info.value.residual > 0

    def test_degenerate_eigenspace(self):
        # eigenvalue 2 twice: compare the eigenspace, not individual vectors
        q, _ = np.linalg.qr(np.random.default_rng(5).normal(size=(4, 4)))
        a = q @ np.diag([2.0, 2.0, -1.0, 5.0]) @ q.T
        eig = linalg.symmetric_eigen(a)
        np.testing.assert_allclose(eig.eigenvalues, [-1.0, 2.0, 2.0, 5.0], atol=1e-13)
        assert projector_distance(eig.eigenvectors[:, 1:3], q[:, :2]) <= 1e-12

    def test_against_numpy_and_invariants(self):
        rng = np.random.default_rng(11)
        for _ in range(150):
            n = int(rng.integers(2, 65))
            a = rng.uniform(-1, 1, size=(n, n))
            a = np.triu(a) + np.triu(a, 1).T
            eig = linalg.symmetric_eigen(a)
            np.testing.assert_allclose(eig.eigenvalues, np.linalg.eigvalsh(a), atol=1e-12 * n)
            assert eig.orthonormality_defect() <= 1e-12
            assert eig.residual(a) <= 1e-10 * max(1.0, np.linalg.norm(a))

    @settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(2, 8), st.integers(2, 8)).map(lambda t: (t[0], t[0])),
                  elements=st.floats(-1e6, 1e6)))
    def test_property_reconstruction(self, a):
        a = np.triu(a) + np.triu(a, 1).T
        eig = linalg.symmetric_eigen(a)
        assert np.all(np.diff(eig.eigenvalues) >= 0)
        assert eig.orthonormality_defect() <= 1e-12
        assert eig.residual(a) <= 1e-10 * max(1.0, np.linalg.norm(a))
