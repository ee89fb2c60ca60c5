import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nfl_lab.errors import DimensionMismatch, EmptyInput, NonSquare, NotUnitary
from nfl_lab.linalg import (
    HermitianMatrix,
    UnitaryOperator,
    expm_hermitian,
    gram_schmidt,
    orthonormal_basis_of_span,
    qr_decompose,
    schmidt_decompose,
    schmidt_reconstruct,
    unitarity_error,
)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def ginibre(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unit(rng, n):
    v = ginibre(rng, n)
    return v / np.linalg.norm(v)


class TestQR:
    def test_identity(self):
        q, r = qr_decompose(np.eye(3))
        np.testing.assert_allclose(q, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(r, np.eye(3), atol=1e-15)

    def test_triangular_positive_diagonal(self):
        q, r = qr_decompose(np.diag([2.0, 3.0]))
        np.testing.assert_allclose(q, np.eye(2), atol=1e-15)
        np.testing.assert_allclose(r, np.diag([2.0, 3.0]), atol=1e-15)

    def test_random_reconstruction(self):
        m = ginibre(np.random.default_rng(1), 4, 4)
        q, r = qr_decompose(m)
        assert np.max(np.abs(m - q @ r)) <= 1e-10
        assert unitarity_error(q) <= 1e-10
        np.testing.assert_array_equal(np.tril(r, -1), 0)
        assert np.all(np.diag(r).real >= 0) and np.allclose(np.diag(r).imag, 0)

    def test_non_square(self):
        with pytest.raises(NonSquare):
            qr_decompose(np.ones((2, 3)))


class TestSchmidt:
    def test_product_state(self):
        coeffs, left, right = schmidt_decompose([1, 0, 0, 0], 2, 2)
        np.testing.assert_allclose(coeffs, [1.0])
        np.testing.assert_allclose(left[:, 0], [1, 0])
        np.testing.assert_allclose(right[:, 0], [1, 0])

    def test_bell_state(self):
        coeffs, _, _ = schmidt_decompose(np.array([1, 0, 0, 1]) / np.sqrt(2), 2, 2)
        np.testing.assert_allclose(coeffs, [0.5, 0.5], atol=1e-15)

    def test_rank_two_round_trip(self):
        rng = np.random.default_rng(7)
        xi = np.linalg.qr(ginibre(rng, 4, 2))[0]
        zeta = np.linalg.qr(ginibre(rng, 4, 2))[0]
        v = np.sqrt(0.7) * np.kron(xi[:, 0], zeta[:, 0]) + np.sqrt(0.3) * np.kron(xi[:, 1], zeta[:, 1])
        coeffs, left, right = schmidt_decompose(v, 4, 4)
        np.testing.assert_allclose(coeffs, [0.7, 0.3], atol=1e-10)
        assert np.max(np.abs(schmidt_reconstruct(coeffs, left, right) - v)) <= 1e-10

    def test_phase_convention(self):
        rng = np.random.default_rng(3)
        _, left, _ = schmidt_decompose(random_unit(rng, 12), 3, 4)
        lead = left[np.argmax(np.abs(left) > 1e-8, axis=0), range(left.shape[1])]
        np.testing.assert_allclose(lead.imag, 0, atol=1e-15)
        assert np.all(lead.real > 0)

    def test_bad_length(self):
        with pytest.raises(DimensionMismatch):
            schmidt_decompose(np.ones(5) / np.sqrt(5), 2, 2)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 5), st.data())
    def test_round_trip_all_ranks(self, d_x, d_r, data):
        r = data.draw(st.integers(1, min(d_x, d_r)))
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        xi = np.linalg.qr(ginibre(rng, d_x, r))[0]
        zeta = np.linalg.qr(ginibre(rng, d_r, r))[0]
        c = rng.dirichlet(np.ones(r)) * 0.9 + 0.1 / r
        v = ((xi * np.sqrt(c)) @ zeta.T).ravel()
        coeffs, left, right = schmidt_decompose(v, d_x, d_r)
        assert len(coeffs) == r
        assert abs(coeffs.sum() - 1) <= 1e-10
        assert np.all(np.diff(coeffs) <= 1e-15)
        assert np.max(np.abs(schmidt_reconstruct(coeffs, left, right) - v)) <= 1e-10
        np.testing.assert_allclose(left.conj().T @ left, np.eye(r), atol=1e-10)
        np.testing.assert_allclose(right.conj().T @ right, np.eye(r), atol=1e-10)


class TestExpm:
    def test_zero_generator(self):
        np.testing.assert_allclose(expm_hermitian(np.zeros((3, 3)), 2.5).matrix, np.eye(3), atol=1e-15)

    def test_diagonal(self):
        u = expm_hermitian(np.diag([np.pi, 0.0]), 1.0)
        np.testing.assert_allclose(u.matrix, np.diag([-1, 1]), atol=1e-12)

    @pytest.mark.parametrize("s", [np.pi / 2, 0.3, -1.7])
    def test_pauli_x_closed_form(self, s):
        expected = np.cos(s) * np.eye(2) + 1j * np.sin(s) * PAULI_X
        np.testing.assert_allclose(expm_hermitian(PAULI_X, s).matrix, expected, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 8), st.floats(-5, 5), st.integers(0, 2**32 - 1))
    def test_inverse(self, d, s, seed):
        a = ginibre(np.random.default_rng(seed), d, d)
        h = HermitianMatrix((a + a.conj().T) / 2)
        prod = expm_hermitian(h, s).matrix @ expm_hermitian(h, -s).matrix
        assert np.max(np.abs(prod - np.eye(d))) <= 1e-10


class TestSpan:
    def test_duplicates(self):
        _, rank = orthonormal_basis_of_span([[1, 0], [1, 0]])
        assert rank == 1

    def test_standard_basis(self):
        basis, rank = orthonormal_basis_of_span([[1, 0], [0, 1]])
        assert rank == 2
        np.testing.assert_allclose(np.abs(basis), np.eye(2), atol=1e-15)

    def test_random_gram(self):
        rng = np.random.default_rng(11)
        basis, rank = orthonormal_basis_of_span([ginibre(rng, 8) for _ in range(3)])
        assert rank == 3
        assert np.max(np.abs(basis.conj().T @ basis - np.eye(3))) <= 1e-10

    def test_empty(self):
        with pytest.raises(EmptyInput):
            orthonormal_basis_of_span([])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 10), st.integers(0, 2**32 - 1))
    def test_rank_matches_independent_svd(self, n, k, true_rank, seed):
        rng = np.random.default_rng(seed)
        true_rank = min(true_rank, n, k)
        a = ginibre(rng, n, true_rank) @ ginibre(rng, true_rank, k)
        vectors = list(a.T) if true_rank else [np.zeros(n)] * k
        basis, rank = orthonormal_basis_of_span(vectors)
        assert rank == np.linalg.matrix_rank(a, tol=1e-8) == true_rank
        # same subspace: projecting the inputs onto the basis leaves them unchanged
        proj = basis @ (basis.conj().T @ a)
        assert np.max(np.abs(proj - a)) <= 1e-8 * max(1.0, np.abs(a).max())

    def test_gram_schmidt_agrees(self):
        rng = np.random.default_rng(5)
        vecs = [ginibre(rng, 6) for _ in range(4)]
        q = gram_schmidt(vecs)
        basis, _ = orthonormal_basis_of_span(vecs)
        np.testing.assert_allclose(q @ q.conj().T, basis @ basis.conj().T, atol=1e-10)


class TestUnitaryOperator:
    def test_rejects_non_unitary(self):
        with pytest.raises(NotUnitary):
            UnitaryOperator(np.diag([1.0, 1.0 + 1e-6]))

    def test_frozen(self):
        u = UnitaryOperator.identity(2)
        with pytest.raises(ValueError):
            u.matrix[0, 0] = 2
