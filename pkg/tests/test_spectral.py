import unittest

import numpy as np

from quantum.spectral import (
    Operator, check_hermitian, eigh, exp_herm, isometry_residual, kron, partial_trace, pinv_herm, psd_sqrt,
    random_density, random_hermitian, random_isometry, range_basis, spectral_norm, spectral_range, trace_norm
)
from system.core import make_rng
from system.errors import DimensionError, DomainError, NotHermitianError

PAULI_Z = np.diag([1.0, -1.0])


class TestEigh(unittest.TestCase):
    """Test the deterministic Hermitian eigendecomposition"""

    def setUp(self):
        self.rng = make_rng(1)

    def test_reconstruction_and_order(self):
        """Eigenvalues ascend and V Λ V† gives back A"""
        a = random_hermitian(5, self.rng)
        spectrum = eigh(a)
        self.assertTrue(np.all(np.diff(spectrum.eigenvalues) >= 0))
        np.testing.assert_allclose(spectrum.reconstruct(), a, atol=1e-10)

    def test_phase_normalization(self):
        """The first non-negligible entry of every eigenvector is real positive"""
        spectrum = eigh(random_hermitian(4, self.rng))
        for column in spectrum.eigenvectors.T:
            pivot = column[np.flatnonzero(np.abs(column) > 1e-12)[0]]
            self.assertAlmostEqual(pivot.imag, 0.0, places=12)
            self.assertGreater(pivot.real, 0.0)

    def test_degenerate_cluster_is_reproducible(self):
        """Repeated calls on a degenerate matrix agree exactly"""
        a = np.diag([1.0, 1.0, 2.0])
        first, second = eigh(a), eigh(a)
        np.testing.assert_array_equal(first.eigenvectors, second.eigenvectors)

    def test_non_hermitian_rejected(self):
        with self.assertRaises(NotHermitianError):
            check_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestSpectralFunctions(unittest.TestCase):
    """Test functions of Hermitian matrices"""

    def test_psd_sqrt(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-12)

    def test_psd_sqrt_negative_eigenvalue(self):
        """A clearly negative eigenvalue is outside the domain"""
        with self.assertRaises(DomainError):
            psd_sqrt(np.diag([-1.0, 1.0]))

    def test_psd_sqrt_clips_roundoff(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([-1e-13, 1.0])), np.diag([0.0, 1.0]), atol=1e-12)

    def test_pinv_on_support(self):
        inverse, support = pinv_herm(np.diag([2.0, 0.0]))
        np.testing.assert_allclose(inverse, np.diag([0.5, 0.0]), atol=1e-12)
        self.assertEqual(support.tolist(), [False, True])

    def test_exp_herm(self):
        """e^{-iπZ} = -1"""
        np.testing.assert_allclose(exp_herm(PAULI_Z, np.pi), -np.eye(2), atol=1e-12)

    def test_spectral_range(self):
        self.assertAlmostEqual(spectral_range(np.diag([-0.5, 0.5, 1.5])), 2.0)


class TestNormsAndTensors(unittest.TestCase):
    """Test norms, tensor products and partial traces"""

    def test_norms(self):
        a = np.diag([1.0, -2.0])
        self.assertAlmostEqual(trace_norm(a), 3.0)
        self.assertAlmostEqual(spectral_norm(a), 2.0)

    def test_partial_trace_of_product(self):
        rng = make_rng(2)
        rho, sigma = random_density(2, rng), random_density(3, rng)
        np.testing.assert_allclose(partial_trace(kron(rho, sigma), [2, 3], [0]), rho, atol=1e-12)
        np.testing.assert_allclose(partial_trace(kron(rho, sigma), [2, 3], [1]), sigma, atol=1e-12)

    def test_partial_trace_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            partial_trace(np.eye(4), [2, 3], [0])

    def test_range_basis(self):
        a = np.outer([1.0, 1.0, 0.0], [1.0, 1.0, 0.0])
        self.assertEqual(range_basis(a).shape, (3, 1))


class TestOperator(unittest.TestCase):
    """Test structural tags on operators"""

    def test_unitary_tag(self):
        Operator(np.eye(2), frozenset({"unitary"}))
        with self.assertRaises(DomainError):
            Operator(np.diag([1.0, 2.0]), frozenset({"unitary"}))

    def test_unknown_tag(self):
        with self.assertRaises(DomainError):
            Operator(np.eye(2), frozenset({"sparse"}))

    def test_random_isometry(self):
        w = random_isometry(6, 2, make_rng(3))
        self.assertLess(isometry_residual(w), 1e-10)


if __name__ == "__main__":
    unittest.main()
