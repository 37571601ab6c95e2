import math
import unittest

import numpy as np

from quantum.sdp import Affine, SdpBuilder, SdpProblem, solve_sdp
from system.core import SdpStatus
from system.errors import DimensionError, NotHermitianError


class TestSdpBuilder(unittest.TestCase):
    """Test small programs with known optima"""

    def test_largest_eigenvalue(self):
        """min t s.t. t·1 - A ⪰ 0 is λ_max(A)"""
        a = np.array([[2.0, 1.0], [1.0, 2.0]])
        builder = SdpBuilder()
        t = builder.scalar()
        builder.psd(t.kron(np.eye(2)) - a)
        builder.minimize(t)
        result = builder.solve()
        self.assertTrue(result.certified)
        self.assertAlmostEqual(result.value, 3.0, places=6)

    def test_complex_hermitian_variable(self):
        """max Tr(JX) over 0 ⪯ X ⪯ 1 is the sum of the positive eigenvalues of J"""
        j = np.array([[1.0, 1j], [-1j, -1.0]])
        builder = SdpBuilder()
        x = builder.hermitian(2)
        builder.psd(x)
        builder.psd(np.eye(2) - x)
        builder.maximize(x.left(j).trace())
        result = builder.solve()
        self.assertEqual(result.status, SdpStatus.OPTIMAL)
        self.assertAlmostEqual(result.value, math.sqrt(2), places=6)
        witness = result[x]
        self.assertLess(np.max(np.abs(witness - witness.conj().T)), 1e-12)

    def test_equality_constraint(self):
        """min Tr(X·diag(1,2)) with Tr X = 1 puts all weight on the first level"""
        builder = SdpBuilder()
        x = builder.hermitian(2, real=True)
        builder.psd(x)
        builder.equal(x.trace(), 1.0)
        builder.minimize(x.left(np.diag([1.0, 2.0])).trace())
        result = builder.solve()
        self.assertAlmostEqual(result.value, 1.0, places=6)

    def test_infeasible(self):
        builder = SdpBuilder()
        x = builder.scalar()
        builder.psd(x)
        builder.equal(x, -1.0)
        builder.minimize(x)
        self.assertEqual(builder.solve().status, SdpStatus.INFEASIBLE)

    def test_unbounded_free_direction(self):
        """A variable that moves no constraint makes a linear objective unbounded"""
        builder = SdpBuilder()
        free = builder.scalar()
        bounded = builder.scalar()
        builder.psd(bounded)
        builder.minimize(free)
        self.assertEqual(builder.solve().status, SdpStatus.UNBOUNDED)

    def test_array_on_the_left(self):
        """ndarray - Affine stays an affine expression"""
        builder = SdpBuilder()
        x = builder.hermitian(2)
        self.assertIsInstance(np.eye(2) - x, Affine)


class TestSdpProblem(unittest.TestCase):
    """Test validation of standard-form programs"""

    def test_non_hermitian_block(self):
        with self.assertRaises(NotHermitianError):
            SdpProblem(np.array([1.0]), [(np.zeros((2, 2)), np.array([[[0.0, 1.0], [0.0, 0.0]]]))])

    def test_coefficient_shape(self):
        with self.assertRaises(DimensionError):
            SdpProblem(np.array([1.0, 0.0]), [(np.zeros((2, 2)), np.zeros((1, 2, 2)))])

    def test_solve_standard_form(self):
        """min x s.t. [[x, 1], [1, x]] ⪰ 0 gives x = 1"""
        f0 = np.array([[0.0, 1.0], [1.0, 0.0]])
        fk = np.array([np.eye(2)])
        solution = solve_sdp(SdpProblem(np.array([1.0]), [(f0, fk)]))
        self.assertTrue(solution.certified)
        self.assertAlmostEqual(solution.x[0], 1.0, places=6)
        self.assertLess(solution.gap, 1e-6)


if __name__ == "__main__":
    unittest.main()
