import math
import unittest

import numpy as np

from quantum.bound import (
    BoundInputs, clifford_level_cap, ell_forward, ell_inverse, evaluate_bounds, frak_f, frak_f_tilde, frak_j,
    grp, hks_holds, hks_quantities, noise_structure_bounds, rld_channel_qfi, transversal_gate_bound
)
from quantum.channel import dephasing_channel, erasure_channel, identity_channel, tensor
from quantum.codes import SITE_CHARGE, RmParams, rm_closed_forms
from quantum.noise import dephasing_noise, erasure_noise
from system.errors import DomainError

HALF_Z = np.diag([0.5, -0.5])


class TestHksQuantities(unittest.TestCase):
    """Test the noise programs on channels with known optima"""

    def test_erasure(self):
        erasure = erasure_channel(2, 1.0)
        self.assertTrue(hks_holds(erasure, HALF_Z))
        self.assertAlmostEqual(frak_j(erasure, HALF_Z).value, 1.0, places=5)
        self.assertAlmostEqual(frak_f(erasure, HALF_Z).value, 0.0, places=5)

    def test_dephasing(self):
        """Dephasing with p = 1/4 has 𝔉 = (1-2p)²/(4p(1-p)) = 1/3"""
        solution = frak_f(dephasing_channel(0.25), HALF_Z)
        self.assertTrue(solution.feasible)
        self.assertAlmostEqual(solution.value, 1 / 3, places=5)

    def test_dephasing_is_additive(self):
        pair = tensor(dephasing_channel(0.25), dephasing_channel(0.25))
        charge = np.kron(HALF_Z, np.eye(2)) + np.kron(np.eye(2), HALF_Z)
        self.assertAlmostEqual(frak_f(pair, charge).value, 2 / 3, places=4)

    def test_tilde_dominates(self):
        channel = dephasing_channel(0.1)
        self.assertGreaterEqual(frak_f_tilde(channel, HALF_Z).value, frak_f(channel, HALF_Z).value - 1e-6)

    def test_identity_violates_hks(self):
        quantities = hks_quantities(identity_channel(2), HALF_Z)
        self.assertFalse(quantities.hks)
        self.assertIsNone(quantities.frak_f)
        self.assertTrue(math.isinf(quantities.rld_qfi))

    def test_dephasing_quantities_are_consistent(self):
        quantities = hks_quantities(dephasing_channel(0.25), HALF_Z)
        self.assertEqual(quantities.check(), [])
        self.assertGreaterEqual(quantities.rld_qfi, quantities.frak_f - 1e-5)

    def test_rld_of_constant_family(self):
        self.assertEqual(rld_channel_qfi(dephasing_channel(0.2), np.zeros((2, 2))), 0.0)


class TestStructureBounds(unittest.TestCase):
    """Test bounds assembled from single-site programs"""

    def test_single_erasure_mixture(self):
        bounds = noise_structure_bounds(erasure_noise(4), SITE_CHARGE)
        self.assertAlmostEqual(bounds.frak_j, 4.0, places=4)
        self.assertEqual(bounds.erasure["frak_j"], 4.0)

    def test_independent_dephasing(self):
        bounds = noise_structure_bounds(dephasing_noise(3, 0.25, "independent"), SITE_CHARGE)
        self.assertAlmostEqual(bounds.frak_f, 1.0, places=4)
        self.assertEqual(bounds.erasure, {})


class TestBoundFunctions(unittest.TestCase):
    """Test the scalar maps entering the inequalities"""

    def test_grp_branches(self):
        self.assertEqual(grp(-0.5, 7.0), (0.0, "trivial"))
        self.assertEqual(grp(8.0, 7.0), (math.sqrt(3 / 8), "cap"))
        value, branch = grp(1.0, 7.0)
        self.assertEqual(branch, "sqrt")
        self.assertAlmostEqual(value, math.sqrt(6.5) / 7)

    def test_ell_inverse_inverts(self):
        for kind in ("l1", "l2"):
            x = ell_forward(kind, 0.05)
            self.assertAlmostEqual(ell_inverse(kind, x).value, 0.05, places=9)

    def test_ell_inverse_saturates(self):
        result = ell_inverse("l2", 1e6)
        self.assertTrue(result.saturated)
        self.assertAlmostEqual(result.value, 1 / (6 * math.sqrt(2)))
        self.assertEqual(ell_inverse("l1", 0.0).value, 0.0)

    def test_ell_inverse_domain(self):
        with self.assertRaises(DomainError):
            ell_inverse("l1", -1.0)
        with self.assertRaises(DomainError):
            ell_inverse("l3", 0.5)
        with self.assertRaises(DomainError):
            ell_inverse("l4", 0.5)

    def test_l3_with_parameters(self):
        params = {"variance": 0.25, "delta_l": 1.0}
        x = ell_forward("l3", 0.01, params)
        self.assertAlmostEqual(ell_inverse("l3", x, params).value, 0.01, places=9)


class TestTransversal(unittest.TestCase):
    """Test the precision cap on transversal rotations"""

    def test_seven_qubit_cap(self):
        cap = transversal_gate_bound(1.0, [1.0] * 7)
        self.assertAlmostEqual(cap, 188.07, delta=0.01)
        self.assertEqual(clifford_level_cap(cap), 7)

    def test_cap_exceeds_reed_muller_denominators(self):
        for t in (3, 4, 5):
            self.assertLessEqual(2 ** (t - 1), transversal_gate_bound(1.0, [1.0] * (2 ** t - 1)))

    def test_invalid_inputs(self):
        with self.assertRaises(DomainError):
            transversal_gate_bound(0.0, [1.0])
        with self.assertRaises(DomainError):
            transversal_gate_bound(1.0, [-1.0])
        with self.assertRaises(DomainError):
            clifford_level_cap(0.5)

    def test_level_cap_of_powers_of_two(self):
        self.assertEqual(clifford_level_cap(8.0), 3)
        self.assertEqual(clifford_level_cap(1.0), 0)


class TestEvaluateBounds(unittest.TestCase):
    """Test inequality evaluation on closed-form inputs"""

    def rm_inputs(self, **overrides):
        record = rm_closed_forms(RmParams(3))
        values = dict(delta_l=1.0, delta_s=7.0, eps_lower=0.0, eps_upper=0.0, delta_group=record.delta_group,
                      delta_point=record.delta_point, delta_charge=record.delta_charge, chi=record.chi,
                      frak_b=record.frak_b, frak_j=7.0, frak_f=49.0)
        values.update(overrides)
        return BoundInputs(**values)

    def test_reed_muller_satisfies_every_bound(self):
        evaluations = evaluate_bounds(self.rm_inputs())
        self.assertFalse([e.name for e in evaluations if e.violated])
        exact = next(e for e in evaluations if e.name == "exact_qec_global")
        self.assertFalse(exact.skipped)
        self.assertAlmostEqual(exact.rhs, math.sqrt(6.5) / 7)

    def test_non_isometric_skips(self):
        evaluations = {e.name: e for e in evaluate_bounds(self.rm_inputs(isometric=False))}
        self.assertTrue(evaluations["global_kl"].skipped)
        self.assertEqual(evaluations["global_kl"].reason, "encoder is not isometric")

    def test_violation_is_reported(self):
        evaluations = {e.name: e for e in evaluate_bounds(self.rm_inputs(delta_group=0.01))}
        self.assertTrue(evaluations["exact_qec_global"].violated)

    def test_missing_hks(self):
        evaluations = {e.name: e for e in evaluate_bounds(self.rm_inputs(hks=False))}
        self.assertEqual(evaluations["global_kl"].reason, "HKS condition fails")
        self.assertFalse(evaluations["global_charge"].skipped)


if __name__ == "__main__":
    unittest.main()
