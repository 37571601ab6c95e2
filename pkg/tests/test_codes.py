import math
import unittest

import numpy as np

from quantum.channel import extract_dephasing
from quantum.codes import (
    RmParams, ThermoParams, dicke_state, rm_closed_forms, rm_code, rm_generator, rm_stabilizer_residual,
    rm_stabilizers, rm_transversal_denominator, shortened_rm, thermo_closed_forms, thermo_code,
    thermo_complementary_states, thermo_offdiag, thermo_optimal_recovery, thermo_registered_lower
)
from quantum.noise import dephasing_noise, encode_sectors, erasure_noise
from quantum.symmetry import charge_fluctuation, delta_charge, delta_group, delta_point, frak_b
from system.errors import DimensionError, DomainError


class TestDickeStates(unittest.TestCase):
    """Test dense Dicke states"""

    def test_normalized_support(self):
        psi = dicke_state(4, 0)
        self.assertEqual(np.count_nonzero(psi), 6)
        self.assertAlmostEqual(np.linalg.norm(psi), 1.0)

    def test_charge_eigenvalue(self):
        """|2_4> is supported on weight-3 strings, ΣZ eigenvalue -2"""
        psi = dicke_state(4, 2)
        index = int(np.flatnonzero(psi)[0])
        self.assertEqual(bin(index).count("1"), 3)

    def test_parity_mismatch(self):
        with self.assertRaises(DomainError):
            dicke_state(4, 1)


class TestThermoParams(unittest.TestCase):
    """Test parameter validation of thermodynamic codes"""

    def test_invalid_parameters(self):
        for n, m, q in [(6, 1, 0.5), (7, 2, 0.5), (6, 2, 1.5), (2, 2, 0.5)]:
            with self.assertRaises(DomainError):
                ThermoParams(n, m, q)

    def test_dense_cap(self):
        with self.assertRaises(DimensionError):
            thermo_code(ThermoParams(18, 2, 0.5))


class TestThermoClosedForms(unittest.TestCase):
    """Test closed forms of the thermodynamic code against dense numerics"""

    def setUp(self):
        self.params = ThermoParams(6, 2, 0.5)
        self.code = thermo_code(self.params)
        self.record = thermo_closed_forms(self.params)

    def test_pulled_back_charge(self):
        pulled = self.code.pulled_back_charge()
        np.testing.assert_allclose(pulled, self.record.dual_HS_coeff * np.diag([1.0, -1.0]), atol=1e-12)

    def test_charge_measures(self):
        self.assertAlmostEqual(delta_charge(self.code), self.record.delta_charge, places=10)
        self.assertAlmostEqual(charge_fluctuation(self.code), self.record.chi, places=10)

    def test_delta_group(self):
        self.assertAlmostEqual(delta_group(self.code).value, self.record.delta_group, places=6)

    def test_delta_point(self):
        self.assertAlmostEqual(delta_point(self.code).value, self.record.delta_point, places=4)

    def test_frak_b(self):
        self.assertAlmostEqual(frak_b(self.code).value, self.record.frak_b, places=5)

    def test_exactly_covariant_end(self):
        record = thermo_closed_forms(ThermoParams(6, 2, 1.0))
        self.assertEqual(record.epsilon_tilde, 0.0)
        self.assertAlmostEqual(record.offdiag, 1.0)

    def test_exactly_correcting_end(self):
        record = thermo_closed_forms(ThermoParams(6, 2, 0.0))
        self.assertEqual(record.delta_group, 0.0)
        self.assertEqual(record.delta_charge, 0.0)

    def test_large_n_is_evaluated_without_dense_states(self):
        record = thermo_closed_forms(ThermoParams(1024, 2, 0.5))
        self.assertLess(record.epsilon_tilde, record.epsilon_lower * 2)
        self.assertLessEqual(record.epsilon_lower, record.epsilon_tilde + 1e-15)

    def test_complementary_states_are_normalized(self):
        for rho in thermo_complementary_states(self.params):
            self.assertAlmostEqual(np.trace(rho), 1.0)

    def test_registered_lower_bound_needs_single_erasure(self):
        self.assertIn("thermo_complementary", thermo_registered_lower(self.params, erasure_noise(6)))
        self.assertEqual(thermo_registered_lower(self.params, dephasing_noise(6, 0.1)), {})


class TestThermoRecovery(unittest.TestCase):
    """Test the explicit thermodynamic recovery"""

    def setUp(self):
        self.params = ThermoParams(6, 2, 0.5)
        self.code = thermo_code(self.params)
        self.sectors = encode_sectors(self.code, erasure_noise(6))
        self.recovery = thermo_optimal_recovery(self.params, self.code, self.sectors)

    def test_recovery_is_trace_preserving(self):
        self.assertLess(self.recovery.check(self.sectors), 1e-8)

    def test_corrected_channel_is_dephasing(self):
        fitted = extract_dephasing(self.recovery.corrected_channel(self.sectors))
        self.assertAlmostEqual(abs(fitted.xi), thermo_offdiag(self.params), places=8)

    def test_requires_room_for_recovery_vectors(self):
        with self.assertRaises(DomainError):
            thermo_optimal_recovery(ThermoParams(4, 2, 0.5))

    def test_rejects_other_sectors(self):
        sectors = encode_sectors(self.code, erasure_noise(6, 0.1, "independent"))
        with self.assertRaises(DomainError):
            thermo_optimal_recovery(self.params, self.code, sectors)


class TestReedMuller(unittest.TestCase):
    """Test the quantum Reed-Muller codes"""

    def test_generator_shape(self):
        self.assertEqual(rm_generator(1, 3).shape, (4, 8))

    def test_shortened_code(self):
        words = shortened_rm(1, 3)
        self.assertEqual(words.shape, (8, 7))
        self.assertEqual(sorted(set(words.sum(axis=1))), [0, 4])

    def test_stabilizers(self):
        params = RmParams(3)
        x_rows, z_rows = rm_stabilizers(params)
        self.assertEqual(x_rows.shape, (3, 7))
        self.assertEqual(z_rows.shape, (3, 7))
        self.assertLess(rm_stabilizer_residual(params), 1e-12)

    def test_charge_is_conserved_on_average(self):
        code = rm_code(RmParams(3))
        np.testing.assert_allclose(code.pulled_back_charge(), np.zeros((2, 2)), atol=1e-12)
        self.assertAlmostEqual(delta_charge(code), 1.0, places=12)

    def test_delta_group_closed_form(self):
        code = rm_code(RmParams(3))
        self.assertAlmostEqual(delta_group(code).value, rm_closed_forms(RmParams(3)).delta_group, places=6)
        self.assertAlmostEqual(rm_closed_forms(RmParams(3)).delta_group, 2 * math.sqrt(7) / 8)

    def test_group_bound(self):
        self.assertAlmostEqual(rm_closed_forms(RmParams(3)).delta_group_bound, math.sqrt(6.5) / 7)

    def test_transversal_denominator(self):
        self.assertEqual(rm_transversal_denominator(RmParams(3)), 4)
        self.assertEqual(rm_transversal_denominator(RmParams(5)), 16)

    def test_invalid_parameters(self):
        with self.assertRaises(DomainError):
            RmParams(2)
        with self.assertRaises(DimensionError):
            rm_code(RmParams(5))


if __name__ == "__main__":
    unittest.main()
