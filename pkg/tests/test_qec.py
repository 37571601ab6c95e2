import unittest

import numpy as np

from quantum.channel import dephasing_channel
from quantum.codes import (
    RmParams, ThermoParams, rm_code, thermo_closed_forms, thermo_code, thermo_offdiag, thermo_optimal_recovery,
    thermo_registered_lower
)
from quantum.noise import default_dump, encode_sectors, erasure_noise
from quantum.qec import (
    corrects_bit_flips, covariance_residual, epsilon_bracket, epsilon_choi, gate_error_bracket, kl_deviation,
    repetition_code, transpose_recovery, twirl_recovery, two_level_protocol
)
from quantum.symmetry import make_code
from system.core import Certification
from system.errors import DimensionError, DomainError


class TestRepetitionCode(unittest.TestCase):
    """Test the repetition encoding used by the two-level protocol"""

    def test_qubit_corrects_bit_flips(self):
        self.assertTrue(corrects_bit_flips(repetition_code(2)))

    def test_qutrit_is_not_checked(self):
        rep = repetition_code(3)
        self.assertEqual(rep.d_logical, 3)
        self.assertFalse(corrects_bit_flips(rep))

    def test_needs_two_levels(self):
        with self.assertRaises(DimensionError):
            repetition_code(1)


class TestExactCorrection(unittest.TestCase):
    """Test codes that correct single erasures exactly"""

    def test_reed_muller(self):
        code = rm_code(RmParams(3))
        noise = erasure_noise(7)
        sectors = encode_sectors(code, noise)
        self.assertLess(epsilon_choi(code, noise, sectors).value, 1e-6)
        self.assertTrue(kl_deviation(code, noise, sectors).exact)

    def test_covariant_end_of_thermo_family(self):
        code = thermo_code(ThermoParams(6, 2, 1.0))
        noise = erasure_noise(6)
        self.assertLess(epsilon_choi(code, noise).value, 1e-6)


class TestThermoInaccuracy(unittest.TestCase):
    """Test inaccuracy brackets on a thermodynamic code"""

    @classmethod
    def setUpClass(cls):
        cls.params = ThermoParams(6, 2, 0.5)
        cls.code = thermo_code(cls.params)
        cls.noise = erasure_noise(6)
        cls.sectors = encode_sectors(cls.code, cls.noise)
        cls.recovery = thermo_optimal_recovery(cls.params, cls.code, cls.sectors)
        cls.candidates = {"thermo_optimal": cls.recovery}

    def test_choi_inaccuracy_is_exact(self):
        choi = epsilon_choi(self.code, self.noise, self.sectors, self.candidates)
        self.assertEqual(choi.certified, Certification.EXACT)
        self.assertGreater(choi.value, 0.0)
        self.assertLess(choi.recovery.check(self.sectors), 1e-6)

    def test_bracket_contains_the_closed_form(self):
        bracket = epsilon_bracket(self.code, self.noise, self.sectors, candidates=self.candidates,
                                  registered_lower=thermo_registered_lower(self.params, self.noise))
        record = thermo_closed_forms(self.params)
        self.assertLessEqual(bracket.lower, bracket.upper + 1e-9)
        self.assertLessEqual(bracket.upper, record.epsilon_tilde + 1e-7)
        self.assertGreaterEqual(bracket.lower, record.epsilon_lower - 1e-9)

    def test_knill_laflamme_is_violated(self):
        deviation = kl_deviation(self.code, self.noise, self.sectors)
        self.assertFalse(deviation.exact)
        self.assertEqual(len(deviation.labels), deviation.lam.shape[0])

    def test_transpose_recovery_is_trace_preserving(self):
        recovery = transpose_recovery(self.sectors, default_dump(self.code))
        self.assertLess(recovery.check(self.sectors), 1e-8)

    def test_twirled_recovery_is_covariant(self):
        twirled, residual = twirl_recovery(self.recovery, self.sectors, self.code)
        self.assertLess(residual, 1e-8)
        self.assertLess(twirled.check(self.sectors), 1e-8)
        self.assertAlmostEqual(covariance_residual(twirled, self.sectors, self.code), residual)

    def test_twirl_resolution(self):
        with self.assertRaises(DomainError):
            twirl_recovery(self.recovery, self.sectors, self.code, resolution=1)

    def test_two_level_protocol_is_dephasing(self):
        protocol = two_level_protocol(self.code, self.noise, self.recovery, self.sectors)
        params = protocol.params(0.0)
        self.assertAlmostEqual(params.p, (1 - thermo_offdiag(self.params)) / 2, places=8)
        self.assertGreater(protocol.local_qfi(), 0.0)

    def test_gate_error_without_structure_bound(self):
        bracket = gate_error_bracket(self.code, self.noise, 0.1, 0.2, None, self.candidates, self.sectors,
                                     direct=False)
        self.assertEqual(bracket.lower, 0.0)
        self.assertEqual(bracket.method["lower"], "hks_infeasible")
        self.assertAlmostEqual(bracket.upper, 0.3)


class TestNonIsometric(unittest.TestCase):
    """Test that isometry-only quantities reject noisy encoders"""

    def test_kl_deviation_needs_isometry(self):
        code = make_code(dephasing_channel(0.1), np.array([0.5, -0.5]), np.array([0.5, -0.5]))
        with self.assertRaises(DomainError):
            kl_deviation(code, erasure_noise(1))


if __name__ == "__main__":
    unittest.main()
