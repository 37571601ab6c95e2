import math
import unittest
from unittest import mock

import numpy as np

from quantum.channel import identity_channel
from quantum.codes import ThermoParams, thermo_code
from quantum.symmetry import (
    SymmetryReport, charge_fluctuation, delta_charge, delta_group, delta_group_choi, delta_group_diamond,
    delta_point, frak_b, make_code, symmetry_report
)
from system.core import Certification, DistanceResult
from system.errors import CertificationError, DimensionError, DomainError

HALF = np.array([0.5, -0.5])


def covariant_qubit():
    return make_code(identity_channel(2), HALF, HALF, name="covariant")


def flipped_qubit():
    """Identity encoder whose physical charge is the negated logical one"""
    return make_code(identity_channel(2), HALF, -HALF, name="flipped")


class TestCodeConstruction(unittest.TestCase):
    """Test U1Code validation"""

    def test_common_period(self):
        self.assertAlmostEqual(covariant_qubit().tau, 2 * math.pi)

    def test_physical_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            make_code(identity_channel(2), HALF, np.array([0.0, 1.0, 2.0]))

    def test_constant_charge_rejected(self):
        with self.assertRaises(DomainError):
            make_code(identity_channel(2), HALF, np.zeros(2))

    def test_scaling_shrinks_the_period(self):
        scaled = covariant_qubit().scaled(2.0)
        self.assertAlmostEqual(scaled.tau, math.pi)
        np.testing.assert_allclose(scaled.logical.H, [1.0, -1.0])

    def test_scaling_rescales_local_measures(self):
        """Multiplying both charges by c scales δ_P and δ_C by c and leaves δ_G alone"""
        code = thermo_code(ThermoParams(4, 2, 0.5))
        for c in (0.5, 3.0):
            scaled = code.scaled(c)
            self.assertAlmostEqual(delta_group(scaled).value, delta_group(code).value, delta=1e-7)
            self.assertAlmostEqual(delta_charge(scaled), c * delta_charge(code), places=10)
            self.assertAlmostEqual(delta_point(scaled).value, c * delta_point(code).value, delta=1e-4 * c)


class TestCovariantCode(unittest.TestCase):
    """Test that an exactly covariant encoder has no violation"""

    def setUp(self):
        self.code = covariant_qubit()

    def test_global_measures_vanish(self):
        self.assertAlmostEqual(delta_group(self.code).value, 0.0, places=7)
        self.assertAlmostEqual(delta_group_choi(self.code), 0.0, places=7)

    def test_local_measures_vanish(self):
        self.assertAlmostEqual(delta_point(self.code).value, 0.0, places=6)
        self.assertAlmostEqual(delta_charge(self.code), 0.0, places=12)

    def test_charge_fluctuation(self):
        self.assertAlmostEqual(charge_fluctuation(self.code), 1.0, places=12)

    def test_variance_quantity(self):
        """The equal superposition has charge variance 1/4"""
        result = frak_b(self.code)
        self.assertEqual(result.certified, Certification.EXACT)
        self.assertAlmostEqual(result.value, math.sqrt(2), places=6)


class TestFlippedCode(unittest.TestCase):
    """Test a maximally charge-violating qubit encoder"""

    def setUp(self):
        self.code = flipped_qubit()

    def test_delta_group(self):
        result = delta_group(self.code)
        self.assertEqual(result.certified, Certification.EXACT)
        self.assertAlmostEqual(result.value, 1.0, places=6)
        self.assertAlmostEqual(abs(math.cos(result.argmax)), 0.0, places=2)

    def test_diamond_scan_reaches_one(self):
        result = delta_group_diamond(self.code, cross_check=False)
        self.assertEqual(result.method, "watrous_sdp_scan")
        self.assertAlmostEqual(result.value, 1.0, places=5)
        self.assertAlmostEqual(abs(math.cos(result.argmax)), 0.0, places=2)

    def test_charge_violation(self):
        self.assertAlmostEqual(delta_charge(self.code), 2.0, places=12)
        self.assertAlmostEqual(charge_fluctuation(self.code), -1.0, places=12)

    def test_point_violation_matches_charge_violation(self):
        self.assertAlmostEqual(delta_point(self.code).value, 2.0, places=5)

    def test_report_is_consistent(self):
        report = symmetry_report(self.code)
        self.assertEqual(report.check(True), [])
        self.assertEqual(report.to_dict()["flags"]["delta_group"], "exact")


class TestDiamondScan(unittest.TestCase):
    """Test the diamond SDP scan against the numerical-range value"""

    @classmethod
    def setUpClass(cls):
        cls.code = thermo_code(ThermoParams(4, 2, 0.3))
        cls.exact = delta_group(cls.code)

    def test_scan_agrees_with_numerical_range(self):
        scanned = delta_group_diamond(self.code, cross_check=False)
        self.assertEqual(scanned.certified, Certification.HEURISTIC)
        self.assertAlmostEqual(scanned.value, self.exact.value, delta=1e-5)

    def test_cross_checked_scan_is_exact(self):
        result = delta_group_diamond(self.code, reference=self.exact)
        self.assertEqual(result.certified, Certification.EXACT)
        self.assertIn("watrous_sdp_scan", result.method)

    def test_sdp_value_is_reported(self):
        fixed = DistanceResult(0.987, Certification.EXACT)
        with mock.patch("quantum.symmetry._diamond_at", return_value=fixed):
            result = delta_group_diamond(self.code, cross_check=False)
        self.assertAlmostEqual(result.value, 0.987, places=12)

    def test_disagreement_is_a_certification_failure(self):
        fixed = DistanceResult(0.987, Certification.EXACT)
        with mock.patch("quantum.symmetry._diamond_at", return_value=fixed):
            with self.assertRaises(CertificationError):
                delta_group_diamond(self.code, reference=self.exact)

    def test_non_isometric_scan_is_heuristic(self):
        fixed = DistanceResult(0.25, Certification.EXACT)
        with mock.patch.object(type(self.code), "isometric", new_callable=mock.PropertyMock, return_value=False):
            with mock.patch("quantum.symmetry._diamond_at", return_value=fixed):
                result = delta_group_diamond(self.code)
        self.assertEqual(result.certified, Certification.HEURISTIC)
        self.assertAlmostEqual(result.value, 0.25, places=12)


class TestThermoSymmetry(unittest.TestCase):
    """Test the measures on a small thermodynamic code"""

    def test_report_has_no_inconsistency(self):
        code = thermo_code(ThermoParams(4, 2, 0.5))
        report = symmetry_report(code)
        self.assertEqual(report.check(code.isometric), [])
        self.assertGreaterEqual(report.delta_point, report.delta_charge - 1e-6)
        self.assertLessEqual(report.delta_group_choi, report.delta_group + 1e-8)

    def test_check_flags_a_small_diamond_value(self):
        report = SymmetryReport(delta_group=0.5, delta_group_choi=0.1, delta_group_diamond=0.05,
                                delta_point=1.0, delta_charge=0.5, chi=0.0, frak_b=1.0)
        problems = report.check(True)
        self.assertIn("δ_G⋄ < δ_G²/2", problems)
        self.assertIn("δ_G⋄ != δ_G for an isometric encoder", problems)


if __name__ == "__main__":
    unittest.main()
