import math
import unittest

import numpy as np

from quantum.channel import (
    compose, dephasing_channel, identity_channel, rotated_dephasing, unitary_channel
)
from quantum.metric import (
    channel_qfi_at_zero, choi_fidelity, diamond_distance, dephasing_distances, entanglement_infidelity,
    fuchs_van_de_graaf, monotonicity_gap, numerical_range_distance, pure_state_qfi, state_fidelity,
    trace_distance, worst_case_purified_distance
)
from quantum.spectral import random_density, random_state
from system.core import Certification, make_rng
from system.errors import DimensionError, DomainError

ZERO = np.diag([1.0, 0.0])
PLUS = np.full((2, 2), 0.5)
HALF_Z = np.diag([0.5, -0.5])


class TestStateMeasures(unittest.TestCase):
    """Test fidelity and trace distance of states"""

    def test_fidelity_of_pure_states(self):
        self.assertAlmostEqual(state_fidelity(ZERO, PLUS), 1 / math.sqrt(2), places=8)

    def test_trace_distance_of_pure_states(self):
        self.assertAlmostEqual(trace_distance(ZERO, PLUS), 1 / math.sqrt(2), places=10)

    def test_identical_states(self):
        rho = random_density(3, make_rng(1))
        self.assertAlmostEqual(state_fidelity(rho, rho), 1.0, places=7)
        self.assertAlmostEqual(trace_distance(rho, rho), 0.0, places=10)

    def test_rejects_non_states(self):
        with self.assertRaises(DomainError):
            state_fidelity(np.diag([1.0, 1.0]), ZERO)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            state_fidelity(ZERO, np.eye(3) / 3)

    def test_fuchs_van_de_graaf_chain(self):
        rng = make_rng(4)
        for _ in range(5):
            infidelity, trace, purified = fuchs_van_de_graaf(random_density(3, rng), random_density(3, rng))
            self.assertLessEqual(infidelity, trace + 1e-9)
            self.assertLessEqual(trace, purified + 1e-9)


class TestChannelDistances(unittest.TestCase):
    """Test channel distances against dephasing closed forms"""

    def test_choi_fidelity_of_dephasing(self):
        self.assertAlmostEqual(choi_fidelity(dephasing_channel(0.2), identity_channel(2)), math.sqrt(0.8), places=7)

    def test_entanglement_infidelity_of_dephasing(self):
        self.assertAlmostEqual(entanglement_infidelity(dephasing_channel(0.3).kraus), 0.3, places=12)

    def test_unitary_rotation_purified_distance(self):
        phi = 0.7
        result = worst_case_purified_distance(rotated_dephasing(0.0, phi), identity_channel(2))
        self.assertEqual(result.certified, Certification.EXACT)
        self.assertAlmostEqual(result.value, math.sin(phi / 2), places=6)

    def test_rotated_dephasing_purified_distance(self):
        p, phi = 0.1, 0.4
        result = worst_case_purified_distance(rotated_dephasing(p, phi), identity_channel(2))
        self.assertAlmostEqual(result.value, dephasing_distances(p, phi)[0], places=5)

    def test_rotated_dephasing_diamond_distance(self):
        p, phi = 0.15, 1.1
        result = diamond_distance(rotated_dephasing(p, phi), identity_channel(2))
        self.assertAlmostEqual(result.value, dephasing_distances(p, phi)[1], places=5)

    def test_diamond_distance_of_identical_channels(self):
        result = diamond_distance(dephasing_channel(0.2), dephasing_channel(0.2))
        self.assertEqual(result.value, 0.0)
        self.assertEqual(result.method, "identical")

    def test_distance_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            diamond_distance(identity_channel(2), identity_channel(3))

    def test_numerical_range_excludes_zero(self):
        distance, _ = numerical_range_distance(np.diag([1.0, 2.0]))
        self.assertAlmostEqual(distance, 1.0, places=8)

    def test_numerical_range_contains_zero(self):
        distance, _ = numerical_range_distance(np.diag([1.0, -1.0]))
        self.assertAlmostEqual(distance, 0.0, places=10)

    def test_postprocessing_never_increases_distance(self):
        first = rotated_dephasing(0.1, 0.5)
        second = identity_channel(2)
        self.assertLessEqual(monotonicity_gap(first, second, dephasing_channel(0.3)), 1e-8)


class TestFisherInformation(unittest.TestCase):
    """Test pure-state and channel quantum Fisher information"""

    def test_pure_state_qfi(self):
        psi = np.array([1.0, 1.0]) / math.sqrt(2)
        self.assertAlmostEqual(pure_state_qfi(psi, -1j * HALF_Z @ psi), 1.0, places=12)

    def test_pure_state_qfi_requires_normalization(self):
        with self.assertRaises(DomainError):
            pure_state_qfi(np.array([1.0, 1.0]), np.zeros(2))

    def test_pure_state_qfi_ignores_phase_gauge(self):
        rng = make_rng(11)
        psi = random_state(5, rng)
        dpsi = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        dpsi = dpsi - psi * np.vdot(psi, dpsi).real
        base = pure_state_qfi(psi, dpsi)
        self.assertGreater(base, 0.0)
        for c in (0.3, -2.0, 17.0):
            self.assertAlmostEqual(pure_state_qfi(psi, dpsi + 1j * c * psi), base, places=9)

    def test_unitary_family_qfi(self):
        result = channel_qfi_at_zero(np.eye(2)[None], (-1j * HALF_Z)[None])
        self.assertEqual(result.method, "scalar_gauge")
        self.assertAlmostEqual(result.value, 1.0, places=6)

    def test_dephased_family_qfi(self):
        """Phase rotation after dephasing has channel QFI (1 - 2p)^2"""
        p = 0.1
        kraus = dephasing_channel(p).kraus
        dkraus = np.einsum("aij,jk->aik", kraus, -1j * HALF_Z)
        self.assertAlmostEqual(channel_qfi_at_zero(kraus, dkraus).value, (1 - 2 * p) ** 2, places=4)

    def test_constant_family(self):
        result = channel_qfi_at_zero(dephasing_channel(0.2).kraus, np.zeros((2, 2, 2)))
        self.assertEqual(result.value, 0.0)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            channel_qfi_at_zero(np.eye(2)[None], np.zeros((2, 2, 2)))

    def test_postprocessed_unitary_family(self):
        """Composing with a channel does not raise the QFI"""
        rotation = unitary_channel(np.diag([np.exp(-0.5j), np.exp(0.5j)]))
        composed = compose(dephasing_channel(0.25), rotation)
        kraus = composed.kraus
        dkraus = np.einsum("aij,jk->aik", kraus, -1j * HALF_Z)
        self.assertLessEqual(channel_qfi_at_zero(kraus, dkraus).value, 1.0 + 1e-6)


if __name__ == "__main__":
    unittest.main()
