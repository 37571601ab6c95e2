import unittest

import numpy as np

from quantum.channel import dephasing_channel
from quantum.codes import ThermoParams, thermo_code
from quantum.noise import (
    LocalNoise, complete_recovery, default_dump, dephasing_noise, encode_sectors, encoded_channel, erasure_noise,
    pullback_recovery
)
from system.errors import DimensionError, DomainError


class TestLocalNoise(unittest.TestCase):
    """Test local noise models"""

    def test_erasure_structure(self):
        noise = erasure_noise(3)
        self.assertTrue(noise.is_erasure)
        np.testing.assert_allclose(noise.probs, [1 / 3] * 3)
        self.assertEqual(noise.flag_rows.shape, (2, 2))

    def test_partial_erasure_is_not_pure_erasure(self):
        self.assertFalse(erasure_noise(3, 0.5).is_erasure)

    def test_unknown_model(self):
        with self.assertRaises(DomainError):
            LocalNoise(dephasing_channel(0.1), 2, model="correlated")

    def test_bad_site_probabilities(self):
        with self.assertRaises(DomainError):
            LocalNoise(dephasing_channel(0.1), 2, probs=[0.7, 0.7])

    def test_dense_single_erasure(self):
        channel = erasure_noise(2).global_channel()
        self.assertEqual((channel.dim_in, channel.dim_out), (4, 9))

    def test_vacuum_has_zero_charge(self):
        noise = erasure_noise(2)
        np.testing.assert_allclose(noise.local_output_charge(np.array([-0.5, 0.5])), [-0.5, 0.5, 0.0])

    def test_dephasing_commutes_with_the_charge(self):
        shifts, residual = dephasing_noise(2, 0.2).charge_shifts(np.array([-0.5, 0.5]))
        self.assertLess(residual, 1e-12)
        np.testing.assert_allclose(shifts, [0.0, 0.0], atol=1e-12)


class TestSectors(unittest.TestCase):
    """Test the sector decomposition of the noisy encoding"""

    def setUp(self):
        self.code = thermo_code(ThermoParams(6, 2, 0.5))

    def test_single_erasure_sectors(self):
        sectors = encode_sectors(self.code, erasure_noise(6))
        self.assertEqual([s.label for s in sectors], [f"erased[{l}]" for l in range(1, 7)])
        for sector in sectors:
            self.assertAlmostEqual(sector.weight, 1 / 6, places=10)
            self.assertTrue(sector.covariant)
            self.assertEqual(sector.native_dim, 32)

    def test_encoded_channel_is_trace_preserving(self):
        sectors = encode_sectors(self.code, erasure_noise(6))
        channel = encoded_channel(sectors)
        self.assertEqual(channel.dim_in, 2)
        self.assertEqual(channel.dim_out, sum(s.dim for s in sectors))

    def test_independent_erasures(self):
        code = thermo_code(ThermoParams(4, 2, 0.5))
        sectors = encode_sectors(code, erasure_noise(4, 0.2, "independent"))
        self.assertEqual(sectors[0].label, "bulk")
        self.assertAlmostEqual(sectors[0].weight, 0.8 ** 4, places=10)
        self.assertAlmostEqual(sum(s.weight for s in sectors), 1.0, places=10)

    def test_site_mismatch(self):
        with self.assertRaises(DimensionError):
            encode_sectors(self.code, erasure_noise(5))

    def test_rotated_sector_at_zero(self):
        sector = encode_sectors(self.code, erasure_noise(6))[0]
        np.testing.assert_allclose(sector.rotated(self.code, 0.0), sector.kraus, atol=1e-12)


class TestRecoveries(unittest.TestCase):
    """Test recovery construction on sectors"""

    def test_completion_of_an_empty_family(self):
        dump = np.array([1.0, 0.0])
        completed = complete_recovery(np.zeros((1, 2, 3)), dump)
        gram = np.einsum("bji,bjk->ik", completed.conj(), completed)
        np.testing.assert_allclose(gram, np.eye(3), atol=1e-12)

    def test_completion_rejects_expanding_family(self):
        with self.assertRaises(DomainError):
            complete_recovery(2 * np.eye(2)[None], np.array([1.0, 0.0]))

    def test_pullback_is_trace_preserving(self):
        code = thermo_code(ThermoParams(6, 2, 0.5))
        sectors = encode_sectors(code, erasure_noise(6))
        recovery = pullback_recovery(sectors, default_dump(code))
        self.assertLess(recovery.check(sectors), 1e-8)
        corrected = recovery.corrected_channel(sectors)
        self.assertEqual((corrected.dim_in, corrected.dim_out), (2, 2))

    def test_default_dump_has_the_largest_charge(self):
        code = thermo_code(ThermoParams(6, 2, 0.5))
        np.testing.assert_allclose(np.abs(default_dump(code)), [1.0, 0.0], atol=1e-12)


if __name__ == "__main__":
    unittest.main()
