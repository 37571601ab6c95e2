import math
import os
import tempfile
import unittest

import numpy as np

from quantum.channel import (
    Channel, amplitude_damping_channel, channel_from_choi, choi_state, complementary_channel, compose,
    dephasing_channel, erasure_channel, extract_dephasing, identity_channel, load_kraus_file, make_u1rep, mix,
    period_of, rotated_dephasing, tensor
)
from system.errors import (
    ConfigError, DephasingFitError, DimensionError, DomainError, TracePreservationError
)


class TestChannelAlgebra(unittest.TestCase):
    """Test validation and transforms of Kraus channels"""

    def test_trace_preservation_enforced(self):
        with self.assertRaises(TracePreservationError):
            Channel([np.diag([1.0, 0.5])])

    def test_erasure_output(self):
        """Full erasure sends any state to the vacuum level"""
        out = erasure_channel(2, 1.0).apply(np.diag([1.0, 0.0]))
        np.testing.assert_allclose(out, np.diag([0.0, 0.0, 1.0]), atol=1e-12)

    def test_partial_erasure_keeps_the_state(self):
        out = erasure_channel(2, 0.25).apply(np.diag([1.0, 0.0]))
        np.testing.assert_allclose(np.diag(out).real, [0.75, 0.0, 0.25], atol=1e-12)

    def test_choi_state_is_normalized(self):
        rho = choi_state(identity_channel(2))
        self.assertAlmostEqual(np.trace(rho).real, 1.0)
        self.assertAlmostEqual(rho[0, 3].real, 0.5)

    def test_choi_round_trip_preserves_the_map(self):
        channel = dephasing_channel(0.3)
        rebuilt = channel_from_choi(channel.choi(), 2, 2)
        np.testing.assert_allclose(rebuilt.choi(), channel.choi(), atol=1e-10)

    def test_complementary_of_identity_is_the_trace(self):
        complement = complementary_channel(identity_channel(2))
        self.assertEqual(complement.dim_out, 1)
        self.assertAlmostEqual(complement.apply(np.diag([0.3, 0.7]))[0, 0].real, 1.0)

    def test_compose_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            compose(identity_channel(2), erasure_channel(2))

    def test_compose_dephasing(self):
        """Two dephasings with p compose to 2p(1-p)"""
        twice = compose(dephasing_channel(0.1), dephasing_channel(0.1))
        np.testing.assert_allclose(twice.choi(), dephasing_channel(0.18).choi(), atol=1e-12)

    def test_tensor_dimensions(self):
        pair = tensor(dephasing_channel(0.1), erasure_channel(2, 0.5))
        self.assertEqual((pair.dim_in, pair.dim_out), (4, 6))

    def test_mix_rejects_negative_probability(self):
        with self.assertRaises(DomainError):
            mix([identity_channel(2), dephasing_channel(1.0)], [1.5, -0.5])

    def test_isometric_detection(self):
        self.assertTrue(identity_channel(3).is_isometric)
        self.assertFalse(dephasing_channel(0.2).is_isometric)


class TestDephasingFit(unittest.TestCase):
    """Test the rotated dephasing family and its inversion"""

    def test_fit_recovers_parameters(self):
        params = extract_dephasing(rotated_dephasing(0.2, 0.7))
        self.assertAlmostEqual(params.p, 0.2, places=9)
        self.assertAlmostEqual(params.phi, 0.7, places=9)

    def test_fit_folds_p_above_half(self):
        """(p, φ) and (1 - p, φ + π) are the same channel"""
        params = extract_dephasing(rotated_dephasing(0.8, 0.3))
        self.assertAlmostEqual(params.p, 0.2, places=9)
        self.assertAlmostEqual(params.phi, 0.3 + math.pi, places=9)

    def test_amplitude_damping_rejected(self):
        with self.assertRaises(DephasingFitError):
            extract_dephasing(amplitude_damping_channel(0.3))


class TestU1Rep(unittest.TestCase):
    """Test charges and their periods"""

    def test_qubit_period(self):
        self.assertAlmostEqual(period_of(np.array([0.5, -0.5])), 2 * math.pi)

    def test_rational_gaps(self):
        self.assertAlmostEqual(period_of(np.array([0.0, 1.0 / 3.0]), np.array([0.0, 0.5])), 12 * math.pi)

    def test_wrong_period_rejected(self):
        with self.assertRaises(DomainError):
            make_u1rep(np.array([0.5, -0.5]), tau=1.0)

    def test_spread_and_scaling(self):
        rep = make_u1rep(np.array([-0.5, 0.5, 1.5]))
        self.assertAlmostEqual(rep.spread, 2.0)
        scaled = rep.scaled(2.0)
        self.assertAlmostEqual(scaled.spread, 4.0)
        self.assertAlmostEqual(scaled.tau, rep.tau / 2)


class TestKrausFile(unittest.TestCase):
    """Test the custom channel file format"""

    def _write(self, text: str) -> str:
        handle, path = tempfile.mkstemp(suffix=".kraus")
        with os.fdopen(handle, "w") as f:
            f.write(text)
        self.addCleanup(os.remove, path)
        return path

    def test_dephasing_file(self):
        s, t = math.sqrt(0.9), math.sqrt(0.1)
        path = self._write(f"# dephasing\ndims 2 2\n{s},0 0,0\n0,0 {s},0\n{t},0 0,0\n0,0 {-t},0\n")
        channel = load_kraus_file(path)
        np.testing.assert_allclose(channel.choi(), dephasing_channel(0.1).choi(), atol=1e-12)

    def test_bad_header_reports_line(self):
        path = self._write("\n# comment\nsize 2 2\n")
        with self.assertRaises(ConfigError) as context:
            load_kraus_file(path)
        self.assertEqual(context.exception.line, 3)

    def test_incomplete_block(self):
        path = self._write("dims 2 2\n1,0 0,0\n")
        with self.assertRaises(ConfigError):
            load_kraus_file(path)


if __name__ == "__main__":
    unittest.main()
