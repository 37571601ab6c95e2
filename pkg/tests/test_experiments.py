import json
import math
import os
import tempfile
import unittest

from experiments.fig3 import fig3_row, fit_slope, n_ladder, run_fig3
from experiments.output import clean, emit, sidecar_path, to_csv, to_json
from experiments.saturation import asymptote, rm_row, thermo_row
from experiments.transversal import run_transversal, transversal_row
from system.config_validator import ConfigValidator
from system.errors import ConfigError


def config_with(**sections):
    return ConfigValidator().apply_defaults(sections)


class TestFig3Grid(unittest.TestCase):
    """Test the closed-form scaling grid"""

    def test_ladder(self):
        self.assertEqual(n_ladder(64, 1024), [64, 128, 256, 512, 1024])
        self.assertEqual(n_ladder(60, 300), [64, 128, 256])

    def test_ladder_too_short(self):
        with self.assertRaises(ConfigError):
            n_ladder(64, 100)

    def test_fit_slope(self):
        slope, stderr = fit_slope([1, 2, 4, 8], [3, 6, 12, 24])
        self.assertAlmostEqual(slope, 1.0, places=10)
        self.assertAlmostEqual(stderr, 0.0, places=8)
        self.assertTrue(math.isnan(fit_slope([1, 2], [1.0, 0.0])[0]))

    def test_row(self):
        row = fig3_row(64, 2, 0.5)
        self.assertAlmostEqual(row.delta_group, 2 * math.sqrt(64) / 65)

    def test_slopes_on_target(self):
        result = run_fig3(config_with(grid={"n_min": 64, "n_max": 1024, "m": 2, "q": [0.25, 0.75]}))
        self.assertEqual(len(result["rows"]), 10)
        self.assertEqual([row["n"] for row in result["rows"][:5]], [64, 128, 256, 512, 1024])
        self.assertTrue(all(fit["within"] for fit in result["slopes"]))

    def test_odd_offset_rejected(self):
        with self.assertRaises(ConfigError):
            run_fig3(config_with(grid={"n_min": 64, "n_max": 256, "m": 3}))


class TestSaturation(unittest.TestCase):
    """Test how closely the explicit codes meet the lower bounds"""

    def test_thermo_ratios(self):
        row = thermo_row(1024, 2, 0.5)
        self.assertTrue(1.9 <= row["delta_group_ratio"] <= 2.1)
        self.assertTrue(0.99 <= row["delta_charge_ratio"] <= 1.01)

    def test_reed_muller_ratio(self):
        row = rm_row(3)
        self.assertAlmostEqual(row["delta_group_ratio"], 1.816, delta=0.01)
        self.assertEqual(row["epsilon_upper"], 0.0)

    def test_asymptote(self):
        fit = asymptote([1, 2, 4], [3.0, 2.5, 2.25])
        self.assertAlmostEqual(fit["limit"], 2.0, places=10)
        self.assertAlmostEqual(fit["coefficient"], 1.0, places=10)
        self.assertIsNone(asymptote([1, 2], [1.0, math.nan]))


class TestTransversal(unittest.TestCase):
    """Test the transversal precision rows"""

    def test_reed_muller_row(self):
        row = transversal_row(1.0, 7, 1.0)
        self.assertEqual((row["rm_t"], row["rm_denominator"], row["level_cap"]), (3, 4, 7))
        self.assertEqual(row["power_of_two_cap"], 128)
        self.assertTrue(row["consistent"])

    def test_other_lengths(self):
        row = transversal_row(1.0, 10, 1.0)
        self.assertIsNone(row["rm_t"])
        self.assertIsNone(row["consistent"])

    def test_growth(self):
        result = run_transversal(config_with())
        self.assertEqual([row["n"] for row in result["rows"]], [7, 15, 31, 63, 127])
        self.assertAlmostEqual(result["growth_exponent"], 1.5, delta=0.1)


class TestOutput(unittest.TestCase):
    """Test CSV and JSON emission"""

    def test_clean(self):
        self.assertEqual(clean({"a": math.nan, "b": math.inf, "c": -math.inf}), {"a": None, "b": "inf", "c": "-inf"})
        self.assertEqual(clean(1 + 2j), {"re": 1.0, "im": 2.0})

    def test_csv_precision_and_line_endings(self):
        text = to_csv([{"n": 7, "value": 0.1}])
        self.assertEqual(text, "n,value\r\n7,0.10000000000000001\r\n")

    def test_csv_column_order(self):
        text = to_csv([{"b": 1, "a": 2}], columns=["a", "b"])
        self.assertTrue(text.startswith("a,b\r\n"))

    def test_json_sorted(self):
        self.assertEqual(json.loads(to_json({"b": 1, "a": [1.5]})), {"a": [1.5], "b": 1})
        self.assertLess(to_json({"b": 1, "a": 2}).index('"a"'), to_json({"b": 1, "a": 2}).index('"b"'))

    def test_emit_to_file(self):
        handle, path = tempfile.mkstemp(suffix=".csv")
        os.close(handle)
        self.addCleanup(os.remove, path)
        emit([{"x": 1}], "csv", path)
        with open(path, encoding="utf-8", newline="") as f:
            self.assertEqual(f.read(), "x\r\n1\r\n")

    def test_emit_rejects_bad_input(self):
        with self.assertRaises(ValueError):
            emit([], "xml")
        with self.assertRaises(ValueError):
            emit({"x": 1}, "csv")

    def test_sidecar_path(self):
        self.assertEqual(sidecar_path("out/fig3.csv", "slopes"), "out/fig3.slopes.json")
        self.assertIsNone(sidecar_path(None, "slopes"))


if __name__ == "__main__":
    unittest.main()
