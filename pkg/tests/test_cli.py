import contextlib
import io
import json
import os
import shutil
import tempfile
import unittest

from experiments.verify import run_verify
from main import main


class TestCommandLine(unittest.TestCase):
    """Test the covqec command entry point"""

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def write_config(self, text):
        path = os.path.join(self.tmp, "run.conf")
        with open(path, "w") as f:
            f.write(text)
        return path

    def test_transversal_csv(self):
        conf = self.write_config("transversal.delta_tl = 1.0\ntransversal.n = 7, 15, 31\n")
        out = os.path.join(self.tmp, "transversal.csv")
        self.assertEqual(main(["transversal", "--config", conf, "--out", out, "--log-level", "ERROR"]), 0)
        with open(out, newline="") as f:
            lines = f.read().splitlines()
        self.assertTrue(lines[0].startswith("n,delta_tl"))
        self.assertEqual(len(lines), 4)

    def test_bad_config_exit_code(self):
        conf = self.write_config("noise.p = 1.5\n")
        self.assertEqual(main(["transversal", "--config", conf, "--log-level", "CRITICAL"]), 2)

    def test_missing_config_exit_code(self):
        missing = os.path.join(self.tmp, "absent.conf")
        self.assertEqual(main(["transversal", "--config", missing, "--log-level", "CRITICAL"]), 2)

    def test_fig3_json_stdout(self):
        conf = self.write_config("grid.n_min = 64\ngrid.n_max = 128\ngrid.q = 0.25, 0.75\n")
        buffer = io.StringIO()
        with contextlib.redirect_stdout(buffer):
            code = main(["fig3", "--config", conf, "--format", "json", "--log-level", "ERROR"])
        self.assertEqual(code, 0)
        result = json.loads(buffer.getvalue())
        self.assertIn("rows", result)
        self.assertIn("slopes", result)

    def test_fig3_csv_sidecar(self):
        conf = self.write_config("grid.n_min = 64\ngrid.n_max = 128\ngrid.q = 0.5\n")
        out = os.path.join(self.tmp, "fig3.csv")
        with contextlib.redirect_stdout(io.StringIO()):
            self.assertEqual(main(["fig3", "--config", conf, "--out", out, "--log-level", "ERROR"]), 0)
        self.assertTrue(os.path.exists(os.path.join(self.tmp, "fig3.slopes.json")))

    def test_scaling_alias_matches_fig3(self):
        conf = self.write_config("grid.n_min = 64\ngrid.n_max = 128\ngrid.q = 0.5\n")
        outputs = []
        for command in ("fig3", "scaling"):
            buffer = io.StringIO()
            with contextlib.redirect_stdout(buffer):
                self.assertEqual(main([command, "--config", conf, "--log-level", "ERROR"]), 0)
            outputs.append(buffer.getvalue())
        self.assertEqual(outputs[0], outputs[1])
        self.assertTrue(outputs[0].startswith("n,"))

    def test_unknown_command(self):
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                main(["nonsense"])


class TestVerify(unittest.TestCase):
    """Test the acceptance checks that need no dense algebra"""

    def test_closed_form_criteria(self):
        report = run_verify(quick=True, only=["saturation", "transversal"])
        self.assertTrue(report.passed)
        self.assertEqual(set(report.summary()), {"saturation", "transversal"})


if __name__ == "__main__":
    unittest.main()
