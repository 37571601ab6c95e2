import contextlib
import io
import os
import unittest
from unittest import mock

from system.core import BoundEvaluation, get_seed, make_rng
from system.error_handling import (
    EXIT_BOUND_VIOLATION, EXIT_CERTIFICATION, EXIT_CONFIG, ErrorHandler, exit_code_for, handle_exceptions
)
from system.errors import (
    BoundViolationError, CertificationError, ConfigError, CovqecError, DomainError, SdpError
)
from system.console_utils import Colors, MessageType, format_message, print_status
from system.status_monitor import ProcessStatus, StatusMonitor


class TestErrors(unittest.TestCase):
    """Test the error hierarchy and exit codes"""

    def test_error_message(self):
        error = SdpError("solver stalled", 1e-3)
        self.assertIsInstance(error, CovqecError)
        self.assertEqual(error.type, "SdpError")
        self.assertEqual(str(error), "SdpError:solver stalled (residual 1.000e-03)")

    def test_config_error_location(self):
        error = ConfigError("bad value", line=4, key="noise.p")
        self.assertEqual(str(error), "ConfigError [line 4, noise.p]: bad value")

    def test_exit_codes(self):
        self.assertEqual(exit_code_for(ConfigError("x")), EXIT_CONFIG)
        self.assertEqual(exit_code_for(CertificationError("x")), EXIT_CERTIFICATION)
        self.assertEqual(exit_code_for(BoundViolationError("x")), EXIT_BOUND_VIOLATION)
        self.assertEqual(exit_code_for(DomainError("x")), 1)
        self.assertEqual(exit_code_for(RuntimeError("x")), 1)


class TestErrorHandler(unittest.TestCase):
    """Test error counting and callbacks"""

    def test_callback_by_type(self):
        handler = ErrorHandler()
        seen = []
        handler.register_callback(CovqecError, lambda error, context: seen.append(error.type))
        handler.handle_error(DomainError("outside"))
        self.assertEqual(seen, ["DomainError"])
        self.assertEqual(handler.error_counters[DomainError], 1)

    def test_global_callback(self):
        handler = ErrorHandler()
        seen = []
        handler.register_global_callback(lambda error, context: seen.append(context))
        handler.handle_error(ValueError("x"), {"stage": "fit"})
        self.assertEqual(seen, [{"stage": "fit"}])

    def test_decorator_reraises(self):
        @handle_exceptions
        def failing():
            raise DomainError("no")

        with self.assertRaises(DomainError):
            failing()


class TestStatusMonitor(unittest.TestCase):
    """Test stage timing"""

    def test_completed_stage(self):
        monitor = StatusMonitor()
        with monitor.stage("encode", "Encoding sectors"):
            pass
        self.assertEqual(monitor.get_item("encode").status, ProcessStatus.COMPLETED)
        self.assertIn("encode", monitor.timings())

    def test_failed_stage(self):
        monitor = StatusMonitor()
        with self.assertRaises(SdpError):
            with monitor.stage("solve"):
                raise SdpError("diverged")
        self.assertEqual([item.name for item in monitor.failed()], ["solve"])

    def test_unstarted_stage_has_no_timing(self):
        monitor = StatusMonitor()
        monitor.register_item("later", "Not yet")
        self.assertEqual(monitor.timings(), {})

    def test_display_marks_each_stage(self):
        monitor = StatusMonitor()
        with monitor.stage("encode", "Encoding sectors"):
            pass
        with self.assertRaises(SdpError):
            with monitor.stage("solve"):
                raise SdpError("diverged")
        buffer = io.StringIO()
        with contextlib.redirect_stdout(buffer):
            monitor.display_status()
        lines = buffer.getvalue().splitlines()
        self.assertEqual(len(lines), 2)
        self.assertIn(Colors.GREEN, lines[0])
        self.assertIn("encode: [COMPLETED] Encoding sectors", lines[0])
        self.assertIn(Colors.RED, lines[1])
        self.assertIn("- diverged", lines[1])


class TestConsole(unittest.TestCase):
    """Test message formatting"""

    def test_format_message(self):
        text = format_message("done", MessageType.SUCCESS, bold=True)
        self.assertTrue(text.startswith("✅ " + Colors.GREEN + Colors.BOLD))
        self.assertTrue(text.endswith("done" + Colors.RESET))

    def test_unknown_status_prints_as_info(self):
        buffer = io.StringIO()
        with contextlib.redirect_stdout(buffer):
            print_status("running", "solve")
        self.assertIn(Colors.BLUE + "[RUNNING] solve", buffer.getvalue())


class TestCore(unittest.TestCase):
    """Test the seed and shared result types"""

    def test_seed_from_environment(self):
        with mock.patch.dict(os.environ, {"COVQEC_SEED": "42"}):
            self.assertEqual(get_seed(), 42)
            self.assertEqual(make_rng(1).integers(1000), make_rng(1).integers(1000))

    def test_default_seed(self):
        with mock.patch.dict(os.environ, {"COVQEC_SEED": ""}):
            self.assertEqual(get_seed(), 0)

    def test_bound_violation_uses_favorable_endpoint(self):
        undecided = BoundEvaluation("b", 1.0, 1.1, False, -0.1, favorable_slack=0.05)
        self.assertFalse(undecided.violated)
        violated = BoundEvaluation("b", 1.0, 1.1, False, -0.1, favorable_slack=-0.02)
        self.assertTrue(violated.violated)

    def test_infinite_values_serialize(self):
        evaluation = BoundEvaluation("b", float("inf"), 1.0, True, float("inf"))
        self.assertEqual(evaluation.to_dict()["lhs"], "inf")


if __name__ == "__main__":
    unittest.main()
