import importlib
import unittest


class TestImports(unittest.TestCase):
    """Test that all imports work correctly"""

    def test_quantum_imports(self):
        for name in ("channel", "spectral", "metric", "sdp", "symmetry", "noise", "codes", "qec", "bound"):
            module = importlib.import_module(f"quantum.{name}")
            self.assertIsNotNone(module)

    def test_system_imports(self):
        """Test that system imports work correctly"""
        modules_to_test = [
            'system.core',
            'system.errors',
            'system.error_handling',
            'system.config_validator',
            'system.status_monitor',
        ]
        for module_name in modules_to_test:
            try:
                importlib.import_module(module_name)
            except ImportError as e:
                self.fail(f"Failed to import {module_name}: {e}")

    def test_main_imports(self):
        """Test that main.py imports work correctly"""
        import main
        self.assertTrue(callable(main.main))
        self.assertEqual(set(main.HANDLERS), set(main.COMMANDS))


if __name__ == '__main__':
    unittest.main()
