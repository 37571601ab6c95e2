import logging
import os
from typing import Dict, List, Any, Tuple, Optional

from system.errors import ConfigError


class ConfigValidationResult:
    """Result of a configuration validation"""

    def __init__(self):
        self.warnings = []
        self.errors = []

    def add_warning(self, path: str, message: str, line: Optional[int] = None) -> None:
        """
        Add a warning message

        Args:
            path: Configuration key that triggered the warning
            message: Warning message
            line: Line number in the config file, when known
        """
        self.warnings.append({"path": path, "message": message, "line": line})

    def add_error(self, path: str, message: str, line: Optional[int] = None) -> None:
        """
        Add an error message

        Args:
            path: Configuration key that triggered the error
            message: Error message
            line: Line number in the config file, when known
        """
        self.errors.append({"path": path, "message": message, "line": line})

    def is_valid(self) -> bool:
        """True if there are no errors"""
        return len(self.errors) == 0

    def has_warnings(self) -> bool:
        """True if there are warnings"""
        return len(self.warnings) > 0

    def get_messages(self) -> List[str]:
        """
        Get all validation messages

        Returns:
            List[str]: All warning and error messages
        """
        messages = []
        for warning in self.warnings:
            messages.append(f"WARNING: {self._where(warning)} - {warning['message']}")
        for error in self.errors:
            messages.append(f"ERROR: {self._where(error)} - {error['message']}")
        return messages

    @staticmethod
    def _where(entry: Dict[str, Any]) -> str:
        if entry.get("line") is not None:
            return f"line {entry['line']}: {entry['path']}"
        return entry["path"]

    def first_error(self) -> ConfigError:
        """The first error as an exception"""
        error = self.errors[0]
        return ConfigError(error["message"], line=error.get("line"), key=error["path"])


def parse_flat_config(text: str, result: ConfigValidationResult) -> Dict[str, Tuple[str, int]]:
    """
    Parse `key = value` lines; `#` starts a comment

    Args:
        text: File contents
        result: Collects malformed-line errors

    Returns:
        Dict: dotted key -> (raw value, line number)
    """
    entries = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            result.add_error("file", f"Expected 'key = value', got '{line}'", number)
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            result.add_error("file", "Empty key", number)
            continue
        if key in entries:
            result.add_warning(key, f"Duplicate key, line {entries[key][1]} overridden", number)
        entries[key] = (value, number)
    return entries


class ConfigValidator:
    """Validator for the flat experiment configuration"""

    def __init__(self):
        self.logger = logging.getLogger("config_validator")
        self.schema = {
            "system": {
                "log_level": {
                    "type": "str",
                    "choices": ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                    "default": "INFO"
                },
            },
            "code": {
                "kind": {"type": "str", "choices": ["thermo", "rm", "custom"], "default": "thermo"},
                "n": {"type": "int", "min": 2, "max": 1 << 20, "default": 8},
                "m": {"type": "int", "min": 1, "max": 1 << 20, "default": 2},
                "q": {"type": "float", "min": 0.0, "max": 1.0, "default": 0.5},
                "t": {"type": "int", "min": 3, "max": 12, "default": 3},
                "kraus_file": {"type": "str", "default": ""},
                "h_logical": {"type": "list", "item": "float", "default": []},
                "h_physical": {"type": "list", "item": "float", "default": []},
            },
            "noise": {
                "kind": {"type": "str", "choices": ["erasure", "dephasing", "identity", "custom"],
                         "default": "erasure"},
                "model": {"type": "str", "choices": ["single", "independent"], "default": "single"},
                "p": {"type": "float", "min": 0.0, "max": 1.0, "default": 0.1},
                "kraus_file": {"type": "str", "default": ""},
            },
            "grid": {
                "n_min": {"type": "int", "min": 4, "max": 1 << 30, "default": 64},
                "n_max": {"type": "int", "min": 4, "max": 1 << 30, "default": 1024},
                "m": {"type": "int", "min": 1, "max": 1 << 20, "default": 2},
                "q": {"type": "list", "item": "float",
                      "default": [1e-5, 0.25, 0.5, 0.75, 1 - 1e-5]},
                "t": {"type": "list", "item": "int", "default": [3, 4]},
            },
            "transversal": {
                "delta_tl": {"type": "float", "min": 1e-12, "max": 1e12, "default": 1.0},
                "n": {"type": "list", "item": "int", "default": [7, 15, 31, 63, 127]},
                "site_charge": {"type": "float", "min": 0.0, "max": 1e12, "default": 1.0},
            },
            "run": {
                "twirl_resolution": {"type": "int", "min": 2, "max": 4096, "default": 64},
                "dense_max_sites": {"type": "int", "min": 2, "max": 16, "default": 12},
                "gamma_scan": {"type": "bool", "default": True},
            },
        }

    def _leaf(self, dotted: str) -> Optional[Dict[str, Any]]:
        parts = dotted.split(".")
        if len(parts) != 2:
            return None
        section = self.schema.get(parts[0])
        if section is None:
            return None
        return section.get(parts[1])

    def _convert(self, raw: str, schema_item: Dict[str, Any], path: str, line: int,
                 result: ConfigValidationResult) -> Any:
        expected_type = schema_item["type"]
        try:
            if expected_type == "str":
                return raw
            if expected_type == "int":
                return int(raw)
            if expected_type == "float":
                return float(raw)
            if expected_type == "bool":
                lowered = raw.lower()
                if lowered in ("true", "yes", "1", "on"):
                    return True
                if lowered in ("false", "no", "0", "off"):
                    return False
                raise ValueError(raw)
            if expected_type == "list":
                item = int if schema_item.get("item") == "int" else float
                return [item(part.strip()) for part in raw.split(",") if part.strip()]
        except ValueError:
            result.add_error(path, f"Expected {expected_type}, got '{raw}'", line)
            return None
        result.add_error(path, f"Unsupported schema type {expected_type}", line)
        return None

    def _validate_value(self, value: Any, schema_item: Dict[str, Any], path: str, line: Optional[int],
                        result: ConfigValidationResult) -> None:
        values = value if isinstance(value, list) else [value]
        for item in values:
            if "min" in schema_item and item < schema_item["min"]:
                result.add_error(path, f"Value {item} is below minimum {schema_item['min']}", line)
            if "max" in schema_item and item > schema_item["max"]:
                result.add_error(path, f"Value {item} is above maximum {schema_item['max']}", line)
            if "choices" in schema_item and item not in schema_item["choices"]:
                result.add_error(path, f"Value '{item}' not in allowed choices: {', '.join(schema_item['choices'])}",
                                 line)

    def validate_text(self, text: str) -> Tuple[Dict[str, Any], ConfigValidationResult]:
        """
        Parse and validate configuration text

        Args:
            text: Flat configuration text

        Returns:
            Tuple containing:
            - Dict: nested configuration (section -> key -> value), without defaults
            - ConfigValidationResult: Validation result
        """
        result = ConfigValidationResult()
        entries = parse_flat_config(text, result)
        config: Dict[str, Dict[str, Any]] = {}
        for dotted, (raw, line) in entries.items():
            schema_item = self._leaf(dotted)
            if schema_item is None:
                result.add_warning(dotted, "Unknown configuration item", line)
                continue
            value = self._convert(raw, schema_item, dotted, line, result)
            if value is None:
                continue
            self._validate_value(value, schema_item, dotted, line, result)
            section, key = dotted.split(".")
            config.setdefault(section, {})[key] = value
        self._validate_specific_requirements(config, result)
        return config, result

    def _validate_specific_requirements(self, config: Dict[str, Any], result: ConfigValidationResult) -> None:
        """Checks spanning several keys"""
        code = config.get("code", {})
        if code.get("kind", "thermo") == "thermo":
            n = code.get("n", self.schema["code"]["n"]["default"])
            m = code.get("m", self.schema["code"]["m"]["default"])
            if (n + m) % 2 != 0:
                result.add_error("code.m", f"n + m must be even for thermodynamic codes (n={n}, m={m})")
            if m >= n:
                result.add_error("code.m", f"m must be smaller than n (n={n}, m={m})")
        if code.get("kind") == "custom":
            path = code.get("kraus_file", "")
            if not path:
                result.add_error("code.kraus_file", "Custom codes need an encoder Kraus file")
            elif not os.path.exists(path):
                result.add_error("code.kraus_file", f"File '{path}' does not exist")
            if not code.get("h_logical") or not code.get("h_physical"):
                result.add_error("code.h_logical", "Custom codes need h_logical and h_physical spectra")
        noise = config.get("noise", {})
        if noise.get("kind") == "custom":
            path = noise.get("kraus_file", "")
            if not path or not os.path.exists(path):
                result.add_error("noise.kraus_file", f"Custom noise needs an existing Kraus file, got '{path}'")
        grid = config.get("grid", {})
        n_min = grid.get("n_min", self.schema["grid"]["n_min"]["default"])
        n_max = grid.get("n_max", self.schema["grid"]["n_max"]["default"])
        if n_min > n_max:
            result.add_error("grid.n_min", f"n_min {n_min} exceeds n_max {n_max}")

    def validate_config_file(self, filepath: str) -> Tuple[Optional[Dict[str, Any]], ConfigValidationResult]:
        """
        Load and validate a configuration file

        Args:
            filepath: Path to the configuration file

        Returns:
            Tuple containing:
            - Dict: The loaded configuration if valid, None otherwise
            - ConfigValidationResult: Validation result
        """
        try:
            with open(filepath, "r", encoding="utf-8") as f:
                text = f.read()
        except (OSError, UnicodeDecodeError) as e:
            result = ConfigValidationResult()
            result.add_error("file", f"Error reading file: {e}")
            return None, result

        config, result = self.validate_text(text)
        if result.is_valid():
            return config, result
        return None, result

    def apply_defaults(self, config: Dict[str, Any]) -> Dict[str, Any]:
        """
        Fill every missing key with its schema default

        Args:
            config: Nested configuration

        Returns:
            Dict: Configuration with defaults applied
        """
        filled = {}
        for section, items in self.schema.items():
            given = config.get(section, {})
            filled[section] = {}
            for key, schema_item in items.items():
                default = schema_item.get("default")
                filled[section][key] = given.get(key, list(default) if isinstance(default, list) else default)
        return filled


def validate_configuration(config_path: Optional[str]) -> Tuple[bool, Dict[str, Any]]:
    """
    Validate a configuration file and apply defaults

    Args:
        config_path: Path to the configuration file, or None for pure defaults

    Returns:
        Tuple containing:
        - bool: True if valid
        - Dict: Validated configuration with defaults applied
    """
    logger = logging.getLogger("config_validation")
    validator = ConfigValidator()

    if config_path is None:
        return True, validator.apply_defaults({})

    config, result = validator.validate_config_file(config_path)
    for message in result.get_messages():
        if message.startswith("WARNING"):
            logger.warning(message)
        else:
            logger.error(message)

    if not result.is_valid():
        logger.error("Configuration validation failed")
        return False, {}

    logger.debug("Configuration validation successful")
    return True, validator.apply_defaults(config)


def load_configuration(config_path: Optional[str]) -> Dict[str, Any]:
    """
    Like validate_configuration but raises ConfigError on the first error

    Args:
        config_path: Path to the configuration file, or None

    Returns:
        Dict: Validated configuration with defaults applied
    """
    validator = ConfigValidator()
    if config_path is None:
        return validator.apply_defaults({})
    config, result = validator.validate_config_file(config_path)
    for message in result.get_messages():
        logging.getLogger("config_validation").log(
            logging.WARNING if message.startswith("WARNING") else logging.ERROR, message)
    if not result.is_valid():
        raise result.first_error()
    return validator.apply_defaults(config)
