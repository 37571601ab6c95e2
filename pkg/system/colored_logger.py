"""
Custom logging handlers for colored console output.
"""
import logging
from typing import Optional

from system.console_utils import Colors, MessageType, MESSAGE_FORMATS


class ColoredFormatter(logging.Formatter):
    """Formatter adding colors and icons by level and component"""

    LEVEL_FORMATS = {
        logging.DEBUG: MessageType.DEBUG,
        logging.INFO: MessageType.INFO,
        logging.WARNING: MessageType.WARNING,
        logging.ERROR: MessageType.ERROR,
        logging.CRITICAL: MessageType.ERROR
    }

    # logger-name keyword -> message type, used for INFO/DEBUG records only
    COMPONENT_FORMATS = (
        ("sdp", MessageType.SOLVER),
        ("bound", MessageType.BOUND_PASS),
        ("experiments", MessageType.DATA),
        ("measure", MessageType.DATA),
        ("system", MessageType.SYSTEM),
        ("config", MessageType.SYSTEM),
    )

    def __init__(self, fmt: Optional[str] = None, datefmt: Optional[str] = None):
        super().__init__(fmt, datefmt)

    def _message_type(self, record: logging.LogRecord) -> MessageType:
        msg_type = self.LEVEL_FORMATS.get(record.levelno, MessageType.INFO)
        if record.levelno >= logging.WARNING:
            return msg_type
        for keyword, component_type in self.COMPONENT_FORMATS:
            if keyword in record.name:
                return component_type
        return msg_type

    def format(self, record: logging.LogRecord) -> str:
        """
        Format the log record with colors and icons

        Args:
            record: Log record to format

        Returns:
            str: Formatted log message
        """
        original_msg = record.msg
        try:
            if isinstance(record.msg, str):
                format_data = MESSAGE_FORMATS.get(self._message_type(record), {"icon": "", "color": Colors.RESET})
                record.msg = f"{format_data['icon']} {format_data['color']}{record.msg}{Colors.RESET}"
            return super().format(record)
        finally:
            record.msg = original_msg


class ColoredStreamHandler(logging.StreamHandler):
    """Stream handler that outputs colored logs to the console"""

    def __init__(self, stream=None):
        super().__init__(stream)
        self.setFormatter(ColoredFormatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))


def setup_colored_logging(level=logging.INFO):
    """
    Set up colored logging for the application

    Args:
        level: Logging level to use
    """
    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    root_logger.addHandler(ColoredStreamHandler())
    root_logger.setLevel(level)


def get_colored_logger(name: str) -> logging.Logger:
    """
    Get a logger with colored output

    Args:
        name: Logger name

    Returns:
        logging.Logger: The configured logger
    """
    logger = logging.getLogger(name)
    root_has_handler = any(isinstance(h, ColoredStreamHandler) for h in logging.getLogger().handlers)
    if not root_has_handler and not any(isinstance(h, ColoredStreamHandler) for h in logger.handlers):
        logger.addHandler(ColoredStreamHandler())
    return logger
