import sys
import logging
import traceback
from typing import Dict, Any, Optional, Callable
from functools import wraps

from system.errors import (
    CovqecError, ConfigError, CertificationError, BoundViolationError
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CERTIFICATION = 3
EXIT_BOUND_VIOLATION = 4


class ErrorHandler:
    """Centralized error handling for the command line driver"""

    def __init__(self):
        self.logger = logging.getLogger("error_handler")
        self.error_counters = {}  # error_type -> count
        self.error_callbacks = {}  # error_type -> callback
        self.global_error_callback = None

    def register_callback(self, error_type: type, callback: Callable) -> None:
        """
        Register a callback for a specific error type

        Args:
            error_type: The type of error to handle
            callback: Function to call when this error occurs
        """
        self.error_callbacks[error_type] = callback

    def register_global_callback(self, callback: Callable) -> None:
        """
        Register a callback for errors without a specific callback

        Args:
            callback: Function to call for any other error
        """
        self.global_error_callback = callback

    def handle_error(self, error: Exception, context: Optional[Dict[str, Any]] = None) -> None:
        """
        Count and log an error, then run the matching callback

        Args:
            error: The exception object
            context: Optional dictionary describing where the error occurred
        """
        error_type = type(error)
        self.error_counters[error_type] = self.error_counters.get(error_type, 0) + 1

        # Library errors are expected outcomes (bad config, failed bound); no traceback
        self.logger.error(
            f"Error of type {error_type.__name__}: {error}",
            exc_info=not isinstance(error, CovqecError),
            extra={"context": context}
        )

        callback = None
        for registered, candidate in self.error_callbacks.items():
            if isinstance(error, registered):
                callback = candidate
                break
        if callback is None:
            callback = self.global_error_callback
        if callback is not None:
            try:
                callback(error, context)
            except Exception as callback_error:
                self.logger.error(f"Error in error callback: {callback_error}")

    def reset(self) -> None:
        """Forget counted errors"""
        self.error_counters = {}


# Global error handler instance
error_handler = ErrorHandler()


def exit_code_for(error: BaseException) -> int:
    """
    Map an exception to the command line exit code

    Args:
        error: The exception that ended the command

    Returns:
        int: 2 config error, 3 certification failure, 4 bound violation, 1 otherwise
    """
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, CertificationError):
        return EXIT_CERTIFICATION
    if isinstance(error, BoundViolationError):
        return EXIT_BOUND_VIOLATION
    return 1


def handle_exceptions(func):
    """
    Decorator that logs exceptions with call context and re-raises them

    Args:
        func: The function to decorate

    Returns:
        Wrapped function with exception handling
    """
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except Exception as e:
            context = {
                "function": func.__name__,
                "args": str(args)[:200],
                "kwargs": str(kwargs)[:200]
            }
            error_handler.handle_error(e, context)
            raise  # Re-raise to allow higher-level handling
    return wrapper


def handle_uncaught_exceptions(exc_type, exc_value, exc_traceback):
    """
    Global unhandled exception handler for sys.excepthook

    Args:
        exc_type: Exception type
        exc_value: Exception value
        exc_traceback: Exception traceback
    """
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, exc_value, exc_traceback)
        return

    logger = logging.getLogger("uncaught_exceptions")
    logger.error(
        "Uncaught exception",
        exc_info=(exc_type, exc_value, exc_traceback)
    )
    error_handler.handle_error(
        exc_value,
        {"traceback": "".join(traceback.format_tb(exc_traceback))}
    )


def setup_error_handling():
    """Install the global exception hook"""
    sys.excepthook = handle_uncaught_exceptions
    logging.getLogger("error_handling").debug("Global error handling configured")
