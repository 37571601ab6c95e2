"""
Console utilities for colored command-line output.
Experiment summaries, bound tables and verification results go through here.
"""
from enum import Enum
from typing import Any, List, Sequence

from tabulate import tabulate


class Colors:
    """ANSI color codes for terminal output"""
    RESET = "\033[0m"
    BOLD = "\033[1m"
    DIM = "\033[2m"

    RED = "\033[31m"
    GREEN = "\033[32m"
    YELLOW = "\033[33m"
    BLUE = "\033[34m"
    MAGENTA = "\033[35m"
    CYAN = "\033[36m"

    BRIGHT_GREEN = "\033[92m"
    BRIGHT_RED = "\033[91m"
    BRIGHT_BLUE = "\033[94m"


class Icons:
    SUCCESS = "✅"
    ERROR = "❌"
    WARNING = "⚠️"
    INFO = "ℹ️"
    CHECK = "✓"
    CROSS = "✗"
    CHART = "📊"
    SETTINGS = "⚙️"
    SOLVER = "🧮"
    BOUND = "📐"


class MessageType(Enum):
    """Message types shared by console output and the colored log handler"""
    SUCCESS = "success"
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"
    DEBUG = "debug"
    SOLVER = "solver"
    BOUND_PASS = "bound_pass"
    BOUND_FAIL = "bound_fail"
    SYSTEM = "system"
    DATA = "data"


MESSAGE_FORMATS = {
    MessageType.SUCCESS: {"icon": Icons.SUCCESS, "color": Colors.GREEN},
    MessageType.ERROR: {"icon": Icons.ERROR, "color": Colors.RED},
    MessageType.WARNING: {"icon": Icons.WARNING, "color": Colors.YELLOW},
    MessageType.INFO: {"icon": Icons.INFO, "color": Colors.BLUE},
    MessageType.DEBUG: {"icon": Icons.INFO, "color": Colors.DIM},
    MessageType.SOLVER: {"icon": Icons.SOLVER, "color": Colors.MAGENTA},
    MessageType.BOUND_PASS: {"icon": Icons.BOUND, "color": Colors.BRIGHT_GREEN},
    MessageType.BOUND_FAIL: {"icon": Icons.BOUND, "color": Colors.BRIGHT_RED},
    MessageType.SYSTEM: {"icon": Icons.SETTINGS, "color": Colors.CYAN},
    MessageType.DATA: {"icon": Icons.CHART, "color": Colors.BRIGHT_BLUE},
}

# status word -> message type; anything else prints as info
STATUS_TYPES = {
    "COMPLETED": MessageType.SUCCESS,
    "PASS": MessageType.SUCCESS,
    "FAILED": MessageType.ERROR,
    "FAIL": MessageType.ERROR,
}


def format_message(message: str, msg_type: MessageType = MessageType.INFO, bold: bool = False) -> str:
    """
    Format a message with color and icon

    Args:
        message: The message to format
        msg_type: The type of message
        bold: Whether to make the message bold

    Returns:
        str: Formatted message string
    """
    format_data = MESSAGE_FORMATS[msg_type]
    formatted = f"{format_data['icon']} {format_data['color']}"
    if bold:
        formatted += Colors.BOLD
    return formatted + f"{message}{Colors.RESET}"


def print_message(message: str, msg_type: MessageType = MessageType.INFO, bold: bool = False) -> None:
    """Print a formatted message to the console"""
    print(format_message(message, msg_type, bold))


def print_header(title: str, width: int = 80) -> None:
    """Print a header with centered title"""
    padding = max(0, (width - len(title) - 2) // 2)
    print("=" * width)
    print(f"{' ' * padding}{Colors.BOLD}{title}{Colors.RESET}{' ' * padding}")
    print("=" * width)


def print_table(rows: Sequence[Sequence[Any]], headers: List[str], floatfmt: str = ".6g") -> None:
    """
    Print rows as an aligned table

    Args:
        rows: Table rows
        headers: Column names
        floatfmt: Float format used by tabulate
    """
    print(tabulate(rows, headers=headers, floatfmt=floatfmt, tablefmt="simple"))


def print_bound(name: str, satisfied: bool, slack: float) -> None:
    """Print one bound evaluation with a pass/fail mark"""
    if satisfied:
        print_message(f"{Icons.CHECK} {name} (slack {slack:.3e})", MessageType.BOUND_PASS)
    else:
        print_message(f"{Icons.CROSS} {name} (slack {slack:.3e})", MessageType.BOUND_FAIL, bold=True)


def print_status(status: str, message: str) -> None:
    """Print `[STATUS] message`, green for completed/pass and red for failed/fail"""
    label = status.upper()
    print_message(f"[{label}] {message}", STATUS_TYPES.get(label, MessageType.INFO))
