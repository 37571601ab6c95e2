"""
Stage tracking for experiment runs.
Each pipeline stage (encoding, SDP solves, bound evaluation) is registered
as a StatusItem so that reports can carry per-stage wall-clock times.
"""
import logging
import time
from contextlib import contextmanager
from enum import Enum
from typing import Dict, List, Optional, Iterator

from system.console_utils import print_status


class ProcessStatus(Enum):
    """Status of a stage"""
    NOT_STARTED = "not_started"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class StatusItem:
    """A stage whose status and duration are being tracked"""

    def __init__(self, name: str, description: str, status: ProcessStatus = ProcessStatus.NOT_STARTED):
        """
        Initialize a status item

        Args:
            name: Name identifier for the stage
            description: Human-readable description
            status: Current status
        """
        self.name = name
        self.description = description
        self.status = status
        self.start_time = None
        self.end_time = None
        self.message = ""
        self.logger = logging.getLogger(f"status.{name}")

    def start(self) -> None:
        """Mark the stage as started"""
        self.status = ProcessStatus.RUNNING
        self.start_time = time.perf_counter()
        self.end_time = None
        self.logger.debug(f"Starting: {self.description}")

    def complete(self, message: str = "") -> None:
        """Mark the stage as completed"""
        self.status = ProcessStatus.COMPLETED
        self.end_time = time.perf_counter()
        if message:
            self.message = message
        self.logger.debug(f"Completed: {self.description} in {self.get_elapsed_time():.3f}s {message}")

    def fail(self, message: str) -> None:
        """Mark the stage as failed"""
        self.status = ProcessStatus.FAILED
        self.end_time = time.perf_counter()
        self.message = message
        self.logger.warning(f"Failed: {self.description} - {message}")

    def get_elapsed_time(self) -> float:
        """Get elapsed time in seconds"""
        if not self.start_time:
            return 0.0
        end = self.end_time if self.end_time else time.perf_counter()
        return end - self.start_time

    def format_status(self) -> str:
        """One line: name, status, description, elapsed time and message"""
        status_str = f"{self.name}: [{self.status.value.upper()}] {self.description}"
        if self.start_time:
            status_str += f" ({self.get_elapsed_time():.3f}s)"
        if self.message:
            status_str += f" - {self.message}"
        return status_str


class StatusMonitor:
    """Keeps every registered stage of a run"""

    def __init__(self):
        self.items: Dict[str, StatusItem] = {}
        self.logger = logging.getLogger("status_monitor")

    def register_item(self, name: str, description: str) -> StatusItem:
        """
        Register a new stage, replacing a previous one with the same name

        Args:
            name: Unique identifier for the stage
            description: Human-readable description

        Returns:
            StatusItem: The created status item
        """
        item = StatusItem(name, description)
        self.items[name] = item
        return item

    def get_item(self, name: str) -> Optional[StatusItem]:
        """Get a status item by name"""
        return self.items.get(name)

    @contextmanager
    def stage(self, name: str, description: str = "") -> Iterator[StatusItem]:
        """
        Time a block as one stage; a raised exception marks it failed

        Args:
            name: Stage name, used as the key in timings()
            description: Human-readable description

        Yields:
            StatusItem: The running stage
        """
        item = self.register_item(name, description or name)
        item.start()
        try:
            yield item
        except Exception as e:
            item.fail(str(e))
            raise
        if item.status == ProcessStatus.RUNNING:
            item.complete()

    def timings(self) -> Dict[str, float]:
        """Elapsed seconds per stage, in registration order"""
        return {name: round(item.get_elapsed_time(), 6) for name, item in self.items.items()
                if item.start_time is not None}

    def failed(self) -> List[StatusItem]:
        return [item for item in self.items.values() if item.status == ProcessStatus.FAILED]

    def display_status(self) -> None:
        """Print the status of every stage"""
        for item in self.items.values():
            print_status(item.status.value, item.format_status())
