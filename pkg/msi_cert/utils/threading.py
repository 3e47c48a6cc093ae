"""
Threading utilities for bounded fan-out of independent candidate evaluations
"""

import threading
import logging
from typing import Callable, Any, Optional, Sequence, List


class BackgroundTask:
    """
    Runs one target in a worker thread and keeps its result or error
    """

    def __init__(self, target: Callable, args: tuple = (), kwargs: dict = None):
        self.target = target
        self.args = args
        self.kwargs = kwargs or {}
        self.thread = None
        self.result = None
        self.error = None
        self.is_running = False
        self.logger = logging.getLogger(__name__)

    def start(self):
        """Start the background task"""
        if self.is_running:
            raise RuntimeError("Task is already running")

        self.is_running = True
        self.result = None
        self.error = None

        self.thread = threading.Thread(target=self._run, daemon=True)
        self.thread.start()

    def _run(self):
        try:
            self.result = self.target(*self.args, **self.kwargs)
        except Exception as e:
            self.error = e
            self.logger.error(f"Background task failed: {e}")
        finally:
            self.is_running = False

    def is_alive(self) -> bool:
        return bool(self.thread and self.thread.is_alive())

    def join(self, timeout: Optional[float] = None):
        """Wait for the task to complete"""
        if self.thread:
            self.thread.join(timeout)


def run_in_order(target: Callable[[Any], Any], items: Sequence[Any], workers: int = 1) -> List[Any]:
    """
    Apply target to every item, at most `workers` at a time, and return results in item order.
    The first error raised by a task is re-raised after its window finishes.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [target(item) for item in items]

    results: List[Any] = []
    for start in range(0, len(items), workers):
        window = [BackgroundTask(target, (item,)) for item in items[start:start + workers]]
        for task in window:
            task.start()
        for task in window:
            task.join()
        for task in window:
            if task.error is not None:
                raise task.error
            results.append(task.result)
    return results
