"""
Check event log for verification runs.
Thread-safe recording of every pass/fail assertion with its measured value.
"""

import threading
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .constants import ErrorMessages
from .errors import CheckFailed
from .identities import IdentityReport


@dataclass(frozen=True)
class CheckEvent:
    """Immutable record of one assertion"""
    name: str
    passed: bool
    value: Optional[float]
    tolerance: Optional[float]
    relative_time: float
    context: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'passed': self.passed,
            'value': self.value,
            'tolerance': self.tolerance,
            **self.context,
        }


class CheckEventLogger:
    """Thread-safe check logger; times are relative to the logger's creation"""

    def __init__(self, run_name: str = "run"):
        self.run_name = run_name
        self._events: List[CheckEvent] = []
        self._lock = threading.Lock()
        self._start_time = time.monotonic()

    def _log_event(self, name: str, passed: bool, value: Optional[float],
                   tolerance: Optional[float], **context) -> CheckEvent:
        event = CheckEvent(name=name, passed=bool(passed),
                           value=None if value is None else float(value),
                           tolerance=tolerance,
                           relative_time=time.monotonic() - self._start_time,
                           context=context)
        with self._lock:
            self._events.append(event)
        return event

    def log_bound(self, name: str, value: Optional[float], tolerance: float, **context) -> CheckEvent:
        """Pass when value <= tolerance; an undefined value fails."""
        passed = value is not None and value <= tolerance
        return self._log_event(name, passed, value, tolerance, **context)

    def log_lower_bound(self, name: str, value: Optional[float], minimum: float, **context) -> CheckEvent:
        """Pass when value >= minimum."""
        passed = value is not None and value >= minimum
        return self._log_event(name, passed, value, minimum, **context)

    def log_flag(self, name: str, passed: bool, **context) -> CheckEvent:
        return self._log_event(name, passed, None, None, **context)

    def log_identity(self, report: IdentityReport) -> CheckEvent:
        value, bound = report.deciding_bound
        return self._log_event(report.name, report.passed, value, bound,
                               lhs=report.lhs, rhs=report.rhs)

    def log_error(self, name: str, error: Exception) -> CheckEvent:
        """A check that raised instead of measuring."""
        return self._log_event(name, False, None, None, error=f"{type(error).__name__}: {error}")

    def get_event_count(self) -> int:
        with self._lock:
            return len(self._events)

    def get_events(self) -> List[CheckEvent]:
        with self._lock:
            return list(self._events)

    def get_events_as_dicts(self) -> List[Dict[str, Any]]:
        with self._lock:
            return [event.to_dict() for event in self._events]

    def failed_names(self) -> List[str]:
        with self._lock:
            return [event.name for event in self._events if not event.passed]

    @property
    def all_passed(self) -> bool:
        return not self.failed_names()

    def raise_if_failed(self) -> None:
        failed = self.failed_names()
        if failed:
            raise CheckFailed(ErrorMessages.CHECK_FAILED.format(count=len(failed), names=", ".join(failed)),
                              failed)
