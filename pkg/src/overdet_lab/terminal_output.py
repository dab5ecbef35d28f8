"""
Human-readable terminal output for laboratory runs.
"""

import sys
import time
from typing import Dict, Iterable, List, Optional

from colorama import Fore, Style
from humanfriendly import format_timespan
from humanfriendly.tables import format_pretty_table

from .check_log import CheckEvent, CheckEventLogger
from .identities import IdentityReport
from .stability import SweepResult
from .utils import format_p


def _num(value: Optional[float], spec: str = ".6e") -> str:
    if value is None:
        return "-"
    return format(value, spec)


class TerminalOutput:
    """One-page summaries of identity reports, sweeps and check logs."""

    def __init__(self, title: str = "overdet-lab", quiet: bool = False):
        self.title = title
        self.quiet = quiet
        self._start_time = time.monotonic()

    def _emit(self, text: str) -> None:
        if not self.quiet:
            print(text)

    def print_header(self, subtitle: str = "") -> None:
        self._emit("=" * 60)
        self._emit(f"{self.title} {subtitle}".rstrip())
        self._emit("=" * 60)

    def identity_table(self, reports: Iterable[IdentityReport]) -> str:
        rows = [[r.name, _num(r.lhs, ".12e"), _num(r.rhs, ".12e"), _num(r.rel_residual, ".2e"),
                 _num(r.tolerance, ".0e"), "ok" if r.passed else "FAIL"] for r in reports]
        return format_pretty_table(rows, ["identity", "lhs", "rhs", "rel", "tol", ""])

    def print_identity_table(self, reports: Iterable[IdentityReport]) -> None:
        self._emit(self.identity_table(reports))

    def sweep_table(self, result: SweepResult) -> str:
        ps = list(result.ps)
        columns = ["eps", "gap"] + [f"|dev|_{format_p(p)}" for p in ps] + ["osc h", "eta"]
        rows = []
        for r in result.records:
            rows.append([format(r.epsilon, "g"), _num(r.gap)]
                        + [_num(r.deviation[p]) for p in ps]
                        + [_num(r.oscillation), _num(r.certificate.eta, ".4f")])
        return format_pretty_table(rows, columns)

    def fits_table(self, result: SweepResult) -> str:
        rows = [[format_p(f.p), _num(f.sigma, ".4f"), _num(f.constant, ".4g"), _num(f.slope_vs_norm, ".3f"),
                 _num(f.slope_gap_vs_epsilon, ".3f"), str(f.points_used)] for f in result.fits]
        return format_pretty_table(rows, ["p", "sigma", "C", "slope", "slope(eps)", "points"])

    def print_sweep(self, result: SweepResult) -> None:
        self._emit(self.sweep_table(result))
        self._emit(self.fits_table(result))

    def print_rows(self, rows: List[Dict], columns: List[str]) -> None:
        self._emit(format_pretty_table([[row.get(c, "") for c in columns] for row in rows], columns))

    def print_check_summary(self, checks: CheckEventLogger) -> None:
        events = checks.get_events()
        failed = [e for e in events if not e.passed]
        elapsed = format_timespan(time.monotonic() - self._start_time)
        self._emit("-" * 60)
        self._emit(f"Checks: {len(events) - len(failed)}/{len(events)} passed in {elapsed}")
        for event in failed:
            print_check_logged(event, emit=self._emit)
        self._emit("-" * 60)


def _status(passed: bool) -> str:
    text = "PASS" if passed else "FAIL"
    if not sys.stdout.isatty():
        return text
    color = Fore.GREEN if passed else Fore.RED
    return f"{color}{text}{Style.RESET_ALL}"


def print_check_logged(event: CheckEvent, emit=print) -> None:
    """Print one check event with its context."""
    status = _status(event.passed)
    emit(f"[{status}] {event.name}: value={_num(event.value, '.3e')} tol={_num(event.tolerance, '.1e')}")
    for key, value in event.context.items():
        emit(f"    {key}: {value}")
