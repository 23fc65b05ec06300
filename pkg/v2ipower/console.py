"""Terminal status output of the command line runner.

Uses blessed for styling; when the stream is not a TTY blessed drops the
escape sequences and the same calls print plain text.
"""

from __future__ import annotations

import sys
from typing import Optional, Sequence, TextIO

from blessed import Terminal

from .sim import MonteCarloSummary, RealizationTrace


class StatusPrinter:
    """Progress lines per arm and a closing comparison table."""

    def __init__(self, stream: Optional[TextIO] = None, quiet: bool = False) -> None:
        self.stream = stream if stream is not None else sys.stderr
        self.term = Terminal(stream=self.stream)
        self.quiet = quiet
        self._total = 0

    def _emit(self, text: str) -> None:
        if not self.quiet:
            print(text, file=self.stream, flush=True)

    def arm_started(
        self, arm: str, scenario: str, speed_kmh: float, total: int
    ) -> None:
        self._total = total
        self._emit(
            self.term.bold(f"{arm}")
            + f"  scenario {scenario}, {speed_kmh:g} km/h, {total} realizations"
        )

    def realization_done(self, idx: int, trace: RealizationTrace) -> None:
        peak = float(trace.network_utility.max())
        self._emit(
            self.term.bright_black(
                f"  [{idx + 1}/{self._total}] seed {trace.seed}: "
                f"peak {peak:.4g} bit/J, {trace.wall_clock_s:.3f} s"
            )
        )

    def summary_table(
        self, summaries: Sequence[MonteCarloSummary], start: int = 100
    ) -> None:
        """Time-averaged mean utility per arm; the best arm is highlighted."""
        start = min(start, summaries[0].mean.shape[0] - 1)
        averages = [s.time_average(start) for s in summaries]
        best = max(range(len(summaries)), key=averages.__getitem__)
        width = max(len(s.arm) for s in summaries)
        self._emit(self.term.bold(f"{'arm':<{width}}  mean utility (k >= {start})"))
        for n, (s, avg) in enumerate(zip(summaries, averages)):
            line = (
                f"{s.arm:<{width}}  {avg:.6g} bit/J  "
                f"({s.wall_clock_mean:.3f} +- {s.wall_clock_std:.3f} s/run)"
            )
            self._emit(self.term.green(line) if n == best else line)

    def error(self, message: str) -> None:
        print(self.term.red(f"error: {message}"), file=self.stream, flush=True)
