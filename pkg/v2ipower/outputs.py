"""CSV and metadata artifacts of a run.

- ``trace_<n>.csv``: one row per (sample, cell, channel) of realization ``n``
- ``summary.csv``: mean network utility per sample, one column per arm
- ``meta.txt``: version, seeds, timing and the full config echo

Floats are written with ``repr`` so reading them back gives the same value.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .config import ExperimentSpec, config_to_toml
from .sim import MonteCarloSummary, RealizationTrace

logger = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "k",
    "l",
    "i",
    "p_W",
    "sinr_raw",
    "sinr_filt",
    "sinr_obj",
    "utility",
)


def _open_for_write(path: Path):
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_trace(trace: RealizationTrace, path: Path) -> Path:
    n_samples, m_cells, n_ch = trace.power.shape
    with _open_for_write(path) as f:
        writer = csv.writer(f)
        writer.writerow(TRACE_COLUMNS)
        for k in range(n_samples):
            for cell in range(m_cells):
                for ch in range(n_ch):
                    writer.writerow(
                        (
                            k,
                            cell,
                            ch,
                            repr(float(trace.power[k, cell, ch])),
                            repr(float(trace.sinr_raw[k, cell, ch])),
                            repr(float(trace.sinr_filtered[k, cell, ch])),
                            repr(float(trace.sinr_objective[k, cell, ch])),
                            repr(float(trace.utility[k, cell, ch])),
                        )
                    )
    return path


def write_summary(summaries: Sequence[MonteCarloSummary], path: Path) -> Path:
    n_samples = summaries[0].mean.shape[0]
    if any(s.mean.shape[0] != n_samples for s in summaries):
        raise ValueError("all arms must have the same number of samples")
    with _open_for_write(path) as f:
        writer = csv.writer(f)
        writer.writerow(["k"] + [s.arm for s in summaries])
        means = [s.mean for s in summaries]
        for k in range(n_samples):
            writer.writerow([k] + [repr(float(m[k])) for m in means])
    return path


def write_meta(
    summaries: Sequence[MonteCarloSummary], spec: ExperimentSpec, path: Path
) -> Path:
    from . import __version__

    lines = [f"v2ipower {__version__}", ""]
    for s in summaries:
        lines.append(f"arm {s.arm}")
        lines.append(f"  realizations {s.realizations}")
        lines.append(f"  seeds {' '.join(str(seed) for seed in s.seeds)}")
        lines.append(
            f"  wall_clock_s mean {s.wall_clock_mean!r} std {s.wall_clock_std!r}"
        )
    lines += ["", "# config", config_to_toml(spec)]
    with _open_for_write(path) as f:
        f.write("\n".join(lines))
    return path


def emit_outputs(
    summaries: Sequence[MonteCarloSummary], spec: ExperimentSpec
) -> List[Path]:
    """Write every artifact enabled in ``spec.output``; returns the paths.

    Traces come from the first summary (the primary arm).

    Raises:
        OSError: naming the path that could not be written
    """
    if not summaries:
        raise ValueError("nothing to emit")
    out = spec.output
    directory = Path(out.directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {directory}: {exc.strerror or exc}") from exc

    written: List[Path] = []
    if out.traces:
        for n, trace in enumerate(summaries[0].traces):
            written.append(write_trace(trace, directory / f"trace_{n}.csv"))
    if out.summary:
        written.append(write_summary(summaries, directory / "summary.csv"))
    if out.meta:
        written.append(write_meta(summaries, spec, directory / "meta.txt"))
    logger.info("wrote %d files to %s", len(written), directory)
    return written


def read_trace(path) -> Dict[str, np.ndarray]:
    """Columns of a trace file as arrays (ints for ``k``, ``l``, ``i``)."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected trace header {header}")
        rows = list(reader)
    columns = list(zip(*rows)) if rows else [()] * len(TRACE_COLUMNS)
    table = {}
    for name, values in zip(TRACE_COLUMNS, columns):
        dtype = int if name in ("k", "l", "i") else float
        table[name] = np.array([dtype(v) for v in values], dtype=dtype)
    return table


def read_summary(path) -> Tuple[List[str], np.ndarray]:
    """``(arm names, array of shape (K, arms))`` from a summary file."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        data = np.array([[float(v) for v in row[1:]] for row in reader])
    return header[1:], data
