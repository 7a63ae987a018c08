"""Per-step learning-rate and loss recording, log-binned lr histograms,
multi-seed aggregate statistics, and deterministic CSV export.

Histogram geometry is fixed: 10 bins per decade across [1e-12, 1e6), 180
bins total, so per-coordinate rates spanning from numerically dead to
catastrophically exploded land in distinguishable bins. Values below the
range count as underflow, values at or above 1e6 (and any non-finite
values, which a healthy run never records) count as overflow, so total
mass is conserved exactly.

CSV output is byte-deterministic: fixed column order, \\n newlines, floats
rendered with Python's shortest round-trip repr.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import AggregationError, MomentalIOError, SequencingError

# 181 edges = 180 bins = 18 decades x 10 bins/decade, [1e-12, 1e6).
BIN_EDGES = 10.0 ** (np.arange(181) / 10.0 - 12.0)


@dataclass
class LrHistogram:
    """Occupancy counts over the fixed log-spaced bins for one window.

    observed tracks every value folded in, so the conservation invariant
    sum(counts) + underflow + overflow == observed is checkable per
    snapshot.
    """

    counts: np.ndarray = field(
        default_factory=lambda: np.zeros(BIN_EDGES.size - 1, dtype=np.int64)
    )
    underflow: int = 0
    overflow: int = 0
    observed: int = 0

    def fold(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64)
        finite = np.isfinite(values)
        self.overflow += int((~finite).sum())
        vals = values[finite]
        self.underflow += int((vals < BIN_EDGES[0]).sum())
        self.overflow += int((vals >= BIN_EDGES[-1]).sum())
        inside = vals[(vals >= BIN_EDGES[0]) & (vals < BIN_EDGES[-1])]
        idx = np.searchsorted(BIN_EDGES, inside, side="right") - 1
        np.add.at(self.counts, idx, 1)
        self.observed += values.size

    def mass(self) -> int:
        return int(self.counts.sum()) + self.underflow + self.overflow


@dataclass(frozen=True)
class TerminalStats:
    final_loss: float
    best_loss: float
    steps_run: int
    diverged: bool


@dataclass
class RunRecord:
    """Everything one run produces: config snapshot, per-step summaries,
    windowed lr histograms, and terminal statistics.

    per_step rows are (t, loss, max_lr, min_lr, mean_lr) with strictly
    increasing t. Histogram windows cover histogram_window consecutive
    steps and are labeled by their first step index.
    """

    config_snapshot: dict
    histogram_window: int = 100
    per_step: list[tuple[int, float, float, float, float]] = field(
        default_factory=list
    )
    histograms: list[tuple[int, LrHistogram]] = field(default_factory=list)
    terminal: TerminalStats | None = None


def record_step(
    rec: RunRecord, t: int, loss: float, effective_lr: np.ndarray
) -> RunRecord:
    """Append step t's summary and fold its rates into the current window."""
    last_t = rec.per_step[-1][0] if rec.per_step else 0
    if t <= last_t:
        raise SequencingError(
            f"step {t} recorded after step {last_t}; t must increase"
        )
    lr = np.asarray(effective_lr, dtype=np.float64)
    rec.per_step.append(
        (int(t), float(loss), float(lr.max()), float(lr.min()), float(lr.mean()))
    )
    window_start = ((t - 1) // rec.histogram_window) * rec.histogram_window + 1
    if not rec.histograms or rec.histograms[-1][0] != window_start:
        rec.histograms.append((window_start, LrHistogram()))
    rec.histograms[-1][1].fold(lr)
    return rec


def finalize_record(rec: RunRecord, diverged: bool) -> RunRecord:
    """Fill in terminal statistics from the recorded rows."""
    if rec.per_step:
        losses = [row[1] for row in rec.per_step]
        final, best = losses[-1], min(losses)
    else:
        final = best = float("nan")
    rec.terminal = TerminalStats(
        final_loss=final,
        best_loss=best,
        steps_run=len(rec.per_step),
        diverged=bool(diverged),
    )
    return rec


@dataclass(frozen=True)
class SeedAggregate:
    """Median/mean/std of one terminal metric across seeds.

    std is the population standard deviation (divisor n, not n-1).
    """

    metric_name: str
    median: float
    mean: float
    std: float
    n_seeds: int


_METRICS = ("final_loss", "best_loss", "steps_run")


def aggregate_seeds(records: list[RunRecord], metric: str) -> SeedAggregate:
    """Aggregate one terminal metric over records that differ only in seed."""
    if not records:
        raise AggregationError("no records to aggregate")
    if metric not in _METRICS:
        raise AggregationError(
            f"unknown metric {metric!r}; expected one of {_METRICS}"
        )
    reference = {k: v for k, v in records[0].config_snapshot.items() if k != "seed"}
    for rec in records[1:]:
        other = {k: v for k, v in rec.config_snapshot.items() if k != "seed"}
        if other != reference:
            raise AggregationError(
                "records disagree on non-seed config; refusing to aggregate"
            )
    if any(rec.terminal is None for rec in records):
        raise AggregationError("aggregate_seeds needs finalized records")
    values = np.array(
        [float(getattr(rec.terminal, metric)) for rec in records]
    )
    return SeedAggregate(
        metric_name=metric,
        median=float(np.median(values)),
        mean=float(values.mean()),
        std=float(values.std()),  # population std, divisor n
        n_seeds=len(records),
    )


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

Exportable = Union[RunRecord, list, SeedAggregate]


def _fmt(x) -> str:
    """Shortest round-trip decimal for floats, plain digits for ints."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _write_lines(path, lines: list[str]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise MomentalIOError(f"cannot write {path}: {exc}") from exc


def _steps_lines(rec: RunRecord) -> list[str]:
    lines = ["t,loss,max_lr,min_lr,mean_lr"]
    for t, loss, mx, mn, mean in rec.per_step:
        lines.append(
            f"{t},{_fmt(loss)},{_fmt(mx)},{_fmt(mn)},{_fmt(mean)}"
        )
    return lines


def _hist_lines(histograms: list[tuple[int, LrHistogram]]) -> list[str]:
    lines = ["t_window_start,bin_lo,bin_hi,count"]
    for window_start, hist in histograms:
        if hist.underflow:
            lines.append(
                f"{window_start},-inf,{_fmt(BIN_EDGES[0])},{hist.underflow}"
            )
        for b in np.flatnonzero(hist.counts):
            lines.append(
                f"{window_start},{_fmt(BIN_EDGES[b])},{_fmt(BIN_EDGES[b + 1])},"
                f"{int(hist.counts[b])}"
            )
        if hist.overflow:
            lines.append(
                f"{window_start},{_fmt(BIN_EDGES[-1])},+inf,{hist.overflow}"
            )
    return lines


def _aggregate_lines(aggs: list[SeedAggregate]) -> list[str]:
    lines = ["metric,median,mean,std,n_seeds"]
    for a in aggs:
        lines.append(
            f"{a.metric_name},{_fmt(a.median)},{_fmt(a.mean)},{_fmt(a.std)},"
            f"{a.n_seeds}"
        )
    return lines


def export_csv(rec_or_agg: Exportable, path) -> None:
    """Write one of the three CSV artifacts, dispatched on input type.

    RunRecord -> per-step rows; a record's .histograms list -> histogram
    rows (nonzero bins plus -inf/+inf sentinel rows for under/overflow);
    a SeedAggregate or list of them -> aggregate rows.
    """
    if isinstance(rec_or_agg, RunRecord):
        _write_lines(path, _steps_lines(rec_or_agg))
        return
    if isinstance(rec_or_agg, SeedAggregate):
        _write_lines(path, _aggregate_lines([rec_or_agg]))
        return
    if isinstance(rec_or_agg, list):
        if rec_or_agg and isinstance(rec_or_agg[0], SeedAggregate):
            if not all(isinstance(x, SeedAggregate) for x in rec_or_agg):
                raise AggregationError("mixed types in aggregate export list")
            _write_lines(path, _aggregate_lines(rec_or_agg))
            return
        # an empty list is a valid (header-only) histogram series
        if all(
            isinstance(x, tuple) and len(x) == 2 and isinstance(x[1], LrHistogram)
            for x in rec_or_agg
        ):
            _write_lines(path, _hist_lines(rec_or_agg))
            return
    raise AggregationError(
        f"export_csv cannot serialize {type(rec_or_agg).__name__}"
    )
