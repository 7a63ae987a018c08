"""Experiment runner: executes optimizer x problem x seed grids
deterministically, wires telemetry, and writes CSV artifacts plus a
manifest echoing the resolved configuration.

Determinism contract: identical spec and seed produce identical RunRecords
and identical output bytes, whether seeds run serially or in parallel
(records are gathered and written in seed order regardless of completion
order). All randomness flows through the library's counter-based generator.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import ExperimentSpec
from .errors import ConfigError, MomentalIOError
from .optimizers import STEP_FUNCTIONS, init_state
from .problems import Problem, finite_diff_grad
from .telemetry import (
    RunRecord,
    SeedAggregate,
    aggregate_seeds,
    export_csv,
    finalize_record,
    record_step,
)

_AGG_METRICS = ("final_loss", "best_loss", "steps_run")


def _single_run(problem: Problem, spec: ExperimentSpec, seed: int) -> RunRecord:
    """Run one seed to completion or divergence.

    Per step t (1-based): evaluate loss and gradient at the current
    parameters on batch counter t-1, apply the optimizer step, then record
    (t, pre-update loss, effective lr). Divergence means a non-finite
    loss, parameter, or gradient; the run halts there with whatever rows
    were already recorded (the offending values are never recorded).
    """
    snapshot = spec.resolved()
    snapshot["seed"] = seed
    rec = RunRecord(
        config_snapshot=snapshot, histogram_window=spec.histogram_window
    )
    step_fn = STEP_FUNCTIONS[spec.optimizer_name]
    params = problem.init_params(seed)
    state = init_state(problem.dim)
    diverged = False
    for t in range(1, spec.steps + 1):
        counter = t - 1
        if not np.isfinite(params.data).all():
            diverged = True
            break
        loss = problem.eval_loss(params, counter)
        if not np.isfinite(loss):
            diverged = True
            break
        grad = problem.eval_grad(params, counter)
        if not np.isfinite(grad.data).all():
            diverged = True
            break
        out = step_fn(params, grad, state, spec.hyper)
        record_step(rec, t, loss, out.effective_lr)
        params = out.new_params
    return finalize_record(rec, diverged)


def _run_id(spec: ExperimentSpec, seed: int) -> str:
    return f"{spec.problem_name}_{spec.optimizer_name}_seed{seed}"


def _ensure_dir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise MomentalIOError(f"cannot create output dir {path}: {exc}") from exc


def _manifest_lines(resolved: dict) -> list[str]:
    return [f"{key} = {value}" for key, value in sorted(resolved.items())]


def _write_text(path: str, lines: list[str]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise MomentalIOError(f"cannot write {path}: {exc}") from exc


def _write_experiment(
    spec: ExperimentSpec, records: list[RunRecord], out_dir: str
) -> None:
    _ensure_dir(out_dir)
    for seed, rec in zip(spec.seeds, records):
        run_id = _run_id(spec, seed)
        export_csv(rec, os.path.join(out_dir, f"{run_id}_steps.csv"))
        export_csv(rec.histograms, os.path.join(out_dir, f"{run_id}_hist.csv"))
    aggs = [aggregate_seeds(records, m) for m in _AGG_METRICS]
    export_csv(aggs, os.path.join(out_dir, "aggregate.csv"))
    _write_text(
        os.path.join(out_dir, "manifest.txt"), _manifest_lines(spec.resolved())
    )


def run_experiment(
    spec: ExperimentSpec, out_dir: str | None = None, parallel: int = 1
) -> list[RunRecord]:
    """Run every seed of the spec; optionally write artifacts to out_dir.

    Returns RunRecords in seed order. parallel > 1 runs seeds on a thread
    pool; every run owns its own state and record, and the problem object
    is immutable, so results are identical to serial execution.
    """
    problem = spec.build_problem()
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            records = list(
                pool.map(lambda s: _single_run(problem, spec, s), spec.seeds)
            )
    else:
        records = [_single_run(problem, spec, seed) for seed in spec.seeds]
    if out_dir is not None:
        _write_experiment(spec, records, out_dir)
    return records


@dataclass(frozen=True)
class SweepResult:
    """Per-value median final losses and their spread for one swept axis."""

    axis: str
    values: tuple[float, ...]
    medians: tuple[float, ...]
    spread: float
    records: dict


def run_sweep(
    spec: ExperimentSpec,
    axis: str,
    values: list[float],
    out_dir: str | None = None,
    parallel: int = 1,
) -> SweepResult:
    """Run the spec once per value of the swept hyperparameter.

    axis is "alpha" (the base step size) or "beta3". The summary CSV gets
    one aggregate row per value (metric final_loss@<axis>=<value>) plus a
    final_loss_spread row carrying max - min of the per-value medians.
    """
    if axis not in ("alpha", "beta3"):
        raise ConfigError(f"sweep axis must be alpha or beta3, got {axis!r}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    field = "base_alpha" if axis == "alpha" else "beta3"
    per_value: dict[float, list[RunRecord]] = {}
    summary_rows: list[SeedAggregate] = []
    medians: list[float] = []
    for value in values:
        spec_v = spec.with_hyper(**{field: value})
        sub_dir = (
            os.path.join(out_dir, f"{axis}_{value!r}") if out_dir is not None else None
        )
        records = run_experiment(spec_v, out_dir=sub_dir, parallel=parallel)
        agg = aggregate_seeds(records, "final_loss")
        summary_rows.append(
            replace(agg, metric_name=f"final_loss@{axis}={value!r}")
        )
        medians.append(agg.median)
        per_value[value] = records
    spread = max(medians) - min(medians)
    summary_rows.append(
        SeedAggregate(
            metric_name="final_loss_spread",
            median=spread,
            mean=spread,
            std=0.0,
            n_seeds=len(values),
        )
    )
    if out_dir is not None:
        _ensure_dir(out_dir)
        export_csv(summary_rows, os.path.join(out_dir, "sweep_summary.csv"))
        resolved = spec.resolved()
        resolved["sweep_axis"] = axis
        resolved["sweep_values"] = ",".join(repr(v) for v in values)
        _write_text(os.path.join(out_dir, "manifest.txt"), _manifest_lines(resolved))
    return SweepResult(
        axis=axis,
        values=tuple(values),
        medians=tuple(medians),
        spread=spread,
        records=per_value,
    )


def gradient_check(
    problem: Problem, points: int = 20, h: float = 1e-5, batch_seed: int = 0
) -> list[tuple[int, float]]:
    """Compare analytic and central finite-difference gradients.

    Probes `points` seeded initializations (seeds 9000, 9001, ...) and
    returns (point index, relative error) pairs, where relative error is
    the max absolute coordinate difference divided by max(1, largest
    analytic coordinate magnitude).
    """
    results = []
    for j in range(points):
        params = problem.init_params(9000 + j)
        analytic = problem.eval_grad(params, batch_seed).data
        numeric = finite_diff_grad(problem, params, batch_seed, h).data
        denom = max(1.0, float(np.abs(analytic).max()))
        err = float(np.abs(numeric - analytic).max()) / denom
        results.append((j, err))
    return results
