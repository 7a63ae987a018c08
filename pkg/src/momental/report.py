"""Render the harness's CSV artifacts to PNG figures.

This is the plotting consumer of the delimited output: it walks a results
directory, and for every steps/histogram/aggregate CSV it finds, writes
figures alongside the CSV. Rendering never alters the CSVs and lives
entirely outside the recording path.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import MomentalIOError


def _read_rows(path: str) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, "r") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    except OSError as exc:
        raise MomentalIOError(f"cannot read {path}: {exc}") from exc
    header = lines[0].split(",") if lines else []
    return header, [ln.split(",") for ln in lines[1:]]


def _save(fig, path: str) -> None:
    try:
        fig.savefig(path, dpi=120, bbox_inches="tight")
    except OSError as exc:
        raise MomentalIOError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)


def _render_steps(path: str) -> list[str]:
    _, rows = _read_rows(path)
    stem = path[: -len(".csv")]
    if not rows:
        return []
    t = np.array([int(r[0]) for r in rows])
    loss = np.array([float(r[1]) for r in rows])
    mx = np.array([float(r[2]) for r in rows])
    mn = np.array([float(r[3]) for r in rows])
    mean = np.array([float(r[4]) for r in rows])
    written = []

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(t, loss, lw=1.0)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    if loss.min() > 0:
        ax.set_yscale("log")
    ax.set_title(os.path.basename(stem))
    _save(fig, stem + "_loss.png")
    written.append(stem + "_loss.png")

    fig, ax = plt.subplots(figsize=(6, 3.5))
    for series, label in ((mx, "max"), (mean, "mean"), (mn, "min")):
        ax.plot(t, series, lw=1.0, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("effective lr")
    if mn.min() > 0:
        ax.set_yscale("log")
    ax.legend(frameon=False)
    ax.set_title(os.path.basename(stem))
    _save(fig, stem + "_lr.png")
    written.append(stem + "_lr.png")
    return written


def _render_hist(path: str) -> list[str]:
    _, rows = _read_rows(path)
    stem = path[: -len(".csv")]
    # sentinel under/overflow rows have non-finite edges; summarize, don't bin
    def sentinel(r):
        return not (np.isfinite(float(r[1])) and np.isfinite(float(r[2])))

    in_range = [r for r in rows if not sentinel(r)]
    if not in_range:
        return []
    windows = sorted({int(r[0]) for r in in_range})
    lows = sorted({float(r[1]) for r in in_range})
    wpos = {w: i for i, w in enumerate(windows)}
    bpos = {lo: i for i, lo in enumerate(lows)}
    grid = np.zeros((len(lows), len(windows)))
    for r in in_range:
        grid[bpos[float(r[1])], wpos[int(r[0])]] += int(r[3])
    outside = sum(int(r[3]) for r in rows if sentinel(r))

    fig, ax = plt.subplots(figsize=(6, 3.5))
    mesh = ax.pcolormesh(
        np.arange(len(windows) + 1),
        np.arange(len(lows) + 1),
        grid,
        cmap="viridis",
    )
    ax.set_xticks(np.arange(len(windows)) + 0.5)
    ax.set_xticklabels([str(w) for w in windows], rotation=90, fontsize=6)
    ytick = np.arange(len(lows)) + 0.5
    keep = np.linspace(0, len(lows) - 1, min(len(lows), 8)).astype(int)
    ax.set_yticks(ytick[keep])
    ax.set_yticklabels([f"{lows[i]:.0e}" for i in keep], fontsize=7)
    ax.set_xlabel("window start step")
    ax.set_ylabel("effective lr bin")
    title = os.path.basename(stem)
    if outside:
        title += f" ({outside} under/overflow)"
    ax.set_title(title, fontsize=9)
    fig.colorbar(mesh, ax=ax, label="count")
    _save(fig, stem + ".png")
    return [stem + ".png"]


def _render_aggregate(path: str) -> list[str]:
    _, rows = _read_rows(path)
    stem = path[: -len(".csv")]
    if not rows:
        return []
    names = [r[0] for r in rows]
    medians = np.array([float(r[1]) for r in rows])
    stds = np.array([float(r[3]) for r in rows])
    fig, ax = plt.subplots(figsize=(max(4, 0.9 * len(names)), 3.5))
    ax.bar(np.arange(len(names)), medians, yerr=stds, capsize=3)
    ax.set_xticks(np.arange(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("median (err: population std)")
    ax.set_title(os.path.basename(stem))
    _save(fig, stem + ".png")
    return [stem + ".png"]


def render_report(src_dir: str) -> list[str]:
    """Walk src_dir and render every recognized CSV; returns written paths."""
    if not os.path.isdir(src_dir):
        raise MomentalIOError(f"report source {src_dir} is not a directory")
    written: list[str] = []
    for root, _, files in os.walk(src_dir):
        for name in sorted(files):
            path = os.path.join(root, name)
            if name.endswith("_steps.csv"):
                written += _render_steps(path)
            elif name.endswith("_hist.csv"):
                written += _render_hist(path)
            elif name in ("aggregate.csv", "sweep_summary.csv"):
                written += _render_aggregate(path)
    return written
