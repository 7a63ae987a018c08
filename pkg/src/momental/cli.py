"""Command-line interface.

Subcommands:
  run       execute an experiment config, write CSVs + manifest
  sweep     run the config once per value of alpha or beta3
  gradcheck verify a problem's analytic gradient against finite differences
  report    render PNG figures next to previously written CSVs

Exit codes: 0 success, 1 configuration error (also a failed gradcheck),
2 I/O error. A diverged run is reported in the output but is not a process
failure. MOMENTAL_OUT provides the default output directory; --out
overrides it.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import load_config
from .errors import ConfigError, MomentalIOError
from .harness import gradient_check, run_experiment, run_sweep
from .problems import (
    logreg_problem,
    mlp_problem,
    quadratic_problem,
    rosenbrock_problem,
)

_GRADCHECK_TOLERANCE = 1e-5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momental",
        description="Deterministic optimizer benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--parallel", type=int, default=1)

    p_sweep = sub.add_parser("sweep", help="sweep alpha or beta3")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", required=True, choices=("alpha", "beta3"))
    p_sweep.add_argument("--values", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--parallel", type=int, default=1)

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p_grad.add_argument(
        "--problem",
        required=True,
        choices=("quadratic", "rosenbrock", "logreg", "mlp"),
    )
    p_grad.add_argument("--points", type=int, default=20)

    p_report = sub.add_parser("report", help="render figures from CSVs")
    p_report.add_argument("--from", dest="src", default=None)
    return parser


def _resolve_out(flag_value: str | None) -> str:
    out = flag_value or os.environ.get("MOMENTAL_OUT")
    if not out:
        raise ConfigError(
            "no output directory: pass --out or set MOMENTAL_OUT"
        )
    return out


def _default_gradcheck_problem(name: str):
    if name == "quadratic":
        return quadratic_problem(dim=10, condition_number=100.0, seed=0)
    if name == "rosenbrock":
        return rosenbrock_problem(dim=10)
    if name == "logreg":
        return logreg_problem(n_samples=200, dim=20, seed=0)
    return mlp_problem(layer_sizes=[2, 16, 2], n_samples=200, seed=0)


def _cmd_run(args) -> int:
    spec = load_config(args.config)
    out_dir = _resolve_out(args.out)
    records = run_experiment(spec, out_dir=out_dir, parallel=args.parallel)
    for seed, rec in zip(spec.seeds, records):
        term = rec.terminal
        status = "diverged" if term.diverged else "ok"
        print(
            f"{spec.problem_name}_{spec.optimizer_name}_seed{seed}: "
            f"final_loss={term.final_loss:.6g} best_loss={term.best_loss:.6g} "
            f"steps={term.steps_run} {status}"
        )
    print(f"artifacts written to {out_dir}")
    return 0


def _cmd_sweep(args) -> int:
    spec = load_config(args.config)
    out_dir = _resolve_out(args.out)
    try:
        values = [float(p.strip()) for p in args.values.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}") from None
    result = run_sweep(
        spec, args.axis, values, out_dir=out_dir, parallel=args.parallel
    )
    for value, median in zip(result.values, result.medians):
        print(f"{args.axis}={value!r}: median final_loss={median:.6g}")
    print(f"spread={result.spread:.6g}")
    print(f"artifacts written to {out_dir}")
    return 0


def _cmd_gradcheck(args) -> int:
    if args.points < 1:
        raise ConfigError(f"--points must be >= 1, got {args.points}")
    problem = _default_gradcheck_problem(args.problem)
    results = gradient_check(problem, points=args.points)
    worst = max(err for _, err in results)
    for j, err in results:
        print(f"point {j}: relative error {err:.3e}")
    if worst < _GRADCHECK_TOLERANCE:
        print(f"PASS: worst {worst:.3e} < {_GRADCHECK_TOLERANCE:.0e}")
        return 0
    print(f"FAIL: worst {worst:.3e} >= {_GRADCHECK_TOLERANCE:.0e}")
    return 1


def _cmd_report(args) -> int:
    src = _resolve_out(args.src)
    from .report import render_report

    written = render_report(src)
    for path in written:
        print(f"wrote {path}")
    if not written:
        print(f"no renderable CSVs under {src}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "gradcheck": _cmd_gradcheck,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except MomentalIOError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
