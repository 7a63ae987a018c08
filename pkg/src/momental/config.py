"""Flat key = value experiment configuration.

Grammar: one `key = value` pair per line; blank lines and lines starting
with `#` are ignored; list values are comma-separated; no sections, no
quoting, no inline comments. Unknown keys, duplicate keys, and keys that
do not apply to the selected problem or schedule are all rejected, so a
config file is a complete and minimal record of what ran.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ConfigError, MomentalIOError
from .optimizers import (
    Constant,
    HyperConfig,
    LinearWarmup,
    Schedule,
    StepDecay,
)
from .problems import PROBLEM_BUILDERS, Problem

_PROBLEM_ARG_KEYS = {
    "quadratic": ("dim", "condition_number"),
    "rosenbrock": ("dim",),
    "logreg": ("n_samples", "dim"),
    "mlp": ("layer_sizes", "n_samples"),
}

# problems whose constructor takes a seed argument
_SEEDED_PROBLEMS = ("quadratic", "logreg", "mlp")

_OPTIMIZERS = ("sgdm", "adam", "adamod")
_SCHEDULES = ("constant", "linear_warmup", "step_decay")


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully resolved experiment: problem, optimizer, run grid."""

    problem_name: str
    problem_args: dict
    problem_seed: int
    optimizer_name: str
    hyper: HyperConfig
    steps: int
    seeds: tuple[int, ...]
    histogram_window: int

    def build_problem(self) -> Problem:
        builder = PROBLEM_BUILDERS[self.problem_name]
        args = dict(self.problem_args)
        if self.problem_name in _SEEDED_PROBLEMS:
            args["seed"] = self.problem_seed
        return builder(**args)

    def with_hyper(self, **changes) -> "ExperimentSpec":
        return replace(self, hyper=replace(self.hyper, **changes))

    def resolved(self) -> dict:
        """Canonical flat snapshot of everything that defines this spec."""
        out = {
            "problem": self.problem_name,
            "problem_seed": self.problem_seed,
            "optimizer": self.optimizer_name,
            "alpha": self.hyper.base_alpha,
            "beta1": self.hyper.beta1,
            "beta2": self.hyper.beta2,
            "beta3": self.hyper.beta3,
            "epsilon": self.hyper.epsilon,
            "weight_decay": self.hyper.weight_decay,
            "steps": self.steps,
            "seeds": ",".join(str(s) for s in self.seeds),
            "histogram_window": self.histogram_window,
        }
        for key, value in self.problem_args.items():
            if isinstance(value, list):
                out[key] = ",".join(str(v) for v in value)
            else:
                out[key] = value
        sched = self.hyper.schedule
        if isinstance(sched, Constant):
            out["schedule"] = "constant"
        elif isinstance(sched, LinearWarmup):
            out["schedule"] = "linear_warmup"
            out["warmup_alpha0"] = sched.alpha0
            out["warmup_alpha_w"] = sched.alpha_w
            out["warmup_steps"] = sched.t_w
            if isinstance(sched.then, StepDecay):
                out["after_warmup"] = "step_decay"
                out["milestones"] = ",".join(str(m) for m in sched.then.milestones)
                out["decay_factor"] = sched.then.factor
            else:
                out["after_warmup"] = "constant"
        elif isinstance(sched, StepDecay):
            out["schedule"] = "step_decay"
            out["milestones"] = ",".join(str(m) for m in sched.milestones)
            out["decay_factor"] = sched.factor
        return out


def _to_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from None


def _to_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw!r}") from None


def _to_int_list(key: str, raw: str) -> list[int]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key} must be a comma-separated list of integers")
    return [_to_int(key, p) for p in parts]


def parse_config_text(text: str) -> ExperimentSpec:
    """Parse config file contents into an ExperimentSpec.

    All violations (syntax, unknown/duplicate keys, missing required keys,
    invalid hyperparameters) raise ConfigError.
    """
    pairs: dict[str, str] = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value

    def take(key: str) -> str | None:
        return pairs.pop(key, None)

    def require(key: str) -> str:
        raw = take(key)
        if raw is None:
            raise ConfigError(f"missing required key {key!r}")
        return raw

    problem = require("problem")
    if problem not in _PROBLEM_ARG_KEYS:
        raise ConfigError(
            f"unknown problem {problem!r}; expected one of "
            f"{tuple(_PROBLEM_ARG_KEYS)}"
        )
    problem_args: dict = {}
    for key in _PROBLEM_ARG_KEYS[problem]:
        raw = require(key)
        if key == "layer_sizes":
            problem_args[key] = _to_int_list(key, raw)
        elif key == "condition_number":
            problem_args[key] = _to_float(key, raw)
        else:
            problem_args[key] = _to_int(key, raw)
    problem_seed = _to_int("problem_seed", take("problem_seed") or "0")

    optimizer = require("optimizer")
    if optimizer not in _OPTIMIZERS:
        raise ConfigError(
            f"unknown optimizer {optimizer!r}; expected one of {_OPTIMIZERS}"
        )

    schedule_name = take("schedule") or "constant"
    if schedule_name not in _SCHEDULES:
        raise ConfigError(
            f"unknown schedule {schedule_name!r}; expected one of {_SCHEDULES}"
        )

    def build_step_decay() -> StepDecay:
        milestones = _to_int_list("milestones", require("milestones"))
        factor = _to_float("decay_factor", require("decay_factor"))
        return StepDecay(tuple(milestones), factor)

    schedule: Schedule
    if schedule_name == "constant":
        schedule = Constant()
    elif schedule_name == "step_decay":
        schedule = build_step_decay()
    else:
        alpha0 = _to_float("warmup_alpha0", require("warmup_alpha0"))
        alpha_w = _to_float("warmup_alpha_w", require("warmup_alpha_w"))
        t_w = _to_int("warmup_steps", require("warmup_steps"))
        after = take("after_warmup") or "constant"
        if after == "constant":
            then: Schedule = Constant()
        elif after == "step_decay":
            then = build_step_decay()
        else:
            raise ConfigError(
                f"after_warmup must be constant or step_decay, got {after!r}"
            )
        schedule = LinearWarmup(alpha0, alpha_w, t_w, then)

    hyper = HyperConfig(
        base_alpha=_to_float("alpha", take("alpha") or "0.001"),
        beta1=_to_float("beta1", take("beta1") or "0.9"),
        beta2=_to_float("beta2", take("beta2") or "0.999"),
        beta3=_to_float("beta3", take("beta3") or "0.999"),
        epsilon=_to_float("epsilon", take("epsilon") or "1e-8"),
        weight_decay=_to_float("weight_decay", take("weight_decay") or "0"),
        schedule=schedule,
    )

    steps = _to_int("steps", require("steps"))
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    seeds = tuple(_to_int_list("seeds", require("seeds")))
    if len(set(seeds)) != len(seeds):
        raise ConfigError(f"seeds must be distinct, got {seeds}")
    histogram_window = _to_int(
        "histogram_window", take("histogram_window") or "100"
    )
    if histogram_window < 1:
        raise ConfigError(
            f"histogram_window must be >= 1, got {histogram_window}"
        )

    if pairs:
        raise ConfigError(
            f"unused keys for problem {problem!r} / schedule "
            f"{schedule_name!r}: {sorted(pairs)}"
        )

    return ExperimentSpec(
        problem_name=problem,
        problem_args=problem_args,
        problem_seed=problem_seed,
        optimizer_name=optimizer,
        hyper=hyper,
        steps=steps,
        seeds=seeds,
        histogram_window=histogram_window,
    )


def load_config(path) -> ExperimentSpec:
    """Read and parse a config file; missing/unreadable file is an I/O error."""
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise MomentalIOError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)
