"""Command-line interface.

Subcommands:
    simulate             emit one simulated path as a t,y,x CSV
    estimate             closed-form drift estimate from a path CSV, as JSON
    consistency          Monte Carlo estimate-error summary in any regime
    clt                  subcritical Gaussian limit checks (plus random scaling)
    random-scaling-clt   the pivotal random-scaling checks alone
    critical-limit       critical-regime limit-law comparison
    supercritical-limit  supercritical-regime limit-law comparison
    diffusion-recovery   quadratic-variation recovery of (sigma1, sigma2, rho)

Each command reads a TOML config (``--config``); ``--seed`` and ``--threads``
override the config, ``--out`` redirects output to a file.  Experiment
commands write the JSON report to stdout (or ``--out``, with per-replicate
estimates in a sibling .csv) and exit 0 when every criterion passed, 1
otherwise; usage and configuration problems exit 2.
"""

from __future__ import annotations

import argparse
import functools
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .estimator import DeterminantNonpositiveError, estimate_from_path
from .experiments import (
    ConfigError,
    ExperimentConfig,
    ExperimentKind,
    replicate_stream,
    run_experiment,
)
from .functionals import load_path_csv, save_path_csv
from .model import ModelParams, simulate_heston_path

__all__ = ["main"]

_MODEL_KEYS = ("a", "b", "alpha", "beta", "sigma1", "sigma2", "rho", "y0")


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None


def _params_from_config(cfg: dict) -> ModelParams:
    model = cfg.get("model")
    if not isinstance(model, dict):
        raise ConfigError("config needs a [model] section")
    missing = [key for key in _MODEL_KEYS if key not in model]
    if missing:
        raise ConfigError(f"[model] is missing keys: {', '.join(missing)}")
    try:
        return ModelParams(
            **{key: float(model[key]) for key in _MODEL_KEYS},
            x0=float(model.get("x0", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from None


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"[{where}] is missing key {key!r}")
    return section[key]


def _run_section(cfg: dict) -> dict:
    run = cfg.get("run", {})
    if not isinstance(run, dict):
        raise ConfigError("[run] must be a section")
    return run


def _grid_from(run: dict) -> tuple[float, float, int]:
    horizon = float(_require(run, "horizon", "run"))
    dt = float(_require(run, "dt", "run"))
    if dt <= 0 or horizon < dt:
        raise ConfigError(f"need dt > 0 and horizon >= dt, got horizon={horizon}, dt={dt}")
    n_steps = round(horizon / dt)
    if abs(n_steps * dt - horizon) > 1e-9 * horizon:
        raise ConfigError(f"horizon {horizon} is not an integer multiple of dt {dt}")
    return horizon, dt, n_steps


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_toml(args.config)
    params = _params_from_config(cfg)
    run = _run_section(cfg)
    _, dt, n_steps = _grid_from(run)
    seed = args.seed if args.seed is not None else int(run.get("seed", 0))
    rng = replicate_stream(seed, 0)
    path = simulate_heston_path(params, n_steps, dt, rng)
    save_path_csv(path, args.out)
    print(f"wrote {n_steps + 1} grid points to {args.out}", file=sys.stderr)
    return 0


def _cmd_estimate(args: argparse.Namespace) -> int:
    cfg = _load_toml(args.config)
    section = cfg.get("estimate", {})
    if not isinstance(section, dict) or "input" not in section:
        raise ConfigError('estimate needs [estimate] with input = "path.csv"')
    use_log_identity = bool(section.get("use_log_identity", False))
    sigma1 = section.get("sigma1")
    path = load_path_csv(str(section["input"]))
    estimate = estimate_from_path(
        path,
        use_log_identity=use_log_identity,
        sigma1=None if sigma1 is None else float(sigma1),
    )
    payload = {
        "a_hat": estimate.a_hat,
        "b_hat": estimate.b_hat,
        "alpha_hat": estimate.alpha_hat,
        "beta_hat": estimate.beta_hat,
        "det_condition": estimate.det_condition,
        "used_log_identity": estimate.used_log_identity,
        "horizon": path.t_end,
        "dt": path.dt,
        "n_points": int(path.y.size),
    }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="ascii", newline="\n") as handle:
            handle.write(text)
    return 0


def _experiment_config(cfg: dict, kind: ExperimentKind, args: argparse.Namespace) -> ExperimentConfig:
    params = _params_from_config(cfg)
    run = _run_section(cfg)
    horizon, dt, _ = _grid_from(run)
    return ExperimentConfig(
        params=params,
        kind=kind,
        horizon=horizon,
        dt=dt,
        n_replicates=int(_require(run, "replicates", "run")),
        seed=args.seed if args.seed is not None else int(run.get("seed", 0)),
        threads=args.threads if args.threads is not None else int(run.get("threads", 1)),
        scaling=str(run.get("scaling", "deterministic")),
        ks_threshold=float(run.get("ks_threshold", 0.01)),
        limit_draws=int(run.get("limit_draws", 10_000)),
        companion_steps=int(run.get("companion_steps", 1000)),
        window=int(run.get("window", 200)),
        sigma_tolerance=float(run.get("sigma_tolerance", 0.02)),
        rho_tolerance=float(run.get("rho_tolerance", 0.03)),
        b_tolerance=float(run.get("b_tolerance", 0.01)),
        out=args.out,
    )


def _cmd_experiment(args: argparse.Namespace, kind: ExperimentKind) -> int:
    config = _experiment_config(_load_toml(args.config), kind, args)
    report = run_experiment(config)
    if args.out is None:
        sys.stdout.write(report.to_json())
    for criterion in report.criteria:
        status = "PASS" if criterion["passed"] else "FAIL"
        print(f"[{status}] {criterion['name']}: {criterion['detail']}", file=sys.stderr)
    for test in report.ks_tests:
        if test["skipped"]:
            print(f"[SKIP] {test['name']}: fewer than 2 replicates", file=sys.stderr)
        else:
            status = "PASS" if test["passed"] else "FAIL"
            print(
                f"[{status}] {test['name']}: statistic={test['statistic']:.4f} "
                f"p={test['p_value']:.4g} (threshold {test['threshold']})",
                file=sys.stderr,
            )
    overall = "PASS" if report.passed else "FAIL"
    print(
        f"[{overall}] {report.kind}: {report.n_replicates} replicates "
        f"in {report.wall_clock_seconds:.1f}s",
        file=sys.stderr,
    )
    return 0 if report.passed else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hestonlab",
        description="Simulation and closed-form drift inference for the Heston model.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    simulate = subparsers.add_parser("simulate", help="emit one simulated path as a t,y,x CSV")
    simulate.add_argument("--config", required=True, metavar="FILE", help="TOML config")
    simulate.add_argument("--seed", type=int, default=None, help="override [run] seed")
    simulate.add_argument("--out", required=True, metavar="PATH", help="output CSV path")
    simulate.set_defaults(handler=_cmd_simulate)

    estimate = subparsers.add_parser("estimate", help="drift estimate from a path CSV, as JSON")
    estimate.add_argument("--config", required=True, metavar="FILE", help="TOML config")
    estimate.add_argument("--out", default=None, metavar="PATH", help="output JSON path (default stdout)")
    estimate.set_defaults(handler=_cmd_estimate)

    experiment_commands = (
        ("consistency", ExperimentKind.CONSISTENCY, "Monte Carlo estimate-error summary"),
        ("clt", ExperimentKind.CLT, "subcritical Gaussian limit checks"),
        ("random-scaling-clt", ExperimentKind.RANDOM_SCALING_CLT, "pivotal random-scaling checks"),
        ("critical-limit", ExperimentKind.CRITICAL_LIMIT, "critical-regime limit comparison"),
        ("supercritical-limit", ExperimentKind.SUPERCRITICAL_LIMIT, "supercritical-regime limit comparison"),
        ("diffusion-recovery", ExperimentKind.DIFFUSION_RECOVERY, "recover (sigma1, sigma2, rho)"),
    )
    for name, kind, help_text in experiment_commands:
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, metavar="FILE", help="TOML config")
        sub.add_argument("--seed", type=int, default=None, help="override [run] seed")
        sub.add_argument("--threads", type=int, default=None, help="override [run] threads")
        sub.add_argument("--out", default=None, metavar="PATH", help="report JSON path (default stdout)")
        sub.set_defaults(handler=functools.partial(_cmd_experiment, kind=kind))

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DeterminantNonpositiveError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
