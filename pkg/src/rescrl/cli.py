"""Command-line front end: environment generation, single runs, sweeps,
and oracle reports.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .algorithms import AlgoConfig, Trace, run_algorithm
from .environments import build_from_spec
from .errors import ConfigError, NumericalError, RescrlError
from .metrics import compute_metrics
from .model import Cmdp, dump_env, env_from_dict, env_to_dict, load_env
from .oracle import solve_regularized
from .resilience import cost_from_spec

__all__ = ["main", "trace_header", "write_trace_csv", "write_policy_csv",
           "run_command", "sweep_command", "oracle_command"]


def _fmt(x: float) -> str:
    return repr(float(x))


def trace_header(m: int) -> str:
    cols = ["iter", "v_r"]
    cols += [f"v_g_{i + 1}" for i in range(m)]
    cols += [f"xi_{i + 1}" for i in range(m)]
    cols += [f"lambda_{i + 1}" for i in range(m)]
    cols += ["h", "lagrangian"]
    cols += [f"viol_{i + 1}" for i in range(m)]
    return ",".join(cols)


def write_trace_csv(trace: Trace, path) -> None:
    m = trace.num_constraints
    lines = [trace_header(m)]
    for k in range(len(trace.iters)):
        row = [str(int(trace.iters[k])), _fmt(trace.v_r[k])]
        row += [_fmt(x) for x in trace.v_g[k]]
        row += [_fmt(x) for x in trace.xi[k]]
        row += [_fmt(x) for x in trace.lam[k]]
        row += [_fmt(trace.h[k]), _fmt(trace.lagrangian[k])]
        row += [_fmt(x) for x in trace.viol[k]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _resolve_env(env_field) -> Cmdp:
    """Accept a path to an env JSON file, an inline schema dict, or an
    inline builder spec {"kind": ...}."""
    if isinstance(env_field, str):
        with open(env_field) as fh:
            env_field = json.load(fh)
    if not isinstance(env_field, dict):
        raise ConfigError("env must be a path or an inline JSON object")
    if "kind" in env_field:
        return build_from_spec(env_field)
    return env_from_dict(env_field)


def _oracle_value(model: Cmdp, config: dict, algo: AlgoConfig) -> float | None:
    if "oracle_value" in config:
        return float(config["oracle_value"])
    oracle_spec = config.get("oracle")
    if oracle_spec:
        report = solve_regularized(
            model, algo.cost,
            xi_grid_resolution=int(oracle_spec.get("grid_resolution", 41)),
            lambda_search=float(oracle_spec.get("lambda_cap", algo.lambda_cap)),
        )
        return report.primal_value
    return None


def _load_run_config(path: str, overrides: argparse.Namespace) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read run config {path}: {exc}") from None
    if overrides.trace_every is not None:
        config["trace_every"] = overrides.trace_every
    if getattr(overrides, "seed", None) is not None:
        config["seed"] = overrides.seed
        if isinstance(config.get("env"), dict) and config["env"].get("kind") == "random":
            config["env"]["seed"] = overrides.seed
    return config


def write_policy_csv(policy_probs: np.ndarray, path) -> None:
    num_actions = policy_probs.shape[1]
    lines = ["state," + ",".join(f"p_{a}" for a in range(num_actions))]
    for s, row in enumerate(policy_probs):
        lines.append(str(s) + "," + ",".join(_fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def run_command(config: dict, out_path: str, policy_out: str | None = None) -> None:
    if "env" not in config:
        raise ConfigError("run config needs an 'env' field")
    model = _resolve_env(config["env"])
    algo = AlgoConfig.from_dict(config)
    trace = run_algorithm(model, algo)
    write_trace_csv(trace, out_path)
    if policy_out:
        write_policy_csv(trace.final.policy.probs, policy_out)
    v_h_star = _oracle_value(model, config, algo)
    report = compute_metrics(model, trace, v_h_star=v_h_star)
    metrics_path = Path(out_path).with_suffix(".metrics.json")
    metrics_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")


def _parse_values(spec) -> list[float]:
    if isinstance(spec, str):
        parts = spec.split(":")
        if len(parts) != 4 or parts[2] != "log":
            raise ConfigError("value range must look like 'lo:hi:log:n'")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[3])
        if lo <= 0 or hi <= 0 or n < 2:
            raise ConfigError("log range needs lo, hi > 0 and n >= 2")
        return [float(v) for v in np.logspace(np.log10(lo), np.log10(hi), n)]
    values = [float(v) for v in spec]
    if any(v <= 0 for v in values):
        raise ConfigError("sweep values must be positive")
    return values


def _apply_sweep_value(base: dict, parameter: str, value: float) -> dict:
    config = json.loads(json.dumps(base))
    if parameter == "alpha":
        config.setdefault("cost", {"kind": "quadratic"})["alpha"] = value
    elif parameter == "eta":
        config["eta"] = value
    elif parameter == "T":
        config["T"] = int(value)
    else:
        raise ConfigError(f"sweep parameter must be alpha, eta, or T, not {parameter!r}")
    return config


def _sweep_one(task):
    index, config, env_dict, out_csv, window = task
    model = env_from_dict(env_dict)
    algo = AlgoConfig.from_dict(config)
    trace = run_algorithm(model, algo)
    write_trace_csv(trace, out_csv)
    v_h_star = _oracle_value(model, config, algo)
    report = compute_metrics(model, trace, v_h_star=v_h_star,
                             window=min(window, len(trace.iters)))
    metrics_path = Path(out_csv).with_suffix(".metrics.json")
    metrics_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    final_xi = trace.xi[-1]
    osc = [report.oscillation[f"xi_{i + 1}"] for i in range(trace.num_constraints)]
    return index, list(final_xi), osc, report.final_gap


def sweep_command(spec: dict, out_dir: str, jobs: int) -> None:
    for key in ("parameter", "values", "base"):
        if key not in spec:
            raise ConfigError(f"sweep spec needs field {key!r}")
    values = _parse_values(spec["values"])
    base = spec["base"]
    if "env" not in base:
        raise ConfigError("sweep base config needs an 'env' field")
    model = _resolve_env(base["env"])
    env_dict = env_to_dict(model)
    window = int(spec.get("oscillation_window", 200))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    tasks = []
    for k, value in enumerate(values):
        config = _apply_sweep_value(base, spec["parameter"], value)
        config["env"] = env_dict
        tasks.append((k, config, env_dict, str(out / f"run_{k:03d}.csv"), window))

    results: dict[int, tuple] = {}
    errors: dict[int, str] = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_sweep_one, t): t[0] for t in tasks}
            for future, index in futures.items():
                try:
                    results[index] = future.result()
                except RescrlError as exc:
                    errors[index] = str(exc)
    else:
        for task in tasks:
            try:
                results[task[0]] = _sweep_one(task)
            except RescrlError as exc:
                errors[task[0]] = str(exc)

    m = model.num_constraints
    header = ["value"]
    header += [f"final_xi_{i + 1}" for i in range(m)]
    header += [f"osc_xi_{i + 1}" for i in range(m)]
    header += ["final_gap", "error"]
    lines = [",".join(header)]
    for k, value in enumerate(values):
        if k in results:
            _, final_xi, osc, final_gap = results[k]
            row = [_fmt(value)]
            row += [_fmt(x) for x in final_xi]
            row += [_fmt(x) for x in osc]
            row += ["" if final_gap is None else _fmt(final_gap), ""]
        else:
            message = errors.get(k, "failed").replace('"', '""')
            row = [_fmt(value)] + [""] * (2 * m) + ["", f'"{message}"']
        lines.append(",".join(row))
    (out / "summary.csv").write_text("\n".join(lines) + "\n")


def oracle_command(env_path: str, cost_spec: dict, grid_resolution: int,
                   lambda_cap: float, out_path: str | None) -> None:
    model = _resolve_env(env_path)
    cost = cost_from_spec(cost_spec)
    report = solve_regularized(model, cost, xi_grid_resolution=grid_resolution,
                               lambda_search=lambda_cap)
    payload = {
        "primal_value": report.primal_value,
        "dual_value": report.dual_value,
        "xi_star": None if report.xi_star is None else list(report.xi_star),
        "lambda_star": None if report.lambda_star is None else list(report.lambda_star),
        "status": report.status,
        "grid_resolution": grid_resolution,
    }
    text = json.dumps(payload, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _gen_env_command(args: argparse.Namespace) -> None:
    if args.spec:
        spec = json.loads(args.spec)
    else:
        if not args.kind:
            raise ConfigError("gen-env needs --kind or --spec")
        spec = {"kind": args.kind}
        if args.kind == "random":
            spec.update(seed=args.seed if args.seed is not None else 0,
                        num_states=args.num_states, num_actions=args.num_actions,
                        num_constraints=args.num_constraints, gamma=args.gamma)
    model = build_from_spec(spec)
    dump_env(model, args.out)


def _jobs(args: argparse.Namespace) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("RESCRL_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rescrl",
                                     description="resilient constrained-MDP solver suite")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-env", help="write an environment JSON file")
    gen.add_argument("--kind", choices=["random", "monitor3", "grid_monitor"])
    gen.add_argument("--spec", help="inline JSON environment spec")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--num-states", type=int, default=20)
    gen.add_argument("--num-actions", type=int, default=5)
    gen.add_argument("--num-constraints", type=int, default=1)
    gen.add_argument("--gamma", type=float, default=0.9)
    gen.add_argument("--out", required=True)

    run = sub.add_parser("run", help="run one solver configuration")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, help="trace CSV path")
    run.add_argument("--trace-every", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--policy-out", help="also write the final policy as CSV")

    sweep = sub.add_parser("sweep", help="run a parameter sweep")
    sweep.add_argument("--config", required=True, help="sweep spec JSON path")
    sweep.add_argument("--out", help="output directory (overrides spec out_dir)")
    sweep.add_argument("--alphas", help="comma-separated alpha values (overrides spec)")
    sweep.add_argument("--trace-every", type=int, default=None)
    sweep.add_argument("--jobs", type=int, default=None)

    oracle = sub.add_parser("oracle", help="emit an oracle report JSON")
    oracle.add_argument("--env", required=True)
    oracle.add_argument("--alpha", type=float, help="quadratic cost weight")
    oracle.add_argument("--cost", help="inline cost spec JSON")
    oracle.add_argument("--grid", type=int, default=41)
    oracle.add_argument("--cap", type=float, default=100.0)
    oracle.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen-env":
            _gen_env_command(args)
        elif args.command == "run":
            config = _load_run_config(args.config, args)
            run_command(config, args.out, policy_out=args.policy_out)
        elif args.command == "sweep":
            try:
                with open(args.config) as fh:
                    spec = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read sweep spec {args.config}: {exc}") from None
            if args.alphas:
                spec["parameter"] = "alpha"
                spec["values"] = [float(v) for v in args.alphas.split(",")]
            if args.trace_every is not None:
                spec.setdefault("base", {})["trace_every"] = args.trace_every
            out_dir = args.out or spec.get("out_dir")
            if not out_dir:
                raise ConfigError("sweep needs --out or an out_dir in the spec")
            sweep_command(spec, out_dir, _jobs(args))
        elif args.command == "oracle":
            if args.cost:
                cost_spec = json.loads(args.cost)
            elif args.alpha is not None:
                cost_spec = {"kind": "quadratic", "alpha": args.alpha}
            else:
                raise ConfigError("oracle needs --alpha or --cost")
            oracle_command(args.env, cost_spec, args.grid, args.cap, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except json.JSONDecodeError as exc:
        print(f"config error: invalid JSON ({exc})", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
