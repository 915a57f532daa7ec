"""Command-line front end: ``aes-swarm run | optimize | metrics``.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_from_mapping, config_to_mapping, load_config
from .core import ConfigurationError, IntegrationDiverged, SingularityError
from .export import (
    Stopwatch,
    TrajectoryFormatError,
    read_manifest,
    read_trajectory_csv,
    write_history_csv,
    write_manifest,
    write_metrics_aux_csv,
    write_metrics_csv,
    write_snapshots,
    write_trajectory_csv,
)
from .scenario import ScenarioConfig, evaluate_objective, recompute_series, run_scenario, setup_config
from .tcacs import OptProblem, TcacsParams, optimize

log = logging.getLogger("aes_swarm")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

# alpha, beta, k search box for tuning
DEFAULT_BOUNDS = ((0.001, 1.0), (0.01, 5.0), (0.1, 10.0))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def parse_bounds(text: str) -> tuple[tuple[float, float], ...]:
    try:
        pairs = tuple(tuple(float(v) for v in part.split(":")) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad bounds {text!r}; expected lo:hi,lo:hi,lo:hi") from None
    if len(pairs) != 3 or any(len(p) != 2 or p[0] > p[1] for p in pairs):
        raise argparse.ArgumentTypeError(f"bad bounds {text!r}; expected three lo:hi pairs with lo <= hi")
    return pairs


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="aes-swarm", description="Active elastic sheet swarm simulator and TCACS tuner")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate one scenario and export trajectory/metrics")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--setup", type=int, help="built-in setup 1 (linear), 2 (rotation) or 3 (both)")
    src.add_argument("--config", type=Path, help="key = value scenario file")
    src.add_argument("--manifest", type=Path, help="replay a previous run from its manifest.json")
    run.add_argument("--seed", type=_u64, default=None, help="run seed (default: config seed)")
    run.add_argument("--out", type=Path, default=Path("run_out"))
    run.add_argument("--stride", type=int, default=None, help="trajectory sampling stride in steps (default 1)")
    run.add_argument("--plot", action="store_true", help="also write snapshots.svg")

    opt = sub.add_parser("optimize", help="tune (alpha, beta, k) with TCACS")
    osrc = opt.add_mutually_exclusive_group()
    osrc.add_argument("--config", type=Path)
    osrc.add_argument("--setup", type=int)
    opt.add_argument("--budget", type=int, default=300, help="maximum objective evaluations")
    opt.add_argument("--seed", type=_u64, default=0)
    opt.add_argument("--bounds", type=parse_bounds, default=DEFAULT_BOUNDS, help="lo:hi,lo:hi,lo:hi for alpha,beta,k")
    opt.add_argument("--weights", choices=("default", "force", "align"), default="default")
    opt.add_argument("--n-mc", type=int, default=None, help="Monte-Carlo replicates per evaluation")
    opt.add_argument("--n-ants", type=int, default=15)
    opt.add_argument("--out", type=Path, default=Path("optimize_out"))

    met = sub.add_parser("metrics", help="recompute metrics from a stored trajectory")
    met.add_argument("--traj", type=Path, required=True)
    met.add_argument("--config", type=Path, required=True, help="scenario file or manifest.json of the run")
    met.add_argument("--out", type=Path, default=Path("metrics_out"))
    return p


def _load_any_config(path: Path) -> tuple[ScenarioConfig, dict]:
    if path.suffix == ".json":
        manifest = read_manifest(path)
        return config_from_mapping(manifest["config"], str(path)), manifest
    return load_config(path), {}


def _ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise UsageError(f"output directory {path} is not writable: {exc}") from exc
    return path


def cmd_run(args) -> int:
    stride = args.stride
    seed = args.seed
    if args.manifest is not None:
        config, manifest = _load_any_config(args.manifest)
        seed = manifest.get("seed") if seed is None else seed
        stride = manifest.get("stride", 1) if stride is None else stride
    elif args.config is not None:
        config = load_config(args.config)
    else:
        config = setup_config(args.setup)
    stride = 1 if stride is None else stride
    if stride < 1:
        raise UsageError("--stride must be >= 1")
    seed = config.seed if seed is None else seed
    config = replace(config, seed=seed)
    out = _ensure_dir(args.out)

    with Stopwatch() as sw:
        traj = run_scenario(config, seed=seed, stride=stride)
    paths = {
        "trajectory": out / "trajectory.csv",
        "metrics": out / "metrics.csv",
        "metrics_aux": out / "metrics_aux.csv",
    }
    write_trajectory_csv(traj, paths["trajectory"])
    write_metrics_csv(traj.step_times, traj.series, paths["metrics"])
    write_metrics_aux_csv(traj.step_times, traj.series, paths["metrics_aux"])
    snaps = write_snapshots(traj, out / "snapshots", plot=args.plot)
    write_manifest(
        out / "manifest.json",
        command="run",
        version=__version__,
        config=config_to_mapping(config),
        seed=seed,
        stride=stride,
        artifacts=sorted(str(p.relative_to(out)) for p in [*paths.values(), *snaps]),
        wall_clock_s=sw.elapsed,
    )
    s = traj.series
    print(
        f"run: {config.n_steps} steps, N={config.n_agents}, seed={seed}; final psi_heading={s['psi_heading'][-1]:.4f} "
        f"psi_control={s['psi_control'][-1]:.4f} sum|f|={s['total_force'][-1]:.4f} -> {out}"
    )
    return EXIT_OK


def cmd_optimize(args) -> int:
    if args.config is not None:
        config, _ = _load_any_config(args.config)
    else:
        config = setup_config(args.setup if args.setup is not None else 3)
    if args.budget < 1:
        raise UsageError("--budget must be >= 1")
    if args.n_ants < 2:
        raise UsageError("--n-ants must be >= 2")
    if args.budget < args.n_ants:
        raise UsageError(f"--budget ({args.budget}) must be at least --n-ants ({args.n_ants})")
    config = replace(config.with_weights(args.weights), seed=args.seed)
    if args.n_mc is not None:
        config = replace(config, n_mc=args.n_mc)
    out = _ensure_dir(args.out)

    problem = OptProblem(lambda x: evaluate_objective(x, config), args.bounds, args.budget)
    params = TcacsParams(n_ants=args.n_ants, seed=args.seed)
    with Stopwatch() as sw:
        result = optimize(problem, params)
    p = config.params
    reference = evaluate_objective((p.alpha, p.beta, p.k), config)
    alpha, beta, k = (float(v) for v in result.best_point)
    write_history_csv(result.history, out / "history.csv")
    best = {"alpha": alpha, "beta": beta, "k": k, "J": result.best_cost, "J_config_params": reference,
            "evaluations": result.n_evaluations, "nan_evaluations": result.n_nan}
    write_manifest(
        out / "manifest.json",
        command="optimize",
        version=__version__,
        config=config_to_mapping(config),
        seed=args.seed,
        budget=args.budget,
        bounds=[list(b) for b in args.bounds],
        weights=args.weights,
        n_ants=args.n_ants,
        best=best,
        artifacts=["history.csv", "best.json"],
        wall_clock_s=sw.elapsed,
    )
    (out / "best.json").write_text(json.dumps(best, indent=2, sort_keys=True) + "\n")
    print(f"best: alpha={alpha:.6g} beta={beta:.6g} k={k:.6g} J={result.best_cost:.6g} ({result.n_evaluations} evaluations)")
    print(f"config parameters: alpha={p.alpha:.6g} beta={p.beta:.6g} k={p.k:.6g} J={reference:.6g}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    config, _ = _load_any_config(args.config)
    frames = read_trajectory_csv(args.traj)
    if frames[0][0] != 0.0:
        raise TrajectoryFormatError(f"{args.traj}: first sample must be t = 0 to recover natural lengths")
    for t, _, pos, _ in frames:
        if pos.shape[0] != config.n_agents:
            raise TrajectoryFormatError(f"{args.traj}: t={t} has {pos.shape[0]} agents, config expects {config.n_agents}")
    out = _ensure_dir(args.out)
    positions = np.stack([f[2] for f in frames])
    headings = np.stack([f[3] for f in frames])
    series = recompute_series(positions, headings, config)
    times = [f[0] for f in frames]
    write_metrics_csv(times, series, out / "metrics.csv")
    write_metrics_aux_csv(times, series, out / "metrics_aux.csv")
    print(f"metrics: {len(frames)} samples -> {out / 'metrics.csv'}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "optimize": cmd_optimize, "metrics": cmd_metrics}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except (UsageError, ConfigurationError) as exc:
        print(f"aes-swarm {args.cmd}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrajectoryFormatError, IntegrationDiverged, SingularityError, OSError, ValueError) as exc:
        print(f"aes-swarm {args.cmd}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
