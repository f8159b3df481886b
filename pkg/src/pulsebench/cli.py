"""Command-line scenario runner.

Subcommands: ``run``, ``sweep``, ``optimize``, ``walk`` and ``list-presets``.
Every run writes CSV files with a one-line header and floats formatted with
17 significant digits, plus a manifest echo. Exit status is 0 on success, 1
for configuration errors and 2 when the integrator aborts.
"""

import argparse
import dataclasses
import itertools
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import pulses
from .config import PRESETS, ConfigError, config_hash, parse_config, preset, serialize_config, validate_config
from .dynamics import InvariantViolation, StepUnderflow
from .qstate import StateValidationError

EXIT_CONFIG = 1
EXIT_INTEGRATOR = 2
WORKERS_ENV = "PULSEBENCH_WORKERS"
FIG1_STATES = ("00", "+0", "0+", "++", "phi+", "psi+")


def fmt(x):
    """17-significant-digit representation used in every CSV."""
    return format(float(x), ".16e")


def _cell(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return fmt(x)


def write_csv(path, header, rows):
    """Write a CSV atomically (temporary file in the target directory, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)] + [",".join(_cell(v) for v in row) for row in rows]
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp_", suffix=".csv")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def trajectory_rows(traj):
    names = sorted(traj.metrics)
    rows = [[t, *(traj.metrics[n][i] for n in names)] for i, t in enumerate(traj.times)]
    return ["t", *names], rows


def write_trajectory(path, traj):
    header, rows = trajectory_rows(traj)
    write_csv(path, header, rows)


# ----------------------------------------------------------- configuration


def resolve_config(args):
    """Scenario from ``--preset``/``--config`` with the command-line overrides applied."""
    if args.config:
        text = Path(args.config).read_text()
        cfg = parse_config(text, args.preset)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise ConfigError("give --preset or --config")
    changes = {}
    if args.shape:
        changes["shape"] = args.shape
    if args.protocol:
        changes["protocol"] = args.protocol
    if args.grid:
        changes["n_grid"] = args.grid
    if args.seed is not None:
        changes["seed"] = args.seed
    if changes:
        cfg = dataclasses.replace(cfg, **changes)
    validate_config(cfg)
    return cfg


def seeds_of(args, cfg):
    n = args.seeds or 1
    return [cfg.seed + i for i in range(n)]


def scenario_tag(args, cfg):
    if args.tag:
        return args.tag
    if args.config:
        return Path(args.config).stem
    return cfg.preset or "custom"


def write_manifest(out, tag, args, cfg, seeds, files):
    manifest = {
        "scenario": tag,
        "config_path": str(args.config) if args.config else None,
        "preset": cfg.preset or None,
        "seeds": seeds,
        "output_dir": str(out),
        "config_hash": config_hash(cfg),
        "files": sorted(files),
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{tag}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    (out / f"{tag}.ini").write_text(serialize_config(cfg))


def _workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn, items):
    workers = _workers()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


# ------------------------------------------------------------------ runs


def _run_one(cfg):
    from .protocols import run_protocol

    return run_protocol(cfg.protocol, cfg)


def cmd_run(args):
    cfg = resolve_config(args)
    out = Path(args.out)
    tag = scenario_tag(args, cfg)
    seeds = seeds_of(args, cfg)
    cfgs = [dataclasses.replace(cfg, seed=s) for s in seeds]
    trajs = _map(_run_one, cfgs)
    files = []
    for s, traj in zip(seeds, trajs):
        name = f"{tag}_seed{s}.csv"
        write_trajectory(out / name, traj)
        files.append(name)
    write_manifest(out, tag, args, cfg, seeds, files)
    return 0


def sweep_grid(cfg, shapes=None, states=None):
    """Shape-by-initial-state grid of a scenario (the fig1 preset layout by default)."""
    shapes = shapes or list(pulses.SHAPES)
    states = states or list(FIG1_STATES)
    return [dataclasses.replace(cfg, shape=sh, initial_state=st) for sh, st in itertools.product(shapes, states)]


def cmd_sweep(args):
    cfg = resolve_config(args)
    out = Path(args.out)
    tag = scenario_tag(args, cfg)
    seeds = seeds_of(args, cfg)
    shapes = args.shapes.split(",") if args.shapes else None
    states = args.states.split(",") if args.states else None
    grid = sweep_grid(cfg, shapes, states)
    cfgs = [dataclasses.replace(c, seed=s) for c in grid for s in seeds]
    for c in cfgs:
        validate_config(c)
    trajs = _map(_run_one, cfgs)
    files, long_rows, names = [], [], None
    for c, traj in zip(cfgs, trajs):
        name = f"{tag}_{c.shape}_{c.initial_state}_seed{c.seed}.csv"
        write_trajectory(out / name, traj)
        files.append(name)
        names = names or sorted(traj.metrics)
        for i, t in enumerate(traj.times):
            long_rows.append([c.shape, c.initial_state, c.seed, t, *(traj.metrics[n][i] for n in names)])
    write_csv(out / f"{tag}_sweep.csv", ["shape", "initial_state", "seed", "t", *names], long_rows)
    files.append(f"{tag}_sweep.csv")
    write_manifest(out, tag, args, cfg, seeds, files)
    return 0


def cmd_optimize(args):
    from .adaptive import CEMConfig, cem_optimize, make_environment, rollout

    cfg = resolve_config(args)
    if not cfg.task:
        raise ConfigError("optimize needs a scenario with an [rl] task")
    out = Path(args.out)
    tag = scenario_tag(args, cfg)
    seeds = seeds_of(args, cfg)
    files = []
    for s in seeds:
        run_cfg = dataclasses.replace(cfg, seed=s)
        env = make_environment(cfg.task, run_cfg)
        cem = CEMConfig.from_scenario(run_cfg)
        if args.iterations:
            cem = dataclasses.replace(cem, iterations=args.iterations)
        if args.population:
            cem = dataclasses.replace(cem, population=args.population)
        result = cem_optimize(env, cem, seed=s)
        episode = rollout(env, result.best_actions, seed=s)
        write_trajectory(out / f"{tag}_seed{s}.csv", episode.trajectory)
        act_cols = [f"a{i}" for i in range(env.action_dim)]
        write_csv(out / f"{tag}_seed{s}_episode.csv", ["step", *act_cols, "reward", env.metric_name],
                  episode.csv_rows())
        write_csv(out / f"{tag}_seed{s}_curve.csv", ["iteration", "best_return"],
                  [[i, r] for i, r in enumerate(result.curve)])
        files += [f"{tag}_seed{s}.csv", f"{tag}_seed{s}_episode.csv", f"{tag}_seed{s}_curve.csv"]
    write_manifest(out, tag, args, cfg, seeds, files)
    return 0


def cmd_walk(args):
    from .qwalk import WalkConfig, baseline_policy, run_walk

    if not args.preset and not args.config:
        args.preset = "fig12"
    cfg = resolve_config(args)
    out = Path(args.out)
    tag = scenario_tag(args, cfg)
    seeds = seeds_of(args, cfg)
    files = []
    for s in seeds:
        traj = run_walk(baseline_policy, WalkConfig.from_scenario(dataclasses.replace(cfg, seed=s)))
        m = traj.metrics
        rows = [[k, m["tsp"][k], m["ee"][k], m["mi"][k], m["trace"][k]] for k in range(len(traj.times))]
        name = f"{tag}_seed{s}.csv"
        write_csv(out / name, ["step", "tsp", "ee", "mi", "trace"], rows)
        files.append(name)
    write_manifest(out, tag, args, cfg, seeds, files)
    return 0


def cmd_list_presets(args):
    for name, values in PRESETS.items():
        print(f"{name}\t{values.get('protocol', '')}\t{values.get('task', '')}")
    return 0


# ------------------------------------------------------------------ parser


def build_parser():
    parser = argparse.ArgumentParser(prog="pulsebench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--preset", help="figure preset (fig1 .. fig12)")
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--seed", type=int, help="scenario seed")
        p.add_argument("--seeds", type=int, help="run N consecutive seeds starting at --seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--shape", choices=pulses.SHAPES)
        p.add_argument("--protocol")
        p.add_argument("--grid", type=int, help="number of output grid points")
        p.add_argument("--tag", help="file name prefix (defaults to the preset or config name)")

    p = sub.add_parser("run", help="run one scenario")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", help="shape-by-initial-state sweep")
    common(p)
    p.add_argument("--shapes", help="comma-separated shapes (default: all six)")
    p.add_argument("--states", help="comma-separated initial states (default: the six fig1 states)")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("optimize", help="cross-entropy optimization of the scenario task")
    common(p)
    p.add_argument("--iterations", type=int)
    p.add_argument("--population", type=int)
    p.set_defaults(func=cmd_optimize)
    p = sub.add_parser("walk", help="quantum walk under the baseline coin policy")
    common(p)
    p.set_defaults(func=cmd_walk)
    p = sub.add_parser("list-presets", help="list the figure presets")
    p.set_defaults(func=cmd_list_presets)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"pulsebench: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepUnderflow, InvariantViolation, StateValidationError) as exc:
        print(f"pulsebench: integrator error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR


if __name__ == "__main__":
    sys.exit(main())
