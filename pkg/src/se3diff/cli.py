"""Command line front end.

Subcommands cover dataset generation, sampling, the bound and MDS
comparison experiments, increment statistics, corrector sweeps, and
population metrics. Every run writes a manifest.json with the fully
resolved configuration next to its outputs; feeding that manifest back
via --config reproduces the run, and explicit flags override config
values.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys

import numpy as np

from . import kernels
from .diffusion import GaussianScoreOracle
from .errors import DivergenceError, Se3diffError
from .experiments import (STATS_HEADER, SWEEP_HEADER, SweepGrid,
                          corrector_sweep, stats_verification, sweep_schedule)
from .fileio import (default_output_dir, read_edge_list, read_manifest,
                     read_point_set, write_csv, write_edge_list,
                     write_manifest, write_point_set, write_trajectory)
from .geometry import random_regular_graph
from .mds import (BOUND_CHECK_HEADER, MDS_COMPARISON_HEADER, run_bound_check,
                  run_mds_comparison)
from .metrics import METRICS_HEADER, ad_score, cov_mat
from .samplers import (METHOD_LD, METHOD_ODE_FULL, METHOD_ODE_SIMPLE,
                       METHOD_SDE, SamplerConfig, init_from_prior, run_chain)
from .util import derive_seed, pmap, rng_from

_METHOD_ALIASES = {
    "sde": METHOD_SDE,
    "ode": METHOD_ODE_SIMPLE,
    "ode-full": METHOD_ODE_FULL,
    "ode_full": METHOD_ODE_FULL,
    "ld": METHOD_LD,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so main() owns the
    exit code."""

    def error(self, message):
        raise _UsageError(message)


def _floats(value) -> list[float]:
    if isinstance(value, str):
        parts = [p for p in value.replace(",", " ").split() if p]
        return [float(p) for p in parts]
    return [float(v) for v in value]


def _resolve(args, defaults: dict) -> dict:
    """Merge flag values over config-file values over hard defaults."""
    cfg = {}
    config_path = getattr(args, "config", None)
    if config_path:
        cfg = read_manifest(config_path)
        if not isinstance(cfg, dict):
            raise ValueError(f"{config_path}: config must be a JSON object")
    resolved = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in cfg:
            resolved[key] = cfg[key]
        else:
            resolved[key] = default
    return resolved


def _require(resolved: dict, *keys):
    for key in keys:
        if resolved[key] is None:
            raise _UsageError(f"missing required option --{key.replace('_', '-')}")


def _outdir(resolved: dict) -> str:
    out = default_output_dir(resolved.get("out"))
    os.makedirs(out, exist_ok=True)
    resolved["out"] = out
    return out


def _manifest(out: str, command: str, resolved: dict) -> None:
    payload = {"command": command, "backend": kernels.BACKEND}
    payload.update(resolved)
    write_manifest(os.path.join(out, "manifest.json"), payload)


# ---------------------------------------------------------------- commands

_GEN_DEFAULTS = {"out": None, "count": 8, "n": 20, "degree": 4, "seed": 0}


def _cmd_gen_dataset(args) -> int:
    resolved = _resolve(args, _GEN_DEFAULTS)
    out = _outdir(resolved)
    count, n = int(resolved["count"]), int(resolved["n"])
    degree, seed = int(resolved["degree"]), int(resolved["seed"])
    graph = random_regular_graph(n, degree, derive_seed(seed, 1))
    write_edge_list(os.path.join(out, "edges.txt"), graph)
    for i in range(count):
        pts = rng_from(seed, i, 0).standard_normal((n, 3))
        write_point_set(os.path.join(out, f"points_{i:03d}.txt"), pts)
    _manifest(out, "gen-dataset", resolved)
    print(f"wrote {count} point sets sharing a {degree}-regular graph to {out}")
    return 0


_SAMPLE_DEFAULTS = {
    "dataset": None, "out": None, "method": "ode", "steps": 100,
    "corrector": 8.0, "chains": 10, "threshold": 0.5, "a_t": 0.0,
    "noise_scale": 1.0, "ld_step_scale": 0.1, "seed": 0,
    "save_trajectories": False, "jobs": 1,
}


def _cmd_sample(args) -> int:
    resolved = _resolve(args, _SAMPLE_DEFAULTS)
    _require(resolved, "dataset")
    out = _outdir(resolved)
    method = _METHOD_ALIASES.get(str(resolved["method"]))
    if method is None:
        raise _UsageError(
            f"unknown method {resolved['method']!r}; choose from "
            f"{sorted(set(_METHOD_ALIASES))}")
    steps, chains = int(resolved["steps"]), int(resolved["chains"])
    seed = int(resolved["seed"])

    point_files = sorted(glob.glob(os.path.join(resolved["dataset"], "points_*.txt")))
    if not point_files:
        raise FileNotFoundError(
            f"no points_*.txt files in dataset dir {resolved['dataset']!r}")
    edge_file = os.path.join(resolved["dataset"], "edges.txt")
    if not os.path.exists(edge_file):
        raise FileNotFoundError(f"missing shared edge list {edge_file}")
    schedule = sweep_schedule(steps)

    tasks = []
    graph = None
    for item, pf in enumerate(point_files):
        pts = read_point_set(pf)
        if graph is None:
            graph = read_edge_list(edge_file, n=pts.shape[0])
        d0 = kernels.pairwise_distances(np.ascontiguousarray(pts))
        provider = GaussianScoreOracle(d0, schedule, graph=graph,
                                       a_t=float(resolved["a_t"]))
        for chain in range(chains):
            tasks.append((item, chain, pts.shape[0], provider, d0))

    def one(task):
        item, chain, n, provider, d0 = task
        config = SamplerConfig(
            method=method, steps=steps, corrector=float(resolved["corrector"]),
            ld_step_scale=float(resolved["ld_step_scale"]),
            seed=derive_seed(seed, item, chain),
            convergence_threshold=float(resolved["threshold"]),
            noise_scale=float(resolved["noise_scale"]))
        init = init_from_prior(n, schedule, derive_seed(seed, item, chain, 9))
        try:
            result = run_chain(init, config, schedule, provider, d0=d0)
        except DivergenceError:
            return (item, chain, False, None, None, True, None, None)
        final_err = float(result.distance_errors[0])
        return (item, chain, result.converged_at is not None,
                result.converged_at, final_err, False, result.final,
                result.trajectory)

    results = pmap(one, tasks, int(resolved["jobs"]))

    rows = []
    n_conv = 0
    for item, chain, converged, conv_at, final_err, diverged, final, traj in results:
        rows.append((item, chain, converged, conv_at, final_err, diverged))
        n_conv += bool(converged)
        if final is not None:
            write_point_set(os.path.join(out, f"final_{item:03d}_{chain:03d}.txt"),
                            final)
        if resolved["save_trajectories"] and traj is not None:
            write_trajectory(os.path.join(out, f"traj_{item:03d}_{chain:03d}.txt"),
                             traj)
    write_csv(os.path.join(out, "samples.csv"),
              ["item", "chain", "converged", "converged_at", "final_error",
               "diverged"], rows)
    _manifest(out, "sample", resolved)
    print(f"{n_conv}/{len(rows)} chains converged "
          f"(threshold {resolved['threshold']}); results in {out}")
    return 0


_BOUND_DEFAULTS = {"out": None, "trials": 1000, "n_min": 4, "n_max": 20,
                   "delta_min": 0.05, "delta_max": 0.5, "seed": 0, "jobs": 1}


def _cmd_verify_bound(args) -> int:
    resolved = _resolve(args, _BOUND_DEFAULTS)
    out = _outdir(resolved)
    records = run_bound_check(
        range(int(resolved["n_min"]), int(resolved["n_max"]) + 1),
        (float(resolved["delta_min"]), float(resolved["delta_max"])),
        int(resolved["trials"]), int(resolved["seed"]), int(resolved["jobs"]))
    rows = [(r.n, r.delta, r.f_approx, r.bound, r.seed) for r in records]
    write_csv(os.path.join(out, "bound_check.csv"), BOUND_CHECK_HEADER, rows)
    _manifest(out, "verify-bound", resolved)
    gaps = [r.bound - r.f_approx for r in records]
    violations = sum(g < 0.0 for g in gaps)
    print(f"{len(records)} trials, {violations} bound violations, "
          f"min slack {min(gaps):.3e}")
    return 0


_MDS_DEFAULTS = {"out": None, "trials": 500, "n_min": 10, "n_max": 19,
                 "delta_min": 1.5, "delta_max": 3.0, "seed": 0, "jobs": 1}


def _cmd_mds_compare(args) -> int:
    resolved = _resolve(args, _MDS_DEFAULTS)
    out = _outdir(resolved)
    records = run_mds_comparison(
        range(int(resolved["n_min"]), int(resolved["n_max"]) + 1),
        (float(resolved["delta_min"]), float(resolved["delta_max"])),
        int(resolved["trials"]), int(resolved["seed"]), int(resolved["jobs"]))
    write_csv(os.path.join(out, "mds_comparison.csv"), MDS_COMPARISON_HEADER,
              [r.row() for r in records])
    _manifest(out, "mds-compare", resolved)
    n = len(records)
    gd_ok = sum(r.f_gd <= r.f_approx + 1e-9 for r in records)
    wins = sum(r.f_approx < r.f_cmds for r in records)
    print(f"{n} trials: descent improved or matched the one-shot update in "
          f"{gd_ok}/{n}, one-shot beat classic MDS in {wins}/{n}")
    return 0


_STATS_DEFAULTS = {"out": None, "tau": "0.01,0.001,0.0001", "d": "1,2,5",
                   "g": 1.0, "samples": 100000, "seed": 0, "jobs": 1}


def _cmd_stats(args) -> int:
    resolved = _resolve(args, _STATS_DEFAULTS)
    out = _outdir(resolved)
    rows = stats_verification(_floats(resolved["tau"]), float(resolved["g"]),
                              _floats(resolved["d"]), int(resolved["samples"]),
                              int(resolved["seed"]), int(resolved["jobs"]))
    write_csv(os.path.join(out, "stats.csv"), STATS_HEADER,
              [r.row() for r in rows])
    _manifest(out, "stats", resolved)
    worst = max(abs(r.z_laguerre) for r in rows)
    print(f"{len(rows)} cells; worst |z| against the closed-form mean: {worst:.2f}")
    return 0


_SWEEP_DEFAULTS = {"out": None, "deltas": "0.0,0.3,1.0", "correctors": "1,2,4,8,16,32",
                   "chains": 50, "steps": 100, "n": 20, "degree": 4,
                   "threshold": 0.5, "quantile": 0.9, "seed": 0, "jobs": 1}


def _cmd_corrector_sweep(args) -> int:
    resolved = _resolve(args, _SWEEP_DEFAULTS)
    out = _outdir(resolved)
    grid = SweepGrid(deltas=_floats(resolved["deltas"]),
                     correctors=_floats(resolved["correctors"]),
                     n_chains=int(resolved["chains"]),
                     steps=int(resolved["steps"]),
                     threshold=float(resolved["threshold"]),
                     quantile=float(resolved["quantile"]),
                     seed=int(resolved["seed"]))
    cells = corrector_sweep(grid, n=int(resolved["n"]),
                            degree=int(resolved["degree"]),
                            jobs=int(resolved["jobs"]))
    write_csv(os.path.join(out, "sweep.csv"), SWEEP_HEADER,
              [c.row() for c in cells])
    _manifest(out, "corrector-sweep", resolved)
    best = max(cells, key=lambda c: c.converged_fraction)
    print(f"{len(cells)} cells; best convergence {best.converged_fraction:.2f} "
          f"at delta={best.delta:g}, k={best.k:g}")
    return 0


_METRICS_DEFAULTS = {"out": None, "generated": None, "reference": None,
                     "threshold": 0.5, "pattern": "*.txt"}


def _read_population(directory: str, pattern: str) -> list[np.ndarray]:
    paths = sorted(glob.glob(os.path.join(directory, pattern)))
    paths = [p for p in paths
             if not os.path.basename(p).startswith(("edges", "traj_"))]
    if not paths:
        raise FileNotFoundError(f"no point sets matching {pattern!r} in {directory!r}")
    return [read_point_set(p) for p in paths]


def _cmd_metrics(args) -> int:
    resolved = _resolve(args, _METRICS_DEFAULTS)
    _require(resolved, "generated", "reference")
    out = _outdir(resolved)
    gen = _read_population(resolved["generated"], resolved["pattern"])
    ref = _read_population(resolved["reference"], resolved["pattern"])
    report = cov_mat(gen, ref, float(resolved["threshold"]))
    ad = ad_score(gen, ref)
    write_csv(os.path.join(out, "metrics.csv"), METRICS_HEADER, [report.row()])
    with open(os.path.join(out, "ad.txt"), "w") as fh:
        fh.write("%.17g\n" % ad)
    _manifest(out, "metrics", resolved)
    print(f"cov_r={report.cov_r:.3f} mat_r={report.mat_r:.4f} "
          f"cov_p={report.cov_p:.3f} mat_p={report.mat_p:.4f} ad={ad:.6g}")
    return 0


# ---------------------------------------------------------------- wiring

def build_parser() -> _Parser:
    parser = _Parser(prog="se3diff",
                     description="Distance-based point-set diffusion toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, fn, helptext):
        p = sub.add_parser(name, help=helptext)
        p.set_defaults(fn=fn)
        p.add_argument("--config", help="JSON file with option defaults "
                       "(a previous run's manifest.json works)")
        p.add_argument("--out", help="output directory (default: $SE3DIFF_OUT or .)")
        return p

    p = add("gen-dataset", _cmd_gen_dataset,
            "generate random point sets with regular graphs")
    p.add_argument("--count", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--degree", type=int)
    p.add_argument("--seed", type=int)

    p = add("sample", _cmd_sample, "run reverse chains against a dataset")
    p.add_argument("--dataset")
    p.add_argument("--method", choices=sorted(set(_METHOD_ALIASES)))
    p.add_argument("--steps", type=int)
    p.add_argument("--corrector", type=float)
    p.add_argument("--chains", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--a-t", dest="a_t", type=float)
    p.add_argument("--noise-scale", dest="noise_scale", type=float)
    p.add_argument("--ld-step-scale", dest="ld_step_scale", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--save-trajectories", dest="save_trajectories",
                   action="store_const", const=True)
    p.add_argument("--jobs", type=int)

    p = add("verify-bound", _cmd_verify_bound,
            "check the one-shot update against its stress bound")
    p.add_argument("--trials", type=int)
    p.add_argument("--n-min", dest="n_min", type=int)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--delta-min", dest="delta_min", type=float)
    p.add_argument("--delta-max", dest="delta_max", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)

    p = add("mds-compare", _cmd_mds_compare,
            "compare the one-shot update with descent and classic MDS")
    p.add_argument("--trials", type=int)
    p.add_argument("--n-min", dest="n_min", type=int)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--delta-min", dest="delta_min", type=float)
    p.add_argument("--delta-max", dest="delta_max", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)

    p = add("stats", _cmd_stats, "Monte Carlo increment statistics")
    p.add_argument("--tau")
    p.add_argument("--d")
    p.add_argument("--g", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)

    p = add("corrector-sweep", _cmd_corrector_sweep,
            "convergence across corrector strength and model noise")
    p.add_argument("--deltas")
    p.add_argument("--correctors")
    p.add_argument("--chains", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--degree", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--quantile", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)

    p = add("metrics", _cmd_metrics,
            "coverage / matching / displacement between two populations")
    p.add_argument("--generated")
    p.add_argument("--reference")
    p.add_argument("--threshold", type=float)
    p.add_argument("--pattern")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "fn", None) is None:
            raise _UsageError("no command given")
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help lands here
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (Se3diffError, OSError, ValueError, KeyError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
