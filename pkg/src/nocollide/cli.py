"""Command-line entry point: run, sweep, slice, enumerate, verify.

Exit codes: 0 ok, 1 verification failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import dop as D
from .cells import Thresholds, sample_slice, slice_csv
from .config import Config, build_config, read_config_file
from .errors import ConfigError, InvalidParameter, TooLarge
from .game import RunResult, diagnostics, loglog_slope, run_game, slope_window
from .players import draw_thresholds
from .verify import SUITES, run_suite

OUT_ENV = "NOCOLLIDE_OUT"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _clean(obj):
    # JSON has no NaN; strict output keeps files portable
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def run_csv(run: RunResult, log_nodes: bool = False) -> str:
    m = run.instance.m
    head = ["t", "regret_cum", "collisions_cum"]
    head += [f"depth_p{X}" for X in range(1, m + 1)] + [f"arm_p{X}" for X in range(1, m + 1)]
    if log_nodes:
        head += [f"node_p{X}" for X in range(1, m + 1)]
    lines = [",".join(head)]
    for t in range(1, run.T + 1):
        row = [str(t), f"{run.cum_regret[t - 1]:.6f}", str(int(run.cum_collisions[t - 1]))]
        row += [str(int(v)) for v in run.depths[t - 1]] + [str(int(v)) for v in run.arms[t - 1]]
        if log_nodes:
            nodes = (run.node(t, X) for X in range(1, m + 1))
            row += ['"' + D.format_dop(n) + '"' if n is not None else "" for n in nodes]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def execute_runs(cfg: Config, out: Path, T: int | None = None, shared_thresholds: bool = True) -> dict:
    """One CSV and one summary JSON per seed, then the aggregate JSON."""
    T = cfg.T if T is None else T
    inst, sched = cfg.instance(T), cfg.schedule(T)
    curves, summaries = [], []
    for rep in range(cfg.seeds):
        run = run_game(inst, cfg.mode, sched, cfg.master_seed, replicate=rep,
                       shared_thresholds=shared_thresholds)
        summary = run.summary()
        summary["diagnostics"] = diagnostics(run)
        summary["config"]["p_spec"] = cfg.p_spec
        write_atomic(out / f"run_seed{rep}.csv", run_csv(run, cfg.log_nodes))
        write_atomic(out / f"run_seed{rep}.json", to_json(summary))
        curves.append(run.cum_regret)
        summaries.append(summary)
    mean_curve = np.mean(curves, axis=0)
    lo, hi = slope_window(T)
    totals = [s["total_regret"] for s in summaries]
    agg = {
        "config": {**cfg.echo(), "T": T},
        "seeds": cfg.seeds,
        "mean_total_regret": float(np.mean(totals)),
        "max_total_regret": float(np.max(totals)),
        "total_collisions": sum(s["total_collisions"] for s in summaries),
        "runs_with_collisions": sum(s["total_collisions"] > 0 for s in summaries),
        "adjacency_violations": sum(s["diagnostics"]["adjacency_violations"] for s in summaries),
        "mean_curve_slope": {"t_lo": lo, "t_hi": hi, "slope": loglog_slope(mean_curve, lo, hi)},
    }
    write_atomic(out / "aggregate.json", to_json(agg))
    return agg


# --- argument handling ---------------------------------------------------------


def _add_run_flags(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--config", help="key = value file; flags override it")
    ap.add_argument("--k", help="number of arms K")
    ap.add_argument("--m", help="number of players m")
    ap.add_argument("--t", help="horizon T (sweep: comma-separated list)")
    ap.add_argument("--p", help="means: '0.9,0.5,0.1', 'uniform-spread' or 'two-group gap=0.2'")
    ap.add_argument("--mode", help="full | bandit")
    ap.add_argument("--eps-scale", dest="eps_scale", help="multiplier on the epsilon schedule")
    ap.add_argument("--t0-scale", dest="t0_scale", help="multiplier on the exploration length")
    ap.add_argument("--seeds", help="number of replicate runs")
    ap.add_argument("--master-seed", dest="master_seed", help="master seed")
    ap.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./nocollide_out)")
    ap.add_argument("--log-nodes", dest="log_nodes", action="store_const", const="true",
                    help="add node_pX columns to the run CSV")


def _merged(args: argparse.Namespace) -> dict:
    raw = read_config_file(args.config) if args.config else {}
    for key in ("k", "m", "t", "p", "mode", "eps_scale", "t0_scale", "seeds",
                "master_seed", "out", "log_nodes"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    return raw


def _out_default() -> str:
    return os.environ.get(OUT_ENV, "nocollide_out")


def cmd_run(args) -> int:
    cfg = build_config(_merged(args), _out_default())
    agg = execute_runs(cfg, Path(cfg.out))
    print(f"wrote {cfg.seeds} run(s) to {cfg.out}: mean regret {agg['mean_total_regret']:.6f}, "
          f"collisions {agg['total_collisions']}")
    return 0


def cmd_sweep(args) -> int:
    raw = _merged(args)
    if raw.get("t") in (None, ""):
        raise ConfigError("missing required key 't'")
    try:
        horizons = [int(float(v)) for v in str(raw["t"]).split(",")]
    except ValueError:
        raise ConfigError(f"cannot read t={raw['t']!r}") from None
    raw["t"] = str(max(horizons))
    cfg = build_config(raw, _out_default())
    out = Path(cfg.out)
    table = {}
    for T in horizons:
        if T < 1:
            raise ConfigError("every T must be >= 1")
        table[str(T)] = execute_runs(cfg, out / f"T{T}", T)
    write_atomic(out / "sweep.json", to_json(table))
    print(f"swept T in {horizons}; results under {out}")
    return 0


def cmd_slice(args) -> int:
    K = int(args.k)
    if K != 3:
        raise ConfigError(f"slice needs k=3, got {K}")
    if args.thresholds:
        c = Thresholds(tuple(float(v) for v in args.thresholds.split(",")))
    else:
        c = draw_thresholds(int(args.master_seed), 3)
    points = sample_slice(int(args.m), c, float(args.eps), float(args.level), int(args.grid))
    text = slice_csv(points)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        path = Path(args.out or _out_default()) / "slice.csv"
        write_atomic(path, text)
        print(f"wrote {len(points)} points to {path}")
    return 0


def cmd_enumerate(args) -> int:
    nodes = leaves = 0
    for node in D.enumerate_tree(args.K, args.M):
        nodes += 1
        leaves += D.is_leaf(node, args.M)
        if args.list:
            print(D.format_dop(node))
    print(f"nodes={nodes} leaves={leaves}")
    return 0


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        raise ConfigError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}")
    kwargs = {}
    if args.k or args.m:
        if not (args.k and args.m):
            raise ConfigError("give both --k and --m")
        if args.suite not in ("feas", "coloring"):
            raise ConfigError("--k/--m apply to the feas and coloring suites")
        kwargs["pairs"] = ((int(args.k), int(args.m)),)
    if args.trials is not None:
        if args.suite in ("feas", "coloring"):
            raise ConfigError("--trials applies to the randomized suites")
        kwargs["trials"] = args.trials
    rep = run_suite(args.suite, **kwargs)
    status = "PASS" if rep.ok else "FAIL"
    print(f"{status} {rep.name}: checked={rep.checked} violations={rep.violations}")
    for ex in rep.examples:
        print("  " + ex)
    return 0 if rep.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nocollide", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one configuration over several seeds")
    _add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the configuration for each listed T")
    _add_run_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_slice = sub.add_parser("slice", help="label a K=3 slice sum(x)=level with tree nodes")
    p_slice.add_argument("--k", default="3")
    p_slice.add_argument("--m", default="2")
    p_slice.add_argument("--eps", default="0.01")
    p_slice.add_argument("--level", default="1.5")
    p_slice.add_argument("--grid", default="200", help="points per side; grid**2 rows")
    p_slice.add_argument("--thresholds", help="C(0),C(1),C(2); default drawn from --master-seed")
    p_slice.add_argument("--master-seed", dest="master_seed", default="0")
    p_slice.add_argument("--out", help="output directory, or '-' for stdout")
    p_slice.set_defaults(func=cmd_slice)

    p_enum = sub.add_parser("enumerate", help="count (and optionally list) tree nodes")
    p_enum.add_argument("K", type=int)
    p_enum.add_argument("M", type=int)
    p_enum.add_argument("--list", action="store_true", help="print every node")
    p_enum.set_defaults(func=cmd_enumerate)

    p_ver = sub.add_parser("verify", help="run an oracle suite; exit 1 on any violation")
    p_ver.add_argument("suite", help=", ".join(sorted(SUITES)))
    p_ver.add_argument("--k")
    p_ver.add_argument("--m")
    p_ver.add_argument("--trials", type=int)
    p_ver.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidParameter, TooLarge, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
