"""Command-line entry point: rates, build-hard, solve, verify, sandwich, asymptotics."""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .error_bounds import ErrorBound
from .harness import (DEFAULT_SEED, asymptotics_report, default_sandwich_config,
                      sandwich_experiment, verify_membership, write_outputs)
from .hard_instance import HardInstance, HardOracle
from .instances import RadialInstance
from .rates import delta_schedule, schedule_csv
from .solvers import ConstantPolicy, decay_gd, polyak_gd, run_span_method

DEFAULT_BOUND = {"kind": "holder", "c": 1 / math.sqrt(2), "theta": 1.0, "D": 1.0}


def _load_config(args) -> dict:
    cfg = {}
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
    if getattr(args, "bound", None):
        cfg["bound"] = json.loads(args.bound)
    for key in ("L", "D", "N"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.tol is not None:
        cfg.setdefault("tolerances", {})["sandwich"] = args.tol
    return cfg


def _bound(cfg) -> ErrorBound:
    d = dict(cfg.get("bound", DEFAULT_BOUND))
    if d.get("kind") == "holder":
        d.setdefault("D", cfg.get("D", 1.0))
    return ErrorBound.from_dict(d)


def _emit(out_dir, name, text):
    if out_dir is None:
        sys.stdout.write(text)
        return
    p = Path(out_dir)
    p.mkdir(parents=True, exist_ok=True)
    (p / name).write_text(text)
    print(p / name)


def cmd_rates(args, cfg):
    b = _bound(cfg)
    sched = delta_schedule(b, cfg.get("L", 1.0), cfg.get("D", b.D), cfg.get("N", 20))
    _emit(args.out_dir, "schedule.csv", schedule_csv(sched))
    return 0


def cmd_build_hard(args, cfg):
    b = _bound(cfg)
    inst = HardInstance(b, cfg.get("L", 1.0), cfg.get("D", b.D), cfg.get("N", 20))
    _emit(args.out_dir, "instance.json", json.dumps(inst.descriptor(), indent=1) + "\n")
    _emit(args.out_dir, "x_star.csv", inst.x_star_csv())
    return 0


def cmd_solve(args, cfg):
    b = _bound(cfg)
    L, D, N = cfg.get("L", 1.0), cfg.get("D", b.D), cfg.get("N", 20)
    method = args.method or cfg.get("method", "polyak")
    sched = delta_schedule(b, L, D, N)
    if (args.instance or cfg.get("instance", "hard")) == "hard":
        inst = HardInstance(b, L, D, N)
        oracle = HardOracle(inst)
        x0 = np.zeros(inst.dimension)
        N = inst.N
        sched = inst.schedule
    else:
        dim = int(cfg.get("dimension", 2))
        oracle = RadialInstance(np.zeros(dim), b, L=L, D=D)
        x0 = np.zeros(dim)
        x0[0] = D
    if method == "polyak":
        tr = polyak_gd(oracle, oracle.meta.f_star, x0, N, schedule=sched)
    elif method == "decay":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore" if args.quiet else "default")
            tr = decay_gd(oracle, sched, L, x0, N)
    elif method.startswith("const:"):
        tr = run_span_method(ConstantPolicy(float(method[6:])), oracle, x0, N, schedule=sched)
    else:
        raise SystemExit(f"unknown method {method!r}")
    _emit(args.out_dir, f"trace_{method.replace(':', '_')}.csv", tr.to_csv())
    if args.out_dir is not None:
        _emit(args.out_dir, f"trace_{method.replace(':', '_')}.json", tr.to_json())
    return 0


def cmd_verify(args, cfg):
    b = _bound(cfg)
    L, D = cfg.get("L", 1.0), cfg.get("D", b.D)
    if cfg.get("instance", "hard") == "hard":
        oracle = HardOracle(HardInstance(b, L, D, cfg.get("N", 20)))
    else:
        oracle = RadialInstance(np.zeros(int(cfg.get("dimension", 2))), b, L=L, D=D)
    report = verify_membership(oracle, b, L, D, samples=int(cfg.get("samples", 1000)),
                               seed=int(cfg.get("seed", DEFAULT_SEED)),
                               rng=cfg.get("rng", "PCG64"))
    print(report.summary(), file=sys.stderr)
    _emit(args.out_dir, "membership.json", report.to_json() + "\n")
    return 0 if report.passed else 1


def cmd_sandwich(args, cfg):
    full = default_sandwich_config()
    full.update(cfg)
    full.pop("bound", None)
    report, csvs = sandwich_experiment(full)
    print(report.summary(), file=sys.stderr)
    if args.out_dir is not None:
        write_outputs(args.out_dir, report, csvs)
    else:
        sys.stdout.write(report.to_json() + "\n")
    return 0 if report.passed else 1


def cmd_asymptotics(args, cfg):
    kw = {k: cfg[k] for k in ("c", "theta", "L", "D") if k in cfg}
    report = asymptotics_report(**kw)
    print(report.summary(), file=sys.stderr)
    _emit(args.out_dir, "asymptotics.json", report.to_json() + "\n")
    return 0 if report.passed else 1


COMMANDS = {
    "rates": cmd_rates,
    "build-hard": cmd_build_hard,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "sandwich": cmd_sandwich,
    "asymptotics": cmd_asymptotics,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minimax-subgrad", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--bound", help='inline bound JSON, e.g. \'{"kind":"holder","c":0.5,"theta":0.5,"D":1}\'')
        p.add_argument("--L", type=float)
        p.add_argument("--D", type=float)
        p.add_argument("--N", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float, help="override the sandwich tolerance")
        p.add_argument("--out-dir", dest="out_dir")
        if name == "solve":
            p.add_argument("--method", help="polyak, decay or const:<eta>")
            p.add_argument("--instance", choices=["hard", "radial"])
            p.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _load_config(args)
    return COMMANDS[args.command](args, cfg)


if __name__ == "__main__":
    raise SystemExit(main())
