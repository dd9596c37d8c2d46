"""Validation suites and sandwich experiments producing machine-readable reports."""

from __future__ import annotations

import copy
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .error_bounds import ErrorBound
from .exceptions import ConfigError
from .hard_instance import HardInstance, HardOracle
from .instances import Oracle, RadialInstance
from .rates import delta_asymptote, delta_schedule, power_sequence
from .solvers import (ConstantPolicy, DecayPolicy, PolyakPolicy, ZeroPolicy, decay_gd,
                      polyak_gd, run_span_method)

DEFAULT_SEED = 42
DEFAULT_RNG = "PCG64"
RNG_ALGORITHMS = ("PCG64", "PCG64DXSM", "Philox", "SFC64", "MT19937")

DEFAULT_TOLERANCES = {
    "sandwich": 1e-6,
    "inner_tol": 1e-10,
    "lipschitz": 1e-9,
    "error_bound": 1e-8,
    "subgradient": 1e-6,
}


def make_rng(seed: int = DEFAULT_SEED, algorithm: str = DEFAULT_RNG) -> np.random.Generator:
    if algorithm not in RNG_ALGORITHMS:
        raise ConfigError(f"unknown generator {algorithm!r}; choose from {RNG_ALGORITHMS}")
    return np.random.Generator(getattr(np.random, algorithm)(seed))


@dataclass
class Check:
    name: str
    status: str
    measured: float | None = None
    tolerance: float | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _check(name, ok, measured=None, tolerance=None, detail=""):
    return Check(name, "pass" if ok else "fail",
                 None if measured is None else float(measured),
                 None if tolerance is None else float(tolerance), detail)


@dataclass
class Report:
    experiment_id: str
    config: dict
    checks: list[Check] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "config": self.config,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
            "extras": self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def summary(self) -> str:
        lines = [f"[{c.status.upper():>12}] {c.name}  measured={c.measured}  tol={c.tolerance}"
                 for c in self.checks]
        lines.append(f"{self.experiment_id}: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


# -- membership ----------------------------------------------------------------


def _ball(rng, center, radius, m):
    d = center.size
    u = rng.standard_normal((m, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    rad = radius * rng.uniform(size=(m, 1)) ** (1.0 / d)
    return center + rad * u


def verify_membership(oracle: Oracle, b: ErrorBound, L: float, D: float, samples: int = 1000,
                      seed: int = DEFAULT_SEED, rng: str = DEFAULT_RNG,
                      subgradient_samples: int | None = None, radius_factor: float = 2.0,
                      tolerances: dict | None = None) -> Report:
    """Sampled check that the oracle's function belongs to the class (h, L, D).

    Error-bound points are drawn from the D-ball around the minimizers;
    Lipschitz and subgradient pairs from the ball of radius ``radius_factor*D``.
    """
    meta = oracle.meta
    if not meta.minimizers or meta.f_star is None:
        raise ConfigError("verify_membership needs minimizer and f_star metadata")
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    gen = make_rng(seed, rng)
    mins = np.array(meta.minimizers, dtype=float)
    m_sub = min(samples, 1000) if subgradient_samples is None else subgradient_samples

    def around(radius, m):
        # cycle through the minimizers so every one gets a share of the samples
        return mins[np.arange(m) % len(mins)] + _ball(gen, np.zeros(mins.shape[1]), radius, m)

    X = around(D, samples)
    P = around(radius_factor * D, samples)
    Q = around(radius_factor * D, samples)
    S = around(radius_factor * D, m_sub)
    T = around(radius_factor * D, m_sub)

    def dist(Y):
        return np.min(np.linalg.norm(Y[:, None, :] - mins[None, :, :], axis=2), axis=1)

    fx = oracle.values(X)
    eb_slack = float(np.max(b(dist(X)) - (fx - meta.f_star)))

    fp, fq = oracle.values(P), oracle.values(Q)
    gaps = np.linalg.norm(P - Q, axis=1)
    lip_excess = float(np.max((np.abs(fp - fq) - L * gaps) / (L * np.maximum(gaps, 1e-300))))

    fs = oracle.values(S)
    ft = oracle.values(T)
    gs = oracle.subgradients(S)
    worst_norm = float(np.max(np.linalg.norm(gs, axis=1))) if m_sub else 0.0
    worst_sub = float(np.max(fs + np.einsum("ij,ij->i", gs, T - S) - ft)) if m_sub else -math.inf

    checks = [
        _check("error_bound", eb_slack <= tol["error_bound"], eb_slack, tol["error_bound"]),
        _check("lipschitz", lip_excess <= tol["lipschitz"], lip_excess, tol["lipschitz"]),
        _check("subgradient_norm", worst_norm <= L * (1 + tol["lipschitz"]), worst_norm, L),
        _check("convexity", worst_sub <= tol["subgradient"] * L * D, worst_sub,
               tol["subgradient"] * L * D),
    ]
    config = {"oracle": oracle.name, "bound": b.to_dict(), "L": L, "D": D, "samples": samples,
              "subgradient_samples": m_sub, "seed": seed, "rng": rng}
    return Report("membership", config, checks)


# -- sandwich ------------------------------------------------------------------


def default_sandwich_config() -> dict:
    return {
        "experiment_id": "sandwich",
        "seed": DEFAULT_SEED,
        "rng": DEFAULT_RNG,
        "N": 20,
        "L": 1.0,
        "D": 1.0,
        "cells": [
            {"bound": {"kind": "holder", "c": 0.3, "theta": 1.0, "D": 1.0}},
            {"bound": {"kind": "holder", "c": 1 / math.sqrt(2), "theta": 1.0, "D": 1.0}},
            {"bound": {"kind": "holder", "c": 0.5, "theta": 0.5, "D": 1.0}},
            {"bound": {"kind": "holder", "c": 0.4, "theta": 2 / 3, "D": 1.0}},
        ],
        "methods": ["polyak", "decay", "const:0.01", "const:0.1", "const:1"],
        "tolerances": dict(DEFAULT_TOLERANCES),
        "grid_points": 4096,
        "workers": 1,
    }


def _cells(cfg) -> list[dict]:
    cells = [dict(c) for c in cfg.get("cells", [])]
    grid = cfg.get("grid")
    if grid:
        if grid.get("family", "holder") != "holder":
            raise ConfigError("only the holder family can be gridded")
        for theta in grid["theta"]:
            for c in grid["c"]:
                cells.append({"bound": {"kind": "holder", "c": c, "theta": theta,
                                        "D": cfg.get("D", 1.0)}})
    if not cells:
        raise ConfigError("config names no cells")
    return cells


def cell_id(b: ErrorBound) -> str:
    if b.kind == "holder":
        return f"holder_c{b.c:.6g}_theta{b.theta:.6g}"
    return f"custom_{len(b.knots)}knots_D{b.D:.6g}"


def _run_method(method: str, inst: HardInstance):
    oracle = HardOracle(inst)
    x0 = np.zeros(inst.dimension)
    N = inst.N
    if method == "polyak":
        return polyak_gd(oracle, 0.0, x0, N, schedule=inst.schedule)
    if method == "decay":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return decay_gd(oracle, inst.schedule, inst.L, x0, N)
    if method == "zero":
        return run_span_method(ZeroPolicy(), oracle, x0, N, schedule=inst.schedule)
    if method.startswith("const:"):
        eta = float(method.split(":", 1)[1])
        return run_span_method(ConstantPolicy(eta), oracle, x0, N, schedule=inst.schedule)
    if method == "polyak-policy":
        return run_span_method(PolyakPolicy(), oracle, x0, N, f_star=0.0, schedule=inst.schedule)
    if method == "decay-policy":
        return run_span_method(DecayPolicy(inst.schedule, inst.L), oracle, x0, N,
                               schedule=inst.schedule)
    raise ConfigError(f"unknown method {method!r}")


def zero_chain_violations(trace) -> int:
    """Count iterates with supp(g_n) outside [n+1] or supp(x_n) outside [n] (exact zeros)."""
    bad = 0
    for r in trace.records:
        if np.any(r.g[r.n + 1:] != 0) or np.any(r.x[r.n:] != 0):
            bad += 1
    return bad


def _sandwich_cell(cell: dict, cfg: dict, tol: dict):
    L, D = float(cfg.get("L", 1.0)), float(cfg.get("D", 1.0))
    b = ErrorBound.from_dict(cell["bound"])
    cid = cell.get("id") or cell_id(b)
    checks: list[Check] = []
    csvs: dict[str, str] = {}
    if not b.admissible(L):
        checks.append(Check(f"{cid}/admissible", "skip", b.lipschitz, L,
                            "bound is not L-Lipschitz on [0, D]"))
        return cid, checks, csvs, {}

    inst = HardInstance(b, L, D, int(cfg.get("N", 20)), inner_tol=tol["inner_tol"],
                        grid=int(cfg.get("grid_points", 4096)))
    st = inst.self_test()
    status = "pass" if st.ok else "inconclusive"
    checks.append(Check(f"{cid}/self_test", status, max(st.psi_error, st.phi_error), st.tol))
    sched = delta_schedule(b, L, D, inst.N)
    hd = np.asarray(b(sched.deltas))
    tol_s = tol["sandwich"]

    for method in cfg.get("methods", ["polyak"]):
        tr = _run_method(method, inst)
        n = len(tr)
        dl = sched.deltas[:n]
        ratio = tr.dists / dl
        fvals = inst.values(tr.iterates)
        name = f"{cid}/{method}"
        xref = all(r.delta == float(sched.deltas[r.n]) for r in tr.records)
        checks.append(_check(f"{name}/schedule_xref", xref))
        checks.append(_check(f"{name}/distance_floor", bool(np.all(ratio >= 1 - tol_s)),
                             float(np.max(1 - ratio)), tol_s))
        checks.append(_check(f"{name}/value_floor", bool(np.all(fvals >= hd[:n] * (1 - tol_s))),
                             float(np.max(1 - fvals / hd[:n])), tol_s))
        zc = zero_chain_violations(tr)
        checks.append(_check(f"{name}/zero_chain", zc == 0, zc, 0))
        if method.startswith("polyak"):
            err = float(np.max(np.abs(ratio - 1)))
            ok = err <= tol_s and n == inst.N + 1
            checks.append(_check(f"{name}/tracking", ok, err, tol_s))
        if not st.ok:
            for c in checks:
                if c.name.startswith(name) and c.status == "fail":
                    c.status = "inconclusive"
        csvs[f"{cid}__{method.replace(':', '_')}.csv"] = tr.to_csv()
    extra = {"N": inst.N, "deltas": [float(d) for d in sched.deltas]}
    return cid, checks, csvs, extra


def sandwich_experiment(config: dict | None = None, out_dir=None):
    """Build f_hard per cell, run the configured methods against the resisting oracle.

    Returns (report, csvs) where csvs maps file names to trace CSV text. When
    ``out_dir`` is given the CSVs and ``report.json`` are written there.
    """
    cfg = default_sandwich_config()
    cfg.update(copy.deepcopy(config or {}))
    tol = {**DEFAULT_TOLERANCES, **cfg.get("tolerances", {})}
    cfg["tolerances"] = tol
    cells = _cells(cfg)

    workers = int(cfg.get("workers", 1))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda c: _sandwich_cell(c, cfg, tol), cells))
    else:
        results = [_sandwich_cell(c, cfg, tol) for c in cells]

    report = Report(cfg.get("experiment_id", "sandwich"), cfg)
    csvs: dict[str, str] = {}
    for cid, checks, cell_csvs, extra in results:
        report.checks.extend(checks)
        csvs.update(cell_csvs)
        report.extras[cid] = extra
    if out_dir is not None:
        write_outputs(out_dir, report, csvs)
    return report, csvs


def write_outputs(out_dir, report: Report, csvs: dict[str, str]):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in csvs.items():
        (out / name).write_text(text)
    (out / "report.json").write_text(report.to_json())


# -- upper bounds on benign instances --------------------------------------------


def upper_bound_experiment(cells: list[dict], n_instances: int = 50, N: int = 100,
                           L: float = 1.0, D: float = 1.0, seed: int = DEFAULT_SEED,
                           rng: str = DEFAULT_RNG, tol: float = 1e-9,
                           dims=(1, 2, 5, 10)) -> Report:
    """PolyakGD (and DecayGD where h is L/sqrt(2)-Lipschitz) on random radial instances.

    Each instance draws a dimension from ``dims``, a center, and a start point
    at distance uniform in (0, D]; the check is dist(x_n) <= Delta_n + tol.
    """
    gen = make_rng(seed, rng)
    report = Report("upper_bound", {"cells": cells, "n_instances": n_instances, "N": N,
                                    "L": L, "D": D, "seed": seed, "rng": rng, "tol": tol})
    for cell in cells:
        b = ErrorBound.from_dict(cell["bound"])
        cid = cell_id(b)
        sched = delta_schedule(b, L, D, N)
        run_decay = b.lipschitz <= L / math.sqrt(2) * (1 + 1e-9)
        worst = {"polyak": -math.inf, "decay": -math.inf}
        for _ in range(n_instances):
            d = int(gen.choice(dims))
            center = gen.standard_normal(d)
            u = gen.standard_normal(d)
            x0 = center + D * gen.uniform(1e-3, 1.0) * u / np.linalg.norm(u)
            inst = RadialInstance(center, b, L=L, D=D)
            tr = polyak_gd(inst, 0.0, x0, N, schedule=sched)
            worst["polyak"] = max(worst["polyak"], float(np.max(tr.dists - sched.deltas[:len(tr)])))
            if run_decay:
                tr = decay_gd(inst, sched, L, x0, N)
                worst["decay"] = max(worst["decay"], float(np.max(tr.dists - sched.deltas)))
        report.checks.append(_check(f"{cid}/polyak", worst["polyak"] <= tol, worst["polyak"], tol))
        if run_decay:
            report.checks.append(_check(f"{cid}/decay", worst["decay"] <= tol, worst["decay"], tol))
    return report


# -- asymptotics ---------------------------------------------------------------


def asymptotics_report(c: float = 0.5, theta: float = 0.5, L: float = 1.0, D: float = 1.0,
                       window=(10**3, 10**4), x0: float = 0.5, alpha: float = 1.0, a: float = 2.0,
                       delta_tol: float = 0.05, power_tol: float = 0.05) -> Report:
    """Compare Delta_n and the power-decay sequence with their leading-order asymptotes."""
    lo, hi = window
    ns = np.arange(lo, hi + 1)
    b = ErrorBound.holder(c, theta, D)
    sched = delta_schedule(b, L, D, hi)
    ratio = sched.deltas[lo:] / delta_asymptote(c, theta, L, ns, D=D)
    dev = float(np.max(np.abs(ratio - 1)))

    ps = power_sequence(x0, alpha, a, hi)
    pr = ps.values[lo:] / ps.asymptote(ns)
    sub = np.asarray(sched.deltas) ** 2
    ps2 = power_sequence(D**2, (c / L) ** 2, 1 / theta, hi) if theta < 1 else None
    checks = [
        _check("delta_asymptote", dev <= delta_tol, dev, delta_tol),
        _check("power_sequence_band", bool(np.all(np.abs(pr - 1) <= power_tol)),
               float(np.max(np.abs(pr - 1))), power_tol),
    ]
    if ps2 is not None:
        err = float(np.max(np.abs(ps2.values - sub) / sub))
        checks.append(_check("substitution", err <= 1e-12, err, 1e-12))
    cfg = {"c": c, "theta": theta, "L": L, "D": D, "window": list(window), "x0": x0,
           "alpha": alpha, "a": a}
    return Report("asymptotics", cfg, checks)
