"""Subgradient methods: PolyakGD, DecayGD and generic subgradient-span methods."""

from __future__ import annotations

import csv
import io
import json
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .instances import Oracle
from .rates import RateSchedule

SPAN_FLAG_TOL = 1e-8
JSON_ITERATE_LIMIT = 64


@dataclass
class IterRecord:
    n: int
    x: np.ndarray
    f: float
    g: np.ndarray
    eta: float | None = None
    dist: float | None = None
    gap: float | None = None
    delta: float | None = None
    span_residual: float = 0.0


@dataclass
class Trace:
    method: str
    records: list[IterRecord] = field(default_factory=list)
    converged: bool = False
    f_star_granted: bool = False
    span_violations: list[int] = field(default_factory=list)
    wall_time: float = 0.0

    def __len__(self):
        return len(self.records)

    @property
    def iterates(self) -> np.ndarray:
        return np.array([r.x for r in self.records])

    @property
    def subgradients(self) -> np.ndarray:
        return np.array([r.g for r in self.records])

    @property
    def values(self) -> np.ndarray:
        return np.array([r.f for r in self.records])

    @property
    def dists(self) -> np.ndarray:
        return np.array([np.nan if r.dist is None else r.dist for r in self.records])

    @property
    def stepsizes(self) -> np.ndarray:
        return np.array([np.nan if r.eta is None else r.eta for r in self.records[1:]])

    def to_csv(self) -> str:
        """Columns n, f, gap, dist, delta, eta, span_residual; blanks for missing data."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "f", "gap", "dist", "delta", "eta", "span_residual"])
        for r in self.records:
            w.writerow([r.n] + [_fmt(v) for v in (r.f, r.gap, r.dist, r.delta, r.eta, r.span_residual)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "converged": self.converged,
            "f_star_granted": self.f_star_granted,
            "span_violations": self.span_violations,
            "wall_time": self.wall_time,
            "records": [],
        }
        dim = self.records[0].x.size if self.records else 0
        for r in self.records:
            rec = {"n": r.n, "f": r.f, "gap": r.gap, "dist": r.dist, "delta": r.delta,
                   "eta": r.eta, "span_residual": r.span_residual}
            if dim <= JSON_ITERATE_LIMIT:
                rec["x"] = r.x.tolist()
            out["records"].append(rec)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def span_residual(gs, v) -> float:
    """Distance from ``v`` to span(gs), relative to ||v||."""
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        return 0.0
    if len(gs) == 0:
        return 1.0
    G = np.array(gs).T
    coef, *_ = np.linalg.lstsq(G, v, rcond=None)
    return float(np.linalg.norm(v - G @ coef)) / nv


@dataclass
class History:
    """What a span method may see before choosing its next iterate."""

    xs: list[np.ndarray]
    fs: list[float]
    gs: list[np.ndarray]
    f_star: float | None = None

    @property
    def n(self) -> int:
        return len(self.xs)


class _Recorder:
    def __init__(self, method, oracle: Oracle, schedule: RateSchedule | None, f_star=None):
        self.oracle = oracle
        self.schedule = schedule
        self.f_star = oracle.meta.f_star if f_star is None else f_star
        self.trace = Trace(method)
        self.hist = History([], [], [])
        self._t0 = time.perf_counter()

    def query(self, x, eta=None):
        x = np.asarray(x, dtype=float).copy()
        f, g = self.oracle(x)
        n = self.hist.n
        h = self.hist
        res = span_residual(h.gs, x - h.xs[0]) if n > 0 else 0.0
        rec = IterRecord(n, x, f, g, eta=eta, span_residual=res)
        rec.dist = self.oracle.dist(x)
        if self.f_star is not None:
            rec.gap = f - self.f_star
        if self.schedule is not None and n <= self.schedule.N:
            rec.delta = float(self.schedule.deltas[n])
        if res > SPAN_FLAG_TOL:
            self.trace.span_violations.append(n)
        self.trace.records.append(rec)
        h.xs.append(x)
        h.fs.append(f)
        h.gs.append(g)
        return f, g

    def finish(self) -> Trace:
        self.trace.wall_time = time.perf_counter() - self._t0
        return self.trace


def _start(x0, oracle):
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != oracle.dimension:
        raise DomainError(f"x0 has dimension {x0.size}, oracle expects {oracle.dimension}")
    return x0


def polyak_gd(oracle: Oracle, f_star: float, x0, N: int,
              schedule: RateSchedule | None = None) -> Trace:
    """Subgradient descent with the Polyak stepsize (f(x) - f_star) / ||g||**2.

    Stops early, flagged converged, once the gap or the subgradient vanishes.
    """
    x = _start(x0, oracle)
    rec = _Recorder("polyak", oracle, schedule, f_star)
    rec.trace.f_star_granted = True
    f, g = rec.query(x)
    for _ in range(N):
        gap = f - f_star
        gg = float(g @ g)
        if gg == 0.0 or gap <= 0.0:
            rec.trace.converged = True
            break
        eta = gap / gg
        x = x - eta * g
        f, g = rec.query(x, eta)
    return rec.finish()


def decay_gd(oracle: Oracle, schedule: RateSchedule, L: float, x0, N: int) -> Trace:
    """Subgradient descent with predetermined stepsizes h(Delta_{n-1}) / L**2."""
    if schedule.N < N:
        raise DomainError(f"schedule covers {schedule.N} steps, {N} requested")
    if schedule.bound.lipschitz > L / math.sqrt(2) * (1 + 1e-9):
        warnings.warn(
            f"bound slope {schedule.bound.lipschitz:g} exceeds L/sqrt(2); "
            "the DecayGD distance guarantee may not hold",
            stacklevel=2,
        )
    x = _start(x0, oracle)
    rec = _Recorder("decay", oracle, schedule)
    etas = schedule.h_deltas / L**2
    f, g = rec.query(x)
    for n in range(1, N + 1):
        eta = float(etas[n - 1])
        x = x - eta * g
        f, g = rec.query(x, eta)
    return rec.finish()


# -- stepsize policies for run_span_method -------------------------------------


class Policy:
    """Maps a :class:`History` to the next iterate, or None once converged."""

    name = "policy"
    needs_f_star = False

    def __call__(self, hist: History):
        raise NotImplementedError

    def eta(self, hist: History) -> float | None:
        return None


class PolyakPolicy(Policy):
    name = "polyak"
    needs_f_star = True

    def __call__(self, hist):
        f, g, x = hist.fs[-1], hist.gs[-1], hist.xs[-1]
        gap = f - hist.f_star
        gg = float(g @ g)
        if gg == 0.0 or gap <= 0.0:
            return None
        self._eta = gap / gg
        return x - self._eta * g

    def eta(self, hist):
        return self._eta


class DecayPolicy(Policy):
    name = "decay"

    def __init__(self, schedule: RateSchedule, L: float):
        self.etas = schedule.h_deltas / L**2

    def __call__(self, hist):
        self._eta = float(self.etas[hist.n - 1])
        return hist.xs[-1] - self._eta * hist.gs[-1]

    def eta(self, hist):
        return self._eta


class ConstantPolicy(Policy):
    def __init__(self, eta: float):
        self._eta = float(eta)
        self.name = f"const:{eta:g}"

    def __call__(self, hist):
        return hist.xs[-1] - self._eta * hist.gs[-1]

    def eta(self, hist):
        return self._eta


class ZeroPolicy(Policy):
    name = "zero"

    def __call__(self, hist):
        return hist.xs[0].copy()


def run_span_method(policy: Policy, oracle: Oracle, x0, N: int, f_star: float | None = None,
                    schedule: RateSchedule | None = None) -> Trace:
    """Run a stepsize policy, recording span-condition residuals.

    ``f_star`` is passed to the policy only when given explicitly; the grant
    is recorded on the trace. Iterates whose residual exceeds 1e-8 are flagged
    in ``trace.span_violations``.
    """
    if policy.needs_f_star and f_star is None:
        raise DomainError(f"policy {policy.name!r} needs f_star")
    x = _start(x0, oracle)
    rec = _Recorder(policy.name, oracle, schedule, f_star)
    rec.trace.f_star_granted = f_star is not None
    rec.hist.f_star = f_star
    rec.query(x)
    for _ in range(N):
        nxt = policy(rec.hist)
        if nxt is None:
            rec.trace.converged = True
            break
        rec.query(nxt, policy.eta(rec.hist))
    return rec.finish()
