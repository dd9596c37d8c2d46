"""The rate sequence Delta_n, its asymptotics, and iteration-complexity thresholds."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .error_bounds import ErrorBound
from .exceptions import DomainError, InvalidBoundError

RADICAND_TOL = 1e-15
DEFAULT_CAP = 10**7


@dataclass(frozen=True)
class RateSchedule:
    bound: ErrorBound
    L: float
    D: float
    deltas: np.ndarray

    @property
    def N(self) -> int:
        return len(self.deltas) - 1

    @property
    def h_deltas(self) -> np.ndarray:
        return np.asarray(self.bound(self.deltas))

    def stepsizes(self) -> np.ndarray:
        """Decaying stepsizes h(Delta_n) / L**2 for n = 0..N."""
        return self.h_deltas / self.L**2

    def asymptote(self, n):
        """Leading-order asymptote of Delta_n for holder bounds, else None."""
        b = self.bound
        if b.kind != "holder":
            return None
        return delta_asymptote(b.c, b.theta, self.L, n, D=self.D)


def _next_delta(b: ErrorBound, L: float, D: float, delta: float) -> float:
    if delta == 0.0:
        return 0.0
    rad = delta * delta - (b(delta) / L) ** 2
    if rad < 0:
        if rad < -RADICAND_TOL * D * D:
            raise InvalidBoundError(
                f"h({delta:g}) exceeds L*{delta:g}: bound is not {L:g}-Lipschitz"
            )
        return 0.0
    return math.sqrt(rad)


def delta_schedule(b: ErrorBound, L: float, D: float, N: int) -> RateSchedule:
    """Delta_0 = D and Delta_n**2 = Delta_{n-1}**2 - h(Delta_{n-1})**2 / L**2."""
    if N < 0:
        raise DomainError("N must be nonnegative")
    if not (L > 0 and D > 0):
        raise DomainError("L and D must be positive")
    out = np.empty(N + 1)
    out[0] = D
    for n in range(1, N + 1):
        out[n] = _next_delta(b, L, D, out[n - 1])
    out.setflags(write=False)
    return RateSchedule(b, float(L), float(D), out)


def delta_asymptote(c: float, theta: float, L: float, n, D: float | None = None):
    """Leading-order behaviour of Delta_n for h(t) = c t**(1/theta).

    For theta < 1 this is ((c/L)**2 (1-theta)/theta n)**(-theta/(2(1-theta)));
    for theta = 1 the rate is geometric and requires ``D``.
    """
    if not 0 < theta <= 1:
        raise DomainError(f"theta must lie in (0, 1], got {theta}")
    n = np.asarray(n, dtype=float)
    if theta == 1:
        if D is None:
            raise DomainError("theta = 1 uses the closed form (1 - c^2/L^2)^(n/2) D; pass D")
        out = (1 - (c / L) ** 2) ** (n / 2) * D
    else:
        if np.any(n <= 0):
            raise DomainError("asymptote is defined for n >= 1")
        out = ((c / L) ** 2 * (1 - theta) / theta * n) ** (-theta / (2 * (1 - theta)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class NEpsilon:
    n: int | None
    reached: bool
    closed_form: float | None


def n_epsilon_closed_form(c: float, theta: float, L: float, D: float, eps: float) -> float:
    if theta == 1:
        return 2 * math.log(c * D / eps) / math.log(1 / (1 - (c / L) ** 2))
    return theta / (1 - theta) * L**2 / c ** (2 * theta) * eps ** (-2 * (1 - theta))


def n_epsilon(b: ErrorBound, L: float, D: float, eps: float, cap: int = DEFAULT_CAP) -> NEpsilon:
    """Smallest n with h(Delta_n) <= eps, extending the recursion lazily up to ``cap``."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    closed = None
    if b.kind == "holder" and (b.theta < 1 or b.c < L):
        closed = n_epsilon_closed_form(b.c, b.theta, L, D, eps)
    delta = float(D)
    for n in range(cap + 1):
        if b(delta) <= eps:
            return NEpsilon(n, True, closed)
        delta = _next_delta(b, L, D, delta)
    return NEpsilon(None, False, closed)


@dataclass(frozen=True)
class PowerSequence:
    x0: float
    alpha: float
    a: float
    values: np.ndarray

    def asymptote(self, n):
        n = np.asarray(n, dtype=float)
        out = (self.alpha * (self.a - 1) * n) ** (-1 / (self.a - 1))
        return float(out) if out.ndim == 0 else out


def power_sequence(x0: float, alpha: float, a: float, N: int) -> PowerSequence:
    """x_{n+1} = x_n - alpha x_n**a, the substitution x_n = Delta_n**2 for holder bounds."""
    if not (x0 > 0 and alpha > 0 and a > 1):
        raise DomainError("need x0 > 0, alpha > 0 and a > 1")
    if not x0 - alpha * x0**a > 0:
        raise DomainError("x0 - alpha*x0**a must be positive or the sequence leaves (0, inf)")
    if N < 0:
        raise DomainError("N must be nonnegative")
    vals = np.empty(N + 1)
    vals[0] = x0
    for n in range(N):
        x = vals[n]
        vals[n + 1] = x - alpha * x**a
    vals.setflags(write=False)
    return PowerSequence(float(x0), float(alpha), float(a), vals)


def schedule_csv(schedule: RateSchedule) -> str:
    """CSV with columns n, delta, h_delta, asymptote.

    The asymptote column is empty for theta = 1 (the closed form is exact)
    and for custom bounds; for theta < 1 it is empty at n = 0.
    """
    b = schedule.bound
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "delta", "h_delta", "asymptote"])
    hs = schedule.h_deltas
    for n, (d, hd) in enumerate(zip(schedule.deltas, hs)):
        asym = ""
        if b.kind == "holder" and b.theta < 1 and n > 0:
            asym = repr(delta_asymptote(b.c, b.theta, schedule.L, n))
        w.writerow([n, repr(float(d)), repr(float(hd)), asym])
    return buf.getvalue()
