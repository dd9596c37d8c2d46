"""Growth functions h defining the class of Lipschitz convex problems.

Two families are supported:

* ``holder``: h(t) = c * t**(1/theta) with theta in (0, 1].
* ``custom``: a convex, nondecreasing piecewise-linear function given by knots.

Beyond the domain endpoint D every bound is extended linearly with the left
slope of h at D, which is the smallest convex nondecreasing extension and keeps
the Lipschitz constant unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, InvalidBoundError

REL_TOL = 1e-9


@dataclass(frozen=True)
class ErrorBound:
    kind: str
    D: float
    lipschitz: float
    extension_slope: float
    c: float | None = None
    theta: float | None = None
    knots: tuple[tuple[float, float], ...] | None = field(default=None, repr=False)

    # -- construction -----------------------------------------------------

    @classmethod
    def holder(cls, c: float, theta: float, D: float) -> "ErrorBound":
        if not c > 0:
            raise DomainError(f"holder constant c must be positive, got {c}")
        if not 0 < theta <= 1:
            raise DomainError(f"holder exponent theta must lie in (0, 1], got {theta}")
        if not D > 0:
            raise DomainError(f"domain endpoint D must be positive, got {D}")
        # h' is nondecreasing, so the steepest slope on [0, D] is the one at D
        slope = c if theta == 1 else c / theta * D ** ((1 - theta) / theta)
        return cls("holder", float(D), float(slope), float(slope), c=float(c), theta=float(theta))

    @classmethod
    def custom(cls, knots) -> "ErrorBound":
        """Piecewise-linear bound through ``knots`` = [[t0, h0], [t1, h1], ...].

        The first knot must be (0, 0); the last abscissa is the domain endpoint D.
        """
        pts = np.asarray(knots, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise DomainError("knots must be a list of at least two [t, h] pairs")
        ts, hs = pts[:, 0], pts[:, 1]
        if ts[0] != 0.0 or hs[0] != 0.0:
            raise InvalidBoundError("custom bound must start at the knot (0, 0)")
        if np.any(np.diff(ts) <= 0):
            raise DomainError("knot abscissae must be strictly increasing")
        slopes = np.diff(hs) / np.diff(ts)
        if np.any(slopes < 0):
            raise InvalidBoundError("custom bound must be nondecreasing")
        scale = max(abs(slopes).max(), 1.0)
        if np.any(np.diff(slopes) < -REL_TOL * scale):
            raise InvalidBoundError("custom bound must be convex (nondecreasing slopes)")
        # left slope at D: for a piecewise-linear h this is the final segment slope
        last = float(slopes[-1])
        return cls(
            "custom",
            float(ts[-1]),
            float(slopes.max()),
            last,
            knots=tuple((float(t), float(h)) for t, h in pts),
        )

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorBound":
        kind = d.get("kind")
        if kind == "holder":
            return cls.holder(d["c"], d["theta"], d["D"])
        if kind == "custom":
            b = cls.custom(d["knots"])
            if "D" in d and not math.isclose(d["D"], b.D, rel_tol=REL_TOL):
                raise DomainError(f"D={d['D']} disagrees with last knot {b.D}")
            return b
        raise DomainError(f"unknown bound kind {kind!r}")

    @classmethod
    def from_json(cls, text: str) -> "ErrorBound":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        if self.kind == "holder":
            return {"kind": "holder", "c": self.c, "theta": self.theta, "D": self.D}
        return {"kind": "custom", "D": self.D, "knots": [list(k) for k in self.knots]}

    # -- evaluation ---------------------------------------------------------

    @property
    def is_smooth(self) -> bool:
        """True when h is continuously differentiable on (0, inf)."""
        return self.kind == "holder"

    @property
    def h_at_D(self) -> float:
        return float(self._inner(np.array(self.D)))

    def _inner(self, t):
        if self.kind == "holder":
            if self.theta == 1:
                return self.c * t
            return self.c * t ** (1.0 / self.theta)
        ts = np.array([k[0] for k in self.knots])
        hs = np.array([k[1] for k in self.knots])
        return np.interp(t, ts, hs)

    def __call__(self, t):
        """Evaluate h at ``t`` (scalar or array), extending linearly past D."""
        if type(t) is float and self.kind == "holder" and 0.0 <= t <= self.D:
            return self.c * t if self.theta == 1 else self.c * t ** (1.0 / self.theta)
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0) or np.any(np.isnan(arr)):
            raise DomainError("h is only defined for nonnegative arguments")
        inside = np.minimum(arr, self.D)
        out = self._inner(inside) + self.extension_slope * np.maximum(arr - self.D, 0.0)
        if np.ndim(t) == 0:
            return float(out)
        return out

    def slope(self, t):
        """Left derivative of the (extended) h at ``t``; the right derivative at t=0."""
        arr = np.asarray(t, dtype=float)
        if self.kind == "holder":
            if self.theta == 1:
                out = np.full_like(arr, self.c)
            else:
                p = 1.0 / self.theta - 1.0
                out = self.c / self.theta * np.minimum(arr, self.D) ** p
        else:
            ts = np.array([k[0] for k in self.knots])
            hs = np.array([k[1] for k in self.knots])
            seg = np.diff(hs) / np.diff(ts)
            idx = np.clip(np.searchsorted(ts, arr, side="left") - 1, 0, len(seg) - 1)
            out = seg[idx]
        out = np.where(arr > self.D, self.extension_slope, out)
        if np.ndim(t) == 0:
            return float(out)
        return out

    def legendre_gap(self, t):
        """t*h'(t) - h(t), evaluated without cancellation for holder bounds.

        Past D the extension is affine, so the gap is the constant s*D - h(D).
        """
        arr = np.asarray(t, dtype=float)
        if self.kind == "holder":
            inside = np.minimum(arr, self.D)
            out = (1.0 / self.theta - 1.0) * self._inner(inside)
            out = np.where(arr > self.D, self.extension_slope * self.D - self.h_at_D, out)
        else:
            out = arr * self.slope(arr) - self(arr)
        if np.ndim(t) == 0:
            return float(out)
        return out

    def rescaled(self, L: float, D: float) -> "ErrorBound":
        """The bound seen in units where distances are divided by D and values by L*D."""
        if self.kind == "holder":
            c = self.c * D ** (1.0 / self.theta - 1.0) / L
            return ErrorBound.holder(c, self.theta, self.D / D)
        return ErrorBound.custom([[t / D, h / (L * D)] for t, h in self.knots])

    def admissible(self, L: float) -> bool:
        """Closed-form check that a holder bound is L-Lipschitz on [0, D]."""
        if self.kind != "holder":
            return self.lipschitz <= L * (1 + REL_TOL)
        lhs = self.D ** ((1 - self.theta) / self.theta)
        return lhs <= L * self.theta / self.c * (1 + REL_TOL)


def eval_h(b: ErrorBound, t):
    return b(t)


@dataclass
class ValidationReport:
    L: float
    checks: dict[str, bool]
    measured: dict[str, float]
    half_lipschitz: bool
    admissible: bool | None = None

    @property
    def passed(self) -> bool:
        ok = all(self.checks.values())
        if self.admissible is not None:
            ok = ok and self.admissible
        return ok


def validate_bound(b: ErrorBound, L: float, samples: int = 1001) -> ValidationReport:
    """Sampled checks that ``b`` vanishes at 0 and is nondecreasing, convex and L-Lipschitz.

    ``half_lipschitz`` records whether the bound is also L/sqrt(2)-Lipschitz,
    which is the extra hypothesis needed by the decaying-stepsize method.
    Failures are reported rather than raised.
    """
    if samples < 3:
        raise DomainError("validate_bound needs at least 3 samples")
    ts = np.linspace(0.0, b.D, samples)
    hs = b(ts)
    scale = max(abs(hs).max(), b.D * L, 1e-300)
    tol = REL_TOL * scale

    h0 = float(b(0.0))
    incr = np.diff(hs)
    secants = incr / np.diff(ts)
    mids = b(0.5 * (ts[:-2] + ts[2:]))
    conv_gap = mids - 0.5 * (hs[:-2] + hs[2:])

    max_slope = max(float(secants.max()), b.lipschitz)
    checks = {
        "vanishing": bool(abs(h0) <= tol),
        "monotone": bool(incr.min() >= -tol),
        "convex": bool(conv_gap.max() <= tol),
        "lipschitz": max_slope <= L * (1 + REL_TOL),
    }
    measured = {
        "h0": h0,
        "min_increment": float(incr.min()),
        "max_convexity_gap": float(conv_gap.max()),
        "max_slope": max_slope,
    }
    admissible = b.admissible(L) if b.kind == "holder" else None
    half = max_slope <= L / math.sqrt(2) * (1 + REL_TOL)
    return ValidationReport(L, checks, measured, half, admissible)
