"""First-order oracles and benign test instances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .error_bounds import ErrorBound
from .exceptions import DomainError


@dataclass
class OracleMeta:
    L: float | None = None
    D: float | None = None
    bound: ErrorBound | None = None
    minimizers: list[np.ndarray] = field(default_factory=list)
    f_star: float | None = None

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "D": self.D,
            "bound": self.bound.to_dict() if self.bound is not None else None,
            "minimizers": [np.asarray(m).tolist() for m in self.minimizers],
            "f_star": self.f_star,
        }


class Oracle:
    """A deterministic first-order oracle: x -> (f(x), g) with g in the subdifferential."""

    name = "oracle"

    def __init__(self, dimension: int, meta: OracleMeta | None = None):
        if dimension < 1:
            raise DomainError("dimension must be positive")
        self.dimension = int(dimension)
        self.meta = meta if meta is not None else OracleMeta()

    def __call__(self, x) -> tuple[float, np.ndarray]:
        raise NotImplementedError

    def value(self, x) -> float:
        return self(x)[0]

    def values(self, X) -> np.ndarray:
        """Function values at the rows of ``X``; subclasses may vectorize."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.value(x) for x in X])

    def subgradients(self, X) -> np.ndarray:
        """Oracle subgradients at the rows of ``X``, stacked."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self(x)[1] for x in X])

    def dist(self, x) -> float | None:
        """Distance to the nearest known minimizer, or None without metadata."""
        if not self.meta.minimizers:
            return None
        x = np.asarray(x, dtype=float)
        return min(float(np.linalg.norm(x - m)) for m in self.meta.minimizers)


class FunctionOracle(Oracle):
    """Wraps a callable returning (value, subgradient)."""

    def __init__(self, fun, dimension: int, meta: OracleMeta | None = None, name: str = "function"):
        super().__init__(dimension, meta)
        self._fun = fun
        self.name = name

    def __call__(self, x):
        x = np.asarray(x, dtype=float).reshape(self.dimension)
        val, g = self._fun(x)
        return float(val), np.asarray(g, dtype=float).reshape(self.dimension)


class RadialInstance(Oracle):
    """f(x) = h(||x - center||): convex, unique minimizer at ``center`` with value 0."""

    name = "radial"

    def __init__(self, center, bound: ErrorBound, L: float | None = None, D: float | None = None):
        center = np.asarray(center, dtype=float).ravel()
        meta = OracleMeta(
            L=bound.lipschitz if L is None else L,
            D=bound.D if D is None else D,
            bound=bound,
            minimizers=[center],
            f_star=0.0,
        )
        super().__init__(center.size, meta)
        self.center = center
        self.bound = bound

    def __call__(self, x):
        diff = np.asarray(x, dtype=float).reshape(self.dimension) - self.center
        r = float(np.linalg.norm(diff))
        if r == 0.0:
            return 0.0, np.zeros(self.dimension)
        return self.bound(r), self.bound.slope(r) * diff / r

    def values(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self.bound(np.linalg.norm(X - self.center, axis=1)))


def radial_eval(inst: RadialInstance, x) -> tuple[float, np.ndarray]:
    return inst(x)


def _abs_left(x: float) -> float:
    # left slope of |x|: -1 at the kink
    return 1.0 if x > 0 else -1.0


def adversarial_pair(eps: float) -> tuple[FunctionOracle, FunctionOracle]:
    """Two univariate instances that agree at x0 = 0 but have minimizers at 0 and 1.

    With mu = (1 + eps)/sqrt(2): A is f(x) = mu|x| and B is f(x) = mu|x - 1| - mu.
    Both report (0, -mu) at the origin.
    """
    if not 0 < eps < math.sqrt(2) - 1:
        raise DomainError(f"eps must lie in (0, sqrt(2) - 1) so that mu < L = 1, got {eps}")
    mu = (1 + eps) / math.sqrt(2)
    bound = ErrorBound.holder(mu, 1.0, 1.0)

    def fa(x):
        return mu * abs(x[0]), [mu * _abs_left(x[0])]

    def fb(x):
        return mu * abs(x[0] - 1) - mu, [mu * _abs_left(x[0] - 1)]

    meta_a = OracleMeta(1.0, 1.0, bound, [np.zeros(1)], 0.0)
    meta_b = OracleMeta(1.0, 1.0, bound, [np.ones(1)], -mu)
    return (
        FunctionOracle(fa, 1, meta_a, name="pair_A"),
        FunctionOracle(fb, 1, meta_b, name="pair_B"),
    )
