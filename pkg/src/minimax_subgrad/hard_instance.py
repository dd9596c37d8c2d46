"""Worst-case instance f_hard = max(phi_1, ..., phi_{N+1}, f) and its resisting oracle.

Everything is built in normalized units (L = D = 1) and rescaled on the way in
and out: a point x is mapped to x / D, values are multiplied by L*D and
subgradients by L.

Notation used throughout (normalized units):

* ``xs``: the unique minimizer, xs_i = -h(Delta_{i-1}) for i <= N and
  xs_{N+1} = -Delta_N.
* ``f(x) = h(||x - xs||)``; f_n is its restriction to the first n coordinates,
  minimized at z_n = xs[:n].
* ``psi_n(beta) = sup_{alpha >= 0} alpha*beta - h(sqrt(alpha**2 + Delta_n**2))``,
  so the conjugate of f_n is <p, z_n> + psi_n(||p||).
* ``phi_{n+1}(x) = max_beta beta*r + y*sqrt(1 - beta**2) - psi_n(beta)`` with
  r = ||x[:n] - z_n|| and y = x[n].

Two routes evaluate phi. The parametric route (holder bounds) walks the curve
beta = H'(alpha), psi = alpha*H'(alpha) - H(alpha) where H(alpha) = h(sqrt(alpha**2
+ Delta**2)), which is valid because H is C^1 and strictly convex; each point on
the curve costs a handful of flops. The nested route (any bound) grids beta
directly and evaluates psi by an inner golden-section search. When y >= 0 the
objective is concave in beta and a single golden-section search suffices;
otherwise both routes scan a grid and refine in the best cell.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .error_bounds import ErrorBound
from .exceptions import DomainError, InvalidBoundError
from .golden import golden_max
from .instances import Oracle, OracleMeta
from .rates import delta_schedule

INNER_TOL = 1e-10
GRID = 4096
T_MAX = 1.0 - 1e-9
DEGENERATE_DELTA = 1e-12
CHUNK_ELEMS = 1 << 21


@dataclass(frozen=True)
class SelfTest:
    psi_error: float
    phi_error: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.psi_error <= self.tol and self.phi_error <= self.tol


class HardInstance:
    """The worst-case function for span methods on the class (h, L, D)."""

    def __init__(self, bound: ErrorBound, L: float, D: float, N: int,
                 inner_tol: float = INNER_TOL, grid: int = GRID, route: str = "auto"):
        if N < 1:
            raise DomainError(f"N must be at least 1, got {N}")
        if not (L > 0 and D > 0):
            raise DomainError("L and D must be positive")
        if bound.lipschitz > L * (1 + 1e-9):
            raise InvalidBoundError(f"bound has slope {bound.lipschitz:g} > L = {L:g}")
        if route not in ("auto", "parametric", "nested"):
            raise DomainError(f"unknown route {route!r}")
        if route == "parametric" and not bound.rescaled(L, D).is_smooth:
            raise DomainError("the parametric route needs a continuously differentiable bound")

        self.bound = bound
        self.L = float(L)
        self.D = float(D)
        self.requested_N = int(N)
        self.inner_tol = float(inner_tol)
        self.grid = int(grid)

        nb = bound.rescaled(L, D)
        self._nb = nb
        ndeltas = delta_schedule(nb, 1.0, 1.0, N).deltas
        # drop the degenerate tail where Delta_n has collapsed to zero
        positive = np.flatnonzero(ndeltas > DEGENERATE_DELTA)
        self.N = int(positive[-1])
        self.schedule = delta_schedule(bound, L, D, self.N)
        self._deltas = np.array(ndeltas[: self.N + 1])

        xs = np.empty(self.N + 1)
        xs[: self.N] = -nb(self._deltas[: self.N])
        xs[self.N] = -self._deltas[self.N]
        self._xs = xs
        self.x_star = self.D * xs
        self.z = [self.x_star[:n].copy() for n in range(self.N + 1)]

        self._s = min(nb.extension_slope, 1.0)
        self._h1 = nb.h_at_D
        self.route = ("parametric" if nb.is_smooth else "nested") if route == "auto" else route
        self._tables = {}

        self._closed_psi = False
        if nb.kind == "holder" and nb.theta == 1:
            self._closed_psi = self._psi_self_test() <= 1e-9

    # -- bookkeeping ----------------------------------------------------------

    @property
    def dimension(self) -> int:
        return self.N + 1

    @property
    def deltas(self) -> np.ndarray:
        return self.schedule.deltas

    def descriptor(self) -> dict:
        return {"bound": self.bound.to_dict(), "L": self.L, "D": self.D, "N": self.N}

    def x_star_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "x_star"])
        for i, v in enumerate(self.x_star, start=1):
            w.writerow([i, repr(float(v))])
        return buf.getvalue()

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise DomainError(f"expected points in R^{self.dimension}, got shape {x.shape}")
        return x / self.D

    # -- psi -------------------------------------------------------------------

    def _psi_objective(self, alpha, beta, delta):
        s, h1 = self._s, self._h1
        rho = np.hypot(alpha, delta)
        inside = alpha * beta - self._nb(np.minimum(rho, 1.0))
        # affine extension past 1, rearranged to avoid cancellation for large alpha
        outside = alpha * (beta - s) - s * delta**2 / (alpha + rho) + (s - h1)
        return np.where(rho <= 1.0, inside, outside)

    def _psi_numeric(self, delta, beta):
        delta, beta = np.broadcast_arrays(np.asarray(delta, float), np.asarray(beta, float))
        out = np.full(delta.shape, np.inf)
        s = self._s
        at_limit = beta == s
        out[at_limit] = s - self._h1
        todo = beta < s
        if np.any(todo):
            d, b = delta[todo], beta[todo]

            def obj(t):
                with np.errstate(divide="ignore"):
                    return self._psi_objective(d * t / (1 - t), b, d)

            _, best = golden_max(obj, np.zeros_like(d), np.full_like(d, T_MAX), tol=1e-13)
            ends = np.maximum(obj(np.zeros_like(d)), obj(np.full_like(d, T_MAX)))
            out[todo] = np.maximum(best, ends)
        return out

    def _psi_closed(self, delta, beta):
        mu = self._s
        with np.errstate(invalid="ignore"):
            val = -delta * np.sqrt(np.maximum(mu * mu - beta * beta, 0.0))
        return np.where(beta > mu, np.inf, val)

    def _psi_self_test(self) -> float:
        betas = np.linspace(0.0, self._s, 33)
        err = 0.0
        for n in range(self.N + 1):
            a = self._psi_closed(self._deltas[n], betas)
            b = self._psi_numeric(self._deltas[n], betas)
            err = max(err, float(np.max(np.abs(a - b))))
        return err

    def psi(self, n: int, beta):
        """psi_n(beta) in normalized units; +inf outside the conjugate's domain."""
        if not 0 <= n <= self.N:
            raise DomainError(f"n must lie in [0, {self.N}]")
        b = np.asarray(beta, dtype=float)
        if np.any(b < 0) or np.any(b > 1):
            raise DomainError("beta must lie in [0, 1]")
        if self._closed_psi:
            out = self._psi_closed(self._deltas[n], b)
        else:
            out = self._psi_numeric(self._deltas[n], b)
        return float(out) if np.ndim(beta) == 0 else out

    # -- phi engine -----------------------------------------------------------

    def _curve(self, route, delta, p):
        """Points (beta, sqrt(1 - beta**2), psi) on the conjugate curve at parameter ``p``."""
        if route == "nested":
            sq = np.sqrt(np.maximum((1.0 - p) * (1.0 + p), 0.0))
            if self._closed_psi:
                return p, sq, self._psi_closed(delta, p)
            return p, sq, self._psi_numeric(delta, p)
        nb = self._nb
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = delta * p / (1.0 - p)
            rho = np.hypot(alpha, delta)
            hp = np.minimum(nb.slope(rho), 1.0)
            beta = hp * alpha / rho
            # 1 - beta**2 = ((1 - hp**2) alpha**2 + delta**2) / rho**2, free of cancellation
            sq = np.sqrt((1.0 - hp * hp) * alpha**2 + delta**2) / rho
            psi = nb.legendre_gap(rho) - hp * delta**2 / rho
        limit = p >= 1.0
        s = self._s
        beta = np.where(limit, s, beta)
        sq = np.where(limit, math.sqrt(max(1.0 - s * s, 0.0)), sq)
        psi = np.where(limit, s - self._h1, psi)
        return beta, sq, psi

    def _table(self, route):
        if route not in self._tables:
            if route == "parametric":
                grid = np.linspace(0.0, 1.0, self.grid)
            else:
                grid = np.linspace(0.0, self._s, self.grid)
            betas = np.empty((self.N + 1, self.grid))
            sq = np.empty_like(betas)
            psis = np.empty_like(betas)
            for n in range(self.N + 1):
                betas[n], sq[n], psis[n] = self._curve(route, self._deltas[n], grid)
            self._tables[route] = (grid, betas, sq, psis)
        return self._tables[route]

    def _solve(self, n_idx, r, y, route=None):
        """Maximize the phi objective for triples (n, r, y).

        Returns (value, beta, sqrt(1 - beta**2)) at the maximizer. For y >= 0
        the objective is concave in beta, hence unimodal along the curve, and
        one golden search over the whole parameter range suffices. Otherwise
        the grid locates the best cell first.
        """
        route = route or self.route
        grid, betas, sq, psis = self._table(route)
        n_idx = np.asarray(n_idx, dtype=int)
        r = np.asarray(r, dtype=float)
        y = np.asarray(y, dtype=float)
        G = len(grid)
        # endpoints, which golden search never evaluates
        v0 = betas[n_idx, 0] * r + y * sq[n_idx, 0] - psis[n_idx, 0]
        v1 = betas[n_idx, -1] * r + y * sq[n_idx, -1] - psis[n_idx, -1]
        use1 = v1 > v0
        gv = np.where(use1, v1, v0)
        gb = np.where(use1, betas[n_idx, -1], betas[n_idx, 0])
        gs = np.where(use1, sq[n_idx, -1], sq[n_idx, 0])
        a = np.full(n_idx.shape, grid[0])
        b = np.full(n_idx.shape, grid[-1])
        neg = np.flatnonzero(y < 0)
        step = max(1, CHUNK_ELEMS // G)
        for n in np.unique(n_idx[neg]):
            rows_n = neg[n_idx[neg] == n]
            B, S, P = betas[n], sq[n], psis[n]
            for lo in range(0, rows_n.size, step):
                rows = rows_n[lo:lo + step]
                obj = np.multiply.outer(r[rows], B)
                obj += np.multiply.outer(y[rows], S)
                obj -= P
                i = np.argmax(obj, axis=1)
                v = obj[np.arange(rows.size), i]
                better = v > gv[rows]
                gv[rows] = np.where(better, v, gv[rows])
                gb[rows] = np.where(better, B[i], gb[rows])
                gs[rows] = np.where(better, S[i], gs[rows])
                a[rows] = grid[np.maximum(i - 1, 0)]
                b[rows] = grid[np.minimum(i + 1, G - 1)]
        dd = self._deltas[n_idx]

        def f(p):
            bt, sqt, ps = self._curve(route, dd, p)
            return bt * r + y * sqt - ps

        p_best, v_best = golden_max(f, a, b, tol=1e-3 * self.inner_tol)
        better = v_best > gv
        bt, sqt, _ = self._curve(route, dd, p_best)
        return (np.where(better, v_best, gv), np.where(better, bt, gb),
                np.where(better, sqt, gs))

    def _solve_pruned(self, n_idx, r, y, rows, floor, margin=0.0, force=None, route=None):
        """Like _solve, but skips triples that cannot reach their row maximum.

        For y < 0 the value is at most the y = 0 value, which is cheap (concave
        case). Triples whose bound stays below the best known lower bound of
        their row minus ``margin`` are returned as -inf. ``force`` marks
        triples that must be solved regardless.
        """
        m = n_idx.size
        value = np.full(m, -np.inf)
        beta = np.zeros(m)
        comp = np.zeros(m)
        pos = np.flatnonzero(y >= 0)
        neg = np.flatnonzero(y < 0)
        if pos.size:
            value[pos], beta[pos], comp[pos] = self._solve(n_idx[pos], r[pos], y[pos], route)
        if neg.size:
            up, _, c0 = self._solve(n_idx[neg], r[neg], np.zeros(neg.size), route)
            lower = np.array(floor, dtype=float, copy=True)
            np.maximum.at(lower, rows[pos], value[pos])
            np.maximum.at(lower, rows[neg], up + y[neg] * c0)
            keep = up >= lower[rows[neg]] - margin
            if force is not None:
                keep |= force[neg]
            sel = neg[keep]
            if sel.size:
                value[sel], beta[sel], comp[sel] = self._solve(n_idx[sel], r[sel], y[sel], route)
        return value, beta, comp

    def _phi_normalized(self, n, xh, route=None):
        if n == 0:
            g = np.zeros(self.dimension)
            g[0] = 1.0
            return xh[0] + self._h1, g
        w = xh[:n] - self._xs[:n]
        r = float(np.linalg.norm(w))
        val, beta, comp = self._solve(np.array([n]), np.array([r]), np.array([xh[n]]), route)
        return float(val[0]), self._phi_grad(n, w, r, float(beta[0]), float(comp[0]))

    def _phi_grad(self, n, w, r, beta, comp):
        g = np.zeros(self.dimension)
        if n > 0:
            if r > 0:
                g[:n] = beta * w / r
            else:
                g[0] = beta
        g[n] = comp
        return g

    def phi(self, n: int, x, route=None) -> tuple[float, np.ndarray]:
        """phi_{n+1}(x) and the subgradient of its maximizing affine minorant."""
        if not 0 <= n <= self.N:
            raise DomainError(f"n must lie in [0, {self.N}]")
        val, g = self._phi_normalized(n, self._check_x(x), route)
        return self.L * self.D * val, self.L * g

    def _f_normalized(self, xh):
        return self._nb(np.linalg.norm(xh - self._xs, axis=-1))

    def radial_value(self, x):
        """f(x) = h(||x - x_star||) in original units."""
        return self.L * self.D * self._f_normalized(self._check_x(x))

    def components(self, X, route=None) -> np.ndarray:
        """Matrix of [phi_1, ..., phi_{N+1}, f] at the rows of X (original units)."""
        Xh = np.atleast_2d(self._check_x(X))
        m = Xh.shape[0]
        out = np.empty((m, self.N + 2))
        out[:, 0] = Xh[:, 0] + self._h1
        cum = np.cumsum((Xh - self._xs) ** 2, axis=1)
        if self.N >= 1:
            ns = np.arange(1, self.N + 1)
            r = np.sqrt(cum[:, ns - 1])
            y = Xh[:, ns]
            n_idx = np.broadcast_to(ns, (m, self.N))
            vals = self._solve(n_idx.ravel(), r.ravel(), y.ravel(), route)[0]
            out[:, 1 : self.N + 1] = vals.reshape(m, self.N)
        out[:, self.N + 1] = self._nb(np.sqrt(cum[:, -1]))
        return self.L * self.D * out

    def values(self, X, route=None) -> np.ndarray:
        Xh = np.atleast_2d(self._check_x(X))
        m = Xh.shape[0]
        cum = np.cumsum((Xh - self._xs) ** 2, axis=1)
        best = np.maximum(Xh[:, 0] + self._h1, self._nb(np.sqrt(cum[:, -1])))
        if self.N >= 1:
            ns = np.arange(1, self.N + 1)
            rows = np.repeat(np.arange(m), self.N)
            v = self._solve_pruned(np.tile(ns, m), np.sqrt(cum[:, ns - 1]).ravel(),
                                   Xh[:, ns].ravel(), rows, best, route=route)[0]
            best = np.maximum(best, v.reshape(m, self.N).max(axis=1))
        return self.L * self.D * best

    def value(self, x) -> float:
        return float(self.values(np.asarray(x, dtype=float)[None, :])[0])

    def resisting_subgradient(self, x) -> tuple[float, np.ndarray, int]:
        """Value, zero-chain subgradient and active component index at ``x``.

        With k the last coordinate (1-based) where x is exactly nonzero, only
        phi_1..phi_{k+1} are consulted; the smallest index within inner_tol of
        the maximum wins. Index N+1 denotes the radial term f, used only when
        the last coordinate is nonzero and no phi is active.
        """
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise DomainError("resisting_subgradient takes a single point")
        vals, G, active = self.resisting_batch(x[None, :])
        return float(vals[0]), G[0], int(active[0])

    def resisting_batch(self, X):
        """Row-wise resisting oracle: arrays (values, subgradients, active indices)."""
        Xh = np.atleast_2d(self._check_x(X))
        m, d = Xh.shape
        N = self.N
        nz = Xh != 0
        k = np.where(nz.any(axis=1), d - np.argmax(nz[:, ::-1], axis=1), 0)
        kk = np.minimum(k, N)
        diff = Xh - self._xs
        cum = np.cumsum(diff**2, axis=1)
        f_val = self._nb(np.sqrt(cum[:, -1]))

        V = np.full((m, N + 1), -np.inf)
        V[:, 0] = Xh[:, 0] + self._h1
        B = np.zeros((m, N + 1))
        C = np.zeros((m, N + 1))
        rows, cols = np.nonzero(np.arange(1, N + 1)[None, :] <= kk[:, None])
        ns = cols + 1
        if rows.size:
            floor = np.maximum(V[:, 0], f_val)
            v, bt, cp = self._solve_pruned(ns, np.sqrt(cum[rows, ns - 1]), Xh[rows, ns], rows,
                                           floor, margin=2 * self.inner_tol, force=ns == kk[rows])
            V[rows, ns], B[rows, ns], C[rows, ns] = v, bt, cp
        top = np.maximum(V.max(axis=1), f_val)

        within = V >= top[:, None] - self.inner_tol
        active = np.where(within.any(axis=1), np.argmax(within, axis=1),
                          np.where(k <= N, kk, N + 1))

        G = np.zeros((m, d))
        idx = np.arange(m)
        sel = active == 0
        G[sel, 0] = 1.0
        sel = active == N + 1
        if sel.any():
            rho = np.sqrt(cum[sel, -1])
            scale = np.divide(self._nb.slope(rho), rho, out=np.zeros_like(rho), where=rho > 0)
            G[sel] = scale[:, None] * diff[sel]
        sel = np.flatnonzero((active > 0) & (active <= N))
        if sel.size:
            n = active[sel]
            r = np.sqrt(cum[sel, n - 1])
            bt = B[sel, n]
            W = np.where(np.arange(d)[None, :] < n[:, None], diff[sel], 0.0)
            scale = np.divide(bt, r, out=np.zeros_like(r), where=r > 0)
            Gs = scale[:, None] * W
            Gs[r == 0, 0] = bt[r == 0]
            Gs[np.arange(sel.size), n] = C[sel, n]
            G[sel] = Gs
        return self.L * self.D * top, self.L * G, active

    # -- verification -----------------------------------------------------------

    def self_test(self, n_points: int = 8, seed: int = 0) -> SelfTest:
        """Compare the fast evaluation paths against the nested numeric path."""
        psi_err = self._psi_self_test() if self._closed_psi else 0.0
        if self.route == "nested":
            return SelfTest(psi_err, 0.0, 1e-9)
        rng = np.random.default_rng(seed)
        pts = [np.zeros(self.dimension), self.x_star]
        for _ in range(n_points):
            u = rng.standard_normal(self.dimension)
            pts.append(self.D * rng.uniform(0, 2) * u / np.linalg.norm(u))
        X = np.array(pts)
        a = self.components(X, route=self.route)
        b = self.components(X, route="nested")
        err = float(np.max(np.abs(a - b))) / (self.L * self.D)
        return SelfTest(psi_err, err, 1e-9)


class HardOracle(Oracle):
    """Resisting first-order oracle for a :class:`HardInstance`."""

    name = "hard"

    def __init__(self, inst: HardInstance):
        meta = OracleMeta(inst.L, inst.D, inst.bound, [inst.x_star], 0.0)
        super().__init__(inst.dimension, meta)
        self.inst = inst

    def __call__(self, x):
        val, g, _ = self.inst.resisting_subgradient(x)
        return val, g

    def values(self, X):
        return self.inst.values(X)

    def subgradients(self, X):
        return self.inst.resisting_batch(X)[1]


def build_hard(b: ErrorBound, L: float, D: float, N: int, **kwargs) -> HardInstance:
    return HardInstance(b, L, D, N, **kwargs)


def psi(inst: HardInstance, n: int, beta):
    return inst.psi(n, beta)


def phi(inst: HardInstance, n: int, x):
    return inst.phi(n, x)


def f_hard_eval(inst: HardInstance, x) -> float:
    return inst.value(x)


def resisting_subgradient(inst: HardInstance, x):
    return inst.resisting_subgradient(x)
