"""Single-valued selections of an interval map and their potentials.

A selection picks one value f(s) inside [lo(s), hi(s)] for every s.
Built-in strategies:

* ``min`` / ``max``      lower and upper envelope
* ``midpoint``            arithmetic mean of the envelopes
* ``signswitch``          upper envelope for s < 0, lower for s >= 0
* ``theorem_app``         envelope that alternates on the four regions
                          cut at -sbar, 0, sbar; each region is closed
                          on its right end: hi on (-inf, -sbar], lo on
                          (-sbar, 0], hi on (0, sbar], lo on (sbar, inf)
* ``custom``              any expression in s, checked against the band
                          at every evaluation

The potential of a selection is the integral of f from 0 to s. A
:class:`PotentialTable` caches the potential on a uniform grid with
cubic Hermite interpolation whose slopes are the selection itself, so
table values stay consistent with the gradient used by the solver.
"""

from __future__ import annotations

import bisect

import numpy as np

from .exprlang import Expr, ExprDomainError, eval_expr, parse_expr
from .quadrature import integrate_with_cuts, oriented_integral
from .setvalued import IntervalMap, NonConvergentLimitError, _sampled_limit

__all__ = [
    "STRATEGIES",
    "Selection",
    "SelectionError",
    "SelectionViolationError",
    "PotentialTable",
    "build_table",
]

STRATEGIES = ("min", "max", "midpoint", "signswitch", "theorem_app", "custom")


class SelectionError(ValueError):
    pass


class SelectionViolationError(SelectionError):
    """A custom selection left the interval band."""

    def __init__(self, s: float, value: float, lo: float, hi: float):
        self.s, self.value, self.lo, self.hi = s, value, lo, hi
        super().__init__(
            f"selection value {value!r} at s={s!r} outside [{lo!r}, {hi!r}]"
        )


class Selection:
    def __init__(
        self,
        F: IntervalMap,
        strategy: str,
        sbar: float | None = None,
        expr: Expr | str | None = None,
    ):
        if strategy not in STRATEGIES:
            raise SelectionError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
        self.F = F
        self.strategy = strategy
        self.sbar = None
        self.expr: Expr | None = None
        if strategy == "theorem_app":
            if sbar is None or not (sbar > 0.0):
                raise SelectionError("theorem_app needs a positive sbar")
            self.sbar = float(sbar)
            self._boundaries = (-self.sbar, 0.0, self.sbar)
        elif strategy == "signswitch":
            self._boundaries = (0.0,)
        else:
            self._boundaries = ()
        if strategy == "custom":
            if expr is None:
                raise SelectionError("custom strategy needs an expression")
            self.expr = parse_expr(expr) if isinstance(expr, str) else expr
        elif expr is not None:
            raise SelectionError(f"strategy {strategy!r} does not take an expression")
        self._table: PotentialTable | None = None

    # -- where the selection itself can jump -------------------------------

    @property
    def cuts(self) -> tuple[float, ...]:
        return tuple(sorted(set(self.F.jumps) | set(self._boundaries)))

    # -- pointwise evaluation ----------------------------------------------

    def _band_check(self, s: float, v: float) -> float:
        lo, hi = self.F.eval(s)
        slack = 1e-9 * (1.0 + abs(lo) + abs(hi))
        if not (lo - slack <= v <= hi + slack):
            raise SelectionViolationError(s, v, lo, hi)
        return v

    def eval(self, s: float) -> float:
        st = self.strategy
        if st == "min":
            return self.F.eval_lo(s)
        if st == "max":
            return self.F.eval_hi(s)
        if st == "midpoint":
            lo, hi = self.F.eval(s)
            return 0.5 * (lo + hi)
        if st == "signswitch":
            return self.F.eval_hi(s) if s < 0.0 else self.F.eval_lo(s)
        if st == "theorem_app":
            idx = bisect.bisect_left(self._boundaries, s)
            return self.F.eval_hi(s) if idx % 2 == 0 else self.F.eval_lo(s)
        return self._band_check(s, eval_expr(self.expr, s))

    def eval_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        st = self.strategy
        if st == "min":
            return self.F.eval_lo_array(x)
        if st == "max":
            return self.F.eval_hi_array(x)
        if st == "midpoint":
            return 0.5 * (self.F.eval_lo_array(x) + self.F.eval_hi_array(x))
        if st == "signswitch":
            return np.where(x < 0.0, self.F.eval_hi_array(x), self.F.eval_lo_array(x))
        if st == "theorem_app":
            idx = np.searchsorted(np.asarray(self._boundaries), x, side="left")
            return np.where(idx % 2 == 0, self.F.eval_hi_array(x), self.F.eval_lo_array(x))
        vals = np.asarray(eval_expr(self.expr, x), dtype=float)
        lo = self.F.eval_lo_array(x)
        hi = self.F.eval_hi_array(x)
        slack = 1e-9 * (1.0 + np.abs(lo) + np.abs(hi))
        bad = (vals < lo - slack) | (vals > hi + slack)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise SelectionViolationError(float(x.ravel()[i] if x.ndim else x),
                                          float(vals.ravel()[i] if vals.ndim else vals),
                                          float(lo.ravel()[i] if lo.ndim else lo),
                                          float(hi.ravel()[i] if hi.ndim else hi))
        return vals

    # -- one-sided limits ----------------------------------------------------

    def limit(self, s: float, side: int) -> float:
        """Essential one-sided limit of the selection at s."""
        if side not in (-1, +1):
            raise ValueError("side must be -1 or +1")
        st = self.strategy
        if st == "min":
            return self.F.lo_limit(s, side)
        if st == "max":
            return self.F.hi_limit(s, side)
        if st == "midpoint":
            return 0.5 * (self.F.lo_limit(s, side) + self.F.hi_limit(s, side))
        if st == "signswitch":
            on_hi = s < 0.0 or (s == 0.0 and side < 0)
            return self.F.hi_limit(s, side) if on_hi else self.F.lo_limit(s, side)
        if st == "theorem_app":
            if side < 0:
                idx = bisect.bisect_left(self._boundaries, s)
            else:
                idx = bisect.bisect_right(self._boundaries, s)
            return self.F.hi_limit(s, side) if idx % 2 == 0 else self.F.lo_limit(s, side)
        est, ok, msg = _sampled_limit(lambda t: eval_expr(self.expr, t), s, side, (16, 44))
        if not ok:
            raise NonConvergentLimitError(
                f"one-sided limit of custom selection at {s} did not converge: {msg}"
            )
        return est

    def essential_limits(self, s: float) -> tuple[float, float]:
        """(limit from below, limit from above) of the selection at s."""
        return self.limit(s, -1), self.limit(s, +1)

    def clarke_interval(self, s: float) -> tuple[float, float]:
        """Generalized derivative interval of the potential at s."""
        a, b = self.essential_limits(s)
        return (a, b) if a <= b else (b, a)

    # -- potential -------------------------------------------------------------

    def potential(self, s: float, tol: float = 1e-10) -> float:
        """Integral of the selection from 0 to s, jump-aware."""
        if s == 0.0:
            return 0.0
        return oriented_integral(self.eval, self.limit, self.cuts, 0.0, s, tol)

    def get_table(self) -> "PotentialTable":
        if self._table is None:
            self._table = PotentialTable(self)
        return self._table


def build_table(
    sel: Selection,
    s_range: tuple[float, float] = (-1024.0, 1024.0),
    n: int = 262145,
    tol: float = 1e-12,
) -> "PotentialTable":
    """Tabulate the potential on n uniform nodes spanning s_range."""
    a, b = s_range
    if not (a < 0.0 < b):
        raise ValueError("table range must straddle 0")
    if n < 2:
        raise ValueError("need at least 2 table nodes")
    return PotentialTable(sel, a, b, (b - a) / (n - 1), tol=tol)


class PotentialTable:
    """Uniform-grid cache of a selection's potential.

    Node values come from per-cell Gauss quadrature accumulated from an
    anchor at the node closest to 0; between nodes a cubic Hermite patch
    uses the selection as slope, one-sided at nodes where it jumps.
    Cells that contain a jump strictly inside, and points outside the
    tabulated range, fall back to direct adaptive quadrature.
    """

    GAUSS_N = 8

    def __init__(
        self,
        sel: Selection,
        lo: float = -1024.0,
        hi: float = 1024.0,
        step: float = 1.0 / 128.0,
        probe_points: int = 25,
        tol: float = 1e-12,
    ):
        if not (hi > lo and step > 0.0):
            raise ValueError("need hi > lo and a positive step")
        n_cells = int(round((hi - lo) / step))
        if abs(lo + n_cells * step - hi) > 1e-9 * max(1.0, abs(hi)):
            raise ValueError("range must be an integer number of steps")
        self.sel = sel
        self.tol = float(tol)
        self.lo, self.hi, self.step, self.n_cells = float(lo), float(hi), float(step), n_cells
        self.nodes = lo + step * np.arange(n_cells + 1)
        cuts = sel.cuts

        gl_x, gl_w = np.polynomial.legendre.leggauss(self.GAUSS_N)
        mids = self.nodes[:-1] + 0.5 * step
        pts = mids[:, None] + (0.5 * step) * gl_x[None, :]
        vals = sel.eval_array(pts.ravel()).reshape(n_cells, self.GAUSS_N)
        cell_ints = (0.5 * step) * (vals @ gl_w)

        # cells with a jump strictly inside get exact split quadrature and
        # are excluded from Hermite interpolation
        self._jump_cell = np.zeros(n_cells, dtype=bool)
        for c in cuts:
            if not (lo < c < hi):
                continue
            i = int(np.floor((c - lo) / step))
            for j in (i - 1, i, i + 1):
                # a node-aligned jump matches no cell and keeps the fast path
                if 0 <= j < n_cells and self.nodes[j] < c < self.nodes[j + 1]:
                    self._jump_cell[j] = True
                    cell_ints[j] = integrate_with_cuts(
                        sel.eval, sel.limit, cuts, float(self.nodes[j]), float(self.nodes[j + 1]), self.tol
                    )
                    break

        cum = np.concatenate([[0.0], np.cumsum(cell_ints)])
        i0 = int(np.argmin(np.abs(self.nodes)))
        anchor_val = 0.0 if self.nodes[i0] == 0.0 else sel.potential(float(self.nodes[i0]))
        self.values = cum - cum[i0] + anchor_val

        slopes = sel.eval_array(self.nodes)
        self._slope_right = slopes.copy()
        self._slope_left = slopes.copy()
        for c in cuts:
            if not (lo <= c <= hi):
                continue
            i = int(round((c - lo) / step))
            if 0 <= i <= n_cells and self.nodes[i] == c:
                self._slope_right[i] = sel.limit(c, +1)
                self._slope_left[i] = sel.limit(c, -1)

        self.error_estimate = self._probe_error(probe_points)

    def _probe_error(self, n: int) -> float:
        if n <= 0:
            return 0.0
        a = max(self.lo, -8.0)
        b = min(self.hi, 8.0)
        if not (b > a):
            a, b = self.lo, self.hi
        probes = list(np.linspace(a, b, n))
        probes += [c + 0.37 * self.step for c in self.sel.cuts if a <= c + 0.37 * self.step <= b]
        err = 0.0
        for s in probes:
            approx = float(self.eval(np.array([s]))[0])
            exact = self.sel.potential(float(s), tol=1e-11)
            err = max(err, abs(approx - exact))
        return err

    def _slow_value(self, x: float) -> float:
        sel, cuts = self.sel, self.sel.cuts
        if x < self.lo:
            return float(self.values[0]) + oriented_integral(
                sel.eval, sel.limit, cuts, self.lo, x, max(self.tol, 1e-11)
            )
        if x > self.hi:
            return float(self.values[-1]) + oriented_integral(
                sel.eval, sel.limit, cuts, self.hi, x, max(self.tol, 1e-11)
            )
        i = int(np.floor((x - self.lo) / self.step))
        i = min(max(i, 0), self.n_cells - 1)
        return float(self.values[i]) + integrate_with_cuts(
            sel.eval, sel.limit, cuts, float(self.nodes[i]), x, self.tol
        )

    def eval(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.empty_like(flat)
        in_range = (flat >= self.lo) & (flat <= self.hi)
        idx = np.clip(
            np.floor((flat - self.lo) / self.step).astype(int), 0, self.n_cells - 1
        )
        fast = in_range & ~self._jump_cell[idx]
        if np.any(fast):
            i = idx[fast]
            t = (flat[fast] - self.nodes[i]) / self.step
            t2 = t * t
            t3 = t2 * t
            h00 = 2.0 * t3 - 3.0 * t2 + 1.0
            h10 = t3 - 2.0 * t2 + t
            h01 = -2.0 * t3 + 3.0 * t2
            h11 = t3 - t2
            out[fast] = (
                h00 * self.values[i]
                + h10 * self.step * self._slope_right[i]
                + h01 * self.values[i + 1]
                + h11 * self.step * self._slope_left[i + 1]
            )
        slow = ~fast
        if np.any(slow):
            out[slow] = [self._slow_value(float(t)) for t in flat[slow]]
        return out.reshape(x.shape)
