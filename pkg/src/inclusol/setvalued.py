"""Interval-valued maps F(s) = [lo(s), hi(s)] on the real line.

A map is described by two piecewise expression functions: the lower
envelope ``lo`` and the upper envelope ``hi``. Breakpoints carry an
optional explicit point value; everywhere else a breakpoint evaluates
to its right branch. A map flagged ``odd`` stores the branches for
s >= 0 only and reflects through F(s) = -F(-s).

The checks in this module certify the structural hypotheses the solver
relies on: upper semicontinuity of the map (equivalently, lo lower
semicontinuous and hi upper semicontinuous), a polynomial growth bound,
sublinear behaviour of the envelopes at 0 and at infinity, and strict
positivity of the upper envelope on (0, sbar].
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exprlang import Expr, ExprDomainError, eval_expr, format_expr, parse_expr
from .quadrature import oriented_integral

__all__ = [
    "MapConstructionError",
    "NonConvergentLimitError",
    "PiecewiseFn",
    "IntervalMap",
    "GrowthBound",
    "GrowthReport",
    "UscViolation",
    "UscReport",
    "HypothesisCheck",
    "HypothesesReport",
    "check_usc",
    "check_growth",
    "check_hypotheses",
    "aumann",
]


class MapConstructionError(ValueError):
    pass


class NonConvergentLimitError(RuntimeError):
    pass


def _as_expr(e) -> Expr:
    return parse_expr(e) if isinstance(e, str) else e


class PiecewiseFn:
    """A real function given by expression branches between breakpoints.

    ``branches[i]`` covers the open interval between ``breaks[i-1]`` and
    ``breaks[i]`` (with infinite tails at both ends), so there is always
    exactly one more branch than breakpoints. At a breakpoint the value
    is the explicit point value when one was given, otherwise the right
    branch evaluated there.
    """

    def __init__(
        self,
        breaks: Sequence[float],
        branches: Sequence,
        point_values: Sequence[float | None] | None = None,
        validate_from: float | None = None,
    ):
        self.breaks = tuple(float(b) for b in breaks)
        if any(not np.isfinite(b) for b in self.breaks):
            raise MapConstructionError("breakpoints must be finite")
        if any(b1 <= b0 for b0, b1 in zip(self.breaks, self.breaks[1:])):
            raise MapConstructionError("breakpoints must be strictly increasing")
        self.branches = tuple(_as_expr(e) for e in branches)
        if len(self.branches) != len(self.breaks) + 1:
            raise MapConstructionError(
                f"need {len(self.breaks) + 1} branches for {len(self.breaks)} breakpoints, "
                f"got {len(self.branches)}"
            )
        if point_values is None:
            point_values = (None,) * len(self.breaks)
        self.point_values = tuple(None if v is None else float(v) for v in point_values)
        if len(self.point_values) != len(self.breaks):
            raise MapConstructionError("point_values must align with breakpoints")
        self._breaks_arr = np.asarray(self.breaks)
        self._validate(validate_from)

    # -- construction-time sampling -------------------------------------

    def _interval(self, j: int) -> tuple[float, float]:
        lo = self.breaks[j - 1] if j > 0 else -np.inf
        hi = self.breaks[j] if j < len(self.breaks) else np.inf
        return lo, hi

    def _probes(self, j: int) -> np.ndarray:
        lo, hi = self._interval(j)
        if np.isinf(lo) and np.isinf(hi):
            return np.array([-4.0, -1.0, -1e-3, 0.0, 1e-3, 1.0, 4.0])
        if np.isinf(lo):
            sc = 1.0 + abs(hi)
            return hi - np.array([1e-9, 0.25, 1.0, 4.0]) * sc
        if np.isinf(hi):
            sc = 1.0 + abs(lo)
            return lo + np.array([1e-9, 0.25, 1.0, 4.0]) * sc
        w = hi - lo
        return lo + w * np.array([1e-9, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0 - 1e-9])

    def _validate(self, validate_from: float | None):
        for j, branch in enumerate(self.branches):
            probes = self._probes(j)
            if validate_from is not None:
                probes = probes[probes >= validate_from]
            for t in probes:
                try:
                    eval_expr(branch, float(t))
                except ExprDomainError as exc:
                    raise MapConstructionError(
                        f"branch {format_expr(branch)!r} undefined on its interval: {exc}"
                    ) from None

    # -- evaluation ------------------------------------------------------

    def eval(self, s: float) -> float:
        j = bisect.bisect_left(self.breaks, s)
        if j < len(self.breaks) and self.breaks[j] == s:
            pv = self.point_values[j]
            if pv is not None:
                return pv
        # right-branch convention at breakpoints without explicit values
        return self._eval_branch(bisect.bisect_right(self.breaks, s), s)

    def limit(self, s: float, side: int) -> float:
        """One-sided limit; side +1 approaches from above, -1 from below."""
        if side not in (-1, +1):
            raise ValueError("side must be -1 or +1")
        if side > 0:
            j = bisect.bisect_right(self.breaks, s)
        else:
            j = bisect.bisect_left(self.breaks, s)
        return self._eval_branch(j, s, approach=side)

    def _eval_branch(self, j: int, s: float, approach: int = 0) -> float:
        branch = self.branches[j]
        try:
            return eval_expr(branch, s)
        except ExprDomainError:
            if approach == 0:
                raise
        # branch singular exactly at a closure point: approach numerically
        scale = 1.0 + abs(s)
        prev = None
        for k in range(18, 49):
            t = s + approach * scale * 2.0 ** (-k)
            if t == s:
                break
            try:
                v = eval_expr(branch, t)
            except ExprDomainError:
                continue
            if prev is not None and abs(v - prev) <= 1e-9 * (1.0 + abs(v)):
                return v
            prev = v
        raise NonConvergentLimitError(
            f"one-sided limit of {format_expr(branch)!r} at {s} did not converge"
        )

    def eval_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        idx = np.searchsorted(self._breaks_arr, x, side="right")
        for j, branch in enumerate(self.branches):
            mask = idx == j
            if not np.any(mask):
                continue
            try:
                out[mask] = eval_expr(branch, x[mask])
            except ExprDomainError:
                out[mask] = [self.eval(float(t)) for t in x[mask]]
        for j, b in enumerate(self.breaks):
            pv = self.point_values[j]
            if pv is not None:
                out[x == b] = pv
        return out


class IntervalMap:
    """Set-valued map with compact interval values [lo(s), hi(s)]."""

    def __init__(self, lo: PiecewiseFn, hi: PiecewiseFn, odd: bool = False, check: bool = True):
        self.lo = lo
        self.hi = hi
        self.odd = bool(odd)
        jump_set = set(lo.breaks) | set(hi.breaks)
        if self.odd:
            jump_set |= {-b for b in jump_set}
            jump_set.add(0.0)
        self.jumps = tuple(sorted(jump_set))
        if check:
            self._check_order()

    def _check_order(self):
        span = 2.0 * max([1.0] + [abs(j) for j in self.jumps])
        grid = np.linspace(-2.0 * span, 2.0 * span, 241)
        near = np.concatenate([np.array([j - 1e-7, j, j + 1e-7]) for j in self.jumps]) if self.jumps else np.array([])
        for s in np.concatenate([grid, near]):
            lo_v, hi_v = self.eval(float(s))
            if lo_v > hi_v + 1e-10 * (1.0 + abs(lo_v) + abs(hi_v)):
                raise MapConstructionError(
                    f"lower envelope exceeds upper envelope at s={float(s)!r}: {lo_v} > {hi_v}"
                )
        if self.odd:
            lo0, hi0 = self.lo.eval(0.0), self.hi.eval(0.0)
            if abs(lo0 + hi0) > 1e-10 * (1.0 + abs(hi0)):
                raise MapConstructionError(
                    f"odd map needs a symmetric value at 0, got [{lo0}, {hi0}]"
                )

    # -- pointwise values -------------------------------------------------

    def eval_lo(self, s: float) -> float:
        if self.odd and s < 0.0:
            return -self.hi.eval(-s)
        return self.lo.eval(s)

    def eval_hi(self, s: float) -> float:
        if self.odd and s < 0.0:
            return -self.lo.eval(-s)
        return self.hi.eval(s)

    def eval(self, s: float) -> tuple[float, float]:
        return self.eval_lo(s), self.eval_hi(s)

    # -- one-sided limits --------------------------------------------------

    def lo_limit(self, s: float, side: int) -> float:
        if self.odd and (s < 0.0 or (s == 0.0 and side < 0)):
            return -self.hi_limit_positive(-s, -side)
        return self.lo.limit(s, side)

    def hi_limit(self, s: float, side: int) -> float:
        if self.odd and (s < 0.0 or (s == 0.0 and side < 0)):
            return -self.lo_limit_positive(-s, -side)
        return self.hi.limit(s, side)

    # reflection helpers that never recurse back below zero
    def lo_limit_positive(self, s: float, side: int) -> float:
        return self.lo.limit(s, side)

    def hi_limit_positive(self, s: float, side: int) -> float:
        return self.hi.limit(s, side)

    # -- vectorised values -------------------------------------------------

    def eval_lo_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.odd:
            return self.lo.eval_array(x)
        out = np.empty_like(x)
        neg = x < 0.0
        if np.any(~neg):
            out[~neg] = self.lo.eval_array(x[~neg])
        if np.any(neg):
            out[neg] = -self.hi.eval_array(-x[neg])
        return out

    def eval_hi_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.odd:
            return self.hi.eval_array(x)
        out = np.empty_like(x)
        neg = x < 0.0
        if np.any(~neg):
            out[~neg] = self.hi.eval_array(x[~neg])
        if np.any(neg):
            out[neg] = -self.lo.eval_array(-x[neg])
        return out


# ---------------------------------------------------------------------------
# sampled one-sided limits

def _sampled_limit(eval_fn, s: float, side: int, k_range: tuple[int, int]) -> tuple[float, bool, str]:
    """Richardson-style one-sided limit from samples at s + side * 2^-k.

    Steps that no longer move the floating-point abscissa are dropped,
    so widening the k range cannot change a converged answer.
    """
    k0, k1 = k_range
    scale = max(1.0, abs(s))
    vals = []
    for k in range(k0, k1 + 1):
        t = s + side * scale * 2.0 ** (-k)
        if t == s:
            break
        try:
            vals.append(eval_fn(t))
        except ExprDomainError as exc:
            return np.nan, False, f"domain error while sampling: {exc}"
    if len(vals) < 3:
        return np.nan, False, "not enough resolvable samples"
    d1 = abs(vals[-1] - vals[-2])
    d2 = abs(vals[-2] - vals[-3])
    tol = 1e-7 * (1.0 + abs(vals[-1]))
    converged = d1 <= tol or d1 <= 0.75 * d2 + tol
    est = 2.0 * vals[-1] - vals[-2]
    return est, converged, ""


@dataclass(frozen=True)
class UscViolation:
    s: float
    kind: str
    detail: str

    def __str__(self):
        return f"s={self.s:.12g}: {self.kind}: {self.detail}"


@dataclass
class UscReport:
    ok: bool
    violations: list[UscViolation] = field(default_factory=list)
    checked_jumps: tuple[float, ...] = ()
    grid_points: int = 0

    def __str__(self):
        head = "upper semicontinuity: ok" if self.ok else "upper semicontinuity: FAILED"
        lines = [head, f"  jumps checked: {list(self.checked_jumps)}, grid points: {self.grid_points}"]
        lines += [f"  {v}" for v in self.violations]
        return "\n".join(lines)


def check_usc(
    F: IntervalMap,
    tol: float = 1e-6,
    k_range: tuple[int, int] = (10, 40),
    grid: np.ndarray | None = None,
) -> UscReport:
    """Certify that F is upper semicontinuous with interval values.

    Equivalent formulation used here: the lower envelope is lower
    semicontinuous and the upper envelope upper semicontinuous. Each
    declared jump is tested against sampled one-sided limits; a sample
    grid between jumps guards against discontinuities hidden inside a
    branch expression.
    """
    violations: list[UscViolation] = []

    def limits_at(s: float):
        ests = {}
        for name, fn in (("lo", F.eval_lo), ("hi", F.eval_hi)):
            for side, tag in ((-1, "left"), (+1, "right")):
                est, ok, msg = _sampled_limit(fn, s, side, k_range)
                if not ok:
                    violations.append(
                        UscViolation(s, "non_convergent_limit", f"{name} {tag} limit: {msg or 'oscillates'}")
                    )
                ests[name, tag] = est
        return ests

    def check_point(s: float):
        ests = limits_at(s)
        lo_lim = [v for (n, _), v in ests.items() if n == "lo" and np.isfinite(v)]
        hi_lim = [v for (n, _), v in ests.items() if n == "hi" and np.isfinite(v)]
        if len(lo_lim) == 2:
            lo_here = F.eval_lo(s)
            bound = min(lo_lim)
            if lo_here > bound + tol:
                violations.append(
                    UscViolation(
                        s,
                        "lower_envelope_not_lsc",
                        f"lo({s:.6g})={lo_here:.12g} exceeds one-sided limits min {bound:.12g}",
                    )
                )
        if len(hi_lim) == 2:
            hi_here = F.eval_hi(s)
            bound = max(hi_lim)
            if hi_here < bound - tol:
                violations.append(
                    UscViolation(
                        s,
                        "upper_envelope_not_usc",
                        f"hi({s:.6g})={hi_here:.12g} below one-sided limits max {bound:.12g}",
                    )
                )

    for j in F.jumps:
        check_point(j)

    if grid is None:
        span = max([3.0] + [2.0 * abs(j) for j in F.jumps])
        grid = np.linspace(-span, span, 201)
    grid = np.asarray(grid, dtype=float)
    keep = np.ones(grid.shape, dtype=bool)
    for j in F.jumps:
        keep &= np.abs(grid - j) > 1e-9 * (1.0 + abs(j))
    for s in grid[keep]:
        check_point(float(s))

    return UscReport(
        ok=not violations,
        violations=violations,
        checked_jumps=F.jumps,
        grid_points=int(np.count_nonzero(keep)),
    )


# ---------------------------------------------------------------------------
# growth bound

@dataclass(frozen=True)
class GrowthBound:
    a: float
    p: float

    def __post_init__(self):
        if not (self.p > 1.0):
            raise ValueError("growth exponent p must exceed 1")
        if not (self.a >= 0.0 and np.isfinite(self.a)):
            raise ValueError("growth constant a must be finite and nonnegative")


@dataclass
class GrowthReport:
    bound: GrowthBound
    argmax_s: float
    ok: bool

    def __str__(self):
        return (
            f"growth: |F(s)| <= {self.bound.a:.6g} * (1 + |s|^{self.bound.p - 1:.6g}), "
            f"tight at s={self.argmax_s:.6g} ({'ok' if self.ok else 'exceeds cap'})"
        )


def check_growth(
    F: IntervalMap,
    p: float,
    s_range: tuple[float, float] = (-10.0, 10.0),
    n_samples: int = 2001,
    cap: float | None = None,
) -> GrowthReport:
    """Fit the least a with max(|lo|, |hi|) <= a * (1 + |s|^(p-1)) on a grid."""
    if not (p > 1.0):
        raise ValueError("growth exponent p must exceed 1")
    a_lo, a_hi = s_range
    grid = np.linspace(a_lo, a_hi, n_samples)
    extra = [j for j in F.jumps if a_lo <= j <= a_hi]
    if extra:
        grid = np.unique(np.concatenate([grid, np.asarray(extra)]))
    mag = np.maximum(np.abs(F.eval_lo_array(grid)), np.abs(F.eval_hi_array(grid)))
    ratio = mag / (1.0 + np.abs(grid) ** (p - 1.0))
    i = int(np.argmax(ratio))
    a = float(ratio[i])
    return GrowthReport(GrowthBound(a, p), float(grid[i]), cap is None or a <= cap)


# ---------------------------------------------------------------------------
# Aumann integral

def aumann(F: IntervalMap, s: float, tol: float = 1e-10) -> tuple[float, float]:
    """Interval of integrals from 0 to s over all measurable selections.

    Equals the interval spanned by the oriented integrals of the two
    envelopes; for s < 0 the envelope roles swap because integration
    runs backwards.
    """
    if s == 0.0:
        return (0.0, 0.0)
    i_lo = oriented_integral(F.eval_lo, F.lo_limit, F.jumps, 0.0, s, tol)
    i_hi = oriented_integral(F.eval_hi, F.hi_limit, F.jumps, 0.0, s, tol)
    return (min(i_lo, i_hi), max(i_lo, i_hi))


# ---------------------------------------------------------------------------
# solvability hypotheses

@dataclass
class HypothesisCheck:
    name: str
    ok: bool
    detail: str

    def __str__(self):
        return f"{self.name}: {'ok' if self.ok else 'FAILED'} ({self.detail})"


@dataclass
class HypothesesReport:
    sublinear_at_zero: HypothesisCheck
    sublinear_at_infinity: HypothesisCheck
    positive_below_sbar: HypothesisCheck

    @property
    def ok(self) -> bool:
        return (
            self.sublinear_at_zero.ok
            and self.sublinear_at_infinity.ok
            and self.positive_below_sbar.ok
        )

    def checks(self):
        return (self.sublinear_at_zero, self.sublinear_at_infinity, self.positive_below_sbar)

    def __str__(self):
        return "\n".join(str(c) for c in self.checks())


def _trend_ok(values: list[float], tol: float, window: int = 6) -> bool:
    if not values:
        return False
    if not (values[-1] <= tol):
        return False
    tail = values[-window:]
    if max(tail) <= tol:
        return True
    slack = [1e-12 + 0.01 * abs(v) for v in tail[:-1]]
    return all(b <= a + s for a, b, s in zip(tail[:-1], tail[1:], slack))


def _ratio_series(fn, signs_k, transform):
    vals, err = [], None
    for s in signs_k:
        try:
            vals.append(transform(fn(s), s))
        except ExprDomainError as exc:
            err = str(exc)
            break
    if vals and not all(np.isfinite(v) for v in vals):
        err = err or "non-finite ratio"
    return vals, err


def check_hypotheses(
    F: IntervalMap,
    sbar: float,
    tol_zero: float = 1e-4,
    tol_inf: float = 1e-4,
    zero_ks: tuple[int, int] = (1, 40),
    inf_ks: tuple[int, int] = (0, 30),
    ss_samples: int = 101,
) -> HypothesesReport:
    """Probe the three structural hypotheses behind the two-solution result.

    * the largest slope ratio max F(s)/s vanishes as s -> 0 (checked on
      s = +-2^-k with a monotone trend test),
    * the smallest slope ratio min F(s)/s is asymptotically nonpositive
      as |s| -> infinity (sampled on s = +-2^k, decreasing tail),
    * the upper envelope is strictly positive on (0, sbar].
    """
    if not (sbar > 0.0):
        raise ValueError("sbar must be positive")

    # near zero: max over the interval of xi/s is hi/s for s>0, lo/s for s<0
    ks = range(zero_ks[0], zero_ks[1] + 1)
    pos, err_p = _ratio_series(F.eval_hi, [2.0 ** (-k) for k in ks], lambda v, s: abs(v / s))
    neg, err_n = _ratio_series(F.eval_lo, [-(2.0 ** (-k)) for k in ks], lambda v, s: abs(v / s))
    if err_p or err_n:
        zero = HypothesisCheck("sublinear_at_zero", False, err_p or err_n)
    else:
        ok = _trend_ok(pos, tol_zero) and _trend_ok(neg, tol_zero)
        zero = HypothesisCheck(
            "sublinear_at_zero",
            ok,
            f"|max ratio| at s=+-2^-{zero_ks[1]}: {pos[-1]:.3g} / {neg[-1]:.3g}",
        )

    # at infinity: min over the interval of xi/s is lo/s for s>0, hi/s for s<0
    ks = range(inf_ks[0], inf_ks[1] + 1)
    pos, err_p = _ratio_series(F.eval_lo, [2.0 ** k for k in ks], lambda v, s: v / s)
    neg, err_n = _ratio_series(F.eval_hi, [-(2.0 ** k) for k in ks], lambda v, s: v / s)
    if err_p or err_n:
        inf_check = HypothesisCheck("sublinear_at_infinity", False, err_p or err_n)
    else:
        ok = _trend_ok(pos, tol_inf) and _trend_ok(neg, tol_inf)
        inf_check = HypothesisCheck(
            "sublinear_at_infinity",
            ok,
            f"min ratio at |s|=2^{inf_ks[1]}: {pos[-1]:.3g} / {neg[-1]:.3g}",
        )

    grid = np.linspace(sbar / ss_samples, sbar, ss_samples)
    hi_vals = F.eval_hi_array(grid)
    i = int(np.argmin(hi_vals))
    ok = bool(hi_vals[i] > 0.0)
    ss = HypothesisCheck(
        "positive_below_sbar",
        ok,
        f"min of upper envelope on (0, {sbar:.6g}] is {hi_vals[i]:.6g} at s={grid[i]:.6g}",
    )

    return HypothesesReport(zero, inf_check, ss)
