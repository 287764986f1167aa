"""Adaptive Simpson quadrature with mandatory splitting at known jumps.

Integrands here are piecewise continuous with finitely many jump
points supplied by the caller. Every jump becomes a panel boundary and
panel endpoint values are taken as one-sided limits, so the adaptive
refinement only ever sees a continuous function.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

__all__ = ["QuadratureError", "adaptive_simpson", "integrate_with_cuts", "oriented_integral"]


class QuadratureError(RuntimeError):
    pass


def _simpson(a: float, b: float, fa: float, fm: float, fb: float) -> float:
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _refine(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(a, m, fa, flm, fm)
    right = _simpson(m, b, fm, frm, fb)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol or b - a <= 1e-15 * (1.0 + abs(a) + abs(b)):
        return left + right + delta / 15.0
    if depth <= 0:
        raise QuadratureError(f"adaptive refinement exhausted on [{a}, {b}]")
    half = 0.5 * tol
    return _refine(f, a, m, fa, flm, fm, left, half, depth - 1) + _refine(
        f, m, b, fm, frm, fb, right, half, depth - 1
    )


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float,
    fa: float | None = None,
    fb: float | None = None,
    max_depth: int = 60,
) -> float:
    """Integrate a continuous ``f`` over [a, b] to absolute accuracy ``tol``.

    ``fa``/``fb`` override the endpoint evaluations; callers pass
    one-sided limits when an endpoint sits on a jump of the original
    piecewise function.
    """
    if a == b:
        return 0.0
    if fa is None:
        fa = f(a)
    if fb is None:
        fb = f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(a, b, fa, fm, fb)
    return _refine(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _inner_cuts(cuts: Iterable[float], a: float, b: float) -> list[float]:
    eps = 1e-14 * (1.0 + abs(a) + abs(b))
    inner = sorted({float(c) for c in cuts if a + eps < c < b - eps})
    return inner


def integrate_with_cuts(
    value_fn: Callable[[float], float],
    limit_fn: Callable[[float, int], float],
    cuts: Iterable[float],
    a: float,
    b: float,
    tol: float,
) -> float:
    """Integrate over [a, b], a < b, splitting at every cut inside.

    ``limit_fn(x, side)`` must return the one-sided limit of the
    integrand; it is used for panel endpoints so point values on null
    sets never influence the result.
    """
    if not (a < b):
        raise ValueError("integrate_with_cuts requires a < b")
    bounds = [a] + _inner_cuts(cuts, a, b) + [b]
    total_width = b - a
    acc = 0.0
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        panel_tol = tol * max((hi - lo) / total_width, 1e-3)
        acc += adaptive_simpson(
            value_fn,
            lo,
            hi,
            panel_tol,
            fa=limit_fn(lo, +1),
            fb=limit_fn(hi, -1),
        )
    return acc


def oriented_integral(
    value_fn: Callable[[float], float],
    limit_fn: Callable[[float, int], float],
    cuts: Iterable[float],
    s0: float,
    s1: float,
    tol: float,
) -> float:
    """Oriented integral from ``s0`` to ``s1`` (negative when s1 < s0)."""
    if s0 == s1:
        return 0.0
    if np.isnan(s0) or np.isnan(s1):
        raise ValueError("integration endpoint is NaN")
    if s0 < s1:
        return integrate_with_cuts(value_fn, limit_fn, cuts, s0, s1, tol)
    return -integrate_with_cuts(value_fn, limit_fn, cuts, s1, s0, tol)
