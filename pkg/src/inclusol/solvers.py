"""Critical-point solvers for the discretized inclusion energy.

Two routes are provided. ``minimize_global`` drives a multistart
descent (Barzilai-Borwein steps, backtracking with a floating-point
slack, then a banded Newton polish) to the lowest critical point it can
certify. ``mountain_pass`` moves a discrete path between the zero state
and a downhill anchor until its highest node settles on a saddle.
Criticality of every returned point is measured exclusively by the
min-norm residual of the energy model, so the two routes share one
certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .discretize import EnergyModel, Mesh1D
from .selection import Selection

__all__ = [
    "SolverOptions",
    "BumpGeometry",
    "CriticalPoint",
    "TwoSolutions",
    "GeometryError",
    "build_bump",
    "default_geometry",
    "lambda_star",
    "minimize_global",
    "mountain_pass",
    "solve_two",
]


class GeometryError(RuntimeError):
    pass


@dataclass
class SolverOptions:
    tol_mphi: float = 1e-8
    max_iter: int = 20000
    step0: float = 1.0
    armijo: float = 1e-4
    shrink: float = 0.5
    path_points: int = 41
    seed: int = 0
    newton_polish: bool = True
    newton_iters: int = 40
    diverge_norm: float = 1e8
    mp_rounds: int = 400
    mp_inner_iters: int = 5

    def __post_init__(self):
        if not (0.0 < self.shrink < 1.0):
            raise ValueError("shrink must lie in (0, 1)")
        if not (self.tol_mphi > 0.0 and self.step0 > 0.0 and self.armijo > 0.0):
            raise ValueError("tolerances and step parameters must be positive")
        if self.path_points < 3:
            raise ValueError("a path needs at least 3 states")


@dataclass(frozen=True)
class BumpGeometry:
    """Trapezoid profile: plateau of half-width radius at height, linear
    ramps of the same width on both sides, compactly inside (0, L)."""

    center: float
    radius: float
    height: float

    def __post_init__(self):
        if not (self.radius > 0.0 and self.height > 0.0):
            raise ValueError("bump radius and height must be positive")

    def validate_domain(self, L: float):
        if self.center - 2.0 * self.radius < -1e-12 or self.center + 2.0 * self.radius > L + 1e-12:
            raise GeometryError(
                f"bump support [{self.center - 2 * self.radius:.6g}, "
                f"{self.center + 2 * self.radius:.6g}] leaves the domain (0, {L:.6g})"
            )


@dataclass
class CriticalPoint:
    u: np.ndarray
    energy: float
    m_phi: float
    iterations: int
    status: str
    message: str = ""
    trace: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


@dataclass
class TwoSolutions:
    u1: CriticalPoint
    u2: CriticalPoint
    lambda_star: float | None
    theorem_ok: bool
    multiplicity: bool

    def __iter__(self):
        yield self.u1
        yield self.u2


def default_geometry(L: float, sel: Selection) -> BumpGeometry:
    height = sel.sbar if sel.sbar is not None else 1.0
    return BumpGeometry(center=0.5 * L, radius=0.1 * L, height=height)


def build_bump(mesh: Mesh1D, geom: BumpGeometry) -> np.ndarray:
    geom.validate_domain(mesh.L)
    xs, ys = [0.0], [0.0]
    for x, y in (
        (geom.center - 2.0 * geom.radius, 0.0),
        (geom.center - geom.radius, geom.height),
        (geom.center + geom.radius, geom.height),
        (geom.center + 2.0 * geom.radius, 0.0),
        (mesh.L, 0.0),
    ):
        if x > xs[-1]:
            xs.append(x)
            ys.append(y)
    return np.interp(mesh.nodes, xs, ys)


def lambda_star(mesh: Mesh1D, sel: Selection, geom: BumpGeometry | None = None) -> float | None:
    """Threshold parameter above which the two-solution result applies.

    Ratio of the discrete gradient energy of the trapezoid profile to
    twice its potential gain on the plateau. Undefined (None) when the
    potential at the plateau height is not positive.
    """
    if geom is None:
        geom = default_geometry(mesh.L, sel)
    pot = sel.potential(geom.height)
    if not (pot > 0.0):
        return None
    ubar = build_bump(mesh, geom)
    d = np.diff(np.concatenate([[0.0], ubar, [0.0]]))
    grad_sq = float(d @ d) / mesh.h
    return grad_sq / (2.0 * pot * 2.0 * geom.radius)


# ---------------------------------------------------------------------------
# descent with exact criticality tracking

def _fd_derivative(sel: Selection, u: np.ndarray) -> np.ndarray:
    """Central-difference slope of the selection, frozen near its jumps."""
    delta = 1e-6 * (1.0 + np.abs(u))
    d = (sel.eval_array(u + delta) - sel.eval_array(u - delta)) / (2.0 * delta)
    cuts = sel.cuts
    if cuts:
        dist = np.min(np.abs(u[:, None] - np.asarray(cuts)[None, :]), axis=1)
        d[dist < 10.0 * delta] = 0.0
    return d


def _newton_polish(model: EnergyModel, u: np.ndarray, opts: SolverOptions):
    """Banded semismooth Newton step loop, accepted only on residual decrease."""
    h, lam, n = model.mesh.h, model.lam, model.mesh.n
    best = u.copy()
    best_m = model.min_norm_subgradient(best).m_phi
    for _ in range(opts.newton_iters):
        if best_m <= opts.tol_mphi:
            break
        res = model.min_norm_subgradient(best)
        dpot = _fd_derivative(model.sel, best)
        ab = np.zeros((3, n))
        ab[0, 1:] = -1.0 / h
        ab[1, :] = 2.0 / h - lam * h * dpot
        ab[2, :-1] = -1.0 / h
        try:
            step = solve_banded((1, 1), ab, res.r)
        except (LinAlgError, ValueError):
            break
        if not np.all(np.isfinite(step)):
            break
        t, improved = 1.0, False
        for _ in range(12):
            cand = best - t * step
            m = model.min_norm_subgradient(cand).m_phi
            if m < best_m:
                best, best_m, improved = cand, m, True
                break
            t *= 0.5
        if not improved:
            break
    return best, best_m


def _descend(model: EnergyModel, u0: np.ndarray, opts: SolverOptions) -> CriticalPoint:
    u = np.asarray(u0, dtype=float).copy()
    fu = model.energy(u)
    res = model.min_norm_subgradient(u)
    best_u, best_m, best_f = u.copy(), res.m_phi, fu
    trace = [(0, fu, res.m_phi)]
    prev_u = prev_r = None
    step = opts.step0 * model.mesh.h / 4.0
    status, message = "max_iter", ""
    it = 0

    for it in range(1, opts.max_iter + 1):
        r, m = res.r, res.m_phi
        if m <= opts.tol_mphi:
            status = "converged"
            break
        if not np.isfinite(fu) or np.max(np.abs(u)) > opts.diverge_norm:
            status = "diverged"
            tail = ", ".join(f"{e:.3e}" for _, e, _ in trace[-3:])
            message = (
                f"iterates grew past {opts.diverge_norm:.1e} with energy trend [{tail}]; "
                "the energy appears unbounded below along this ray"
            )
            break

        if prev_u is not None:
            s_vec = u - prev_u
            y_vec = r - prev_r
            sy = float(s_vec @ y_vec)
            if sy > 0.0:
                bb = float(s_vec @ s_vec) / sy if it % 2 else sy / float(y_vec @ y_vec)
                if np.isfinite(bb) and bb > 0.0:
                    step = min(max(bb, 1e-14), 1e6)

        # backtracking with an explicit rounding slack: near machine-level
        # plateaus the Armijo test would otherwise reject every step
        slack = 64.0 * np.finfo(float).eps * (1.0 + abs(fu))
        rr = float(r @ r)
        t = step
        accepted = False
        for _ in range(60):
            cand = u - t * r
            fc = model.energy(cand)
            if fc <= fu - opts.armijo * t * rr + slack:
                accepted = True
                break
            t *= opts.shrink
        if not accepted:
            status = "stalled"
            break

        prev_u, prev_r = u, r
        u, fu = cand, fc
        res = model.min_norm_subgradient(u)
        trace.append((it, fu, res.m_phi))
        if res.m_phi < best_m:
            best_u, best_m, best_f = u.copy(), res.m_phi, fu

    if status in ("max_iter", "stalled", "converged") and opts.newton_polish and best_m > opts.tol_mphi:
        best_u, best_m = _newton_polish(model, best_u, opts)
        best_f = model.energy(best_u)
        trace.append((it, best_f, best_m))

    if best_m <= opts.tol_mphi:
        status = "converged"
        message = message or f"criticality residual {best_m:.3e}"
    elif status == "stalled":
        message = f"line search exhausted at residual {best_m:.3e}"
    return CriticalPoint(
        u=best_u,
        energy=float(best_f),
        m_phi=float(best_m),
        iterations=it,
        status=status,
        message=message,
        trace=trace,
    )


# ---------------------------------------------------------------------------
# global minimization by multistart

def _pick_best(cands: list[CriticalPoint]) -> CriticalPoint:
    """Lowest energy wins; near-ties prefer a positive nodal sum so the
    sign-symmetric pair of a symmetric energy resolves deterministically."""
    ok = [c for c in cands if c.converged] or cands
    e0 = min(c.energy for c in ok)
    tol = 1e-9 * (1.0 + abs(e0))
    tied = [c for c in ok if c.energy <= e0 + tol]
    return max(tied, key=lambda c: float(np.sum(c.u)))


def minimize_global(
    model: EnergyModel,
    starts: list[np.ndarray] | None = None,
    opts: SolverOptions | None = None,
    geom: BumpGeometry | None = None,
) -> CriticalPoint:
    """Multistart descent to the lowest certifiable critical point."""
    opts = opts or SolverOptions()
    if starts is None:
        if geom is None:
            geom = default_geometry(model.mesh.L, model.sel)
        n = model.mesh.n
        bump = build_bump(model.mesh, geom)
        starts = [np.zeros(n), bump, -bump]
        # amplitude scan along the bump ray: the best rescaling often sits
        # in a basin the unit profile misses entirely
        ts = np.geomspace(1e-2, 256.0, 49)
        ts = np.concatenate([ts, -ts])
        if np.any(bump != 0.0):
            energies = model.energy_batch(ts[:, None] * bump[None, :])
            t_best = float(ts[int(np.argmin(energies))])
            starts += [t_best * bump, -t_best * bump]
        rng = np.random.default_rng(opts.seed)
        amp = 2.0 * geom.height
        for _ in range(3):
            starts.append(rng.uniform(-amp, amp, n))
    if not starts:
        raise ValueError("starts must be non-empty")

    cands = [_descend(model, s, opts) for s in starts]
    return _pick_best(cands)


# ---------------------------------------------------------------------------
# mountain pass

def _mesh_norm(model: EnergyModel, v: np.ndarray) -> float:
    d = np.diff(np.concatenate([[0.0], v, [0.0]]))
    return float(np.sqrt((d @ d) / model.mesh.h))


def _anchor_past_barrier(model: EnergyModel, v: np.ndarray) -> np.ndarray:
    """Endpoint for the path: just beyond the energy barrier along t*v.

    Keeping the endpoint close to the barrier keeps the path spacing
    comparable to the saddle scale; a far endpoint starves the barrier
    region of path states.
    """
    ts = np.geomspace(1e-6, 1.5, 256)
    energies = model.energy_batch(ts[:, None] * v[None, :])
    in_unit = ts <= 1.0
    i_peak = int(np.argmax(np.where(in_unit, energies, -np.inf)))
    peak = float(energies[i_peak])
    past = np.nonzero((np.arange(ts.size) > i_peak) & (energies < -abs(peak)))[0]
    if past.size:
        t_far = min(1.25 * float(ts[past[0]]), float(ts[-1]))
    else:
        t_far = float(ts[int(np.argmin(energies))])
    u_far = t_far * v
    if not (model.energy(u_far) < 0.0):
        u_far = float(ts[int(np.argmin(energies))]) * v
    if not (model.energy(u_far) < 0.0):
        raise GeometryError("no downhill anchor past the barrier along the given state")
    return u_far


def _respace(model: EnergyModel, path: np.ndarray) -> np.ndarray:
    segs = np.array([_mesh_norm(model, path[j + 1] - path[j]) for j in range(len(path) - 1)])
    total = float(np.sum(segs))
    if total <= 0.0:
        return path
    c = np.concatenate([[0.0], np.cumsum(segs)])
    targets = np.linspace(0.0, total, len(path))
    out = np.empty_like(path)
    for d in range(path.shape[1]):
        out[:, d] = np.interp(targets, c, path[:, d])
    out[0], out[-1] = path[0], path[-1]
    return out


def mountain_pass(
    model: EnergyModel,
    u_far: np.ndarray,
    opts: SolverOptions | None = None,
) -> CriticalPoint:
    """Saddle point between the zero state and a negative-energy state.

    The supplied far state fixes the ray; the endpoint actually used is
    re-anchored just past the energy barrier along that ray so the path
    spacing matches the saddle scale. The highest interior state of the
    path is relaxed a few descent steps per round, the path is re-spaced
    to uniform length, and a Newton polish is attempted once the top
    state is nearly critical. The polished point is accepted only if it
    stays within a couple of path spacings of the state it refines.
    """
    opts = opts or SolverOptions()
    u_far = np.asarray(u_far, dtype=float)
    if not (model.energy(u_far) < 0.0):
        raise GeometryError("mountain pass needs a strictly negative-energy state")
    u_far = _anchor_past_barrier(model, u_far)

    m_pts = opts.path_points
    path = np.linspace(0.0, 1.0, m_pts)[:, None] * u_far[None, :]
    spacing = _mesh_norm(model, u_far) / (m_pts - 1)
    inner = replace(
        opts, max_iter=opts.mp_inner_iters, newton_polish=False, path_points=opts.path_points
    )

    best: CriticalPoint | None = None
    rounds = 0
    for rounds in range(1, opts.mp_rounds + 1):
        energies = model.energy_batch(path)
        k = int(np.argmax(energies[1:-1])) + 1
        top = path[k]
        res = model.min_norm_subgradient(top)
        cand = CriticalPoint(
            u=top.copy(),
            energy=float(energies[k]),
            m_phi=res.m_phi,
            iterations=rounds,
            status="max_iter",
        )
        if best is None or cand.m_phi < best.m_phi:
            best = cand

        if res.m_phi <= opts.tol_mphi:
            best = cand
            best.status = "converged"
            break

        if res.m_phi <= 1e3 * opts.tol_mphi or rounds == opts.mp_rounds:
            polished, m_pol = _newton_polish(model, top, opts)
            local = _mesh_norm(model, polished - top) <= 2.0 * spacing
            if local and m_pol < best.m_phi:
                best = CriticalPoint(
                    u=polished,
                    energy=model.energy(polished),
                    m_phi=float(m_pol),
                    iterations=rounds,
                    status="converged" if m_pol <= opts.tol_mphi else "max_iter",
                )
                if best.status == "converged":
                    break

        relaxed = _descend(model, top, inner)
        path[k] = relaxed.u
        path = _respace(model, path)

    assert best is not None
    if best.status != "converged":
        best.message = (
            f"saddle residual {best.m_phi:.3e} after {rounds} rounds "
            f"(tolerance {opts.tol_mphi:.1e})"
        )
    else:
        best.message = f"criticality residual {best.m_phi:.3e}"
    return best


# ---------------------------------------------------------------------------
# the two-solution pipeline

def solve_two(
    model: EnergyModel,
    geom: BumpGeometry | None = None,
    opts: SolverOptions | None = None,
) -> TwoSolutions:
    """Negative-energy minimizer plus mountain-pass point, with the
    parameter threshold and a multiplicity verdict."""
    opts = opts or SolverOptions()
    if geom is None:
        geom = default_geometry(model.mesh.L, model.sel)
    lam_star = lambda_star(model.mesh, model.sel, geom)
    theorem_ok = lam_star is not None and model.lam >= lam_star

    u1 = minimize_global(model, opts=opts, geom=geom)
    try:
        far = u1.u if model.energy(u1.u) < 0.0 else build_bump(model.mesh, geom)
        u2 = mountain_pass(model, far, opts)
    except GeometryError as exc:
        u2 = CriticalPoint(
            u=np.zeros(model.mesh.n),
            energy=0.0,
            m_phi=model.min_norm_subgradient(np.zeros(model.mesh.n)).m_phi,
            iterations=0,
            status="stalled",
            message=str(exc),
        )

    # nonzero at desk scale: well above the criticality tolerance in the
    # mesh's natural magnitude
    thresh = 1e3 * opts.tol_mphi * model.mesh.h
    distinct = float(np.max(np.abs(u1.u - u2.u))) > thresh
    multiplicity = (
        u1.converged
        and u2.converged
        and u1.energy < 0.0 < u2.energy
        and float(np.max(np.abs(u1.u))) > thresh
        and float(np.max(np.abs(u2.u))) > thresh
        and distinct
    )
    return TwoSolutions(u1, u2, lam_star, theorem_ok, multiplicity)
