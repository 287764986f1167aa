"""Finite-difference discretization of the inclusion energy on (0, L).

Interior unknowns u_1..u_n live at x_i = i*h with h = L/(n+1); the
boundary values are pinned to zero and enter as ghost entries. The
nonsmooth energy of a nodal vector is

    phi(u) = sum_i (u_{i+1} - u_i)^2 / (2h)  -  lam * h * sum_i J(u_i)

with J the potential of the chosen selection. Criticality is measured
by the distance from the stiffness image to the scaled generalized
derivative box at each node; the minimizing box element also yields the
per-node source values w certifying the inclusion.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .selection import Selection

__all__ = ["Mesh1D", "EnergyModel", "MinNormResult", "interp_nodal"]


@dataclass(frozen=True)
class Mesh1D:
    L: float
    n: int

    def __post_init__(self):
        if not (self.L > 0.0 and np.isfinite(self.L)):
            raise ValueError("domain length L must be positive and finite")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError("need at least one interior node")

    @property
    def h(self) -> float:
        return self.L / (self.n + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Interior node abscissae x_1..x_n."""
        return self.h * np.arange(1, self.n + 1)

    @cached_property
    def nodes_full(self) -> np.ndarray:
        return self.h * np.arange(0, self.n + 2)


@dataclass
class MinNormResult:
    r: np.ndarray
    m_phi: float
    xi: np.ndarray
    w: np.ndarray
    box_lo: np.ndarray
    box_hi: np.ndarray
    jump_nodes: int


def interp_nodal(mesh_src: Mesh1D, u: np.ndarray, mesh_dst: Mesh1D) -> np.ndarray:
    """Piecewise-linear transfer of an interior nodal vector between meshes."""
    full = np.concatenate([[0.0], np.asarray(u, dtype=float), [0.0]])
    return np.interp(mesh_dst.nodes, mesh_src.nodes_full, full)


class EnergyModel:
    def __init__(self, mesh: Mesh1D, sel: Selection, lam: float, use_table: bool = True):
        if not (lam > 0.0 and np.isfinite(lam)):
            raise ValueError("lam must be positive and finite")
        self.mesh = mesh
        self.sel = sel
        self.lam = float(lam)
        self.use_table = bool(use_table)

    def _check_shape(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.mesh.n,):
            raise ValueError(
                f"nodal vector has shape {u.shape}, mesh expects ({self.mesh.n},)"
            )
        return u

    def _potentials(self, u: np.ndarray) -> np.ndarray:
        if self.use_table:
            return self.sel.get_table().eval(u)
        out = np.array([self.sel.potential(float(s)) for s in np.ravel(u)])
        return out.reshape(np.shape(u))

    # -- energy ------------------------------------------------------------

    def dirichlet_term(self, u: np.ndarray) -> float:
        u = self._check_shape(u)
        d = np.diff(np.concatenate([[0.0], u, [0.0]]))
        return float(d @ d) / (2.0 * self.mesh.h)

    def potential_term(self, u: np.ndarray) -> float:
        u = self._check_shape(u)
        return self.mesh.h * float(np.sum(self._potentials(u)))

    def energy(self, u: np.ndarray) -> float:
        return self.dirichlet_term(u) - self.lam * self.potential_term(u)

    def energy_batch(self, U: np.ndarray) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        if U.ndim != 2 or U.shape[1] != self.mesh.n:
            raise ValueError(
                f"batch has shape {U.shape}, mesh expects (m, {self.mesh.n})"
            )
        pad = np.zeros((U.shape[0], 1))
        d = np.diff(np.hstack([pad, U, pad]), axis=1)
        dirichlet = np.sum(d * d, axis=1) / (2.0 * self.mesh.h)
        pots = np.sum(self._potentials(U), axis=1)
        return dirichlet - self.lam * self.mesh.h * pots

    # -- criticality --------------------------------------------------------

    def stiffness_apply(self, u: np.ndarray) -> np.ndarray:
        u = self._check_shape(u)
        full = np.concatenate([[0.0], u, [0.0]])
        return (2.0 * u - full[:-2] - full[2:]) / self.mesh.h

    def clarke_bounds(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
        """Per-node generalized derivative interval of J, plus jump count."""
        u = self._check_shape(u)
        v = self.sel.eval_array(u)
        f_lo = v.copy()
        f_hi = v.copy()
        cuts = self.sel.cuts
        jumps = 0
        if cuts:
            on_cut = np.isin(u, np.asarray(cuts))
            for i in np.nonzero(on_cut)[0]:
                a, b = self.sel.clarke_interval(float(u[i]))
                f_lo[i], f_hi[i] = a, b
            jumps = int(np.count_nonzero(on_cut))
        return f_lo, f_hi, jumps

    def min_norm_subgradient(self, u: np.ndarray) -> MinNormResult:
        """Distance from the stiffness image to the admissible source box.

        r is the unique minimum-norm residual g - xi over xi in the box
        lam*h*[f_minus(u_i), f_plus(u_i)]; its Euclidean length is the
        criticality measure, zero exactly at discrete critical points.
        """
        u = self._check_shape(u)
        g = self.stiffness_apply(u)
        f_lo, f_hi, jumps = self.clarke_bounds(u)
        scale = self.lam * self.mesh.h
        box_lo = scale * f_lo
        box_hi = scale * f_hi
        xi = np.clip(g, box_lo, box_hi)
        r = g - xi
        return MinNormResult(
            r=r,
            m_phi=float(np.linalg.norm(r)),
            xi=xi,
            w=xi / scale,
            box_lo=box_lo,
            box_hi=box_hi,
            jump_nodes=jumps,
        )
