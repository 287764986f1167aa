"""Certification of computed states against the original inclusion.

A state u is accepted when the stiffness image matches an admissible
source lam*h*w with w_i inside F(u_i) at every node, up to tolerance.
The certificate also reports the distance to the smaller interval the
variational method actually uses (the generalized derivative of the
selection's potential) and whether that interval sits inside the full
band, which ties the computed criticality back to the inclusion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretize import EnergyModel

__all__ = ["Certificate", "certify", "extract_w"]


@dataclass
class Certificate:
    residual_norm: float
    inclusion_slack: float
    shrink_slack: float
    w: np.ndarray
    verdict: bool
    jump_nodes: int
    consistent: bool
    tol: float

    def __str__(self):
        flag = "CERTIFIED" if self.verdict else "NOT CERTIFIED"
        return (
            f"{flag}: residual {self.residual_norm:.3e}, "
            f"inclusion slack {self.inclusion_slack:.3e}, "
            f"shrink slack {self.shrink_slack:.3e}, "
            f"jump nodes {self.jump_nodes}, "
            f"containment {'ok' if self.consistent else 'violated'} "
            f"(tol {self.tol:.1e})"
        )


def _band_distance(w: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    below = np.maximum(lo - w, 0.0)
    above = np.maximum(w - hi, 0.0)
    return float(np.max(np.maximum(below, above), initial=0.0))


def extract_w(model: EnergyModel, u: np.ndarray) -> np.ndarray:
    """Per-node source values w with stiffness(u) ~ lam*h*w at criticality."""
    return model.min_norm_subgradient(u).w


def certify(model: EnergyModel, u: np.ndarray, tol: float = 1e-6) -> Certificate:
    u = np.asarray(u, dtype=float)
    res = model.min_norm_subgradient(u)
    f_lo, f_hi, _ = model.clarke_bounds(u)
    band_lo = model.sel.F.eval_lo_array(u)
    band_hi = model.sel.F.eval_hi_array(u)

    inclusion_slack = _band_distance(res.w, band_lo, band_hi)
    shrink_slack = _band_distance(res.w, f_lo, f_hi)
    ctol = 1e-9 * (1.0 + float(np.max(np.abs(band_lo))) + float(np.max(np.abs(band_hi))))
    consistent = bool(np.all(f_lo >= band_lo - ctol) and np.all(f_hi <= band_hi + ctol))

    return Certificate(
        residual_norm=res.m_phi,
        inclusion_slack=inclusion_slack,
        shrink_slack=shrink_slack,
        w=res.w,
        verdict=bool(res.m_phi <= tol and inclusion_slack <= tol),
        jump_nodes=res.jump_nodes,
        consistent=consistent,
        tol=tol,
    )
