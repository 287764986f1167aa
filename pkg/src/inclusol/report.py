"""Matplotlib figure rendering for the CLI report paths.

Figures are written next to the CSV outputs. The Agg backend is forced
so runs work headless; every function returns the path it wrote.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .discretize import Mesh1D
from .setvalued import IntervalMap
from .selection import Selection

__all__ = ["fig_envelopes", "fig_potential", "fig_solution", "fig_sweep"]


def _save(fig, out_dir: str, name: str) -> str:
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def fig_envelopes(F: IntervalMap, out_dir: str, s_range: tuple[float, float] = (-3.0, 3.0)) -> str:
    s = np.linspace(s_range[0], s_range[1], 801)
    # keep jump verticals out of the curves by splitting at the jumps
    fig, ax = plt.subplots(figsize=(7, 4))
    cuts = [c for c in F.jumps if s_range[0] < c < s_range[1]]
    edges = [s_range[0]] + cuts + [s_range[1]]
    for a, b in zip(edges[:-1], edges[1:]):
        seg = np.linspace(a + 1e-9 * (1 + abs(a)), b - 1e-9 * (1 + abs(b)), 201)
        lo = F.eval_lo_array(seg)
        hi = F.eval_hi_array(seg)
        ax.fill_between(seg, lo, hi, alpha=0.25, color="tab:blue", linewidth=0)
        ax.plot(seg, lo, color="tab:blue", lw=1.2)
        ax.plot(seg, hi, color="tab:orange", lw=1.2)
    for c in cuts:
        lo_c, hi_c = F.eval(c)
        ax.plot([c, c], [lo_c, hi_c], color="tab:red", lw=2.0)
        ax.plot([c], [lo_c], "v", color="tab:blue", ms=5)
        ax.plot([c], [hi_c], "^", color="tab:orange", ms=5)
    ax.set_xlabel("s")
    ax.set_ylabel("F(s)")
    ax.set_title("interval map envelopes")
    ax.grid(alpha=0.3)
    return _save(fig, out_dir, "map_envelopes.png")


def fig_potential(rows: list[dict], out_dir: str) -> str:
    s = np.array([r["s"] for r in rows])
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.fill_between(
        s,
        [r["aumann_min"] for r in rows],
        [r["aumann_max"] for r in rows],
        alpha=0.25,
        color="tab:green",
        label="attainable integrals",
    )
    ax1.plot(s, [r["J_f"] for r in rows], color="tab:red", lw=1.5, label="potential")
    ax1.set_ylabel("integral from 0")
    ax1.legend(loc="best", fontsize=8)
    ax1.grid(alpha=0.3)
    ax2.plot(s, [r["f"] for r in rows], color="tab:blue", lw=1.2, label="selection")
    ax2.plot(s, [r["f_minus"] for r in rows], color="tab:gray", lw=0.8, ls="--", label="one-sided limits")
    ax2.plot(s, [r["f_plus"] for r in rows], color="tab:gray", lw=0.8, ls=":")
    ax2.set_xlabel("s")
    ax2.set_ylabel("f(s)")
    ax2.legend(loc="best", fontsize=8)
    ax2.grid(alpha=0.3)
    fig.suptitle("selection and potential")
    return _save(fig, out_dir, "potential.png")


def fig_solution(
    mesh: Mesh1D,
    u1: np.ndarray,
    w1: np.ndarray,
    u2: np.ndarray,
    w2: np.ndarray,
    out_dir: str,
) -> str:
    x_full = mesh.nodes_full

    def padded(v):
        return np.concatenate([[0.0], v, [0.0]])

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(x_full, padded(u1), color="tab:blue", lw=1.5, label="minimizer")
    ax1.plot(x_full, padded(u2), color="tab:orange", lw=1.5, label="mountain pass")
    ax1.axhline(0.0, color="k", lw=0.5)
    ax1.set_ylabel("u(x)")
    ax1.legend(loc="best", fontsize=8)
    ax1.grid(alpha=0.3)
    ax2.plot(mesh.nodes, w1, color="tab:blue", lw=1.0, label="w (minimizer)")
    ax2.plot(mesh.nodes, w2, color="tab:orange", lw=1.0, label="w (mountain pass)")
    ax2.set_xlabel("x")
    ax2.set_ylabel("w(x)")
    ax2.legend(loc="best", fontsize=8)
    ax2.grid(alpha=0.3)
    fig.suptitle("computed states and their multipliers")
    return _save(fig, out_dir, "solution.png")


def fig_sweep(rows: list[dict], lam_star: float | None, out_dir: str) -> str:
    lam = np.array([r["lambda"] for r in rows])
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(lam, [r["energy1"] for r in rows], "o-", color="tab:blue", ms=3, label="minimizer energy")
    ax1.plot(lam, [r["energy2"] for r in rows], "s-", color="tab:orange", ms=3, label="mountain-pass energy")
    ax1.axhline(0.0, color="k", lw=0.5)
    ax1.set_ylabel("energy")
    ax1.legend(loc="best", fontsize=8)
    ax1.grid(alpha=0.3)
    ax2.plot(lam, [r["norm1"] for r in rows], "o-", color="tab:blue", ms=3, label="|u1| max")
    ax2.plot(lam, [r["norm2"] for r in rows], "s-", color="tab:orange", ms=3, label="|u2| max")
    ax2.set_xlabel("lambda")
    ax2.set_ylabel("max-norm")
    ax2.legend(loc="best", fontsize=8)
    ax2.grid(alpha=0.3)
    if lam_star is not None:
        for ax in (ax1, ax2):
            ax.axvline(lam_star, color="tab:red", lw=1.0, ls="--")
    fig.suptitle("parameter sweep")
    return _save(fig, out_dir, "sweep.png")
