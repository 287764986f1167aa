"""Command-line front end.

Subcommands: check, potential, solve, sweep, verify. Every run is
driven by a flat key=value config file; CSV outputs carry ``# key:
value`` metadata lines, a mandatory header row, and 17-significant-
digit floats so identical config + seed reproduces identical bytes.
Figures are rendered next to the CSVs unless --no-figures is given.

Exit codes: 0 success, 1 hypothesis or verification failure, 2 theorem
precondition unmet (lambda below the computed threshold), 3 solver
found no genuine multiplicity, 4 configuration or internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .config import Config, ConfigError
from .discretize import EnergyModel, Mesh1D
from .quadrature import QuadratureError
from .selection import Selection
from .setvalued import check_growth, check_hypotheses, check_usc, aumann
from .solvers import lambda_star, solve_two
from .verify import certify

CERT_TOL = 1e-6

__all__ = ["main"]


def _f(v) -> str:
    return "%.17g" % float(v)


def _write_csv(path, metadata, header, rows):
    lines = [f"# {k}: {v}" for k, v in metadata.items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else _f(cell) for cell in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _config_sha(cfg: Config, overrides: dict) -> str:
    payload = json.dumps({"raw": cfg.raw, "overrides": overrides}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _out_dir(args, cfg: Config) -> str:
    out = args.out or cfg.get_str("output.dir", "out")
    os.makedirs(out, exist_ok=True)
    return out


def _load(args) -> Config:
    return Config.from_file(args.config)


# ---------------------------------------------------------------------------
# check

def cmd_check(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    F = cfg.build_map()
    p, rng, samples, cap = cfg.growth_spec()

    usc = check_usc(F)
    growth = check_growth(F, p, rng, samples, cap)
    hyp = check_hypotheses(F, cfg.sbar_for_checks())

    print(usc)
    print(growth)
    print(hyp)

    report_doc = {
        "usc": {
            "ok": usc.ok,
            "violations": [
                {"s": v.s, "kind": v.kind, "detail": v.detail} for v in usc.violations
            ],
            "checked_jumps": list(usc.checked_jumps),
            "grid_points": usc.grid_points,
        },
        "growth": {
            "a": growth.bound.a,
            "p": growth.bound.p,
            "argmax_s": growth.argmax_s,
            "ok": growth.ok,
        },
        "hypotheses": {
            c.name: {"ok": c.ok, "detail": c.detail} for c in hyp.checks()
        },
        "overall_ok": usc.ok and growth.ok and hyp.ok,
    }
    with open(os.path.join(out, "check_report.json"), "w", encoding="utf-8") as fh:
        json.dump(report_doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if not args.no_figures:
        from . import report

        report.fig_envelopes(F, out)
    print(f"overall: {'ok' if report_doc['overall_ok'] else 'FAILED'}")
    return 0 if report_doc["overall_ok"] else 1


# ---------------------------------------------------------------------------
# potential

def cmd_potential(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    F = cfg.build_map()
    sel = cfg.build_selection(F)

    try:
        a, b = (float(x) for x in args.range.split(","))
    except ValueError:
        print(f"invalid --range {args.range!r}, expected 'min,max'", file=sys.stderr)
        return 4
    if not (b > a) or args.samples < 2:
        print("need --range min < max and --samples >= 2", file=sys.stderr)
        return 4

    rows, row_errors = [], []
    for s in np.linspace(a, b, args.samples):
        s = float(s)
        try:
            f_minus, f_plus = sel.essential_limits(s)
            row = {
                "s": s,
                "f": sel.eval(s),
                "f_minus": f_minus,
                "f_plus": f_plus,
                "J_f": sel.potential(s),
            }
            am, ax_ = aumann(F, s)
            row["aumann_min"], row["aumann_max"] = am, ax_
            rows.append(row)
        except (QuadratureError, RuntimeError, ValueError) as exc:
            row_errors.append(f"s={_f(s)}: {exc}")
            rows.append(
                dict(s=s, f=np.nan, f_minus=np.nan, f_plus=np.nan,
                     J_f=np.nan, aumann_min=np.nan, aumann_max=np.nan)
            )

    meta = {
        "generated_by": f"inclusol {__version__}",
        "config_sha256": _config_sha(cfg, {"range": args.range, "samples": args.samples}),
        "strategy": sel.strategy,
        "range": f"{_f(a)}..{_f(b)}",
        "samples": str(args.samples),
    }
    for err in row_errors:
        meta[f"row_error_{len(meta)}"] = err
    header = ["s", "f", "f_minus", "f_plus", "J_f", "aumann_min", "aumann_max"]
    _write_csv(
        os.path.join(out, "potential.csv"),
        meta,
        header,
        [[r[k] for k in header] for r in rows],
    )
    if not args.no_figures:
        from . import report

        report.fig_potential(rows, out)
    for err in row_errors:
        print(f"warning: {err}", file=sys.stderr)
    print(f"wrote {os.path.join(out, 'potential.csv')} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------------------
# solve

def _solve_once(cfg: Config, lam: float, args):
    mesh = cfg.build_mesh(args.mesh)
    F = cfg.build_map()
    sel = cfg.build_selection(F)
    geom = cfg.build_geometry(mesh, sel)
    opts = cfg.build_solver_options(args.seed)
    model = EnergyModel(mesh, sel, lam)
    result = solve_two(model, geom, opts)
    cert1 = certify(model, result.u1.u, CERT_TOL)
    cert2 = certify(model, result.u2.u, CERT_TOL)
    return mesh, model, result, cert1, cert2


def cmd_solve(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    lams = cfg.lambda_values(args.lam)
    lam = lams[0]
    start = time.perf_counter()
    mesh, model, result, cert1, cert2 = _solve_once(cfg, lam, args)
    wall = time.perf_counter() - start

    res1 = model.min_norm_subgradient(result.u1.u)
    res2 = model.min_norm_subgradient(result.u2.u)
    meta = {
        "generated_by": f"inclusol {__version__}",
        "config_sha256": _config_sha(cfg, {"lambda": lam, "mesh": args.mesh, "seed": args.seed}),
        "L": _f(mesh.L),
        "n": str(mesh.n),
        "lambda": _f(lam),
        "lambda_star": _f(result.lambda_star) if result.lambda_star is not None else "undefined",
    }
    rows = list(zip(mesh.nodes, result.u1.u, res1.w, result.u2.u, res2.w))
    _write_csv(os.path.join(out, "solution.csv"), meta, ["x", "u1", "w1", "u2", "w2"], rows)

    summary = {
        "config_sha256": meta["config_sha256"],
        "lambda": lam,
        "lambda_star": result.lambda_star,
        "theorem_ok": result.theorem_ok,
        "multiplicity": result.multiplicity,
        "wall_time_s": wall,
        "points": {
            name: {
                "energy": cp.energy,
                "m_phi": cp.m_phi,
                "norm_inf": float(np.max(np.abs(cp.u))),
                "status": cp.status,
                "iterations": cp.iterations,
                "verdict": cert.verdict,
                "inclusion_slack": cert.inclusion_slack,
                "shrink_slack": cert.shrink_slack,
                "jump_nodes": cert.jump_nodes,
            }
            for name, cp, cert in (("minimizer", result.u1, cert1), ("mountain_pass", result.u2, cert2))
        },
    }
    with open(os.path.join(out, "solve_summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if not args.no_figures:
        from . import report

        report.fig_solution(mesh, result.u1.u, res1.w, result.u2.u, res2.w, out)

    star = _f(result.lambda_star) if result.lambda_star is not None else "undefined"
    print(f"lambda = {_f(lam)}, lambda_star = {star}")
    for name, cp, cert in (("minimizer", result.u1, cert1), ("mountain pass", result.u2, cert2)):
        print(
            f"{name}: energy {cp.energy:.8g}, m_phi {cp.m_phi:.3e}, "
            f"status {cp.status}, certificate {'ok' if cert.verdict else 'FAILED'}"
        )

    if result.lambda_star is not None and lam < result.lambda_star:
        print(
            f"warning: lambda {_f(lam)} below threshold {_f(result.lambda_star)}; "
            "existence of two solutions is not guaranteed here",
            file=sys.stderr,
        )
        return 2
    if not (cert1.verdict and cert2.verdict):
        print("verification failed for at least one point", file=sys.stderr)
        return 1
    if not result.multiplicity:
        print("no multiplicity: the two searches did not produce distinct nonzero states", file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------------------
# sweep

def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    lams = cfg.lambda_values(args.lam)

    mesh = cfg.build_mesh(args.mesh)
    F = cfg.build_map()
    sel = cfg.build_selection(F)
    geom = cfg.build_geometry(mesh, sel)
    lam_star = lambda_star(mesh, sel, geom)

    rows, row_errors = [], []
    for lam in lams:
        try:
            opts = cfg.build_solver_options(args.seed)
            model = EnergyModel(mesh, sel, float(lam))
            result = solve_two(model, geom, opts)
            cert1 = certify(model, result.u1.u, CERT_TOL)
            cert2 = certify(model, result.u2.u, CERT_TOL)
            rows.append(
                {
                    "lambda": float(lam),
                    "energy1": result.u1.energy,
                    "energy2": result.u2.energy,
                    "norm1": float(np.max(np.abs(result.u1.u))),
                    "norm2": float(np.max(np.abs(result.u2.u))),
                    "mphi1": result.u1.m_phi,
                    "mphi2": result.u2.m_phi,
                    "verdicts": ("T" if cert1.verdict else "F") + ("T" if cert2.verdict else "F"),
                }
            )
        except (ValueError, RuntimeError) as exc:
            row_errors.append(f"lambda={_f(lam)}: {exc}")
            row = {k: np.nan for k in ("energy1", "energy2", "norm1", "norm2", "mphi1", "mphi2")}
            row["lambda"] = float(lam)
            row["verdicts"] = "EE"
            rows.append(row)

    meta = {
        "generated_by": f"inclusol {__version__}",
        "config_sha256": _config_sha(cfg, {"mesh": args.mesh, "seed": args.seed, "lambda": args.lam}),
        "L": _f(mesh.L),
        "n": str(mesh.n),
        "lambda_star": _f(lam_star) if lam_star is not None else "undefined",
        "norm_columns": "max-norm of interior node values",
    }
    for err in row_errors:
        meta[f"row_error_{len(meta)}"] = err
    header = ["lambda", "energy1", "energy2", "norm1", "norm2", "mphi1", "mphi2", "verdicts"]
    _write_csv(
        os.path.join(out, "sweep.csv"),
        meta,
        header,
        [[r[k] for k in header] for r in rows],
    )
    if not args.no_figures:
        from . import report

        report.fig_sweep([r for r in rows if r["verdicts"] != "EE"], lam_star, out)

    for err in row_errors:
        print(f"warning: {err}", file=sys.stderr)
    print(f"wrote {os.path.join(out, 'sweep.csv')} ({len(rows)} rows)")

    ok = True
    for r in rows:
        if r["verdicts"] == "EE":
            ok = False
        elif lam_star is not None and r["lambda"] >= lam_star and r["verdicts"] != "TT":
            ok = False
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# verify

def _read_solution_csv(path: str) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ConfigError(f"solution file {path!r} has no data")
    header = [c.strip() for c in lines[0].split(",")]
    data = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ConfigError(f"solution file {path!r}: ragged rows")
    return {name: data[:, i] for i, name in enumerate(header)}


def cmd_verify(args) -> int:
    cfg = _load(args)
    _out_dir(args, cfg)
    cols = _read_solution_csv(args.solution)
    if "u1" not in cols:
        print("solution file must have a 'u1' column", file=sys.stderr)
        return 4

    mesh = cfg.build_mesh(args.mesh)
    n_rows = cols["u1"].shape[0]
    if n_rows != mesh.n:
        print(
            f"dimension mismatch: solution has {n_rows} rows, mesh expects {mesh.n}",
            file=sys.stderr,
        )
        return 4

    F = cfg.build_map()
    sel = cfg.build_selection(F)
    lam = cfg.lambda_values(args.lam)[0]
    model = EnergyModel(mesh, sel, lam)

    all_ok = True
    for name in ("u1", "u2"):
        if name not in cols:
            continue
        cert = certify(model, cols[name], CERT_TOL)
        print(f"{name}: {cert}")
        all_ok = all_ok and cert.verdict
    return 0 if all_ok else 1


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inclusol",
        description="Solve and certify one-dimensional elliptic differential inclusions.",
    )
    parser.add_argument("--version", action="version", version=f"inclusol {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_lambda=True):
        p.add_argument("--config", required=True, help="path to the key=value config file")
        p.add_argument("--out", default=None, help="output directory (default: output.dir or 'out')")
        p.add_argument("--seed", type=int, default=None, help="override solver.seed")
        p.add_argument("--mesh", type=int, default=None, help="override mesh.n")
        p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
        if with_lambda:
            p.add_argument("--lambda", dest="lam", type=float, default=None, help="override lambda")

    p_check = sub.add_parser("check", help="verify map hypotheses (usc, growth, structure)")
    common(p_check, with_lambda=False)
    p_check.set_defaults(func=cmd_check, lam=None)

    p_pot = sub.add_parser("potential", help="tabulate selection, limits, potential, attainable integrals")
    common(p_pot, with_lambda=False)
    p_pot.add_argument("--range", default="-3,3", help="sampling range 'min,max'")
    p_pot.add_argument("--samples", type=int, default=601, help="number of samples")
    p_pot.set_defaults(func=cmd_potential, lam=None)

    p_solve = sub.add_parser("solve", help="compute and certify the two critical points")
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="solve across a lambda sweep")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="re-certify a solution CSV")
    common(p_verify)
    p_verify.add_argument("--solution", required=True, help="CSV with x,u1[,w1,u2,w2] columns")
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
