"""Flat key=value problem configuration.

One assignment per line, ``#`` starts a comment, keys are dotted paths.
List values are comma separated; commas inside parentheses belong to
the expression, not the list. Point values use ``s:lo:hi`` triples.
Every key is validated against the known schema so typos fail loudly
and error messages always name the offending key.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .discretize import Mesh1D
from .setvalued import IntervalMap, MapConstructionError, PiecewiseFn
from .selection import Selection, SelectionError
from .solvers import BumpGeometry, SolverOptions

__all__ = ["ConfigError", "Config", "split_top_level", "KNOWN_KEYS"]


class ConfigError(ValueError):
    pass


_SOLVER_KEYS = {
    "tol_mphi": float,
    "max_iter": int,
    "step0": float,
    "armijo": float,
    "shrink": float,
    "path_points": int,
    "seed": int,
}

KNOWN_KEYS = frozenset(
    [
        "domain.length",
        "mesh.n",
        "F.odd",
        "F.lo.breaks",
        "F.lo.branches",
        "F.hi.breaks",
        "F.hi.branches",
        "F.point_values",
        "selection.strategy",
        "selection.sbar",
        "selection.custom",
        "lambda",
        "lambda.start",
        "lambda.stop",
        "lambda.count",
        "bump.xbar",
        "bump.rho",
        "growth.p",
        "growth.range",
        "growth.samples",
        "growth.cap",
        "output.dir",
    ]
    + [f"solver.{k}" for k in _SOLVER_KEYS]
)

_REQUIRED = object()


def split_top_level(value: str) -> list[str]:
    """Split on commas that sit outside any parentheses."""
    items, depth, cur = [], 0, []
    for ch in value:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ConfigError(f"unbalanced ')' in value {value!r}")
        if ch == "," and depth == 0:
            items.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ConfigError(f"unbalanced '(' in value {value!r}")
    items.append("".join(cur).strip())
    if any(not it for it in items):
        raise ConfigError(f"empty list item in value {value!r}")
    return items


class Config:
    def __init__(self, raw: dict[str, str], source: str = "<config>"):
        self.raw = dict(raw)
        self.source = source
        unknown = sorted(set(self.raw) - KNOWN_KEYS)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "Config":
        raw: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
            key, value = body.split("=", 1)
            key, value = key.strip(), value.strip()
            if not key or not value:
                raise ConfigError(f"{source}:{lineno}: empty key or value")
            if key in raw:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
            raw[key] = value
        return cls(raw, source)

    @classmethod
    def from_file(cls, path: str) -> "Config":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read(), source=path)

    # -- typed getters -----------------------------------------------------

    def has(self, key: str) -> bool:
        return key in self.raw

    def _get(self, key: str, default):
        if key in self.raw:
            return self.raw[key]
        if default is _REQUIRED:
            raise ConfigError(f"config key {key!r} is required")
        return None

    def get_str(self, key: str, default=_REQUIRED) -> str | None:
        v = self._get(key, default)
        return default if v is None else v

    def get_float(self, key: str, default=_REQUIRED):
        v = self._get(key, default)
        if v is None:
            return default
        try:
            x = float(v)
        except ValueError:
            raise ConfigError(f"config key {key!r}: {v!r} is not a number") from None
        if not np.isfinite(x):
            raise ConfigError(f"config key {key!r}: value must be finite")
        return x

    def get_int(self, key: str, default=_REQUIRED):
        v = self._get(key, default)
        if v is None:
            return default
        try:
            return int(v)
        except ValueError:
            raise ConfigError(f"config key {key!r}: {v!r} is not an integer") from None

    def get_bool(self, key: str, default=_REQUIRED):
        v = self._get(key, default)
        if v is None:
            return default
        low = v.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"config key {key!r}: {v!r} is not a boolean")

    def get_float_list(self, key: str, default=_REQUIRED):
        v = self._get(key, default)
        if v is None:
            return default
        try:
            return [float(x) for x in split_top_level(v)]
        except ValueError:
            raise ConfigError(f"config key {key!r}: expected comma-separated numbers, got {v!r}") from None

    def get_str_list(self, key: str, default=_REQUIRED):
        v = self._get(key, default)
        if v is None:
            return default
        try:
            return split_top_level(v)
        except ConfigError as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from None

    # -- builders ------------------------------------------------------------

    def build_map(self) -> IntervalMap:
        odd = self.get_bool("F.odd", False)
        validate_from = 0.0 if odd else None

        def piecewise(side: str) -> PiecewiseFn:
            breaks = self.get_float_list(f"F.{side}.breaks", [])
            branches = self.get_str_list(f"F.{side}.branches")
            pv = [None] * len(breaks)
            for s, lo_v, hi_v in self._point_values():
                if s in breaks:
                    pv[breaks.index(s)] = lo_v if side == "lo" else hi_v
                else:
                    raise ConfigError(
                        f"config key 'F.point_values': s={s!r} is not a breakpoint of F.{side}"
                    )
            try:
                return PiecewiseFn(breaks, branches, pv, validate_from=validate_from)
            except (MapConstructionError, ValueError) as exc:
                raise ConfigError(f"config key 'F.{side}.branches': {exc}") from None

        lo = piecewise("lo")
        hi = piecewise("hi")
        try:
            return IntervalMap(lo, hi, odd=odd)
        except MapConstructionError as exc:
            raise ConfigError(f"invalid interval map: {exc}") from None

    def _point_values(self) -> list[tuple[float, float, float]]:
        raw = self.get_str("F.point_values", None)
        if raw is None:
            return []
        triples = []
        for item in split_top_level(raw):
            parts = item.split(":")
            if len(parts) != 3:
                raise ConfigError(
                    f"config key 'F.point_values': expected s:lo:hi, got {item!r}"
                )
            try:
                triples.append(tuple(float(p) for p in parts))
            except ValueError:
                raise ConfigError(
                    f"config key 'F.point_values': non-numeric entry in {item!r}"
                ) from None
        return triples

    def build_selection(self, F: IntervalMap) -> Selection:
        strategy = self.get_str("selection.strategy", "min")
        sbar = self.get_float("selection.sbar", None)
        expr = self.get_str("selection.custom", None)
        try:
            return Selection(F, strategy, sbar=sbar, expr=expr)
        except SelectionError as exc:
            raise ConfigError(f"config key 'selection.strategy': {exc}") from None

    def build_mesh(self, n_override: int | None = None) -> Mesh1D:
        L = self.get_float("domain.length", 1.0)
        n = n_override if n_override is not None else self.get_int("mesh.n", 199)
        try:
            return Mesh1D(L=L, n=int(n))
        except ValueError as exc:
            raise ConfigError(f"config key 'mesh.n': {exc}") from None

    def build_solver_options(self, seed_override: int | None = None) -> SolverOptions:
        kwargs = {}
        for name, typ in _SOLVER_KEYS.items():
            key = f"solver.{name}"
            if self.has(key):
                kwargs[name] = self.get_int(key) if typ is int else self.get_float(key)
        if seed_override is not None:
            kwargs["seed"] = int(seed_override)
        try:
            return SolverOptions(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"solver options: {exc}") from None

    def build_geometry(self, mesh: Mesh1D, sel: Selection) -> BumpGeometry:
        xbar = self.get_float("bump.xbar", 0.5 * mesh.L)
        rho = self.get_float("bump.rho", 0.1 * mesh.L)
        height = sel.sbar if sel.sbar is not None else self.get_float("selection.sbar", 1.0)
        try:
            return BumpGeometry(center=xbar, radius=rho, height=height)
        except ValueError as exc:
            raise ConfigError(f"config key 'bump.rho': {exc}") from None

    def lambda_values(self, override: float | None = None) -> list[float]:
        """Resolve lambda: CLI override, scalar key, or sweep spec."""
        if override is not None:
            return [float(override)]
        if self.has("lambda"):
            return [self.get_float("lambda")]
        if self.has("lambda.start") or self.has("lambda.stop") or self.has("lambda.count"):
            start = self.get_float("lambda.start")
            stop = self.get_float("lambda.stop")
            count = self.get_int("lambda.count")
            if count < 1:
                raise ConfigError("config key 'lambda.count': must be at least 1")
            if count == 1:
                return [start]
            return [float(x) for x in np.linspace(start, stop, count)]
        raise ConfigError("config key 'lambda': required (scalar or start/stop/count sweep)")

    def growth_spec(self) -> tuple[float, tuple[float, float], int, float | None]:
        p = self.get_float("growth.p", 2.0)
        rng = self.get_float_list("growth.range", [-10.0, 10.0])
        if len(rng) != 2 or not rng[0] < rng[1]:
            raise ConfigError("config key 'growth.range': expected 'min,max' with min < max")
        samples = self.get_int("growth.samples", 2001)
        if samples < 2:
            raise ConfigError("config key 'growth.samples': need at least 2")
        cap = self.get_float("growth.cap", None)
        return p, (rng[0], rng[1]), samples, cap

    def sbar_for_checks(self) -> float:
        sbar = self.get_float("selection.sbar", None)
        return sbar if sbar is not None else 1.0
