"""Increasing concave functions on [0, inf) and their elementary calculus.

A :class:`ConcaveFn` is one of four kinds:

* ``power``      t -> t**alpha, 0 < alpha <= 1
* ``log1p``      t -> log(1 + t)
* ``phi_zero``   t -> t*log(e^2/t) on (0, 1), 2*log(e*t) on [1, inf)
* ``pwl``        piecewise linear through a list of knots

Every kind carries a positive ``scale`` multiplier so that closed-form
optimal ranges such as ``alpha*e**(1-alpha) * t**alpha`` stay in the
closed-form family.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BadSpec, EmptyInput

KINDS = ("power", "log1p", "phi_zero", "pwl")

# relative tolerance used by every concavity / monotonicity diagnostic
CONCAVITY_RTOL = 1e-9


def geometric_grid(lo: float = 1e-12, hi: float = 1e12, points: int = 241) -> np.ndarray:
    return np.geomspace(lo, hi, points)


DEFAULT_PROBE_GRID = geometric_grid()


@dataclass(frozen=True)
class ConcaveFn:
    kind: str
    alpha: float = 1.0
    knots: tuple = ()
    scale: float = 1.0
    _t: np.ndarray = field(default=None, repr=False, compare=False)
    _v: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadSpec(f"unknown kind {self.kind!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise BadSpec("scale must be positive and finite")
        if self.kind == "power" and not (0 < self.alpha <= 1):
            raise BadSpec("power exponent must lie in (0, 1]")
        if self.kind == "pwl":
            if len(self.knots) == 0:
                raise EmptyInput("piecewise linear function needs at least one knot")
            t = np.array([float(k[0]) for k in self.knots])
            v = np.array([float(k[1]) for k in self.knots])
            if np.any(t < 0) or np.any(v < 0) or not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
                raise BadSpec("knots must be finite and nonnegative")
            if np.any(np.diff(t) <= 0):
                raise BadSpec("knot abscissae must be strictly increasing")
            if t[0] > 0:
                t = np.concatenate([[0.0], t])
                v = np.concatenate([[0.0], v])
            elif v[0] != 0:
                raise BadSpec("a knot at t=0 must have value 0")
            object.__setattr__(self, "_t", t)
            object.__setattr__(self, "_v", v)
            object.__setattr__(self, "knots", tuple((float(a), float(b)) for a, b in self.knots))

    # -- constructors ---------------------------------------------------
    @classmethod
    def power(cls, alpha: float, scale: float = 1.0) -> "ConcaveFn":
        return cls("power", alpha=float(alpha), scale=float(scale))

    @classmethod
    def log1p(cls, scale: float = 1.0) -> "ConcaveFn":
        return cls("log1p", scale=float(scale))

    @classmethod
    def phi_zero(cls, scale: float = 1.0) -> "ConcaveFn":
        return cls("phi_zero", scale=float(scale))

    @classmethod
    def pwl(cls, knots: Iterable[Sequence[float]], scale: float = 1.0) -> "ConcaveFn":
        return cls("pwl", knots=tuple(tuple(k) for k in knots), scale=float(scale))

    # -- evaluation -----------------------------------------------------
    @property
    def final_slope(self) -> float:
        """Slope used beyond the last knot (pwl only), clamped at zero."""
        t, v = self._t, self._v
        if len(t) < 2:
            return 0.0
        return max(0.0, (v[-1] - v[-2]) / (t[-1] - t[-2]))

    def _raw(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "power":
            return np.power(t, self.alpha)
        if self.kind == "log1p":
            return np.log1p(t)
        if self.kind == "phi_zero":
            with np.errstate(divide="ignore", invalid="ignore"):
                small = t * (2.0 - np.log(np.where(t > 0, t, 1.0)))
                big = 2.0 * (1.0 + np.log(np.where(t >= 1, t, 1.0)))
            return np.where(t < 1, small, big)
        kt, kv = self._t, self._v
        out = np.interp(t, kt, kv)
        return np.where(t > kt[-1], kv[-1] + self.final_slope * (t - kt[-1]), out)

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = self.scale * self._raw(np.maximum(arr, 0.0))
        out = np.where(arr <= 0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def derivative(self, t):
        """Right derivative on (0, inf)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            d = self.alpha * np.power(t, self.alpha - 1.0)
        elif self.kind == "log1p":
            d = 1.0 / (1.0 + t)
        elif self.kind == "phi_zero":
            d = np.where(t < 1, 1.0 - np.log(np.minimum(t, 1.0)), 2.0 / np.maximum(t, 1.0))
        else:
            kt, kv = self._t, self._v
            slopes = np.append(np.diff(kv) / np.diff(kt), self.final_slope)
            idx = np.clip(np.searchsorted(kt, t, side="right") - 1, 0, len(slopes) - 1)
            d = slopes[idx]
        d = self.scale * d
        return float(d) if d.ndim == 0 else d

    def scaled(self, c: float) -> "ConcaveFn":
        return ConcaveFn(self.kind, alpha=self.alpha, knots=self.knots, scale=self.scale * c)

    # -- serialization --------------------------------------------------
    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "power":
            d["alpha"] = self.alpha
        if self.kind == "pwl":
            d["knots"] = [list(k) for k in self.knots]
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ConcaveFn":
        if not isinstance(d, dict) or "kind" not in d:
            raise BadSpec(f"not a concave function spec: {d!r}")
        kind = d["kind"]
        scale = float(d.get("scale", 1.0))
        try:
            if kind == "power":
                return cls.power(float(d["alpha"]), scale)
            if kind == "log1p":
                return cls.log1p(scale)
            if kind == "phi_zero":
                return cls.phi_zero(scale)
            if kind == "pwl":
                return cls.pwl(d["knots"], scale)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, BadSpec):
                raise
            raise BadSpec(f"malformed spec {d!r}: {exc}") from exc
        raise BadSpec(f"unknown kind {kind!r}")

    @classmethod
    def from_json(cls, text: str) -> "ConcaveFn":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise BadSpec(f"invalid JSON: {exc}") from exc


@dataclass(frozen=True)
class ConcavityDiagnostic:
    passed: bool
    first_violation: tuple | None
    grid: str


def check_concave_increasing(f: ConcaveFn, grid) -> ConcavityDiagnostic:
    """Check monotonicity, chord-slope concavity and t -> f(t)/t decrease on a grid.

    Failures are reported, never raised.
    """
    g = np.asarray(grid, dtype=float)
    desc = f"{len(g)} points on [{g[0]:.3g}, {g[-1]:.3g}]" if len(g) else "empty"
    if len(g) < 3 or np.any(np.diff(g) <= 0):
        raise BadSpec("grid must be strictly increasing with at least 3 points")
    v = np.asarray(f(g), dtype=float)

    def tol(*vals):
        return CONCAVITY_RTOL * max(1.0, *(abs(x) for x in vals))

    if abs(f(0.0)) > 0:
        return ConcavityDiagnostic(False, (0.0, "f(0) != 0"), desc)
    for i in range(1, len(g)):
        if v[i] < v[i - 1] - tol(v[i], v[i - 1]):
            return ConcavityDiagnostic(False, (float(g[i]), "decreasing"), desc)
    dg = np.diff(g)
    slopes = np.diff(v) / dg
    # rounding in v[i] is amplified by 1/dg in the difference quotient
    ulp = 4.0 * np.finfo(float).eps * np.maximum(np.abs(v[1:]), np.abs(v[:-1])) / dg
    for i in range(1, len(slopes)):
        if slopes[i] > slopes[i - 1] + tol(slopes[i], slopes[i - 1]) + ulp[i] + ulp[i - 1]:
            return ConcavityDiagnostic(False, (float(g[i + 1]), "slope increased"), desc)
    pos = g > 0
    ratio = v[pos] / g[pos]
    tp = g[pos]
    for i in range(1, len(ratio)):
        if ratio[i] > ratio[i - 1] + tol(ratio[i], ratio[i - 1]):
            return ConcavityDiagnostic(False, (float(tp[i]), "f(t)/t increased"), desc)
    return ConcavityDiagnostic(True, None, desc)


def least_concave_majorant(points) -> ConcaveFn:
    """Least nondecreasing concave majorant of the points, with the origin adjoined."""
    pts = [(float(t), float(v)) for t, v in points]
    if not pts:
        raise EmptyInput("no points")
    if any(t < 0 or v < 0 for t, v in pts):
        raise BadSpec("points must be nonnegative")
    if len({t for t, _ in pts}) != len(pts):
        raise BadSpec("abscissae must be distinct")
    pts = sorted(set(pts) | {(0.0, 0.0)})
    if pts[0] != (0.0, 0.0):
        raise BadSpec("a point at t=0 must have value 0")

    # Andrew's monotone chain, upper half
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    # past the highest vertex the majorant is flat
    top = max(range(len(hull)), key=lambda i: (hull[i][1], -i))
    hull = hull[: top + 1]
    if hull[-1][0] < pts[-1][0]:
        hull.append((pts[-1][0], hull[-1][1]))
    return ConcaveFn.pwl(hull)


def dilation_function(f: ConcaveFn, s: float, probe_grid=None) -> float:
    """Grid supremum of f(s t) / f(t), a lower bound for the true supremum."""
    if s <= 0:
        raise BadSpec("dilation factor must be positive")
    grid = DEFAULT_PROBE_GRID if probe_grid is None else np.asarray(probe_grid, dtype=float)
    base = f(grid)
    ok = base > 0
    return float(np.max(f(s * grid[ok]) / base[ok]))


def dilation_indices(f: ConcaveFn, probe_grid=None) -> tuple[float, float]:
    """(lower, upper) dilation exponents estimated at s = 2**-20 and 2**20."""
    s_small, s_large = 2.0**-20, 2.0**20
    lower = math.log(dilation_function(f, s_small, probe_grid)) / math.log(s_small)
    upper = math.log(dilation_function(f, s_large, probe_grid)) / math.log(s_large)
    return lower, upper


# growth of log(1+t)/f(t) per unit log t tolerated on the last two decades
EMBED_SLOPE_TOL = 0.01


def embeds_in_lambda_log(f: ConcaveFn, probe_grid=None) -> tuple[bool, float]:
    """Heuristic test of log(1+t) <= c f(t); returns (holds, grid sup of the ratio).

    The verdict looks at the log-log slope of the ratio over the last two
    probed decades. Logarithmic growth of the ratio (slope ~ 1/log t) counts
    as unbounded, slower drift as bounded.
    """
    grid = DEFAULT_PROBE_GRID if probe_grid is None else np.asarray(probe_grid, dtype=float)
    ratio = np.log1p(grid) / f(grid)
    constant = float(np.max(ratio))
    tail = grid >= grid[-1] / 100.0
    r0, r1 = ratio[tail][0], ratio[tail][-1]
    slope = math.log(r1 / r0) / math.log(grid[tail][-1] / grid[tail][0])
    return bool(slope <= EMBED_SLOPE_TOL), constant
