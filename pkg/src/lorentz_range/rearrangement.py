"""Step functions on (0, inf), decreasing rearrangements and Lorentz norms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .concave import ConcaveFn
from .errors import BadSpec, NotDecreasing
from .integrals import gauss_legendre


@dataclass(frozen=True)
class StepFn:
    """x = v_k on (t_{k-1}, t_k], zero beyond t_n, with t_0 = 0.

    The representation is canonical: adjacent equal values are merged and
    trailing zero pieces are dropped.
    """
    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        t = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if len(t) == 0 or t[0] != 0.0:
            raise BadSpec("breakpoints must start at 0")
        if len(v) != len(t) - 1:
            raise BadSpec("need exactly one value per interval")
        if np.any(np.diff(t) <= 0) or not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
            raise BadSpec("breakpoints must be finite and strictly increasing")
        keep_t, keep_v = [0.0], []
        for k in range(len(v)):
            if keep_v and v[k] == keep_v[-1]:
                keep_t[-1] = float(t[k + 1])
            else:
                keep_v.append(float(v[k]))
                keep_t.append(float(t[k + 1]))
        while keep_v and keep_v[-1] == 0.0:
            keep_v.pop()
            keep_t.pop()
        object.__setattr__(self, "breakpoints", tuple(keep_t))
        object.__setattr__(self, "values", tuple(keep_v))

    @classmethod
    def from_pieces(cls, pieces) -> "StepFn":
        """Build from disjoint (a, b, value) triples with 0 <= a < b."""
        pieces = sorted((float(a), float(b), float(v)) for a, b, v in pieces)
        t, vals = [0.0], []
        for a, b, v in pieces:
            if a < t[-1]:
                raise BadSpec("pieces overlap")
            if a > t[-1]:
                vals.append(0.0)
                t.append(a)
            vals.append(v)
            t.append(b)
        return cls(tuple(t), tuple(vals))

    @classmethod
    def indicator(cls, a: float, b: float, value: float = 1.0) -> "StepFn":
        return cls.from_pieces([(a, b, value)])

    @property
    def pieces(self):
        t = self.breakpoints
        return [(t[k], t[k + 1], self.values[k]) for k in range(len(self.values))]

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        t = np.asarray(self.breakpoints)
        v = np.append(np.asarray(self.values, dtype=float), 0.0)
        idx = np.searchsorted(t, s, side="left") - 1
        out = np.where((idx >= 0) & (s > 0), v[np.clip(idx, 0, len(v) - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    def integral_abs(self) -> float:
        return float(sum(abs(v) * (b - a) for a, b, v in self.pieces))

    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "values": list(self.values)}

    @classmethod
    def from_dict(cls, d: dict) -> "StepFn":
        return cls(tuple(d["breakpoints"]), tuple(d["values"]))


@dataclass(frozen=True, eq=False)
class DecreasingStep:
    """Layer-cake form sum_k alpha_k chi_(0, u_k) with u_1 < ... < u_N."""
    alpha: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        u = np.atleast_1d(np.asarray(self.u, dtype=float))
        if a.shape != u.shape:
            raise BadSpec("alpha and u must have equal length")
        if np.any(a < 0) or np.any(u <= 0) or not np.all(np.isfinite(a)) or not np.all(np.isfinite(u)):
            raise BadSpec("layers need alpha >= 0 and finite u > 0")
        keep = a > 0
        a, u = a[keep], u[keep]
        order = np.argsort(u, kind="stable")
        a, u = a[order], u[order]
        if len(u) > 1:
            # merge layers sharing an endpoint
            uu, inv = np.unique(u, return_inverse=True)
            aa = np.zeros(len(uu))
            np.add.at(aa, inv, a)
            a, u = aa, uu
        a.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "u", u)

    @classmethod
    def from_layers(cls, layers) -> "DecreasingStep":
        layers = list(layers)
        if not layers:
            return cls.zero()
        a, u = zip(*layers)
        return cls(np.array(a, dtype=float), np.array(u, dtype=float))

    @classmethod
    def zero(cls) -> "DecreasingStep":
        return cls(np.zeros(0), np.zeros(0))

    @classmethod
    def indicator(cls, u: float, height: float = 1.0) -> "DecreasingStep":
        return cls(np.array([height]), np.array([u]))

    @property
    def layers(self) -> list[tuple[float, float]]:
        return [(float(a), float(u)) for a, u in zip(self.alpha, self.u)]

    @property
    def support(self) -> float:
        return float(self.u[-1]) if len(self.u) else 0.0

    def is_zero(self) -> bool:
        return len(self.u) == 0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.sum(self.alpha * (t[..., None] < self.u), axis=-1)
        return float(out) if out.ndim == 0 else out

    def __add__(self, other: "DecreasingStep") -> "DecreasingStep":
        return DecreasingStep(np.concatenate([self.alpha, other.alpha]), np.concatenate([self.u, other.u]))

    def __mul__(self, c: float) -> "DecreasingStep":
        return DecreasingStep(self.alpha * float(c), self.u)

    __rmul__ = __mul__

    def levels(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct values c_1 > ... > c_N on (u_{k-1}, u_k] and the endpoints u_k."""
        c = np.cumsum(self.alpha[::-1])[::-1]
        return c, self.u

    def to_step(self) -> StepFn:
        c, u = self.levels()
        return StepFn(tuple(np.concatenate([[0.0], u])), tuple(c))

    def integral(self) -> float:
        return float(np.dot(self.alpha, self.u))

    def __eq__(self, other):
        if not isinstance(other, DecreasingStep):
            return NotImplemented
        return np.array_equal(self.alpha, other.alpha) and np.array_equal(self.u, other.u)

    __hash__ = None

    def to_dict(self) -> dict:
        return {"layers": [list(l) for l in self.layers]}


@dataclass(frozen=True)
class IntervalSet:
    intervals: tuple

    def __post_init__(self):
        iv = sorted((float(a), float(b)) for a, b in self.intervals)
        for a, b in iv:
            if not (0 <= a < b < math.inf):
                raise BadSpec(f"bad interval ({a}, {b})")
        for (a1, b1), (a2, b2) in zip(iv, iv[1:]):
            if a2 < b1:
                raise BadSpec("intervals overlap")
        object.__setattr__(self, "intervals", tuple(iv))

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def indicator(self) -> StepFn:
        return StepFn.from_pieces([(a, b, 1.0) for a, b in self.intervals])


@dataclass(frozen=True)
class Seq:
    entries: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(float(x) for x in self.entries))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)

    def rearranged(self) -> np.ndarray:
        return np.sort(np.abs(self.as_array()))[::-1]

    def to_dict(self) -> dict:
        return {"entries": list(self.entries)}


def rearrange(x: StepFn) -> DecreasingStep:
    """Decreasing rearrangement of |x| in layer-cake form."""
    mass: dict[float, float] = {}
    for a, b, v in x.pieces:
        if v != 0.0:
            mass[abs(v)] = mass.get(abs(v), 0.0) + (b - a)
    if not mass:
        return DecreasingStep.zero()
    c = np.array(sorted(mass, reverse=True))
    u = np.cumsum([mass[v] for v in c])
    alpha = c - np.append(c[1:], 0.0)
    return DecreasingStep(alpha, u)


def distribution(x: StepFn, s: float) -> float:
    """Lebesgue measure of {t : |x(t)| >= s}."""
    if s <= 0:
        raise BadSpec("level must be positive")
    return float(sum(b - a for a, b, v in x.pieces if abs(v) >= s))


def lorentz_norm(mu: DecreasingStep, phi: ConcaveFn) -> float:
    """int mu d(phi), exactly sum_k alpha_k phi(u_k) for a layer-cake step."""
    if mu.is_zero():
        return 0.0
    return float(np.dot(mu.alpha, phi(mu.u)))


def lorentz_seq_norm(a, phi: ConcaveFn) -> float:
    """sum_n mu(n, a) (phi(n+1) - phi(n))."""
    arr = a.rearranged() if isinstance(a, Seq) else np.sort(np.abs(np.asarray(a, dtype=float)))[::-1]
    if len(arr) == 0:
        return 0.0
    n = np.arange(len(arr) + 1, dtype=float)
    weights = np.diff(phi(n))
    return float(np.dot(arr, weights))


MONOTONE_PROBES = 64


def l1_linf_norm(z) -> float:
    """(L1 + L_inf) norm of a nonincreasing function: int_0^1 z(t) dt."""
    from .calderon import CalderonImage

    if isinstance(z, DecreasingStep):
        return float(np.dot(z.alpha, np.minimum(z.u, 1.0)))
    if isinstance(z, CalderonImage):
        return z.integral_0_1()
    return _l1_linf_quadrature(z)


def _l1_linf_quadrature(z: Callable) -> float:
    probes = np.geomspace(1e-12, 1.0, MONOTONE_PROBES)
    vals = np.asarray([z(t) for t in probes], dtype=float)
    if np.any(np.diff(vals) > 1e-12 * np.maximum(1.0, np.abs(vals[:-1]))):
        raise NotDecreasing("function is not nonincreasing on (0, 1]")
    # geometric panels resolve integrable singularities at 0; below 1e-16 is dropped
    edges = np.log(np.geomspace(1e-16, 1.0, 16 * 4 + 1))

    def integrand(s):
        t = np.exp(s)
        return np.array([z(ti) for ti in t]) * t

    return gauss_legendre(integrand, edges)
