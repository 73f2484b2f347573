"""Integrals of f(t)/t and f(t)/t**2 for concave f, plus a Gauss-Legendre fallback.

Closed forms are used for every built-in kind (piecewise-linear segments are
integrated exactly). The only approximation is the tail of a piecewise-linear
function beyond its last knot, which is extrapolated with a power law fitted
on the last two decades of knots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import spence

from .concave import ConcaveFn
from .errors import TailDivergent

GL_ORDER = 16
# power-law exponents this close to 1 give a logarithmically divergent tail
DIVERGENCE_MARGIN = 1e-9


@lru_cache(maxsize=None)
def _gl_nodes(order: int):
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(func, edges, order: int = GL_ORDER) -> float:
    """Composite Gauss-Legendre rule over consecutive panels given by ``edges``."""
    x, w = _gl_nodes(order)
    e = np.asarray(edges, dtype=float)
    a, b = e[:-1, None], e[1:, None]
    half = 0.5 * (b - a)
    nodes = a + half * (x[None, :] + 1.0)
    vals = np.asarray(func(nodes.ravel()), dtype=float).reshape(nodes.shape)
    return float(np.sum(half * w[None, :] * vals))


def gauss_legendre_log(func, lo: float, hi: float, panels_per_decade: int = 4, order: int = GL_ORDER) -> float:
    """int_lo^hi func(t) dt on geometrically spaced panels (substitution t = e^s)."""
    if hi <= lo:
        return 0.0
    n = max(1, int(math.ceil(panels_per_decade * math.log10(hi / lo))))
    edges = np.linspace(math.log(lo), math.log(hi), n + 1)
    return gauss_legendre(lambda s: func(np.exp(s)) * np.exp(s), edges, order)


@dataclass(frozen=True)
class TailFit:
    """Power-law model v_last * (t/t_last)**beta used beyond the last knot."""
    t_last: float
    v_last: float
    beta: float
    residual: float


def pwl_tail_fit(f: ConcaveFn) -> TailFit:
    t, v = f._t, f._v
    T, V = float(t[-1]), float(v[-1])
    if f.final_slope == 0.0:
        return TailFit(T, V, 0.0, 0.0)
    sel = (t >= T / 100.0) & (v > 0) & (t > 0)
    if sel.sum() >= 2:
        lt, lv = np.log(t[sel]), np.log(v[sel])
        beta, icpt = np.polyfit(lt, lv, 1)
        residual = float(np.max(np.abs(lv - (beta * lt + icpt))))
    else:
        beta = f.final_slope * T / V if V > 0 else 1.0
        residual = 0.0
    return TailFit(T, V, float(beta), residual)


def _pwl_segments(f: ConcaveFn, a: float, b: float):
    """Yield (t1, t2, c, s) with f = scale*(c + s t) on [t1, t2], covering [a, b]."""
    kt, kv = f._t, f._v
    edges = np.concatenate([kt, [math.inf]])
    slopes = np.append(np.diff(kv) / np.diff(kt), f.final_slope)
    for i in range(len(kt)):
        t1, t2 = max(a, edges[i]), min(b, edges[i + 1])
        if t2 <= t1:
            continue
        s = slopes[i]
        c = kv[i] - s * kt[i]
        yield t1, t2, c, s


def integral_over_t(f: ConcaveFn, a: float, b: float) -> float:
    """int_a^b f(t)/t dt for 0 <= a <= b < inf."""
    if b <= a:
        return 0.0
    if f.kind == "pwl":
        total = 0.0
        for t1, t2, c, s in _pwl_segments(f, a, b):
            total += s * (t2 - t1)
            if c != 0.0:
                total += c * math.log(t2 / t1)
        return f.scale * total
    return head_integral(f, b) - head_integral(f, a)


def head_integral(f: ConcaveFn, a: float) -> float:
    """int_0^a f(t)/t dt."""
    if a <= 0:
        return 0.0
    if f.kind == "power":
        return f.scale * a**f.alpha / f.alpha
    if f.kind == "log1p":
        return -f.scale * float(spence(1.0 + a))
    if f.kind == "phi_zero":
        la = math.log(a)
        if a <= 1:
            return f.scale * (3.0 * a - a * la)
        return f.scale * (3.0 + 2.0 * la + la * la)
    return integral_over_t(f, 0.0, a)


def tail_integral(f: ConcaveFn, a: float) -> float:
    """int_a^inf f(t)/t**2 dt for a > 0; raises TailDivergent when infinite."""
    if a <= 0:
        raise ValueError("tail integral needs a positive lower limit")
    if f.kind == "power":
        if f.alpha >= 1.0 - DIVERGENCE_MARGIN:
            raise TailDivergent(f"int f(t)/t^2 diverges for power exponent {f.alpha}")
        return f.scale * a ** (f.alpha - 1.0) / (1.0 - f.alpha)
    if f.kind == "log1p":
        return f.scale * (math.log1p(a) / a + math.log1p(1.0 / a))
    if f.kind == "phi_zero":
        la = math.log(a)
        if a >= 1:
            return f.scale * 2.0 * (2.0 + la) / a
        return f.scale * (4.0 - 2.0 * la + 0.5 * la * la)
    fit = pwl_tail_fit(f)
    if fit.beta >= 1.0 - DIVERGENCE_MARGIN:
        raise TailDivergent(f"power-law tail exponent {fit.beta:.6g} >= 1")
    total = 0.0
    if a < fit.t_last:
        for t1, t2, c, s in _pwl_segments(f, a, fit.t_last):
            total += c * (1.0 / t1 - 1.0 / t2) + s * math.log(t2 / t1)
    start = max(a, fit.t_last)
    total += fit.v_last * fit.t_last**-fit.beta * start ** (fit.beta - 1.0) / (1.0 - fit.beta)
    return f.scale * total
