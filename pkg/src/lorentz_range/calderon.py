"""Calderon operator S, its discrete version, and the Hilbert transform of steps.

S acts on a layer-cake form exactly:

    S chi_(0,u)(t) = 1 + log(u/t)   for t < u
                   = u/t            for t >= u

so images are kept symbolic as the layer list and never sampled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .concave import ConcaveFn
from .errors import AtSingularity, BadSpec, TailDivergent
from .integrals import gauss_legendre, pwl_tail_fit
from .rearrangement import DecreasingStep, Seq, StepFn


@dataclass(frozen=True, eq=False)
class CalderonImage:
    """t -> sum_k alpha_k s_{u_k}(t), the image of a layer-cake step under S."""
    alpha: np.ndarray
    u: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tt = t[..., None]
        with np.errstate(divide="ignore"):
            s = np.where(tt < self.u, 1.0 + np.log(self.u / tt), self.u / tt)
        out = np.sum(self.alpha * s, axis=-1)
        return float(out) if out.ndim == 0 else out

    eval = __call__

    @property
    def layers(self):
        return [(float(a), float(u)) for a, u in zip(self.alpha, self.u)]

    def integral_0_1(self) -> float:
        """int_0^1 of the image, in closed form."""
        u = self.u
        with np.errstate(divide="ignore"):
            per = np.where(u >= 1.0, 2.0 + np.log(u), u * (2.0 - np.log(u)))
        return float(np.dot(self.alpha, per))

    def to_dict(self) -> dict:
        return {"layers": [list(l) for l in self.layers]}

    @classmethod
    def from_dict(cls, d: dict) -> "CalderonImage":
        return apply_S(DecreasingStep.from_layers(d["layers"]))


def apply_S(mu: DecreasingStep) -> CalderonImage:
    return CalderonImage(mu.alpha, mu.u)


def eval_S_of_step(x: StepFn, t):
    """(Sx)(t) = (1/t) int_0^t x + int_t^inf x(s)/s ds for a signed step x."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise BadSpec("S is evaluated at t > 0 only")
    p = np.asarray(x.pieces, dtype=float).reshape(-1, 3)
    a, b, v = p[:, 0], p[:, 1], p[:, 2]
    tt = t[..., None]
    head = np.sum(v * np.clip(np.minimum(b, tt) - a, 0.0, None), axis=-1) / t
    lo = np.maximum(a, tt)
    tail = np.sum(np.where(b > lo, v * np.log(b / np.where(b > lo, lo, b)), 0.0), axis=-1)
    out = head + tail
    return float(out) if out.ndim == 0 else out


def apply_Sd(a, n_max: int | None = None) -> np.ndarray:
    """Discrete Calderon operator: Cesaro mean of a(0..n) plus sum_{k>n} a(k)/k."""
    arr = a.as_array() if isinstance(a, Seq) else np.asarray(a, dtype=float)
    m = len(arr)
    if n_max is None:
        n_max = max(m - 1, 0)
    n = np.arange(n_max + 1)
    padded = np.zeros(max(m, n_max + 1))
    padded[:m] = arr
    head = np.cumsum(padded)[: n_max + 1] / (n + 1)
    k = np.arange(len(padded), dtype=float)
    w = np.zeros_like(padded)
    w[1:] = padded[1:] / k[1:]
    # suffix sums of a(k)/k, strictly beyond n
    suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    tail = suffix[n + 1]
    return head + tail


SINGULAR_RTOL = 1e-12


def hilbert_of_step(x: StepFn, t: float) -> float:
    """Principal-value Hilbert transform (1/pi) sum_k v_k log|t - t_{k-1}|/|t - t_k|."""
    bp = np.asarray(x.breakpoints, dtype=float)
    scale = max(1.0, abs(t), float(bp[-1]) if len(bp) else 0.0)
    if len(bp) and np.min(np.abs(t - bp)) <= SINGULAR_RTOL * scale:
        raise AtSingularity(f"t={t} is a breakpoint")
    total = 0.0
    for a, b, v in x.pieces:
        total += v * math.log(abs(t - a) / abs(t - b))
    return total / math.pi


def _hilbert_vec(x: StepFn, t: np.ndarray) -> np.ndarray:
    p = np.asarray(x.pieces, dtype=float).reshape(-1, 3)
    if len(p) == 0:
        return np.zeros_like(t)
    a, b, v = p[:, 0], p[:, 1], p[:, 2]
    tt = t[:, None]
    return np.sum(v * np.log(np.abs(tt - a) / np.abs(tt - b)), axis=1) / math.pi


@dataclass(frozen=True)
class DominationReport:
    t_grid: tuple
    slacks: tuple
    min_slack: float
    passed: bool


def check_hilbert_domination(mu: DecreasingStep, t_grid, atol: float = 1e-12) -> DominationReport:
    """Check |H mu(-t)| >= S mu(t) / (2 pi) on the grid and report the slack."""
    t = np.asarray(t_grid, dtype=float)
    x = mu.to_step()
    lhs = np.array([abs(hilbert_of_step(x, -ti)) for ti in t])
    rhs = apply_S(mu)(t) / (2.0 * math.pi)
    slack = lhs - rhs
    return DominationReport(tuple(t), tuple(slack), float(np.min(slack)), bool(np.all(slack >= -atol)))


@dataclass(frozen=True)
class RearrangementSample:
    """Sorted samples of |Hx|; values[j] approximates mu(Hx) on [j h, (j+1) h)."""
    positions: np.ndarray
    values: np.ndarray
    cell: float
    excluded: int


def hilbert_rearrangement_estimate(x: StepFn, n_samples: int = 4096, window: float | None = None) -> RearrangementSample:
    """Sample |Hx| at cell midpoints of [-window, window] and sort descending."""
    if n_samples < 1024:
        raise BadSpec("need at least 1024 samples")
    supp = x.breakpoints[-1] if len(x.breakpoints) > 1 else 1.0
    if window is None:
        window = 10.0 * supp
    if window < 10.0 * supp:
        raise BadSpec("window must cover the support with a 10x margin")
    h = 2.0 * window / n_samples
    t = -window + h * (np.arange(n_samples) + 0.5)
    bp = np.asarray(x.breakpoints, dtype=float)
    near = np.min(np.abs(t[:, None] - bp[None, :]), axis=1) <= SINGULAR_RTOL * max(1.0, window)
    vals = np.abs(_hilbert_vec(x, t[~near]))
    vals = np.sort(vals)[::-1]
    return RearrangementSample(h * np.arange(len(vals)), vals, h, int(near.sum()))


def image_lorentz_norm(img: CalderonImage, psi: ConcaveFn) -> float:
    """||img||_{Lambda_psi} = sum_k alpha_k G_psi(u_k) (integration by parts form)."""
    from .optimal_range import criterion_G

    return float(sum(a * criterion_G(psi, u) for a, u in zip(img.alpha, img.u)))


def image_lorentz_norm_quadrature(img: CalderonImage, psi: ConcaveFn, panels_per_decade: int = 16) -> float:
    """Direct Gauss-Legendre evaluation of int img d(psi), independent of the G route.

    Integrates img(t) psi'(t) from 1e-20 u_min to 1e14 u_max on geometric panels
    split at every u_k (and every knot for piecewise-linear psi). The two end
    pieces are added from the local power behaviour of psi; for piecewise-linear
    psi the part beyond the last knot uses the same tail model as :func:`criterion_G`.
    """
    if len(img.u) == 0:
        return 0.0
    lo = 1e-20 * float(img.u[0])
    hi = 1e14 * float(img.u[-1])
    breaks = [lo, hi, *img.u.tolist()]
    fit = None
    if psi.kind == "pwl":
        fit = pwl_tail_fit(psi)
        hi = max(fit.t_last, float(img.u[-1]))
        breaks = [lo, hi, *img.u.tolist(), *[k for k in psi._t if lo < k < hi]]
    breaks = np.unique(np.clip(breaks, lo, hi))
    edges = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(math.ceil(panels_per_decade * math.log10(b / a))))
        edges.append(np.linspace(math.log(a), math.log(b), n + 1)[:-1])
    edges = np.concatenate(edges + [[math.log(breaks[-1])]])

    def integrand(s):
        t = np.exp(s)
        return img(t) * psi.derivative(t) * t

    total = gauss_legendre(integrand, edges)
    # below lo psi ~ psi(lo) (t/lo)^a with a = alpha for powers, 1 for the others
    a = psi.alpha if psi.kind == "power" else 1.0
    p_lo = float(psi(lo))
    total += float(np.sum(img.alpha * p_lo * (1.0 + np.log(img.u / lo) + 1.0 / a)))
    if psi.kind == "power":
        if psi.alpha >= 1.0:
            raise TailDivergent("psi grows linearly, the image norm diverges")
        mass = float(np.dot(img.alpha, img.u))
        total += psi.scale * mass * psi.alpha * hi ** (psi.alpha - 1) / (1 - psi.alpha)
    if fit is not None and fit.beta > 0:
        # img ~ (sum alpha u)/t past every u_k; psi' ~ beta v T^-beta t^(beta-1)
        mass = float(np.dot(img.alpha, img.u))
        total += psi.scale * mass * fit.beta * fit.v_last * fit.t_last**-fit.beta * hi ** (fit.beta - 1) / (1 - fit.beta)
    return total
