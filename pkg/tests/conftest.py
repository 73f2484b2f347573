"""Independent oracles shared by the test modules.

Nothing here calls into the closed forms under test: S is integrated
straight from its definition, psi is brute-forced on a dense grid, the
Hilbert transform uses QUADPACK's Cauchy weight.
"""
import math

import numpy as np
import pytest
from scipy import integrate

from lorentz_range.concave import ConcaveFn


def quad_S(x, t):
    """(Sx)(t) = (1/t) int_0^t x + int_t^inf x(s)/s ds by adaptive quadrature, piece by piece."""
    head = tail = 0.0
    for a, b, v in x.pieces:
        lo, hi = a, min(b, t)
        if hi > lo:
            head += integrate.quad(lambda s: v, lo, hi)[0]
        lo = max(a, t)
        if b > lo:
            tail += integrate.quad(lambda s: v / s, lo, b, epsrel=1e-13)[0]
    return head / t + tail


def quad_hilbert(x, t):
    """p.v. (1/pi) int x(eta)/(t - eta) d eta via the Cauchy-weighted rule."""
    total = 0.0
    for a, b, v in x.pieces:
        if a < t < b:
            # quad's cauchy weight computes p.v. int f(eta)/(eta - t)
            total -= v * integrate.quad(lambda e: 1.0, a, b, weight="cauchy", wvar=t)[0]
        else:
            total += v * integrate.quad(lambda e: 1.0 / (t - e), a, b, epsrel=1e-13)[0]
    return total / math.pi


def brute_psi(phi, u, n=400_001, log_w_max=30.0):
    """min over a uniform grid in log w of phi(u w)/(1 + log w)."""
    s = np.linspace(0.0, log_w_max, n)
    vals = phi(u * np.exp(s)) / (1.0 + s)
    i = int(np.argmin(vals))
    return float(vals[i]), float(math.exp(s[i]))


def quad_G(psi, u):
    """int_0^u psi/t + u int_u^inf psi/t^2 with substitution t = e^s."""
    head = integrate.quad(lambda s: psi(math.exp(s)), -200.0, math.log(u), limit=400, epsrel=1e-12)[0]
    tail = integrate.quad(lambda s: psi(math.exp(s)) * math.exp(-s), math.log(u), 400.0, limit=400, epsrel=1e-12)[0]
    return head + u * tail


@pytest.fixture
def sqrt_phi():
    return ConcaveFn.power(0.5)


BUILTINS = [
    ConcaveFn.power(0.25),
    ConcaveFn.power(0.5),
    ConcaveFn.power(0.75),
    ConcaveFn.power(1.0),
    ConcaveFn.log1p(),
    ConcaveFn.phi_zero(),
    ConcaveFn.pwl([(0, 0), (1, 1), (3, 2), (10, 3)]),
]
