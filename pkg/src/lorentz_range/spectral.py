"""Finite-matrix models: singular values, Lorentz ideal norms, triangular
truncation, double operator integrals and commutator / Lipschitz probes."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .calderon import apply_Sd
from .concave import ConcaveFn
from .errors import BadSpec, DimensionMismatch, NotHermitian, ZeroDifference, ZeroMatrix
from .rearrangement import lorentz_seq_norm
from .reports import ExperimentReport

HERMITIAN_ATOL = 1e-12
# eigenvalues closer than this times the spectral diameter count as equal
EIG_EQUAL_RTOL = 1e-10


def as_matrix(V) -> np.ndarray:
    M = np.asarray(V, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch("expected a square matrix")
    return M


def is_hermitian(V, atol: float = HERMITIAN_ATOL) -> bool:
    M = as_matrix(V)
    return bool(np.max(np.abs(M - M.conj().T), initial=0.0) <= atol * max(1.0, np.max(np.abs(M), initial=0.0)))


def _require_hermitian(A) -> np.ndarray:
    M = as_matrix(A)
    if not is_hermitian(M):
        raise NotHermitian("matrix is not hermitian")
    return M


def matrix_to_dict(V) -> dict:
    M = as_matrix(V)
    return {"n": M.shape[0], "re": M.real.tolist(), "im": M.imag.tolist(), "hermitian": is_hermitian(M)}


def matrix_from_dict(d: dict) -> np.ndarray:
    try:
        M = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d.get("im", np.zeros_like(d["re"])), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise BadSpec(f"malformed matrix: {exc}") from exc
    if M.shape != (d.get("n", M.shape[0]),) * 2:
        raise BadSpec("matrix shape does not match n")
    if d.get("hermitian") and not is_hermitian(M):
        raise NotHermitian("matrix flagged hermitian is not")
    return M


def singular_values(V) -> np.ndarray:
    """mu(n, V), nonincreasing."""
    return np.linalg.svd(as_matrix(V), compute_uv=False)


def schatten_lorentz_norm(V, phi: ConcaveFn) -> float:
    return lorentz_seq_norm(singular_values(V), phi)


def trace_norm(V) -> float:
    return float(np.sum(singular_values(V)))


def sign_mask(n: int) -> np.ndarray:
    i = np.arange(n)
    return np.sign(i[:, None] - i[None, :]).astype(float)


def triangular_truncate(V) -> np.ndarray:
    """T(V)_ij = sgn(i - j) V_ij: lower triangle kept, upper negated, diagonal zeroed."""
    M = as_matrix(V)
    return sign_mask(M.shape[0]) * M


def upper_projection(V) -> np.ndarray:
    """Classical strictly-upper triangular projection, (D - T)/2 off the diagonal."""
    return np.triu(as_matrix(V), 1)


def weak_l1_probe(V) -> float:
    """sup_n (n+1) mu(n, T(V)) / ||V||_1."""
    M = as_matrix(V)
    t1 = trace_norm(M)
    if t1 == 0.0:
        raise ZeroMatrix("V = 0")
    s = singular_values(triangular_truncate(M))
    return float(np.max(np.arange(1, len(s) + 1) * s)) / t1


@dataclass(frozen=True)
class LipschitzFn:
    """Real piecewise-linear f through (x_i, y_i), extended by its end slopes."""
    x: tuple
    y: tuple

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        y = tuple(float(v) for v in self.y)
        if len(x) != len(y) or len(x) == 0:
            raise BadSpec("need matching, nonempty knot lists")
        if any(b <= a for a, b in zip(x, x[1:])):
            raise BadSpec("knots must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def identity(cls) -> "LipschitzFn":
        return cls((0.0, 1.0), (0.0, 1.0))

    @classmethod
    def constant(cls, c: float) -> "LipschitzFn":
        return cls((0.0,), (c,))

    @classmethod
    def linear(cls, slope: float, intercept: float = 0.0) -> "LipschitzFn":
        return cls((0.0, 1.0), (intercept, intercept + slope))

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.y) / np.diff(self.x)

    @property
    def lip_constant(self) -> float:
        s = self.slopes
        return float(np.max(np.abs(s))) if len(s) else 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        x, y = np.asarray(self.x), np.asarray(self.y)
        if len(x) == 1:
            return np.full_like(t, y[0])
        out = np.interp(t, x, y)
        s = self.slopes
        out = np.where(t < x[0], y[0] + s[0] * (t - x[0]), out)
        out = np.where(t > x[-1], y[-1] + s[-1] * (t - x[-1]), out)
        return out


def _eigh(A) -> tuple[np.ndarray, np.ndarray]:
    M = _require_hermitian(A)
    return np.linalg.eigh(0.5 * (M + M.conj().T))


def function_of_hermitian(f: LipschitzFn, A) -> np.ndarray:
    lam, U = _eigh(A)
    return (U * f(lam)) @ U.conj().T


def divided_difference_matrix(f: LipschitzFn, lam: np.ndarray) -> np.ndarray:
    """(f(l_i) - f(l_j)) / (l_i - l_j), and 0 where the eigenvalues coincide."""
    diam = float(lam[-1] - lam[0]) if len(lam) else 0.0
    tol = EIG_EQUAL_RTOL * diam
    fl = f(lam)
    dl = lam[:, None] - lam[None, :]
    equal = np.abs(dl) <= tol
    with np.errstate(divide="ignore", invalid="ignore"):
        M = (fl[:, None] - fl[None, :]) / np.where(equal, 1.0, dl)
    return np.where(equal, 0.0, M)


def doi_apply(f: LipschitzFn, A, V) -> np.ndarray:
    """Schur multiplier with the divided difference of f, in A's eigenbasis."""
    lam, U = _eigh(A)
    Vm = as_matrix(V)
    if Vm.shape != U.shape:
        raise DimensionMismatch("A and V differ in size")
    Vt = U.conj().T @ Vm @ U
    return U @ (divided_difference_matrix(f, lam) * Vt) @ U.conj().T


def commutator(A, B) -> np.ndarray:
    A, B = as_matrix(A), as_matrix(B)
    if A.shape != B.shape:
        raise DimensionMismatch("commutator of matrices of different size")
    return A @ B - B @ A


def commutator_identity_check(f: LipschitzFn, A, B) -> float:
    """max |T_{f[1]}^{A,A}([A,B]) - [f(A), B]|, divided by the natural scale."""
    _require_hermitian(B)
    lhs = doi_apply(f, A, commutator(A, B))
    rhs = commutator(function_of_hermitian(f, A), B)
    return float(np.max(np.abs(lhs - rhs)))


def identity_scale(f: LipschitzFn, A, B) -> float:
    """lip(f) * ||A|| * ||B||, the size of either side of the identity."""
    return max(f.lip_constant, 1e-300) * max(np.linalg.norm(as_matrix(A), 2), 1e-300) * max(np.linalg.norm(as_matrix(B), 2), 1e-300)


@dataclass(frozen=True)
class LipschitzProbe:
    ratio: float
    block_ratio: float
    lip_constant: float


def swap_block(n: int) -> np.ndarray:
    Z, I = np.zeros((n, n)), np.eye(n)
    return np.block([[Z, I], [I, Z]]).astype(complex)


def lipschitz_probe(f: LipschitzFn, X, Y, phi: ConcaveFn, psi: ConcaveFn) -> LipschitzProbe:
    """||f(X) - f(Y)||_psi / (lip(f) ||X - Y||_phi), directly and via the 2n x 2n block commutator."""
    X, Y = _require_hermitian(X), _require_hermitian(Y)
    if X.shape != Y.shape:
        raise DimensionMismatch("X and Y differ in size")
    D = X - Y
    if not np.any(D):
        raise ZeroDifference("X = Y")
    lip = f.lip_constant
    num = schatten_lorentz_norm(function_of_hermitian(f, X) - function_of_hermitian(f, Y), psi)
    den = lip * schatten_lorentz_norm(D, phi)
    n = X.shape[0]
    A = np.block([[X, np.zeros_like(X)], [np.zeros_like(X), Y]])
    B = swap_block(n)
    block_num = schatten_lorentz_norm(commutator(function_of_hermitian(f, A), B), psi)
    block_den = lip * schatten_lorentz_norm(commutator(A, B), phi)
    return LipschitzProbe(num / den if den else np.inf, block_num / block_den if block_den else np.inf, lip)


def truncation_range_probe(corpus, phi: ConcaveFn, psi: ConcaveFn, corpus_descriptor: dict | None = None) -> ExperimentReport:
    """Per sample ||T(V)||_psi / ||V||_phi, plus max_n mu(n, T V) / (S^d mu(V))(n)."""
    if len(corpus) == 0:
        raise BadSpec("corpus must be nonempty")
    start = time.perf_counter()
    ratios, pointwise = [], []
    for V in corpus:
        TV = triangular_truncate(V)
        den = schatten_lorentz_norm(V, phi)
        ratios.append(schatten_lorentz_norm(TV, psi) / den if den else 0.0)
        sv = singular_values(V)
        sd = apply_Sd(sv, len(sv) - 1)
        st = singular_values(TV)
        with np.errstate(divide="ignore", invalid="ignore"):
            pr = np.where(sd > 0, st / np.where(sd > 0, sd, 1.0), 0.0)
        pointwise.append(float(np.max(pr)))
    return ExperimentReport(
        "truncation_range", corpus_descriptor or {"size": len(ratios)}, ratios, True,
        (time.perf_counter() - start) * 1e3,
        {"pointwise_max": max(pointwise), "pointwise": pointwise},
    )
