import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorentz_range.concave import ConcaveFn
from lorentz_range.errors import BadSpec, DimensionMismatch, NotHermitian, ZeroDifference, ZeroMatrix
from lorentz_range.harness import Corpus, SplitMix64, gen_corpus
from lorentz_range.optimal_range import psi_function
from lorentz_range.spectral import (LipschitzFn, commutator, commutator_identity_check, doi_apply,
                                    function_of_hermitian, identity_scale, lipschitz_probe, matrix_from_dict,
                                    matrix_to_dict, schatten_lorentz_norm, singular_values, trace_norm,
                                    triangular_truncate, truncation_range_probe, upper_projection, weak_l1_probe)

A01 = np.diag([0.0, 1.0]).astype(complex)
SQUARE = LipschitzFn((0.0, 1.0, 2.0), (0.0, 1.0, 4.0))


def gaussian(n, seed):
    return gen_corpus(Corpus("gaussian_matrices", seed, 1, {"dim": n}))[0]


def hermitian(n, seed):
    G = gaussian(n, seed)
    return 0.5 * (G + G.conj().T)


def test_singular_value_examples():
    assert singular_values(np.diag([3.0, 1.0, 2.0])).tolist() == pytest.approx([3, 2, 1])
    assert singular_values([[0, -1], [1, 0]]).tolist() == pytest.approx([1, 1])
    u, v = np.array([1.0, 2.0, 2.0]), np.array([0.0, 3.0, 4.0])
    s = singular_values(np.outer(u, v))
    assert s[0] == pytest.approx(15.0) and np.allclose(s[1:], 0, atol=1e-12)


def test_schatten_lorentz_examples():
    assert schatten_lorentz_norm(np.eye(2), ConcaveFn.log1p()) == pytest.approx(math.log(3), rel=1e-15)
    assert schatten_lorentz_norm(4.0 * np.outer([1, 0], [0, 1]), ConcaveFn.power(0.3)) == pytest.approx(4.0)
    V = gaussian(6, 1)
    assert schatten_lorentz_norm(V, ConcaveFn.power(1.0)) == pytest.approx(trace_norm(V), rel=1e-14)


def test_truncation_examples():
    a, b, c, d = 1.0, 2.0, 3.0, 4.0
    assert triangular_truncate([[a, b], [c, d]]).tolist() == [[0, -b], [c, 0]]
    assert not np.any(triangular_truncate(np.diag([1.0, 2.0, 3.0])))
    H = hermitian(8, 3)
    T = triangular_truncate(H)
    assert np.allclose(T.conj().T, -T, atol=0)


def test_truncation_is_involution_off_diagonal_and_frobenius_contraction():
    for V in gen_corpus(Corpus("gaussian_matrices", 42, 20, {"dim": 16})):
        TV = triangular_truncate(V)
        off = V - np.diag(np.diag(V))
        assert np.array_equal(triangular_truncate(TV), off)
        assert np.linalg.norm(TV) <= np.linalg.norm(V)


def test_upper_projection_relation():
    V = gaussian(5, 2)
    off = V - np.diag(np.diag(V))
    assert np.allclose(upper_projection(V), 0.5 * (off - triangular_truncate(V)), atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32), st.floats(0, 2 * math.pi))
def test_singular_values_phase_invariant(n, seed, theta):
    V = gaussian(n, seed)
    assert np.allclose(singular_values(np.exp(1j * theta) * V), singular_values(V), rtol=1e-12)
    assert np.allclose(singular_values(V.conj().T), singular_values(V), rtol=1e-12)


def test_weak_l1_examples():
    assert weak_l1_probe(np.diag([1.0, 2.0])) == 0.0
    with pytest.raises(ZeroMatrix):
        weak_l1_probe(np.zeros((3, 3)))
    for V in gen_corpus(Corpus("gaussian_matrices", 7, 100, {"dim": 2})):
        assert weak_l1_probe(V) <= 2.0


def test_two_by_two_truncation_hand_bound():
    # T([[a,b],[c,d]]) has singular values |b|, |c|, so the trace norm is |b| + |c| <= ||V||_1
    for V in gen_corpus(Corpus("gaussian_matrices", 9, 100, {"dim": 2})):
        assert trace_norm(triangular_truncate(V)) == pytest.approx(abs(V[0, 1]) + abs(V[1, 0]), rel=1e-12)
        assert trace_norm(triangular_truncate(V)) <= trace_norm(V) * (1 + 1e-12) + np.sum(np.abs(np.diag(V)))


def test_truncation_range_probe():
    p5 = ConcaveFn.power(0.5)
    rep = truncation_range_probe([np.diag([1.0, 2.0])] * 3, p5, p5)
    assert rep.samples == [0.0, 0.0, 0.0]
    V = np.array([[1.0, 2.0], [-0.5, 3.0]])
    r = truncation_range_probe([V], ConcaveFn.power(1.0), ConcaveFn.power(1.0)).samples[0]
    assert r == pytest.approx(2.5 / trace_norm(V), rel=1e-12) and r <= 1
    with pytest.raises(BadSpec):
        truncation_range_probe([], p5, p5)


def test_lipschitz_fn():
    f = LipschitzFn((0.0, 1.0, 3.0), (0.0, 2.0, 1.0))
    assert f.lip_constant == 2.0
    assert f(np.array([-1.0, 0.5, 2.0, 5.0])).tolist() == [-2.0, 1.0, 1.5, 0.0]
    assert LipschitzFn.constant(3.0)(np.array([1.0, 9.0])).tolist() == [3.0, 3.0]
    with pytest.raises(BadSpec):
        LipschitzFn((1.0, 0.0), (0.0, 0.0))


def test_function_of_hermitian_examples():
    H = hermitian(6, 4)
    assert np.allclose(function_of_hermitian(LipschitzFn.identity(), H), H, atol=1e-12)
    assert np.allclose(function_of_hermitian(SQUARE, A01), np.diag([0.0, 1.0]), atol=1e-15)
    assert np.allclose(function_of_hermitian(LipschitzFn.constant(2.5), H), 2.5 * np.eye(6), atol=1e-12)
    with pytest.raises(NotHermitian):
        function_of_hermitian(SQUARE, [[0, 1], [0, 0]])


def test_doi_examples():
    V = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(doi_apply(SQUARE, A01, V), [[0, 2], [3, 0]], atol=1e-15)
    assert not np.any(doi_apply(SQUARE, 3.0 * np.eye(3), gaussian(3, 1)))
    A = np.diag([0.0, 1.0, 2.5]).astype(complex)
    W = gaussian(3, 5)
    assert np.allclose(doi_apply(LipschitzFn.identity(), A, W), W - np.diag(np.diag(W)), atol=1e-14)
    with pytest.raises(DimensionMismatch):
        doi_apply(SQUARE, A01, np.eye(3))


def test_doi_is_linear():
    A = hermitian(8, 6)
    V, W = gaussian(8, 7), gaussian(8, 8)
    f = LipschitzFn((-3, -1, 0, 2, 4), (1, 0, 0.5, -1, 0))
    assert np.allclose(doi_apply(f, A, 2 * V - 1j * W), 2 * doi_apply(f, A, V) - 1j * doi_apply(f, A, W), atol=1e-12)


def test_commutator_examples():
    assert not np.any(commutator(np.diag([1.0, 2.0]), np.diag([3.0, 4.0])))
    p, q, r, s = 1.0, 2.0, 3.0, 4.0
    assert commutator(A01, [[p, q], [r, s]]).tolist() == [[0, -q], [r, 0]]
    with pytest.raises(DimensionMismatch):
        commutator(np.eye(2), np.eye(3))


def test_commutator_identity_two_by_two():
    B = np.array([[1.0, 2.0 + 1j], [2.0 - 1j, -1.0]])
    assert commutator_identity_check(SQUARE, A01, B) <= 1e-14


def test_commutator_identity_on_corpus_with_repeated_eigenvalues():
    pairs = gen_corpus(Corpus("hermitian_pairs", 42, 100, {"dim": 8}))
    fs = gen_corpus(Corpus("lipschitz_functions", 42, 100))
    repeated = 0
    for (A, B), f in zip(pairs, fs):
        lam = np.linalg.eigvalsh(A)
        repeated += bool(np.any(np.diff(lam) < 1e-8))
        assert commutator_identity_check(f, A, B) <= 1e-10 * identity_scale(f, A, B)
    assert repeated >= 40


def test_lipschitz_probe_shift():
    Y = hermitian(6, 11)
    eps = 0.1
    phi, psi = ConcaveFn.power(0.5), psi_function(ConcaveFn.power(0.5))
    pr = lipschitz_probe(LipschitzFn.identity(), Y + eps * np.eye(6), Y, phi, psi)
    assert pr.ratio == pytest.approx(psi(6.0) / phi(6.0), rel=1e-9)
    with pytest.raises(ZeroDifference):
        lipschitz_probe(LipschitzFn.identity(), Y, Y, phi, psi)


def test_matrix_json_roundtrip():
    H = hermitian(3, 2)
    d = matrix_to_dict(H)
    assert d["hermitian"] and d["n"] == 3
    assert np.array_equal(matrix_from_dict(d), H)
    with pytest.raises(BadSpec):
        matrix_from_dict({"n": 3, "re": [[1, 2], [3, 4]]})
    with pytest.raises(NotHermitian):
        matrix_from_dict({"n": 2, "re": [[0, 1], [0, 0]], "hermitian": True})
