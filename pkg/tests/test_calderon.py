import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorentz_range.calderon import (CalderonImage, apply_S, apply_Sd, check_hilbert_domination, eval_S_of_step,
                                    hilbert_of_step, hilbert_rearrangement_estimate, image_lorentz_norm,
                                    image_lorentz_norm_quadrature)
from lorentz_range.concave import ConcaveFn
from lorentz_range.errors import AtSingularity, BadSpec, TailDivergent
from lorentz_range.harness import Corpus, gen_corpus, hilbert_grid, measurable_set_ratios
from lorentz_range.optimal_range import exact_power_psi, psi_function
from lorentz_range.rearrangement import DecreasingStep, IntervalSet, Seq, StepFn, rearrange

from conftest import quad_hilbert, quad_S

CHI01 = DecreasingStep.indicator(1.0)


def test_S_of_indicator_examples():
    img = apply_S(CHI01)
    assert img(0.5) == pytest.approx(1 + math.log(2), rel=1e-15)
    assert img(2.0) == 0.5
    assert img(1.0) == 1.0


@pytest.mark.parametrize("t", [1e-3, 0.3, 0.999, 1.0, 1.5, 2.0, 7.0, 1e3])
def test_S_matches_quadrature_on_layer_forms(t):
    mu = DecreasingStep.from_layers([(2.0, 1.0), (1.0, 2.0)])
    assert apply_S(mu)(t) == pytest.approx(quad_S(mu.to_step(), t), rel=1e-10)


def test_S_of_signed_steps_matches_quadrature():
    for x in gen_corpus(Corpus("signed_step_functions", 5, 20)):
        for t in np.geomspace(1e-2, 1e2, 7) * x.breakpoints[-1]:
            assert eval_S_of_step(x, t) == pytest.approx(quad_S(x, t), rel=1e-9, abs=1e-12)


def test_S_rejects_nonpositive_t():
    with pytest.raises(BadSpec):
        eval_S_of_step(StepFn.indicator(0, 1), 0.0)


def test_S_is_linear_and_monotone_on_corpus():
    corpus = gen_corpus(Corpus("step_functions", 9, 60))
    t = np.geomspace(1e-4, 1e4, 64)
    for a, b in zip(corpus[::2], corpus[1::2]):
        lhs = apply_S(2.5 * a + b)(t)
        assert np.allclose(lhs, 2.5 * apply_S(a)(t) + apply_S(b)(t), rtol=1e-13)
        assert np.all(apply_S(a + b)(t) >= apply_S(a)(t))


def test_S_dominates_rearranged_input():
    # |x| <= S mu(x) in distribution: at least mu(x)(t) <= S mu(x)(t)
    for mu in gen_corpus(Corpus("step_functions", 4, 100)):
        t = np.geomspace(mu.u[0] * 1e-3, mu.u[-1] * 1e3, 64)
        assert np.all(mu(t) <= apply_S(mu)(t) * (1 + 1e-13))


def test_S_image_of_signed_step_bounded_by_S_mu():
    for x in gen_corpus(Corpus("signed_step_functions", 8, 100)):
        t = np.geomspace(1e-3, 1e3, 16) * x.breakpoints[-1]
        assert np.all(np.abs(eval_S_of_step(x, t)) <= apply_S(rearrange(x))(t) * (1 + 1e-12) + 1e-14)


def test_image_integral_closed_form():
    assert apply_S(CHI01).integral_0_1() == pytest.approx(2.0, rel=1e-15)
    img = apply_S(DecreasingStep.indicator(0.25))
    assert img.integral_0_1() == pytest.approx(0.25 * (2 + math.log(4)), rel=1e-15)


def test_image_json_roundtrip():
    img = apply_S(DecreasingStep.from_layers([(1.0, 0.5), (2.0, 3.0)]))
    back = CalderonImage.from_dict(img.to_dict())
    assert np.array_equal(back.u, img.u) and np.array_equal(back.alpha, img.alpha)


def test_Sd_examples():
    assert apply_Sd(Seq((1.0,)), 0).tolist() == [1.0]
    out = apply_Sd(Seq((1.0,)), 2)
    assert out.tolist() == pytest.approx([1.0, 0.5, 1 / 3], rel=1e-15)
    assert apply_Sd([0.0, 1.0], 1).tolist() == pytest.approx([1.0, 0.5], rel=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30))
def test_Sd_matches_definition(a):
    out = apply_Sd(a, len(a) + 3)
    padded = a + [0.0] * 4
    for n in range(len(out)):
        expect = sum(padded[: n + 1]) / (n + 1) + sum(padded[k] / k for k in range(n + 1, len(padded)))
        assert out[n] == pytest.approx(expect, rel=1e-12, abs=1e-12)


def test_hilbert_example():
    assert abs(hilbert_of_step(StepFn.indicator(0, 1), -1.0)) == pytest.approx(math.log(2) / math.pi, rel=1e-14)
    assert math.log(2) / math.pi == pytest.approx(0.22064, abs=1e-5)
    with pytest.raises(AtSingularity):
        hilbert_of_step(StepFn.indicator(0, 1), 1.0)


def test_hilbert_matches_cauchy_quadrature():
    for x in gen_corpus(Corpus("signed_step_functions", 12, 10)):
        bp = np.asarray(x.breakpoints)
        mids = 0.5 * (bp[:-1] + bp[1:])
        for t in [*mids[:3], -0.7 * bp[-1], 2.0 * bp[-1]]:
            assert hilbert_of_step(x, t) == pytest.approx(quad_hilbert(x, t), rel=1e-8, abs=1e-12)


def test_hilbert_domination_chi01():
    rep = check_hilbert_domination(CHI01, [1.0])
    assert rep.passed
    assert rep.slacks[0] == pytest.approx(math.log(2) / math.pi - 1 / (2 * math.pi), rel=1e-12)


def test_hilbert_domination_on_corpus():
    for mu in gen_corpus(Corpus("step_functions", 42, 200)):
        assert check_hilbert_domination(mu, hilbert_grid(mu)).passed


def test_measurable_set_bound_on_corpus():
    for d in gen_corpus(Corpus("interval_sets", 42, 200)):
        assert np.max(measurable_set_ratios(d)) <= 1.0 + 1e-12


def test_measurable_set_single_interval_at_origin_is_half():
    assert np.allclose(measurable_set_ratios(IntervalSet(((0.0, 3.0),))), 0.5, rtol=1e-14)


def test_hilbert_rearrangement_estimate():
    x = StepFn.indicator(0, 1)
    est = hilbert_rearrangement_estimate(x)
    assert est.cell == pytest.approx(20.0 / 4096)
    assert np.all(np.diff(est.values) <= 0)
    with pytest.raises(BadSpec):
        hilbert_rearrangement_estimate(x, n_samples=512)
    with pytest.raises(BadSpec):
        hilbert_rearrangement_estimate(x, window=2.0)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_image_norm_two_routes_agree(alpha):
    psi = exact_power_psi(alpha)
    img = apply_S(DecreasingStep.from_layers([(1.0, 0.3), (0.5, 2.0), (0.1, 40.0)]))
    assert image_lorentz_norm(img, psi) == pytest.approx(image_lorentz_norm_quadrature(img, psi), rel=1e-8)


def test_image_norm_two_routes_agree_for_pwl_psi():
    psi = psi_function(ConcaveFn.power(0.5))
    img = apply_S(DecreasingStep.from_layers([(1.0, 0.3), (0.5, 2.0)]))
    assert image_lorentz_norm(img, psi) == pytest.approx(image_lorentz_norm_quadrature(img, psi), rel=1e-6)


def test_image_norm_power_one_diverges():
    with pytest.raises(TailDivergent):
        image_lorentz_norm(apply_S(CHI01), ConcaveFn.power(1.0))
