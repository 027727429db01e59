"""Perturbed-normal counterexample model: closed forms against MC."""
import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import ndtr

from belab.app_bounds import alpha_quadrature
from belab.errors import DomainError, UnsupportedModelError
from belab.models import Example41Spec, IsqrtModel, example41_alpha, example41_transform
from belab.models.isqrt import (
    ISQRT_MEAN,
    delta_abs_moment,
    delta_tail_prob,
    isqrt_delta,
    ks_lower_bound,
    w_delta_abs_moment,
)


class TestConstants:
    def test_isqrt_mean_frozen(self):
        np.testing.assert_allclose(ISQRT_MEAN, 1.7200799746490392, rtol=1e-15)

    def test_isqrt_mean_by_quadrature(self):
        # E|Z|^(-1/2) = 2 int_0^inf z^(-1/2) phi(z) dz
        val, _ = integrate.quad(
            lambda z: z ** -0.5 * math.exp(-0.5 * z * z)
            / math.sqrt(2 * math.pi), 0, 12)
        np.testing.assert_allclose(ISQRT_MEAN, 2 * val, rtol=1e-9)

    def test_remainder_moments_frozen(self):
        np.testing.assert_allclose(delta_abs_moment(1.0),
                                   0.9242302342362695, rtol=1e-10)
        np.testing.assert_allclose(w_delta_abs_moment(),
                                   0.6018747362772532, rtol=1e-10)

    def test_remainder_moment_domain(self):
        for q in (0.0, 2.0, 2.5, -1.0):
            with pytest.raises(DomainError):
                delta_abs_moment(q)

    def test_remainder_moment_mc(self):
        rng = np.random.default_rng(91)
        w = rng.standard_normal(400000)
        vals = np.abs(isqrt_delta(w, 1.0))
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        np.testing.assert_allclose(vals.mean(), delta_abs_moment(1.0),
                                   atol=4 * se)


class TestTransform:
    def test_point_value(self):
        np.testing.assert_allclose(example41_transform(1.0, 0.01),
                                   1.0072007997464904, rtol=1e-15)

    def test_zero_maps_to_minus_inf(self):
        assert example41_transform(0.0, 0.01) == -np.inf

    def test_formula_on_negative_branch(self):
        w, eps = -2.0, 0.05
        want = w - eps / math.sqrt(2.0) + eps * ISQRT_MEAN
        np.testing.assert_allclose(example41_transform(w, eps), want,
                                   rtol=1e-14)

    def test_delta_relationship(self):
        w = np.array([-1.5, 0.3, 2.0])
        eps = 0.02
        np.testing.assert_allclose(
            example41_transform(w, eps) - w, isqrt_delta(w, eps), rtol=1e-12)

    def test_remainder_is_centered(self):
        # E Delta = eps (ISQRT_MEAN - E|W|^(-1/2)) = 0
        rng = np.random.default_rng(92)
        w = rng.standard_normal(500000)
        d = isqrt_delta(w, 1.0)
        se = d.std(ddof=1) / math.sqrt(d.size)
        np.testing.assert_allclose(d.mean(), 0.0, atol=4 * se)


class TestTailProbability:
    def test_edge_cases(self):
        assert delta_tail_prob(-0.5, 0.01) == 1.0
        assert delta_tail_prob(0.0, 0.01) == 1.0

    def test_both_branches_vs_mc(self):
        rng = np.random.default_rng(93)
        eps = 0.1
        w = rng.standard_normal(400000)
        d = np.abs(isqrt_delta(w, eps))
        # u < ISQRT_MEAN exercises both tail pieces, u > only the small one
        for t in (0.05, 0.3):
            p_hat = float(np.mean(d > t))
            se = math.sqrt(p_hat * (1 - p_hat) / d.size)
            np.testing.assert_allclose(delta_tail_prob(t, eps), p_hat,
                                       atol=4 * se + 1e-12)

    def test_monotone_in_threshold(self):
        ts = np.linspace(0.001, 2.0, 50)
        vals = [delta_tail_prob(t, 0.05) for t in ts]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


class TestKSLowerBound:
    def test_frozen_value(self):
        np.testing.assert_allclose(ks_lower_bound(1e-3),
                                   0.003303144025452176, rtol=1e-12)

    def test_floor_inequality(self):
        for eps in (1e-2, 1e-3, 1e-5):
            assert ks_lower_bound(eps) >= eps ** (2.0 / 3.0) / 6.0

    def test_domain(self):
        # needs eps^(2/3) > eps * ISQRT_MEAN, i.e. eps < ISQRT_MEAN^(-3)
        with pytest.raises(DomainError):
            ks_lower_bound(0.3)
        with pytest.raises(DomainError):
            ks_lower_bound(0.0)

    def test_pinch_set_identity_mc(self):
        # {T <= eps c0} = {W <= eps^(2/3)}
        rng = np.random.default_rng(94)
        eps = 0.05
        model = IsqrtModel(Example41Spec(eps, 400))
        chunk = model.sample_chunk(rng, 300000)
        p_hat = float(np.mean(chunk["t"] <= eps * ISQRT_MEAN))
        want = float(ndtr(eps ** (2.0 / 3.0)))
        se = math.sqrt(want * (1 - want) / 300000)
        np.testing.assert_allclose(p_hat, want, atol=4 * se)


class TestSpec:
    def test_epsilon_domain(self):
        for bad in (0.0, 1.0, -0.1, 2.0):
            with pytest.raises(DomainError):
                Example41Spec(bad)
        Example41Spec(0.5)  # the type allows the full open interval

    def test_n_domain(self):
        with pytest.raises(DomainError):
            Example41Spec(0.01, n=1)


class TestModel:
    def test_statistic_and_split(self):
        model = IsqrtModel(Example41Spec(0.01, 100))
        data = (0.7, 0.05)
        np.testing.assert_allclose(model.statistic(data),
                                   float(example41_transform(0.75, 0.01)),
                                   rtol=1e-14)
        np.testing.assert_allclose(model.delta(data),
                                   float(isqrt_delta(0.75, 0.01)), rtol=1e-14)

    def test_w_is_exactly_standard_normal(self):
        model = IsqrtModel(Example41Spec(0.01, 100))
        assert model.linear_ks_exact() == 0.0
        rng = np.random.default_rng(95)
        chunk = model.sample_chunk(rng, 200000)
        np.testing.assert_allclose(chunk["w"].var(ddof=1), 1.0, atol=0.02)

    def test_leave_one_out_independence(self):
        # zero_out variant depends only on the retained part r
        rng = np.random.default_rng(96)
        model = IsqrtModel(Example41Spec(0.02, 50))
        got = model.delta_variant((0.4, 0.1), 0, "zero_out", rng)
        np.testing.assert_allclose(got, float(isqrt_delta(0.4, 0.02)),
                                   rtol=1e-14)

    def test_per_index_terms_not_materialized(self):
        model = IsqrtModel(Example41Spec(0.01, 100))
        with pytest.raises(UnsupportedModelError):
            model.linear_terms(np.zeros(100))
        assert model.supports_delta_l2 is False

    def test_retained_part_tail(self):
        model = IsqrtModel(Example41Spec(0.01, 100))
        sd = math.sqrt(99.0 / 100.0)
        np.testing.assert_allclose(model.prob_abs_w_minus_g_above(0, 1.3),
                                   2 * ndtr(-1.3 / sd), rtol=1e-12)

    def test_closed_form_component_means(self):
        model = IsqrtModel(Example41Spec(0.003, 100))
        np.testing.assert_allclose(model.e_abs_delta(),
                                   0.003 * 0.9242302342362695, rtol=1e-10)
        np.testing.assert_allclose(model.e_abs_w_delta(),
                                   0.003 * 0.6018747362772532, rtol=1e-10)

    def test_chunk_draw_order(self):
        rng_a = np.random.default_rng(97)
        rng_b = np.random.default_rng(97)
        model = IsqrtModel(Example41Spec(0.05, 25))
        chunk = model.sample_chunk(rng_a, 6, mode="resample")
        r = rng_b.standard_normal(6) * math.sqrt(24.0 / 25.0)
        x1 = rng_b.standard_normal(6) / 5.0
        v = rng_b.standard_normal(6) / 5.0
        np.testing.assert_allclose(chunk["w"], r + x1, rtol=1e-14)
        np.testing.assert_allclose(chunk["dvar_rep"][:, 0],
                                   isqrt_delta(r + v, 0.05), rtol=1e-12)


class TestResampleCouplingAlpha:
    def test_mc_matches_quadrature(self):
        for eps, seed in ((0.05, 201), (0.04, 202), (0.03, 203)):
            n = round(eps ** -4)
            est = example41_alpha(Example41Spec(eps, n), 200000, seed)
            want = alpha_quadrature(eps, n)
            assert est.std_error > 0
            np.testing.assert_allclose(est.value, want,
                                       atol=4 * est.std_error)

    def test_zero_out_differs_from_resample(self):
        # same seed, different coupling: zero_out pins v = 0
        spec = Example41Spec(0.05, 100)
        model = IsqrtModel(spec)
        rng = np.random.default_rng(98)
        chunk = model.sample_chunk(rng, 4, mode="zero_out")
        r = chunk["w"] - chunk["g_rep"][:, 0]
        np.testing.assert_allclose(chunk["dvar_rep"][:, 0],
                                   isqrt_delta(r, 0.05), rtol=1e-12)
