"""Order-statistic models: influence functions, scale, and value oracles."""
import math

import numpy as np
import pytest

from belab.bound_core import check_normalization
from belab.errors import UnsupportedModelError
from belab.models import LStatModel, LStatSpec, lstat_projection_sigma, lstat_value
from belab.models.base import DIST_CATALOG
from belab.models.lstat import (
    WEIGHT_CATALOG,
    WeightFn,
    check_lipschitz,
    influence_closed,
    influence_quadrature,
    sigma_double_integral,
    t_center,
)


class TestValue:
    def test_const1_is_the_mean(self):
        assert lstat_value([3.0, 1.0, 2.0], WEIGHT_CATALOG["const1"]) == 2.0

    def test_identity_small_example(self):
        # (1 * J(1/2) + 3 * J(1)) / 2
        got = lstat_value([1.0, 3.0], WEIGHT_CATALOG["identity"])
        np.testing.assert_allclose(got, 1.75, rtol=1e-15)

    def test_sort_invariance(self):
        rng = np.random.default_rng(81)
        x = rng.random(9)
        w = WEIGHT_CATALOG["identity"]
        np.testing.assert_allclose(lstat_value(x, w),
                                   lstat_value(np.sort(x)[::-1], w),
                                   rtol=1e-14)


class TestCenters:
    def test_identity_uniform(self):
        got = t_center(WEIGHT_CATALOG["identity"], DIST_CATALOG["uniform01"])
        np.testing.assert_allclose(got, 1.0 / 3.0, rtol=1e-10)

    def test_identity_normal(self):
        got = t_center(WEIGHT_CATALOG["identity"], DIST_CATALOG["std_normal"])
        np.testing.assert_allclose(got, 1.0 / (2 * math.sqrt(math.pi)),
                                   rtol=1e-10)

    def test_identity_exponential(self):
        got = t_center(WEIGHT_CATALOG["identity"],
                       DIST_CATALOG["exponential1"])
        np.testing.assert_allclose(got, 0.75, rtol=1e-10)

    def test_const1_is_the_distribution_mean(self):
        for name in ("uniform01", "std_normal", "exponential1"):
            d = DIST_CATALOG[name]
            np.testing.assert_allclose(
                t_center(WEIGHT_CATALOG["const1"], d), d.mean, atol=1e-10)


class TestScale:
    def test_identity_uniform_is_one_over_45(self):
        s_sq = sigma_double_integral(WEIGHT_CATALOG["identity"],
                                     DIST_CATALOG["uniform01"])
        np.testing.assert_allclose(s_sq, 1.0 / 45.0, atol=1e-8)

    def test_identity_exponential_is_seven_twelfths(self):
        s_sq = sigma_double_integral(WEIGHT_CATALOG["identity"],
                                     DIST_CATALOG["exponential1"])
        np.testing.assert_allclose(s_sq, 7.0 / 12.0, atol=1e-8)

    def test_const1_recovers_the_variance(self):
        for name in ("uniform01", "std_normal"):
            d = DIST_CATALOG[name]
            s_sq = sigma_double_integral(WEIGHT_CATALOG["const1"], d)
            np.testing.assert_allclose(s_sq, d.var, atol=1e-8)

    def test_projection_reconciles_both_routes(self):
        infl, sigma = lstat_projection_sigma(WEIGHT_CATALOG["identity"],
                                             DIST_CATALOG["std_normal"])
        # E g^2 and the double integral agreed inside; spot the value by MC
        rng = np.random.default_rng(82)
        x = rng.standard_normal(400000)
        vals = np.asarray(infl(x))
        est = float((vals * vals).mean())
        se = float((vals * vals).std(ddof=1)) / math.sqrt(x.size)
        np.testing.assert_allclose(est, sigma ** 2, atol=4 * se)


class TestInfluence:
    GRID = (-1.5, -0.2, 0.1, 0.6, 0.97, 2.3)

    def test_closed_forms_match_quadrature(self):
        for wname, dname in [("identity", "uniform01"),
                             ("identity", "std_normal"),
                             ("identity", "exponential1"),
                             ("const1", "uniform01")]:
            w = WEIGHT_CATALOG[wname]
            d = DIST_CATALOG[dname]
            closed = influence_closed(w, d)
            quad = influence_quadrature(w, d)
            lo, hi = d.support
            for x in self.GRID:
                if not (lo < x < hi):
                    continue
                np.testing.assert_allclose(
                    float(closed(np.array([x]))[0]), quad(x),
                    rtol=1e-8, atol=1e-10)

    def test_influence_is_centered(self):
        # E infl(X) = 0 by quadrature
        from scipy import integrate
        w = WEIGHT_CATALOG["identity"]
        d = DIST_CATALOG["std_normal"]
        infl = influence_closed(w, d)
        val, _ = integrate.quad(
            lambda x: float(infl(np.array([x]))[0]) * d.pdf(x), -12, 12)
        np.testing.assert_allclose(val, 0.0, atol=1e-10)

    def test_raw_third_moment_frozen(self):
        model = LStatModel(LStatSpec("identity", "uniform01", 400))
        np.testing.assert_allclose(model.influence_abs_moment(3.0),
                                   0.004560212779638627, rtol=1e-8)

    def test_raw_moment_independent_of_n(self):
        a = LStatModel(LStatSpec("identity", "uniform01", 16))
        b = LStatModel(LStatSpec("identity", "uniform01", 400))
        np.testing.assert_allclose(a.influence_abs_moment(3.0),
                                   b.influence_abs_moment(3.0), rtol=1e-9)


class TestLipschitz:
    def test_catalog_weights_pass(self):
        for w in WEIGHT_CATALOG.values():
            check_lipschitz(w)

    def test_understated_constant_raises(self):
        bad = WeightFn("bad", 0.5, lambda t: np.asarray(t, dtype=float))
        with pytest.raises(UnsupportedModelError):
            check_lipschitz(bad)

    def test_model_exposes_constant(self):
        assert LStatModel(LStatSpec("const1", "uniform01", 8)
                          ).lipschitz_constant() == 0.0
        assert LStatModel(LStatSpec("identity", "uniform01", 8)
                          ).lipschitz_constant() == 1.0


class TestModel:
    def test_spec_validation(self):
        with pytest.raises(UnsupportedModelError):
            LStatSpec("trimmed", "uniform01", 10)
        with pytest.raises(UnsupportedModelError):
            LStatSpec("identity", "rademacher", 10)
        with pytest.raises(UnsupportedModelError):
            LStatSpec("identity", "uniform01", 3)

    def test_statistic_matches_raw_value(self):
        rng = np.random.default_rng(83)
        model = LStatModel(LStatSpec("identity", "std_normal", 12))
        data = model.sample_data(rng)
        raw = lstat_value(data, model.weight)
        want = (raw - model._center) * math.sqrt(12) / model.sigma
        np.testing.assert_allclose(model.statistic(data), want, rtol=1e-12)

    def test_normalized_linear_part(self):
        for wname, dname in [("identity", "uniform01"),
                             ("identity", "exponential1"),
                             ("const1", "std_normal")]:
            check_normalization(
                LStatModel(LStatSpec(wname, dname, 25)).linear_part)

    def test_const1_delta_vanishes(self):
        rng = np.random.default_rng(84)
        model = LStatModel(LStatSpec("const1", "exponential1", 10))
        chunk = model.sample_chunk(rng, 8, mode="zero_out")
        np.testing.assert_allclose(chunk["delta"], 0.0, atol=1e-12)
        np.testing.assert_allclose(chunk["dvar_rep"], 0.0, atol=1e-12)

    def test_delta_variant_brute(self):
        rng = np.random.default_rng(85)
        model = LStatModel(LStatSpec("identity", "uniform01", 6))
        data = model.sample_data(rng)
        for i in (0, 2, 5):
            got = model.delta_variant(data, i, "zero_out", rng)
            xm = data.copy()
            xm[i] = 0.0
            want = model.statistic(xm) - float(np.sum(model.linear_terms(xm)))
            np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-13)

    def test_resample_variant_draw_order(self):
        rng_a = np.random.default_rng(86)
        rng_b = np.random.default_rng(86)
        model = LStatModel(LStatSpec("identity", "exponential1", 7))
        data = model.sample_data(rng_a)
        model.sample_data(rng_b)
        got = model.delta_variant(data, 4, "resample", rng_a)
        v = float(model.dist.sample(rng_b, 1)[0])
        xm = data.copy()
        xm[4] = v
        want = model.statistic(xm) - float(np.sum(model.linear_terms(xm)))
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-13)

    def test_chunk_matches_per_replicate(self):
        rng_a = np.random.default_rng(87)
        rng_b = np.random.default_rng(87)
        model = LStatModel(LStatSpec("identity", "std_normal", 9))
        chunk = model.sample_chunk(rng_a, 3, mode="zero_out")
        x = model.dist.sample(rng_b, (3, 9))
        for r in range(3):
            np.testing.assert_allclose(chunk["t"][r], model.statistic(x[r]),
                                       rtol=1e-12)
            np.testing.assert_allclose(
                chunk["dvar_rep"][r, 0],
                model.delta_variant(x[r], 0, "zero_out", rng_b),
                rtol=1e-9, atol=1e-13)
