"""Seeded chunked sampling engine: determinism, aggregation, distances."""
import math

import numpy as np
import pytest
from scipy import stats

from belab.errors import ConfigError
from belab.mc_engine import (
    CHUNK_SIZE,
    DKW_ALPHA,
    SeedSpec,
    certify,
    chunk_layout,
    collect_t_w,
    components_via_engine,
    dkw_radius,
    empirical_ks_two_sample,
    empirical_ks_vs_normal,
    estimate_components,
    pointwise_diff_two_sample,
    pointwise_diff_vs_normal,
    run_replicates,
)
from belab.models import (
    Example41Spec,
    IsqrtModel,
    LinearModel,
    LinearSpec,
    UStatModel,
    UStatSpec,
    build_model,
    sample_decomposition,
)
from belab.types import BoundValue, KSResult


def ustat_model(n=12):
    return UStatModel(UStatSpec("variance", "std_normal", n))


class TestChunkLayout:
    def test_partition(self):
        layout = chunk_layout(10000)
        assert layout == [(0, 0, 4096), (1, 4096, 4096), (2, 8192, 1808)]

    def test_small_and_exact(self):
        assert chunk_layout(1) == [(0, 0, 1)]
        assert chunk_layout(CHUNK_SIZE) == [(0, 0, CHUNK_SIZE)]

    def test_contiguous_cover(self):
        for r in (5, 4097, 12288):
            layout = chunk_layout(r)
            assert layout[0][1] == 0
            assert sum(c for _, _, c in layout) == r
            for (_, s0, c0), (_, s1, _) in zip(layout, layout[1:]):
                assert s1 == s0 + c0


class TestSeedSpec:
    def test_substream_reproducible(self):
        a = SeedSpec(42).substream(3).standard_normal(8)
        b = SeedSpec(42).substream(3).standard_normal(8)
        np.testing.assert_array_equal(a, b)

    def test_substreams_distinct(self):
        a = SeedSpec(42).substream(0).standard_normal(8)
        b = SeedSpec(42).substream(1).standard_normal(8)
        assert not np.array_equal(a, b)

    def test_master_seeds_distinct(self):
        a = SeedSpec(1).substream(0).standard_normal(8)
        b = SeedSpec(2).substream(0).standard_normal(8)
        assert not np.array_equal(a, b)


def assert_moment_equal(a, b):
    assert a.value == b.value
    assert a.std_error == b.std_error
    assert a.replicates == b.replicates


def assert_components_equal(a, b):
    assert_moment_equal(a.e_abs_w_delta, b.e_abs_w_delta)
    assert_moment_equal(a.sum_g_delta_diff, b.sum_g_delta_diff)
    assert_moment_equal(a.delta_abs, b.delta_abs)
    assert (a.delta_l2 is None) == (b.delta_l2 is None)
    if a.delta_l2 is not None:
        assert_moment_equal(a.delta_l2, b.delta_l2)
        assert_moment_equal(a.sum_g_l2_delta_l2, b.sum_g_l2_delta_l2)
    assert sorted(a.delta_tails) == sorted(b.delta_tails)
    for k in a.delta_tails:
        assert_moment_equal(a.delta_tails[k], b.delta_tails[k])


class TestPathEquivalence:
    def test_streamed_equals_fused_both_modes(self):
        model = ustat_model()
        seed = SeedSpec(7)
        for mode in ("zero_out", "resample"):
            fused = components_via_engine(model, 6000, seed, mode=mode,
                                          delta_thresholds=(0.05, 0.2))
            streamed = estimate_components(
                run_replicates(model, 6000, seed, mode=mode),
                g_l2=model.group_g_l2(), delta_thresholds=(0.05, 0.2))
            assert_components_equal(fused, streamed)

    def test_threads_do_not_change_results(self):
        model = ustat_model()
        seed = SeedSpec(11)
        one = components_via_engine(model, 9000, seed, threads=1)
        four = components_via_engine(model, 9000, seed, threads=4)
        assert_components_equal(one, four)

    def test_collect_t_w_thread_invariant(self):
        model = ustat_model()
        seed = SeedSpec(13)
        t1, w1 = collect_t_w(model, 9000, seed, threads=1)
        t4, w4 = collect_t_w(model, 9000, seed, threads=4)
        np.testing.assert_array_equal(t1, t4)
        np.testing.assert_array_equal(w1, w4)

    def test_single_replicate_matches_decompose_one(self):
        model = ustat_model()
        seed = SeedSpec(17)
        streamed = next(iter(run_replicates(model, 1, seed)))
        direct = sample_decomposition(model, seed.substream(0))
        assert streamed.w == direct.w
        assert streamed.delta == direct.delta
        assert streamed.g_values == direct.g_values
        assert streamed.delta_variants == direct.delta_variants

    def test_no_l2_path(self):
        model = IsqrtModel(Example41Spec(0.01, 50))
        est = components_via_engine(model, 2000, SeedSpec(19),
                                    mode="resample")
        assert est.delta_l2 is None
        assert est.sum_g_l2_delta_l2 is None

    def test_empty_stream_rejected(self):
        with pytest.raises(ConfigError):
            estimate_components(iter(()), g_l2=(1.0,))


class TestAggregationConventions:
    def _samples(self):
        model = ustat_model()
        return list(run_replicates(model, 5000, SeedSpec(23),
                                   mode="zero_out")), model

    def test_mean_and_se_match_numpy(self):
        samples, model = self._samples()
        est = estimate_components(iter(samples), g_l2=model.group_g_l2(),
                                  delta_thresholds=(0.1,))
        dabs = np.abs(np.array([s.delta for s in samples]))
        np.testing.assert_allclose(est.delta_abs.value, dabs.mean(),
                                   rtol=1e-12)
        np.testing.assert_allclose(est.delta_abs.std_error,
                                   dabs.std(ddof=1) / math.sqrt(dabs.size),
                                   rtol=1e-9)
        wd = np.abs(np.array([s.w * s.delta for s in samples]))
        np.testing.assert_allclose(est.e_abs_w_delta.value, wd.mean(),
                                   rtol=1e-12)

    def test_weighted_coupling_term(self):
        samples, model = self._samples()
        est = estimate_components(iter(samples), g_l2=model.group_g_l2())
        # one exchangeable group of size n: n * E|g_1 (Delta - Delta_1)|
        gdd = np.array([12.0 * abs(s.g_values[0] * (s.delta - s.delta_variants[0]))
                        for s in samples])
        np.testing.assert_allclose(est.sum_g_delta_diff.value, gdd.mean(),
                                   rtol=1e-12)

    def test_root_moment_delta_method(self):
        samples, model = self._samples()
        est = estimate_components(iter(samples), g_l2=model.group_g_l2())
        d2 = np.array([s.delta ** 2 for s in samples])
        np.testing.assert_allclose(est.delta_l2.value,
                                   math.sqrt(d2.mean()), rtol=1e-12)
        se_m2 = d2.std(ddof=1) / math.sqrt(d2.size)
        np.testing.assert_allclose(est.delta_l2.std_error,
                                   se_m2 / (2 * math.sqrt(d2.mean())),
                                   rtol=1e-9)

    def test_tail_estimates(self):
        samples, model = self._samples()
        est = estimate_components(iter(samples), g_l2=model.group_g_l2(),
                                  delta_thresholds=(0.05, 0.2))
        dabs = np.abs(np.array([s.delta for s in samples]))
        for thr in (0.05, 0.2):
            np.testing.assert_allclose(est.delta_tails[thr].value,
                                       float(np.mean(dabs > thr)),
                                       rtol=1e-12)

    def test_structural_zero_remainder(self):
        model = LinearModel(LinearSpec("uniform01", 15))
        est = components_via_engine(model, 3000, SeedSpec(29))
        assert est.delta_abs.value == 0.0
        assert est.delta_abs.std_error == 0.0
        assert est.e_abs_w_delta.value == 0.0
        assert est.sum_g_delta_diff.value == 0.0
        assert est.delta_l2.value == 0.0


class TestDistances:
    def test_dkw_formula(self):
        np.testing.assert_allclose(
            dkw_radius(100000), math.sqrt(math.log(2.0 / DKW_ALPHA) / 200000),
            rtol=1e-14)
        with pytest.raises(ConfigError):
            dkw_radius(0)
        with pytest.raises(ConfigError):
            dkw_radius(100, alpha=1.5)

    def test_one_sample_ks_matches_scipy(self):
        rng = np.random.default_rng(31)
        t = rng.standard_normal(5000) * 1.1
        got = empirical_ks_vs_normal(t)
        want = stats.kstest(t, "norm").statistic
        np.testing.assert_allclose(got.distance, want, rtol=1e-12)
        assert got.replicates == 5000
        np.testing.assert_allclose(got.dkw_radius, dkw_radius(5000),
                                   rtol=1e-14)

    def test_two_sample_ks_matches_scipy(self):
        rng = np.random.default_rng(37)
        a = rng.standard_normal(3000)
        b = rng.standard_normal(2000) + 0.1
        got = empirical_ks_two_sample(a, b)
        want = stats.ks_2samp(a, b).statistic
        np.testing.assert_allclose(got.distance, want, rtol=1e-12)
        np.testing.assert_allclose(got.dkw_radius,
                                   dkw_radius(3000) + dkw_radius(2000),
                                   rtol=1e-14)

    def test_ks_with_ties_and_duplicates(self):
        a = np.array([0.0, 0.0, 1.0, 1.0])
        b = np.array([0.0, 1.0, 1.0, 1.0])
        got = empirical_ks_two_sample(a, b)
        np.testing.assert_allclose(got.distance, 0.25, rtol=1e-14)

    def test_pointwise_vs_normal_brute(self):
        t = np.array([-1.0, -0.5, 0.0, 0.5, 1.0, 2.0])
        from scipy.special import ndtr
        got = pointwise_diff_vs_normal(t, 0.25)
        np.testing.assert_allclose(got.distance,
                                   abs(3.0 / 6.0 - float(ndtr(0.25))),
                                   rtol=1e-14)

    def test_pointwise_two_sample_brute(self):
        a = np.array([0.0, 1.0, 2.0, 3.0])
        b = np.array([1.5, 2.5])
        got = pointwise_diff_two_sample(a, b, 2.0)
        np.testing.assert_allclose(got.distance, abs(0.75 - 0.5), rtol=1e-14)


class TestCertify:
    KS = KSResult(distance=0.050, replicates=10000,
                  dkw_radius=0.02)

    def test_pass_within_bound(self):
        assert certify(self.KS, BoundValue(0.06, 0.0, "eq2.5")) is True

    def test_pass_on_slack(self):
        # 0.05 <= 0.04 + 0.02 only through the DKW slack
        assert certify(self.KS, BoundValue(0.04, 0.0, "eq2.5")) is True

    def test_fail_beyond_slack(self):
        assert certify(self.KS, BoundValue(0.02, 0.0, "eq2.5")) is False

    def test_se_widens_slack(self):
        tight = BoundValue(0.025, 0.0, "eq2.5", known_se=0.0)
        wide = BoundValue(0.025, 0.0, "eq2.5", known_se=0.002)
        assert certify(self.KS, tight) is False
        assert certify(self.KS, wide) is True

    def test_unknown_constant_yields_none(self):
        assert certify(self.KS, BoundValue(0.01, 0.5, "eq2.9")) is None
