"""Acceptance gate: nine end-to-end checks, one printed pass/fail line each.

Every check runs the shipped code paths (CLI commands where one exists) with
fixed seeds and the stated tolerances; nothing here may loosen a bound.
"""
import json
import time
from contextlib import contextmanager

import numpy as np

from belab import bound_core
from belab.app_bounds import (
    UStatBoundInputs,
    counterexample_report,
    ustat_nonuniform_33,
    ustat_uniform_31,
)
from belab.cli import cmd_bound, cmd_example41, cmd_verify, main, parse_config
from belab.marginals import AtomMarginal, LinearPart
from belab.mc_engine import (
    SeedSpec,
    collect_t_w,
    components_via_engine,
    empirical_ks_vs_normal,
)
from belab.models import UStatSpec, build_model, ustat_moments
from belab.models.isqrt import delta_abs_moment, w_delta_abs_moment


@contextmanager
def criterion(capsys, num, text):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"\n[FAIL] criterion {num}: {text}")
        raise
    with capsys.disabled():
        print(f"\n[PASS] criterion {num}: {text} "
              f"({time.perf_counter() - start:.1f}s)")


def _cfg(doc):
    return parse_config(json.dumps(doc))


def _variance_inputs(scale=1.0, n=50, p=3.0):
    mom = ustat_moments(UStatSpec("variance", "std_normal", n), p)
    return UStatBoundInputs(
        m=2, n=n, sigma=scale * mom["sigma"], sigma1=scale * mom["sigma1"],
        e_abs_g_p=scale ** p * mom["e_abs_g_p"], p=p,
        c0_trunc=mom["c0_trunc"], e_abs_h_p=scale ** p * mom["e_abs_h_p"])


class TestAcceptance:
    def test_criterion_1_pinched_lower_bound(self, capsys):
        with criterion(capsys, 1, "closed-form KS lower bound clears its "
                       "floor and matches sampling at the coarse epsilon"):
            cfg = _cfg({"epsilon_grid": [1e-2, 1e-3, 1e-4],
                        "mc": {"master_seed": 2201, "replicates": 1000000,
                               "threads": 4}})
            start = time.perf_counter()
            rows, notes = cmd_example41(cfg)
            elapsed = time.perf_counter() - start
            assert notes == []
            lower = [r for r in rows if r.equation_tag == "eq4.2"]
            # three closed-form rows plus one sampled cross-check at 1e-2
            assert len(lower) == 4
            assert all(r.pass_flag is True for r in lower)
            assert elapsed < 10.0

    def test_criterion_2_coupling_moments(self, capsys):
        with criterion(capsys, 2, "coupling moments stay below 7 epsilon; "
                       "quadrature and sampling agree to 4 standard errors"):
            quad_ratio = w_delta_abs_moment() + delta_abs_moment(1.0)
            for i, eps in enumerate((1e-2, 1e-3)):
                quad = quad_ratio * eps
                assert quad <= 7.0 * eps
                model = build_model({"family": "isqrt", "epsilon": eps,
                                     "n": int(round(eps ** -4.0))})
                comps = components_via_engine(model, 1000000,
                                              SeedSpec(2202 + i),
                                              mode="zero_out", threads=4)
                mc = comps.e_abs_w_delta.value + comps.delta_abs.value
                se = (comps.e_abs_w_delta.std_error
                      + comps.delta_abs.std_error)
                assert mc <= 7.0 * eps
                assert abs(mc - quad) <= 4.0 * se

    def test_criterion_3_comparison_ratios(self, capsys):
        with criterion(capsys, 3, "lower bound overtakes the first-moment "
                       "rhs and tracks the bracket growth rate"):
            start = time.perf_counter()
            reps = counterexample_report((1e-3, 1e-4, 1e-5, 1e-6))
            elapsed = time.perf_counter() - start
            by_eps = {r.epsilon: r for r in reps}
            assert by_eps[1e-5].ratio_shorack > 1.0
            ratios = [by_eps[e].ratio_shorack
                      for e in (1e-3, 1e-4, 1e-5, 1e-6)]
            assert all(a < b for a, b in zip(ratios, ratios[1:]))
            target = 10.0 ** (1.0 / 3.0)
            for hi, lo in ((1e-3, 1e-4), (1e-4, 1e-5), (1e-5, 1e-6)):
                factor = by_eps[lo].ratio_bg / by_eps[hi].ratio_bg
                assert 0.8 * target <= factor <= 1.2 * target
            assert elapsed < 5.0

    def test_criterion_4_coin_flip_exact_distance(self, capsys):
        with criterion(capsys, 4, "exact coin-flip distance sits under the "
                       "cube-sum bound and sampling reproduces it"):
            doc = {"model": {"family": "linear", "dist": "rademacher",
                             "n": 100},
                   "bounds": ["eq2.5"],
                   "mc": {"master_seed": 2204, "replicates": 100000,
                          "threads": 4}}
            cfg = _cfg(doc)
            (row,), _ = cmd_bound(cfg)
            model = build_model(cfg.model_desc)
            exact = model.linear_ks_exact()
            np.testing.assert_allclose(exact, 0.03979461869358947,
                                       rtol=1e-12)
            assert exact <= row.bound_known
            np.testing.assert_allclose(row.bound_known, 0.61, rtol=1e-12)
            _, w = collect_t_w(model, cfg.replicates,
                               SeedSpec(cfg.master_seed), threads=4)
            measured = empirical_ks_vs_normal(w)
            assert abs(measured.distance - exact) <= measured.dkw_radius

    def test_criterion_5_variance_kernel_certifies(self, capsys):
        with criterion(capsys, 5, "variance-kernel distances certify "
                       "against both closed-form bounds"):
            start = time.perf_counter()
            rows, notes = cmd_verify(_cfg({
                "model": {"family": "ustat", "kernel": "variance",
                          "dist": "std_normal", "n": 50},
                "bounds": ["eq3.1", "eq3.2"],
                "mc": {"master_seed": 2205, "replicates": 100000,
                       "threads": 4}}))
            elapsed = time.perf_counter() - start
            assert notes == []
            by_tag = {r.equation_tag: r for r in rows}
            for tag in ("eq3.1", "eq3.2"):
                row = by_tag[tag]
                assert row.pass_flag is True
                slack = row.dkw_radius + 3.0 * (row.se or 0.0)
                assert row.empirical <= row.bound_known + slack
            assert elapsed < 120.0

    def test_criterion_6_rank_statistic_certifies(self, capsys):
        with criterion(capsys, 6, "two-sample rank statistic certifies "
                       "against its closed-form bound"):
            rows, notes = cmd_verify(_cfg({
                "model": {"family": "multisample", "kernel": "wilcoxon",
                          "dist": "uniform01", "n": "1000;1000"},
                "bounds": ["eq3.7"],
                "mc": {"master_seed": 2206, "replicates": 100000,
                       "threads": 4}}))
            assert notes == []
            (row,) = rows
            np.testing.assert_allclose(row.bound_known, 0.3787168540624487,
                                       rtol=1e-12)
            assert row.pass_flag is True
            assert row.empirical <= row.bound_known

    def test_criterion_7_trimmed_sum_certifies(self, capsys):
        with criterion(capsys, 7, "weighted-order-statistic distance "
                       "certifies against its closed-form bound"):
            rows, notes = cmd_verify(_cfg({
                "model": {"family": "lstat", "weight": "identity",
                          "dist": "uniform01", "n": 400},
                "bounds": ["eq3.10"],
                "mc": {"master_seed": 2207, "replicates": 100000,
                       "threads": 4}}))
            assert notes == []
            (row,) = rows
            np.testing.assert_allclose(row.bound_known, 0.8873696880247477,
                                       rtol=1e-9)
            assert row.pass_flag is True
            assert row.empirical <= row.bound_known

    def test_criterion_8_structural_properties(self, capsys):
        with criterion(capsys, 8, "solver guarantees, assembly identities, "
                       "and scaling laws hold across the catalog"):
            parts = [
                LinearPart([(AtomMarginal.rademacher(0.1), 100)]),
                build_model({"family": "ustat", "kernel": "variance",
                             "dist": "std_normal", "n": 50}).linear_part,
                build_model({"family": "lstat", "weight": "identity",
                             "dist": "uniform01", "n": 45}).linear_part,
                build_model({"family": "multisample", "kernel": "wilcoxon",
                             "dist": "uniform01",
                             "n": [60, 40]}).linear_part,
            ]
            tol = 1e-6
            for lp in parts:
                d = bound_core.solve_delta_minimal(lp, tolerance=tol)
                assert lp.l_of(d) >= 0.5
                assert lp.l_of(d * (1 - 2 * tol)) < 0.5
                sum_p, _ = lp.sum_abs_p(3.0)
                d_mom = bound_core.delta_from_p_moment(3.0, sum_p)
                assert lp.l_of(d_mom) >= 0.5 - 1e-9
                trunc_tol = 1e-9
                d_tr = bound_core.delta_from_truncation(lp,
                                                        tolerance=trunc_tol)
                assert lp.trunc_sum(d_tr) <= 0.5
                assert lp.trunc_sum(d_tr * (1 - 3 * trunc_tol)) > 0.5

            # capped first-moment inequality on a deterministic grid
            grid = np.logspace(-6, 6, 25)
            for a in grid:
                for b in grid:
                    for p in (2.2, 2.5, 3.0):
                        rhs = a - ((p - 2) ** (p - 2) * a ** (p - 1)
                                   / ((p - 1) ** (p - 1) * b ** (p - 2)))
                        assert min(a, b) >= rhs - 1e-12 * max(a, b)

            # the two uniform assemblies differ by exactly the
            # normal-approximation premium on the cube sum
            model = build_model({"family": "lstat", "weight": "identity",
                                 "dist": "uniform01", "n": 45})
            comps = components_via_engine(model, 4000, SeedSpec(2208),
                                          mode="zero_out")
            beta = bound_core.compute_beta(model.linear_part)
            bc = comps.as_bound_components(
                beta, bound_core.solve_delta_minimal(model.linear_part))
            b24 = bound_core.uniform_bound_beta(bc)
            b25 = bound_core.uniform_bound_normal(bc)
            np.testing.assert_allclose(b25.known - b24.known,
                                       4.1 * beta.value, rtol=1e-9)

            # ground-truth projection variance for the linear weight
            m400 = build_model({"family": "lstat", "weight": "identity",
                                "dist": "uniform01", "n": 400})
            np.testing.assert_allclose(m400.sigma ** 2, 1.0 / 45.0,
                                       atol=1e-8)

            # rescaling the kernel leaves every bound invariant
            base = _variance_inputs()
            scaled = _variance_inputs(scale=3.7)
            np.testing.assert_allclose(ustat_uniform_31(scaled).known,
                                       ustat_uniform_31(base).known,
                                       rtol=1e-12)
            for z in (0.0, 2.0):
                a, b = (ustat_nonuniform_33(base, z),
                        ustat_nonuniform_33(scaled, z))
                np.testing.assert_allclose(b.known, a.known, rtol=1e-12)
                np.testing.assert_allclose(b.c_coeff, a.c_coeff, rtol=1e-12)

            # exact cubic decay in z of the moment-term coefficient
            c0 = ustat_nonuniform_33(base, 0.0).c_coeff
            c2 = ustat_nonuniform_33(base, 2.0).c_coeff
            np.testing.assert_allclose(c2 * 3.0 ** 3.0, c0, rtol=1e-12)

            # root-n decay of the cube-sum baseline
            lp100 = LinearPart([(AtomMarginal.rademacher(0.1), 100)])
            lp400 = LinearPart([(AtomMarginal.rademacher(0.05), 400)])
            ratio = (bound_core.linear_baseline(lp100).known
                     / bound_core.linear_baseline(lp400).known)
            np.testing.assert_allclose(ratio, 2.0, rtol=1e-12)

    def test_criterion_9_byte_identical_reruns(self, tmp_path, capsys):
        with criterion(capsys, 9, "verification output is byte-identical "
                       "across reruns and thread counts"):
            doc = {"model": {"family": "lstat", "weight": "identity",
                             "dist": "uniform01", "n": 45},
                   "bounds": ["eq2.3", "eq2.5", "eq2.6"],
                   "z_grid": [0.5, 1.5],
                   "mc": {"master_seed": 2209, "replicates": 2000}}
            path = tmp_path / "cfg.json"
            path.write_text(json.dumps(doc), encoding="utf-8")
            blobs = []
            for name, threads in (("a.csv", "1"), ("b.csv", "1"),
                                  ("c.csv", "3")):
                out = tmp_path / name
                rc = main(["verify", "--config", str(path),
                           "--output", str(out), "--threads", threads])
                assert rc == 0
                blobs.append(out.read_bytes())
            assert blobs[0] == blobs[1] == blobs[2]
