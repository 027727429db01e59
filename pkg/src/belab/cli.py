"""Experiment-runner CLI: computes bounds, verifies them against sampled
distances, reproduces the perturbed-normal counterexample, and sweeps
parameters, emitting CSV or JSON result rows.

Config is a single JSON document (schema in the README). Every run is fully
determined by the config plus CLI overrides: sampling uses counter-based
substreams of mc.master_seed and all reductions are order-fixed, so identical
inputs produce byte-identical output files, whatever --threads is.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from . import app_bounds, bound_core
from .errors import BelabError, CapacityError, ConfigError, DomainError
from .mc_engine import (
    SeedSpec,
    certify,
    collect_t_w,
    components_via_engine,
    dkw_radius,
    empirical_ks_two_sample,
    empirical_ks_vs_normal,
    pointwise_diff_two_sample,
    pointwise_diff_vs_normal,
)
from .models import (
    DIST_CATALOG,
    FAMILIES,
    KERNEL_CATALOG,
    WEIGHT_CATALOG,
    build_model,
    ustat_moments,
)
from .models.isqrt import ISQRT_MEAN, delta_abs_moment, w_delta_abs_moment
from .types import MomentEstimate, NonUniformInputs

RESULT_COLUMNS = ("equation_tag", "model", "n", "m", "z", "epsilon", "p",
                  "bound_known", "bound_c_coeff", "empirical", "dkw_radius",
                  "se", "pass")

# tags whose bound is a function of a point z
Z_TAGS = frozenset({"eq2.6", "eq2.9", "eq3.3", "eq3.4", "eq3.6", "eq3.8",
                    "eq3.11"})
_GENERAL_TAGS = ("eq1.3", "eq1.4", "eq2.3", "eq2.4", "eq2.5", "eq2.6", "eq2.9")
FAMILY_TAGS = {
    "linear": frozenset(_GENERAL_TAGS),
    "ustat": frozenset(_GENERAL_TAGS + ("eq3.1", "eq3.2", "eq3.3", "eq3.4",
                                        "eq3.6")),
    "multisample": frozenset(_GENERAL_TAGS + ("eq3.7", "eq3.8")),
    "lstat": frozenset(_GENERAL_TAGS + ("eq3.10", "eq3.11")),
    # no second moment of the remainder: the tau/L2 forms are unavailable
    "isqrt": frozenset(_GENERAL_TAGS) - {"eq2.6", "eq2.9"},
}
KNOWN_TAGS = frozenset().union(*FAMILY_TAGS.values())
SWEEP_AXES = ("n", "z", "epsilon", "replicates")
MIN_VERIFY_REPLICATES = 1000


@dataclass(frozen=True)
class ResultRow:
    """One emitted record; column order is RESULT_COLUMNS."""

    equation_tag: str
    model: str
    n: object = None
    m: object = None
    z: float | None = None
    epsilon: float | None = None
    p: float | None = None
    bound_known: float | None = None
    bound_c_coeff: float | None = None
    empirical: float | None = None
    dkw_radius: float | None = None
    se: float | None = None
    pass_flag: bool | None = None

    def __post_init__(self):
        if self.bound_c_coeff is not None and self.bound_c_coeff > 0:
            if self.pass_flag is not None:
                raise ValueError(
                    "rows with an unknown-constant part must carry a null pass")

    def as_mapping(self) -> dict:
        out = {}
        for col in RESULT_COLUMNS:
            out[col] = getattr(self, "pass_flag" if col == "pass" else col)
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    model_desc: dict
    bounds: tuple
    z_grid: tuple
    epsilon_grid: tuple
    p: float
    replicates: int
    master_seed: int
    threads: int
    output_path: str | None
    output_format: str
    sweep_axis: str | None
    sweep_grid: tuple


def _catalog_msg(names) -> str:
    return ", ".join(sorted(names))


def _as_number(doc, key, errs, path, default=None, integer=False, minimum=None):
    if key not in doc:
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errs.append(f"{path}: expected a number, got {v!r}")
        return default
    if integer:
        if float(v) != int(v):
            errs.append(f"{path}: expected an integer, got {v!r}")
            return default
        v = int(v)
    if minimum is not None and v < minimum:
        errs.append(f"{path}: must be >= {minimum}, got {v!r}")
        return default
    return v


def _check_model(desc: dict, errs: list) -> dict:
    desc = dict(desc)
    if "kind" in desc and "family" not in desc:
        desc["family"] = desc.pop("kind")
    family = desc.get("family")
    if family not in FAMILIES:
        errs.append(f"model.family: unknown {family!r}; "
                    f"catalog: {_catalog_msg(FAMILIES)}")
        return desc
    if family in ("linear", "ustat", "multisample", "lstat", "isqrt"):
        dist = desc.get("dist")
        if family != "isqrt" and dist not in DIST_CATALOG:
            errs.append(f"model.dist: unknown {dist!r}; "
                        f"catalog: {_catalog_msg(DIST_CATALOG)}")
    if family == "ustat":
        kern = desc.get("kernel")
        if kern not in KERNEL_CATALOG:
            errs.append(f"model.kernel: unknown {kern!r}; "
                        f"catalog: {_catalog_msg(KERNEL_CATALOG)}")
        _as_number(desc, "n", errs, "model.n", integer=True, minimum=3)
        _as_number(desc, "m", errs, "model.m", integer=True, minimum=2)
    elif family == "multisample":
        kern = desc.get("kernel", "wilcoxon")
        if kern != "wilcoxon":
            errs.append(f"model.kernel: unknown {kern!r}; catalog: wilcoxon")
        n = desc.get("n")
        sizes = n.split(";") if isinstance(n, str) else n
        if not isinstance(sizes, (list, tuple)) or len(sizes) != 2:
            errs.append("model.n: expected two sample sizes, e.g. \"1000;1000\"")
    elif family == "lstat":
        wt = desc.get("weight")
        if wt not in WEIGHT_CATALOG:
            errs.append(f"model.weight: unknown {wt!r}; "
                        f"catalog: {_catalog_msg(WEIGHT_CATALOG)}")
        _as_number(desc, "n", errs, "model.n", integer=True, minimum=4)
    elif family == "linear":
        _as_number(desc, "n", errs, "model.n", integer=True, minimum=1)
    elif family == "isqrt":
        if "epsilon" not in desc:
            errs.append("model.epsilon: required for isqrt")
        else:
            _as_number(desc, "epsilon", errs, "model.epsilon")
        _as_number(desc, "n", errs, "model.n", integer=True, minimum=2)
    return desc


def parse_config(text: str) -> ExperimentConfig:
    """Validate the JSON config, collecting every violation before failing."""
    errs = []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"json: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise ConfigError(["top-level: must be a JSON object"])

    model = doc.get("model")
    if model is None:
        model = {}  # only example41 runs may omit the model block
    elif not isinstance(model, dict):
        errs.append("model: expected an object")
        model = {}
    desc = _check_model(model, errs) if model else {}
    family = desc.get("family")

    bounds = doc.get("bounds", [])
    if not isinstance(bounds, list):
        errs.append("bounds: expected a list of equation tags")
        bounds = []
    for tag in bounds:
        if tag not in KNOWN_TAGS:
            errs.append(f"bounds: unknown tag {tag!r}; "
                        f"catalog: {_catalog_msg(KNOWN_TAGS)}")
        elif family in FAMILY_TAGS and tag not in FAMILY_TAGS[family]:
            errs.append(f"bounds: {tag} does not apply to a {family} model; "
                        f"valid: {_catalog_msg(FAMILY_TAGS[family])}")

    z_grid = doc.get("z_grid", [])
    if not isinstance(z_grid, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float))
            for v in z_grid):
        errs.append("z_grid: expected a list of numbers")
        z_grid = []
    if any(t in Z_TAGS for t in bounds) and not z_grid:
        errs.append("z_grid: required by the selected point bounds "
                    + _catalog_msg(set(bounds) & Z_TAGS))

    eps_grid = doc.get("epsilon_grid", [])
    if not isinstance(eps_grid, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float))
            for v in eps_grid):
        errs.append("epsilon_grid: expected a list of numbers")
        eps_grid = []

    p = _as_number(doc, "p", errs, "p", default=3.0)
    if p is not None and not 2.0 < p <= 3.0:
        errs.append(f"p: moment order must lie in (2, 3], got {p!r}")
        p = 3.0

    mc = doc.get("mc")
    if not isinstance(mc, dict):
        errs.append("mc.master_seed: required (determinism contract; "
                    "no wall-clock default)")
        mc = {}
    replicates = _as_number(mc, "replicates", errs, "mc.replicates",
                            default=10000, integer=True, minimum=1)
    threads = _as_number(mc, "threads", errs, "mc.threads", default=1,
                         integer=True, minimum=1)
    if "master_seed" not in mc:
        if mc:
            errs.append("mc.master_seed: required (determinism contract; "
                        "no wall-clock default)")
        seed = 0
    else:
        seed = _as_number(mc, "master_seed", errs, "mc.master_seed",
                          default=0, integer=True, minimum=0)
        if seed is not None and seed >= 2 ** 63:
            errs.append("mc.master_seed: must be below 2^63")

    out = doc.get("output", {})
    if not isinstance(out, dict):
        errs.append("output: expected an object")
        out = {}
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        errs.append("output.path: expected a string")
        path = None
    fmt = out.get("format", "csv")
    if fmt not in ("csv", "json"):
        errs.append(f"output.format: expected csv or json, got {fmt!r}")
        fmt = "csv"

    sweep = doc.get("sweep", {})
    if not isinstance(sweep, dict):
        errs.append("sweep: expected an object with axis and grid")
        sweep = {}
    axis = sweep.get("axis")
    if axis is not None and axis not in SWEEP_AXES:
        errs.append(f"sweep.axis: expected one of {_catalog_msg(SWEEP_AXES)}, "
                    f"got {axis!r}")
        axis = None
    grid = sweep.get("grid", [])
    if not isinstance(grid, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float))
            for v in grid):
        errs.append("sweep.grid: expected a list of numbers")
        grid = []

    if errs:
        raise ConfigError(errs)
    return ExperimentConfig(
        model_desc=desc, bounds=tuple(bounds), z_grid=tuple(z_grid),
        epsilon_grid=tuple(eps_grid), p=float(p), replicates=replicates,
        master_seed=int(seed), threads=threads, output_path=path,
        output_format=fmt, sweep_axis=axis, sweep_grid=tuple(grid))


class _Runner:
    """Shared bound/verify machinery for one config."""

    def __init__(self, cfg: ExperimentConfig):
        if not cfg.model_desc:
            raise ConfigError(["model: required object"])
        self.cfg = cfg
        self.model = build_model(cfg.model_desc)
        self.seed = SeedSpec(cfg.master_seed)
        self.linear = self.model.linear_part
        self.beta = bound_core.compute_beta(self.linear)
        self._delta_min = None
        self._components = {}
        self._tw = None
        self.capacity_notes = []

    # --- cached ingredients -------------------------------------------------

    @property
    def delta_min(self) -> float:
        if self._delta_min is None:
            self._delta_min = bound_core.solve_delta_minimal(self.linear)
        return self._delta_min

    def _tail_thresholds(self):
        return tuple(sorted({(abs(z) + 1.0) / 3.0 for z in self.cfg.z_grid}))

    def components(self, mode: str):
        """Coupling-moment estimates; exact zeros when the remainder vanishes."""
        thresholds = self._tail_thresholds()
        key = (mode, thresholds)
        if key in self._components:
            return self._components[key]
        if self.model.delta_is_zero:
            zero = MomentEstimate(0.0)
            from .mc_engine import ComponentEstimates
            est = ComponentEstimates(
                replicates=0, mode=mode, e_abs_w_delta=zero,
                sum_g_delta_diff=zero, delta_abs=zero, delta_l2=zero,
                sum_g_l2_delta_l2=zero,
                delta_tails={thr: zero for thr in thresholds})
        else:
            est = components_via_engine(
                self.model, self.cfg.replicates, self.seed, mode=mode,
                threads=self.cfg.threads, delta_thresholds=thresholds)
        self._components[key] = est
        return est

    def t_w(self):
        if self._tw is None:
            self._tw = collect_t_w(self.model, self.cfg.replicates, self.seed,
                                   threads=self.cfg.threads)
        return self._tw

    def delta_tail(self, thr: float, comps) -> MomentEstimate:
        analytic = self.model.delta_tail_analytic(thr)
        if analytic is not None:
            return MomentEstimate(float(analytic))
        return comps.delta_tails[thr]

    def linear_ks(self) -> float:
        exact = self.model.linear_ks_exact()
        if exact is not None:
            return float(exact)
        return bound_core.linear_baseline(self.linear).known

    # --- per-model analytic inputs ------------------------------------------

    def ustat_inputs(self) -> app_bounds.UStatBoundInputs:
        mom = ustat_moments(self.model.spec, self.cfg.p)
        return app_bounds.UStatBoundInputs(
            m=self.model.m, n=self.model.n, sigma=mom["sigma"],
            sigma1=mom["sigma1"], e_abs_g_p=mom["e_abs_g_p"], p=self.cfg.p,
            c0_trunc=mom["c0_trunc"], e_abs_h_p=mom["e_abs_h_p"])

    def multi_inputs(self) -> app_bounds.MultiBoundInputs:
        mom = self.model.moments(self.cfg.p)
        return app_bounds.MultiBoundInputs(
            sigma=mom["sigma"], sn=mom["sn"], m=mom["m"], n=mom["n"],
            e_abs_h_p=mom["e_abs_h_p"], p=self.cfg.p)

    def lstat_inputs(self) -> app_bounds.LStatBoundInputs:
        model = self.model
        return app_bounds.LStatBoundInputs(
            c_lip=model.lipschitz_constant(),
            x_l2=math.sqrt(model.x2_moment), x2_moment=model.x2_moment,
            sigma=model.sigma,
            e_abs_g_p=model.influence_abs_moment(self.cfg.p),
            p=self.cfg.p, n=model.n)

    # --- row plumbing ---------------------------------------------------------

    def _meta(self) -> dict:
        desc = self.cfg.model_desc
        family = desc["family"]
        meta = {"model": self.model.name}
        if family == "multisample":
            meta["n"] = f"{self.model.n1};{self.model.n2}"
            meta["m"] = "1;1"
        elif family == "ustat":
            meta["n"] = self.model.n
            meta["m"] = self.model.m
        else:
            meta["n"] = self.model.n
        if family == "isqrt":
            meta["epsilon"] = self.model.epsilon
        return meta

    def _row(self, tag, bound, z=None, p=None, ks=None, pass_override=...):
        kw = dict(self._meta())
        kw.update(equation_tag=tag, z=z, p=p,
                  bound_known=bound.known, bound_c_coeff=bound.c_coeff,
                  se=bound.known_se)
        if ks is not None:
            kw.update(empirical=ks.distance, dkw_radius=ks.dkw_radius)
            flag = certify(ks, bound) if pass_override is ... else pass_override
            kw.update(pass_flag=flag)
        return ResultRow(**kw)

    # --- bound evaluation -----------------------------------------------------

    def bound_rows_for(self, tag: str, with_empirical: bool):
        """Rows for one equation tag; one row per z for the point bounds."""
        cfg = self.cfg
        model = self.model
        t = w = None
        if with_empirical:
            t, w = self.t_w()
        if tag in ("eq2.3", "eq2.4", "eq2.5", "eq1.3", "eq1.4"):
            comps = self.components("zero_out")
            if tag == "eq1.4":
                bound = bound_core.linear_baseline(self.linear)
                ks = empirical_ks_vs_normal(w) if with_empirical else None
            elif tag == "eq1.3":
                bound = bound_core.chebyshev_baseline(
                    self.linear_ks(), comps.delta_abs.value, 1.0)
                ks = empirical_ks_vs_normal(t) if with_empirical else None
            else:
                bc = comps.as_bound_components(
                    self.beta, self.delta_min)
                if tag == "eq2.3":
                    bound = bound_core.uniform_bound_thm21(bc)
                elif tag == "eq2.4":
                    bound = bound_core.uniform_bound_beta(bc)
                else:
                    bound = bound_core.uniform_bound_normal(bc)
                if with_empirical:
                    ks = (empirical_ks_vs_normal(t) if tag == "eq2.5"
                          else empirical_ks_two_sample(t, w))
                else:
                    ks = None
            return [self._row(tag, bound, ks=ks)]
        if tag in ("eq2.6", "eq2.9"):
            comps = self.components("resample")
            rows = []
            for z in cfg.z_grid:
                thr = (abs(z) + 1.0) / 3.0
                tail = self.delta_tail(thr, comps)
                if tag == "eq2.6":
                    inp = NonUniformInputs(
                        z=z, p_delta_tail=tail.value,
                        p_delta_tail_se=tail.std_error,
                        sum_p_g_tail=self.linear.sum_prob_above(thr),
                        sum_p_w_minus_g_tail=model.nonuniform_third_term(z))
                    gamma = bound_core.nonuniform_gamma(inp)
                    tau = bound_core.nonuniform_tau(
                        comps.as_bound_components(self.beta, self.delta_min))
                    bound = bound_core.nonuniform_bound_thm22(gamma, tau, z)
                    ks = (pointwise_diff_two_sample(t, w, z)
                          if with_empirical else None)
                else:
                    sum_p, _sum_p_se = self.linear.sum_abs_p(cfg.p)
                    bound = bound_core.nonuniform_moment_bound(
                        cfg.p, z, tail.value, comps.delta_l2.value,
                        comps.sum_g_l2_delta_l2.value, sum_p)
                    ks = (pointwise_diff_vs_normal(t, z)
                          if with_empirical else None)
                rows.append(self._row(tag, bound, z=z,
                                      p=cfg.p if tag == "eq2.9" else None,
                                      ks=ks))
            return rows
        if tag in ("eq3.1", "eq3.2", "eq3.3", "eq3.4", "eq3.6"):
            inp = self.ustat_inputs()
            if tag == "eq3.1":
                bound = app_bounds.ustat_uniform_31(inp)
                ks = empirical_ks_two_sample(t, w) if with_empirical else None
                return [self._row(tag, bound, ks=ks)]
            if tag == "eq3.2":
                bound = app_bounds.ustat_normal_32(inp)
                ks = empirical_ks_vs_normal(t) if with_empirical else None
                return [self._row(tag, bound, ks=ks)]
            fn = {"eq3.3": app_bounds.ustat_nonuniform_33,
                  "eq3.4": app_bounds.ustat_nonuniform_34,
                  "eq3.6": app_bounds.ustat_nonuniform_36}[tag]
            rows = []
            for z in cfg.z_grid:
                if tag == "eq3.6":
                    limit = math.sqrt((inp.n - inp.m + 1) / inp.m)
                    if abs(z) > limit:
                        continue  # only stated inside the moderate-z range
                bound = fn(inp, z)
                ks = pointwise_diff_vs_normal(t, z) if with_empirical else None
                rows.append(self._row(tag, bound, z=z, p=cfg.p, ks=ks))
            return rows
        if tag in ("eq3.7", "eq3.8"):
            inp = self.multi_inputs()
            if tag == "eq3.7":
                bound = app_bounds.multisample_37(inp)
                ks = empirical_ks_vs_normal(t) if with_empirical else None
                return [self._row(tag, bound, p=cfg.p, ks=ks)]
            rows = []
            for z in cfg.z_grid:
                bound = app_bounds.multisample_38(inp, z)
                ks = pointwise_diff_vs_normal(t, z) if with_empirical else None
                rows.append(self._row(tag, bound, z=z, p=cfg.p, ks=ks))
            return rows
        if tag in ("eq3.10", "eq3.11"):
            inp = self.lstat_inputs()
            if tag == "eq3.10":
                bound = app_bounds.lstat_310(inp)
                ks = empirical_ks_vs_normal(t) if with_empirical else None
                return [self._row(tag, bound, p=cfg.p, ks=ks)]
            rows = []
            for z in cfg.z_grid:
                bound = app_bounds.lstat_311(inp, z)
                ks = pointwise_diff_vs_normal(t, z) if with_empirical else None
                rows.append(self._row(tag, bound, z=z, p=cfg.p, ks=ks))
            return rows
        raise ConfigError([f"bounds: unknown tag {tag!r}"])

    def run(self, with_empirical: bool):
        if not self.cfg.bounds:
            raise ConfigError(["bounds: at least one equation tag is required"])
        rows = []
        for tag in self.cfg.bounds:
            try:
                rows.extend(self.bound_rows_for(tag, with_empirical))
            except CapacityError as exc:
                self.capacity_notes.append(f"{tag}: {exc}")
        return rows


def cmd_bound(cfg: ExperimentConfig):
    runner = _Runner(cfg)
    return runner.run(with_empirical=False), runner.capacity_notes


def cmd_verify(cfg: ExperimentConfig):
    if cfg.replicates < MIN_VERIFY_REPLICATES:
        raise ConfigError([
            f"mc.replicates: verification needs >= {MIN_VERIFY_REPLICATES}, "
            f"got {cfg.replicates}"])
    runner = _Runner(cfg)
    return runner.run(with_empirical=True), runner.capacity_notes


def cmd_example41(cfg: ExperimentConfig):
    """Counterexample table plus MC cross-checks at the coarse epsilons."""
    eps_grid = cfg.epsilon_grid or ((cfg.model_desc.get("epsilon"),)
                                    if cfg.model_desc.get("epsilon") else ())
    if not eps_grid:
        raise ConfigError(["epsilon_grid: required for example41"])
    try:
        reports = app_bounds.counterexample_report(eps_grid)
    except DomainError as exc:
        raise ConfigError([f"epsilon_grid: {exc}"]) from exc

    rows = []
    quad_ratio = w_delta_abs_moment() + delta_abs_moment(1.0)
    for rep in reports:
        eps = rep.epsilon
        n = int(round(eps ** -4.0))
        label = f"isqrt-eps{eps:g}-n{n}"
        rows.append(ResultRow(
            equation_tag="eq4.2", model=label, n=n, epsilon=eps,
            bound_known=rep.lhs_floor, empirical=rep.lhs_exact,
            se=0.0, pass_flag=bool(rep.lhs_exact >= rep.lhs_floor)))
        quad43 = quad_ratio * eps
        rows.append(ResultRow(
            equation_tag="eq4.3", model=label, n=n, epsilon=eps,
            bound_known=7.0 * eps, empirical=quad43, se=0.0,
            pass_flag=bool(quad43 <= 7.0 * eps)))
        if eps >= 1e-2:
            model = build_model({"family": "isqrt", "epsilon": eps, "n": n})
            seed = SeedSpec(cfg.master_seed)
            t, _w = collect_t_w(model, cfg.replicates, seed,
                                threads=cfg.threads)
            p_hat = float(np.count_nonzero(t <= eps * ISQRT_MEAN)) / t.size
            mc_lhs = p_hat - float(ndtr(eps * ISQRT_MEAN))
            se = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / t.size)
            rows.append(ResultRow(
                equation_tag="eq4.2", model=label, n=n, epsilon=eps,
                bound_known=rep.lhs_exact, empirical=mc_lhs,
                dkw_radius=dkw_radius(t.size), se=se,
                pass_flag=bool(abs(mc_lhs - rep.lhs_exact) <= 4.0 * se)))
            comps = components_via_engine(model, cfg.replicates, seed,
                                          mode="zero_out",
                                          threads=cfg.threads)
            mc43 = comps.e_abs_w_delta.value + comps.delta_abs.value
            se43 = comps.e_abs_w_delta.std_error + comps.delta_abs.std_error
            ok = mc43 <= 7.0 * eps and abs(mc43 - quad43) <= 4.0 * se43
            rows.append(ResultRow(
                equation_tag="eq4.3", model=label, n=n, epsilon=eps,
                bound_known=7.0 * eps, empirical=mc43, se=se43,
                pass_flag=bool(ok)))
        rows.append(ResultRow(
            equation_tag="eq4.6", model=label, n=n, epsilon=eps,
            bound_known=rep.shorack_rhs, empirical=rep.lhs_exact, se=0.0,
            bound_c_coeff=0.0, pass_flag=None))
        rows.append(ResultRow(
            equation_tag="eq4.7", model=label, n=n, epsilon=eps,
            bound_known=rep.bg_bracket, empirical=rep.lhs_exact, se=0.0,
            bound_c_coeff=1.0, pass_flag=None))
    return rows, []


def cmd_sweep(cfg: ExperimentConfig, axis: str | None = None):
    axis = axis or cfg.sweep_axis
    if axis not in SWEEP_AXES:
        raise ConfigError([f"sweep.axis: expected one of "
                           f"{_catalog_msg(SWEEP_AXES)}, got {axis!r}"])
    if not cfg.sweep_grid:
        raise ConfigError(["sweep.grid: required"])
    rows = []
    notes = []
    if axis == "z":
        sub = replace(cfg, z_grid=tuple(float(v) for v in cfg.sweep_grid))
        return cmd_bound(sub)
    if axis == "n":
        for nval in cfg.sweep_grid:
            desc = dict(cfg.model_desc)
            nval = int(nval)
            desc["n"] = (f"{nval};{nval}" if desc.get("family") == "multisample"
                         else nval)
            got, nn = cmd_bound(replace(cfg, model_desc=desc))
            rows.extend(got)
            notes.extend(nn)
        return rows, notes
    if axis == "replicates":
        for rval in cfg.sweep_grid:
            got, nn = cmd_verify(replace(cfg, replicates=int(rval)))
            rows.extend(got)
            notes.extend(nn)
        return rows, notes
    # epsilon axis: closed-form lower-bound curve of the perturbed-normal model
    if cfg.model_desc.get("family") != "isqrt":
        raise ConfigError(["sweep.axis: epsilon sweeps need an isqrt model"])
    for eps in cfg.sweep_grid:
        eps = float(eps)
        lhs = app_bounds.ks_lower_bound(eps)
        floor = eps ** (2.0 / 3.0) / 6.0
        rows.append(ResultRow(
            equation_tag="eq4.2", model=f"isqrt-eps{eps:g}", epsilon=eps,
            bound_known=floor, empirical=lhs, se=0.0,
            pass_flag=bool(lhs >= floor)))
    return rows, notes


# --- emission ----------------------------------------------------------------


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render_rows(rows, fmt: str) -> str:
    if not rows:
        raise ConfigError(["no result rows to emit"])
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            m = row.as_mapping()
            writer.writerow([_csv_cell(m[c]) for c in RESULT_COLUMNS])
        return buf.getvalue()
    return json.dumps([row.as_mapping() for row in rows], indent=2,
                      allow_nan=False) + "\n"


def emit_results(rows, fmt: str, path: str | None) -> str:
    """Render and write rows; returns the rendered text."""
    text = render_rows(rows, fmt)
    if path:
        out_dir = os.environ.get("BELAB_OUTPUT_DIR")
        if out_dir and not os.path.isabs(path):
            path = os.path.join(out_dir, path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="belab",
        description="Berry-Esseen bound computation and verification lab")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("bound", "compute bound values only"),
            ("verify", "compute bounds and certify sampled distances"),
            ("example41", "reproduce the perturbed-normal counterexample"),
            ("sweep", "evaluate bounds over a parameter grid")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to JSON config")
        p.add_argument("--seed", type=int, default=None,
                       help="override mc.master_seed")
        p.add_argument("--replicates", type=int, default=None,
                       help="override mc.replicates")
        p.add_argument("--threads", type=int, default=None,
                       help="override mc.threads")
        p.add_argument("--output", default=None, help="override output.path")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="override output.format")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    kw = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 63:
            raise ConfigError(["--seed: must lie in [0, 2^63)"])
        kw["master_seed"] = args.seed
    if args.replicates is not None:
        if args.replicates < 1:
            raise ConfigError(["--replicates: must be >= 1"])
        kw["replicates"] = args.replicates
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError(["--threads: must be >= 1"])
        kw["threads"] = args.threads
    if args.output is not None:
        kw["output_path"] = args.output
    if args.format is not None:
        kw["output_format"] = args.format
    return replace(cfg, **kw) if kw else cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = _apply_overrides(parse_config(text), args)
        if args.command == "bound":
            rows, notes = cmd_bound(cfg)
        elif args.command == "verify":
            rows, notes = cmd_verify(cfg)
        elif args.command == "example41":
            rows, notes = cmd_example41(cfg)
        else:
            rows, notes = cmd_sweep(cfg)
        emit_results(rows, cfg.output_format, cfg.output_path)
    except ConfigError as exc:
        for line in exc.violations:
            print(f"config: {line}", file=sys.stderr)
        return 2
    except (BelabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for note in notes:
        print(f"capacity: {note}", file=sys.stderr)
    if notes:
        return 3
    if any(row.pass_flag is False for row in rows):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
