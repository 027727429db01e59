"""One-sample U-statistics of degree 2 and their normalized models.

The normalized statistic is T = sqrt(n) U_n / (m sigma_1), whose linear part
is W = sum_i g(X_i) / (sqrt(n) sigma_1) with g the first-order projection of
the kernel. Pairwise sums go through power-sum identities, so evaluation is
O(n) per replicate and single-entry replacement is O(1); plain enumeration
over index subsets stays available as the oracle path.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2, gamma

from ..bound_core import delta_from_truncation
from ..errors import CapacityError, DegenerateModelError, UnsupportedModelError
from ..marginals import LinearPart
from .base import DIST_CATALOG, ENUMERATION_CAP, BaseDist, StatisticModel
from .kernels import KERNEL_CATALOG, PairKernel, kernel_abs_p


@dataclass(frozen=True)
class UStatSpec:
    """Descriptor for a catalog one-sample U-statistic."""

    kernel: str
    dist: str
    n: int
    m: int = 2

    def __post_init__(self):
        if self.kernel not in KERNEL_CATALOG:
            raise UnsupportedModelError(f"unknown kernel {self.kernel!r}")
        if self.dist not in DIST_CATALOG:
            raise UnsupportedModelError(f"unknown distribution {self.dist!r}")
        if self.m != 2:
            raise UnsupportedModelError("catalog kernels have degree 2")
        if self.n < self.m + 1:
            raise UnsupportedModelError("need n >= m + 1")


def check_capacity(count: int):
    if count > ENUMERATION_CAP:
        raise CapacityError(
            f"{count} index subsets exceed the enumeration cap {ENUMERATION_CAP}")


def ustat_value(kernel: PairKernel, data, dist: BaseDist) -> float:
    """U_n by exact enumeration over pairs. Oracle path; errors past the cap
    rather than subsampling."""
    x = np.asarray(data, dtype=float)
    n = x.size
    check_capacity(math.comb(n, 2))
    total = math.fsum(
        float(kernel.h(x[i], x[j], dist)) for i, j in itertools.combinations(range(n), 2))
    return total / math.comb(n, 2)


def hajek_projection(kernel: PairKernel, dist: BaseDist):
    """(g, sigma_1) with g the centered projection E[h(x, Y)]."""
    s1 = math.sqrt(kernel.sigma1_sq(dist))
    return (lambda x: kernel.g_raw(x, dist)), s1


def ustat_moments(spec: UStatSpec, p: float = 3.0) -> dict:
    """Analytic ingredients for the degree-2 bounds, in raw kernel units."""
    kernel = KERNEL_CATALOG[spec.kernel]
    dist = DIST_CATALOG[spec.dist]
    s1_sq = kernel.sigma1_sq(dist)
    if s1_sq <= 0:
        raise DegenerateModelError(
            f"{spec.kernel} projection variance is zero under {spec.dist}")
    s1 = math.sqrt(s1_sq)
    marg = kernel.g_std_marginal(dist)
    return {
        "sigma": math.sqrt(kernel.sigma_sq(dist)),
        "sigma1": s1,
        "e_abs_g_p": s1 ** p * marg.e_abs_p(p),
        "e_abs_h_p": kernel_abs_p(spec.kernel, spec.dist, p),
        "c0_trunc": delta_from_truncation(LinearPart([(marg, 1)])),
    }


class UStatModel(StatisticModel):
    """Normalized degree-2 U-statistic over i.i.d. catalog observations."""

    def __init__(self, spec: UStatSpec):
        self.spec = spec
        self.kernel = KERNEL_CATALOG[spec.kernel]
        self.dist = DIST_CATALOG[spec.dist]
        self.n = spec.n
        self.m = spec.m
        check_capacity(math.comb(self.n, self.m))
        s1_sq = self.kernel.sigma1_sq(self.dist)
        if s1_sq <= 0:
            raise DegenerateModelError(
                f"{spec.kernel} projection variance is zero under {spec.dist}")
        self.sigma1 = math.sqrt(s1_sq)
        self.delta_is_zero = getattr(self.kernel, "delta_is_zero", False)
        self.name = f"ustat-{spec.kernel}-{spec.dist}-n{spec.n}-m{spec.m}"
        self.group_sizes = (self.n,)
        g_std = self.kernel.g_std_marginal(self.dist)
        self.linear_part = LinearPart([(g_std.scale_by(1.0 / math.sqrt(self.n)), self.n)])
        # T = sqrt(n) U / (m sigma_1) = pair_sum * _t_scale
        self._t_scale = math.sqrt(self.n) / (
            self.m * self.sigma1 * math.comb(self.n, self.m))
        self._g_scale = 1.0 / (math.sqrt(self.n) * self.sigma1)

    def sample_data(self, rng):
        return self.dist.sample(rng, self.n)

    def _t_from_power_sums(self, s1, s2):
        return self.kernel.pair_sum_from_power_sums(
            s1, s2, self.n, self.dist) * self._t_scale

    def linear_terms(self, data):
        return np.asarray(self.kernel.g_raw(data, self.dist)) * self._g_scale

    def statistic(self, data):
        if self.delta_is_zero:
            return float(np.sum(self.linear_terms(data)))
        x = np.asarray(data, dtype=float)
        return float(self._t_from_power_sums(x.sum(), (x * x).sum()))

    def delta_variant(self, data, i, mode, rng):
        if self.delta_is_zero:
            return 0.0
        x = np.asarray(data, dtype=float)
        v = 0.0 if mode == "zero_out" else float(self.dist.sample(rng, 1)[0])
        s1 = x.sum() - x[i] + v
        s2 = (x * x).sum() - x[i] ** 2 + v * v
        t_new = self._t_from_power_sums(s1, s2)
        g = self.linear_terms(x)
        w_new = float(np.sum(g)) - float(g[i]) + float(
            self.kernel.g_raw(v, self.dist)) * self._g_scale
        return float(t_new - w_new)

    def sample_chunk(self, rng, count, mode=None):
        x = self.dist.sample(rng, (count, self.n))
        g = self.linear_terms(x)
        w = g.sum(axis=1)
        if self.delta_is_zero:
            t = w.copy()
            delta = np.zeros(count)
        else:
            s1 = x.sum(axis=1)
            s2 = (x * x).sum(axis=1)
            t = self._t_from_power_sums(s1, s2)
            delta = t - w
        if mode is None:
            return {"t": t, "w": w}
        if self.delta_is_zero:
            dvar = np.zeros((count, 1))
        else:
            if mode == "zero_out":
                v = np.zeros(count)
            else:
                v = self.dist.sample(rng, (count, 1))[:, 0]
            s1n = s1 - x[:, 0] + v
            s2n = s2 - x[:, 0] ** 2 + v * v
            t_new = self._t_from_power_sums(s1n, s2n)
            w_new = w - g[:, 0] + np.asarray(
                self.kernel.g_raw(v, self.dist)) * self._g_scale
            dvar = (t_new - w_new)[:, None]
        return {"t": t, "w": w, "delta": delta,
                "g_rep": g[:, :1], "dvar_rep": dvar}

    def linear_ks_exact(self):
        return None

    def prob_abs_w_minus_g_above(self, group, t):
        n = self.n
        if self.spec.kernel == "variance" and self.spec.dist == "std_normal":
            # W - g_1 = (chisq_{n-1} - (n-1)) / sqrt(2 n)
            shift = t * math.sqrt(2.0 * n)
            return float(chi2.sf(n - 1 + shift, n - 1) + chi2.cdf(n - 1 - shift, n - 1))
        if self.spec.kernel == "sum":
            if self.spec.dist == "std_normal":
                from scipy.special import ndtr
                sd = math.sqrt((n - 1) / n)
                return float(2.0 * ndtr(-t / sd))
            if self.spec.dist == "exponential1":
                shift = t * math.sqrt(n)
                return float(gamma.sf(n - 1 + shift, n - 1)
                             + gamma.cdf(n - 1 - shift, n - 1))
        return None
