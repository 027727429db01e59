"""Multisample U-statistics; the concrete catalog entry is the two-sample
rank score h(x, y) = I(x <= y) - 1/2.

Scale convention: with J independent samples of sizes n_j and kernel degrees
m_j, the combined scale is sn2 = sum_j m_j^2 sigma_j^2 / n_j (sigma_j the
per-sample projection variance), the statistic is T = U / sn with sn =
sqrt(sn2), and the linear terms are g_jl = (m_j/n_j) h_j(X_jl) / sn, which
makes sum E g^2 = 1 exactly.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import CapacityError, UnsupportedModelError
from ..marginals import LinearPart, UniformMarginal
from .base import DIST_CATALOG, ENUMERATION_CAP, StatisticModel


@dataclass(frozen=True)
class MultiUStatSpec:
    """Descriptor for a catalog multisample U-statistic."""

    kernel: str
    dist: str
    n: tuple
    m: tuple = (1, 1)

    def __post_init__(self):
        if self.kernel != "wilcoxon":
            raise UnsupportedModelError(f"unknown multisample kernel {self.kernel!r}")
        if self.dist not in DIST_CATALOG or not DIST_CATALOG[self.dist].continuous:
            raise UnsupportedModelError(
                "rank kernels need a continuous observation distribution")
        if tuple(self.m) != (1, 1):
            raise UnsupportedModelError("the rank kernel has degrees (1, 1)")
        if len(self.n) != 2 or any(k < 2 for k in self.n):
            raise UnsupportedModelError("need two samples of size >= 2")


def multisample_value(kernel_fn, samples, degrees) -> float:
    """Exact enumeration of a centered multisample U-statistic.

    kernel_fn takes one tuple of observations per sample (each of length
    m_j). Errors past the subset cap rather than subsampling.
    """
    sizes = [len(s) for s in samples]
    count = 1
    for n_j, m_j in zip(sizes, degrees):
        count *= math.comb(n_j, m_j)
    if count > ENUMERATION_CAP:
        raise CapacityError(
            f"{count} index choices exceed the enumeration cap {ENUMERATION_CAP}")
    pools = [list(itertools.combinations(np.asarray(s, dtype=float), m_j))
             for s, m_j in zip(samples, degrees)]
    total = math.fsum(kernel_fn(*choice) for choice in itertools.product(*pools))
    return total / count


def multisample_sigma(spec: MultiUStatSpec) -> float:
    """Combined scale sn = sqrt(sum m_j^2 sigma_j^2 / n_j)."""
    # rank-score projections are Uniform(-1/2, 1/2), so sigma_j^2 = 1/12
    return math.sqrt(sum(m * m / (12.0 * n) for m, n in zip(spec.m, spec.n)))


class WilcoxonModel(StatisticModel):
    """Two-sample rank-score statistic under a continuous catalog law.

    Pair counting runs through sort + searchsorted per replicate; ties have
    probability zero. The projections h_1 = 1/2 - F(x), h_2 = F(y) - 1/2 are
    Uniform(-1/2, 1/2) whatever the continuous F, so every moment oracle here
    is distribution-free.
    """

    def __init__(self, spec: MultiUStatSpec):
        self.spec = spec
        self.dist = DIST_CATALOG[spec.dist]
        self.n1, self.n2 = int(spec.n[0]), int(spec.n[1])
        if self.n1 * self.n2 > ENUMERATION_CAP:
            raise CapacityError(
                f"{self.n1 * self.n2} pairs exceed the enumeration cap {ENUMERATION_CAP}")
        self.sn = multisample_sigma(spec)
        self.name = (f"multisample-{spec.kernel}-{spec.dist}"
                     f"-n{self.n1};{self.n2}-m1;1")
        self.group_sizes = (self.n1, self.n2)
        self.linear_part = LinearPart([
            (UniformMarginal(0.5 / (self.n1 * self.sn)), self.n1),
            (UniformMarginal(0.5 / (self.n2 * self.sn)), self.n2),
        ])

    # data is a tuple (x, y) of the two samples
    def sample_data(self, rng):
        return (self.dist.sample(rng, self.n1), self.dist.sample(rng, self.n2))

    def _pair_count(self, x, y):
        """#{(i, j): x_i <= y_j} via one sort of x."""
        xs = np.sort(np.asarray(x))
        return float(np.searchsorted(xs, np.asarray(y), side="right").sum())

    def _u_from_count(self, count):
        return count / (self.n1 * self.n2) - 0.5

    def statistic(self, data):
        x, y = data
        return self._u_from_count(self._pair_count(x, y)) / self.sn

    def linear_terms(self, data):
        x, y = data
        fx = np.array([self.dist.cdf(v) for v in np.asarray(x)])
        fy = np.array([self.dist.cdf(v) for v in np.asarray(y)])
        g1 = (0.5 - fx) / (self.n1 * self.sn)
        g2 = (fy - 0.5) / (self.n2 * self.sn)
        return np.concatenate([g1, g2])

    def delta_variant(self, data, i, mode, rng):
        x, y = data
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        count = self._pair_count(x, y)
        g = self.linear_terms(data)
        w = float(np.sum(g))
        if i < self.n1:
            old = x[i]
            v = 0.0 if mode == "zero_out" else float(self.dist.sample(rng, 1)[0])
            ys = np.sort(y)
            d_count = ((self.n2 - np.searchsorted(ys, v, side="left"))
                       - (self.n2 - np.searchsorted(ys, old, side="left")))
            g_new = (0.5 - self.dist.cdf(v)) / (self.n1 * self.sn)
        else:
            old = y[i - self.n1]
            v = 0.0 if mode == "zero_out" else float(self.dist.sample(rng, 1)[0])
            xs = np.sort(x)
            d_count = (np.searchsorted(xs, v, side="right")
                       - np.searchsorted(xs, old, side="right"))
            g_new = (self.dist.cdf(v) - 0.5) / (self.n2 * self.sn)
        t_new = self._u_from_count(count + d_count) / self.sn
        w_new = w - float(g[i]) + g_new
        return t_new - w_new

    def sample_chunk(self, rng, count, mode=None):
        x = self.dist.sample(rng, (count, self.n1))
        y = self.dist.sample(rng, (count, self.n2))
        xs = np.sort(x, axis=1)
        pair = np.empty(count)
        for r in range(count):
            pair[r] = np.searchsorted(xs[r], y[r], side="right").sum()
        t = (pair / (self.n1 * self.n2) - 0.5) / self.sn
        fx = self._cdf_rows(x)
        fy = self._cdf_rows(y)
        g1 = (0.5 - fx) / (self.n1 * self.sn)
        g2 = (fy - 0.5) / (self.n2 * self.sn)
        w = g1.sum(axis=1) + g2.sum(axis=1)
        if mode is None:
            return {"t": t, "w": w}
        delta = t - w
        if mode == "zero_out":
            v1 = np.zeros(count)
            v2 = np.zeros(count)
        else:
            v1 = self.dist.sample(rng, (count, 1))[:, 0]
            v2 = self.dist.sample(rng, (count, 1))[:, 0]
        ys = np.sort(y, axis=1)
        dvar = np.empty((count, 2))
        fv1 = self._cdf_rows(v1)
        fv2 = self._cdf_rows(v2)
        for r in range(count):
            # group 1 representative: x[r, 0] -> v1[r]
            dc1 = (np.searchsorted(ys[r], x[r, 0], side="left")
                   - np.searchsorted(ys[r], v1[r], side="left"))
            t1 = ((pair[r] + dc1) / (self.n1 * self.n2) - 0.5) / self.sn
            w1 = w[r] - g1[r, 0] + (0.5 - fv1[r]) / (self.n1 * self.sn)
            dvar[r, 0] = t1 - w1
            # group 2 representative: y[r, 0] -> v2[r]
            dc2 = (np.searchsorted(xs[r], v2[r], side="right")
                   - np.searchsorted(xs[r], y[r, 0], side="right"))
            t2 = ((pair[r] + dc2) / (self.n1 * self.n2) - 0.5) / self.sn
            w2 = w[r] - g2[r, 0] + (fv2[r] - 0.5) / (self.n2 * self.sn)
            dvar[r, 1] = t2 - w2
        g_rep = np.stack([g1[:, 0], g2[:, 0]], axis=1)
        return {"t": t, "w": w, "delta": delta, "g_rep": g_rep, "dvar_rep": dvar}

    def _cdf_rows(self, arr):
        a = np.asarray(arr, dtype=float)
        if self.spec.dist == "uniform01":
            return np.clip(a, 0.0, 1.0)
        if self.spec.dist == "std_normal":
            from scipy.special import ndtr
            return ndtr(a)
        if self.spec.dist == "exponential1":
            return -np.expm1(-np.maximum(a, 0.0))
        raise UnsupportedModelError(self.spec.dist)

    def moments(self, p: float = 3.0) -> dict:
        """Distribution-free rank-score moments for the multisample bounds."""
        h_marg = UniformMarginal(0.5)
        return {
            "sigma": 0.5,
            "sigma_j": (math.sqrt(1.0 / 12.0),) * 2,
            "e_abs_h_p": (h_marg.e_abs_p(p),) * 2,
            "sn": self.sn,
            "m": (1, 1),
            "n": (self.n1, self.n2),
        }
