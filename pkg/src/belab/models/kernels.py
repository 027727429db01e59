"""Symmetric pair kernels for one-sample U-statistics.

Each kernel knows its first-order projection, the analytic variances
sigma^2 = Var h and sigma_1^2 = Var g, a Marginal for the standardized
projection g/sigma_1, and closed-form pairwise sums in terms of the power
sums S1 = sum x_i, S2 = sum x_i^2 (which makes single-entry replacement an
O(1) update).
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from functools import lru_cache

import numpy as np
from scipy import integrate

from ..errors import UnsupportedModelError
from ..marginals import (
    AtomMarginal,
    ExpCenteredMarginal,
    NormalMarginal,
    QuadraticMarginal,
    UniformMarginal,
    normal_abs_moment,
)
from .base import DIST_CATALOG, BaseDist

_DBLQUAD_EPS = 1e-10


class PairKernel(ABC):
    """Symmetric kernel h(x, y) with E h = 0 under the product law."""

    name: str
    m = 2

    @abstractmethod
    def h(self, x, y, dist: BaseDist):
        """Kernel values, vectorized."""

    @abstractmethod
    def g_raw(self, x, dist: BaseDist):
        """Projection E[h(x, Y)], vectorized."""

    @abstractmethod
    def sigma1_sq(self, dist: BaseDist) -> float: ...

    @abstractmethod
    def sigma_sq(self, dist: BaseDist) -> float: ...

    @abstractmethod
    def pair_sum_from_power_sums(self, s1, s2, n: int, dist: BaseDist):
        """sum_{i<j} h(x_i, x_j) from S1, S2 (scalar or vectorized)."""

    @abstractmethod
    def g_std_marginal(self, dist: BaseDist):
        """Marginal of g_raw(X)/sigma_1 (unit variance)."""

    def h_abs_p(self, dist: BaseDist, p: float) -> float:
        """E|h(X, Y)|^p by double quadrature over the base density."""
        if not dist.continuous:
            raise UnsupportedModelError(
                f"{self.name}: no kernel moment oracle for {dist.name}")
        lo, hi = dist.support
        val, err = integrate.dblquad(
            lambda y, x: abs(self.h(x, y, dist)) ** p * dist.pdf(x) * dist.pdf(y),
            lo, hi, lo, hi, epsabs=_DBLQUAD_EPS, epsrel=1e-10)
        return val


class VarianceKernel(PairKernel):
    """h(x, y) = ((x - y)^2 - 2 V) / 2, the unbiased variance kernel."""

    name = "variance"

    def h(self, x, y, dist):
        return ((np.asarray(x) - np.asarray(y)) ** 2 - 2.0 * dist.var) / 2.0

    def g_raw(self, x, dist):
        return ((np.asarray(x) - dist.mean) ** 2 - dist.var) / 2.0

    def sigma1_sq(self, dist):
        return (dist.mu4 - dist.var ** 2) / 4.0

    def sigma_sq(self, dist):
        return (dist.mu4 + dist.var ** 2) / 2.0

    def pair_sum_from_power_sums(self, s1, s2, n, dist):
        return (n * s2 - s1 ** 2) / 2.0 - (n * (n - 1) / 2.0) * dist.var

    def g_std_marginal(self, dist):
        s1 = math.sqrt(self.sigma1_sq(dist))
        if s1 == 0.0:
            raise UnsupportedModelError(
                f"{self.name}: projection is degenerate for {dist.name}")
        a = 1.0 / (2.0 * s1)
        normal = DIST_CATALOG["std_normal"]
        if dist.name == "std_normal":
            return QuadraticMarginal(
                a, 0.0, 1.0, normal.pdf, dist.support,
                sampler=lambda rng, size: rng.standard_normal(size),
                cdf=dist.cdf)
        if dist.name == "uniform01":
            return QuadraticMarginal(
                a, dist.mean, dist.var, dist.pdf, (0.0, 1.0),
                sampler=lambda rng, size: rng.random(size), cdf=dist.cdf)
        if dist.name == "exponential1":
            return QuadraticMarginal(
                a, dist.mean, dist.var, dist.pdf, dist.support,
                sampler=lambda rng, size: rng.standard_exponential(size),
                cdf=dist.cdf)
        raise UnsupportedModelError(
            f"{self.name}: no projection marginal for {dist.name}")

    def h_abs_p(self, dist, p):
        if dist.name == "std_normal":
            # (X - Y)/sqrt(2) is standard normal, so h = Z^2 - 1
            normal = DIST_CATALOG["std_normal"]
            marg = QuadraticMarginal(
                1.0, 0.0, 1.0, normal.pdf, normal.support,
                sampler=lambda rng, size: rng.standard_normal(size),
                cdf=normal.cdf)
            return marg.e_abs_p(p)
        return super().h_abs_p(dist, p)


class SumKernel(PairKernel):
    """h(x, y) = (x - mu) + (y - mu); the statistic is exactly linear."""

    name = "sum"
    delta_is_zero = True

    def h(self, x, y, dist):
        return (np.asarray(x) - dist.mean) + (np.asarray(y) - dist.mean)

    def g_raw(self, x, dist):
        return np.asarray(x) - dist.mean

    def sigma1_sq(self, dist):
        return dist.var

    def sigma_sq(self, dist):
        return 2.0 * dist.var

    def pair_sum_from_power_sums(self, s1, s2, n, dist):
        return (n - 1) * (s1 - n * dist.mean)

    def g_std_marginal(self, dist):
        scale = 1.0 / math.sqrt(dist.var)
        if dist.name == "std_normal":
            return NormalMarginal(1.0)
        if dist.name == "uniform01":
            return UniformMarginal(0.5 * scale)
        if dist.name == "rademacher":
            return AtomMarginal.rademacher(1.0)
        if dist.name == "exponential1":
            return ExpCenteredMarginal(1.0)
        raise UnsupportedModelError(
            f"{self.name}: no projection marginal for {dist.name}")

    def h_abs_p(self, dist, p):
        if dist.name == "std_normal":
            return normal_abs_moment(p) * 2.0 ** (p / 2.0)
        return super().h_abs_p(dist, p)


class ProductKernel(PairKernel):
    """h(x, y) = (x - mu)(y - mu); completely degenerate projection."""

    name = "product"

    def h(self, x, y, dist):
        return (np.asarray(x) - dist.mean) * (np.asarray(y) - dist.mean)

    def g_raw(self, x, dist):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def sigma1_sq(self, dist):
        return 0.0

    def sigma_sq(self, dist):
        return dist.var ** 2

    def pair_sum_from_power_sums(self, s1, s2, n, dist):
        c1 = s1 - n * dist.mean
        c2 = s2 - 2.0 * dist.mean * s1 + n * dist.mean ** 2
        return (c1 ** 2 - c2) / 2.0

    def g_std_marginal(self, dist):
        raise UnsupportedModelError(
            f"{self.name}: projection is degenerate for {dist.name}")


KERNEL_CATALOG = {
    "variance": VarianceKernel(),
    "sum": SumKernel(),
    "product": ProductKernel(),
}


@lru_cache(maxsize=64)
def kernel_abs_p(kernel_name: str, dist_name: str, p: float) -> float:
    """Cached E|h|^p for a catalog kernel under a catalog distribution."""
    return KERNEL_CATALOG[kernel_name].h_abs_p(DIST_CATALOG[dist_name], p)
