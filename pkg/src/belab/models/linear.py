"""Purely linear statistics: T = W = sum (X_i - mu) / (sqrt(n) sd).

These have Delta identically zero and serve two roles: baselines whose only
error term is the linear one, and an exactly enumerable case (coin flips)
where the sup-distance to the standard normal is computable in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import binom, gamma

from ..errors import UnsupportedModelError
from ..marginals import (
    AtomMarginal,
    ExpCenteredMarginal,
    LinearPart,
    NormalMarginal,
    UniformMarginal,
)
from .base import DIST_CATALOG, StatisticModel


@dataclass(frozen=True)
class LinearSpec:
    """Descriptor for a standardized i.i.d. sum."""

    dist: str
    n: int

    def __post_init__(self):
        if self.dist not in DIST_CATALOG:
            raise UnsupportedModelError(f"unknown distribution {self.dist!r}")
        if self.n < 1:
            raise UnsupportedModelError("need n >= 1")


def _unit_marginal(dist_name: str):
    """Marginal of (X - mu)/sd for one catalog observation."""
    if dist_name == "std_normal":
        return NormalMarginal(1.0)
    if dist_name == "uniform01":
        return UniformMarginal(math.sqrt(3.0))
    if dist_name == "rademacher":
        return AtomMarginal.rademacher(1.0)
    if dist_name == "exponential1":
        return ExpCenteredMarginal(1.0)
    raise UnsupportedModelError(dist_name)


def rademacher_ks_exact(n: int) -> float:
    """Exact sup |P(W <= w) - Phi(w)| for W a standardized coin-flip sum.

    W has atoms at (2k - n)/sqrt(n); the sup is attained at an atom, from
    the left or the right limit of the step function.
    """
    k = np.arange(n + 1)
    w = (2.0 * k - n) / math.sqrt(n)
    cdf_at = binom.cdf(k, n, 0.5)
    cdf_before = np.concatenate([[0.0], cdf_at[:-1]])
    phi = ndtr(w)
    return float(np.maximum(np.abs(cdf_at - phi), np.abs(cdf_before - phi)).max())


class LinearModel(StatisticModel):
    """Standardized i.i.d. sum; the remainder is structurally zero."""

    delta_is_zero = True

    def __init__(self, spec: LinearSpec):
        self.spec = spec
        self.dist = DIST_CATALOG[spec.dist]
        self.n = spec.n
        self.name = f"linear-{spec.dist}-n{spec.n}"
        self.group_sizes = (self.n,)
        self._sd = math.sqrt(self.dist.var)
        self._scale = 1.0 / (math.sqrt(self.n) * self._sd)
        self.linear_part = LinearPart([
            (_unit_marginal(spec.dist).scale_by(1.0 / math.sqrt(self.n)), self.n)])

    def sample_data(self, rng):
        return self.dist.sample(rng, self.n)

    def linear_terms(self, data):
        return (np.asarray(data, dtype=float) - self.dist.mean) * self._scale

    def statistic(self, data):
        return float(np.sum(self.linear_terms(data)))

    def delta_variant(self, data, i, mode, rng):
        return 0.0

    def sample_chunk(self, rng, count, mode=None):
        x = self.dist.sample(rng, (count, self.n))
        g = (x - self.dist.mean) * self._scale
        w = g.sum(axis=1)
        t = w.copy()
        if mode is None:
            return {"t": t, "w": w}
        return {"t": t, "w": w, "delta": np.zeros(count),
                "g_rep": g[:, :1], "dvar_rep": np.zeros((count, 1))}

    def linear_ks_exact(self):
        if self.spec.dist == "std_normal":
            return 0.0
        if self.spec.dist == "rademacher":
            return rademacher_ks_exact(self.n)
        return None

    def prob_abs_w_minus_g_above(self, group, t):
        n = self.n
        if n == 1:
            return 0.0 if t >= 0 else 1.0
        if self.spec.dist == "std_normal":
            sd = math.sqrt((n - 1) / n)
            return float(2.0 * ndtr(-t / sd))
        if self.spec.dist == "rademacher":
            # sum of n-1 signs, scaled by 1/sqrt(n)
            shift = t * math.sqrt(n)
            hi = (n - 1 + shift) / 2.0
            lo = (n - 1 - shift) / 2.0
            return float(binom.sf(math.floor(hi), n - 1, 0.5)
                         + binom.cdf(math.ceil(lo) - 1, n - 1, 0.5))
        if self.spec.dist == "exponential1":
            shift = t * math.sqrt(n)
            return float(gamma.sf(n - 1 + shift, n - 1)
                         + gamma.cdf(n - 1 - shift, n - 1))
        return None
