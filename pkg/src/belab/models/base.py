"""Model plumbing: the distribution catalog and the StatisticModel interface.

A StatisticModel realizes one normalized statistic T = W + Delta with
W = sum_i g_i(X_i), E g_i = 0, sum_i E g_i^2 = 1. Models expose per-replicate
evaluation plus optional vectorized chunk paths used by the Monte Carlo
engine.

Stream consumption contract (determinism): within a chunk of replicates, a
model first consumes its data block (replicate-major), then, in resample
mode, one fresh draw per representative index, again replicate-major. A
chunk of size 1 therefore consumes exactly what single-replicate evaluation
does.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from ..errors import UnsupportedModelError
from ..marginals import LinearPart
from ..types import DecompositionSample

ENUMERATION_CAP = 10 ** 6


@dataclass(frozen=True)
class BaseDist:
    """Catalog entry for an observation distribution."""

    name: str
    mean: float
    var: float
    mu4: float  # central fourth moment
    support: tuple
    continuous: bool = True

    def pdf(self, x):
        if self.name == "std_normal":
            return math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
        if self.name == "uniform01":
            return 1.0 if 0.0 <= x <= 1.0 else 0.0
        if self.name == "exponential1":
            return math.exp(-x) if x >= 0 else 0.0
        raise UnsupportedModelError(f"no density for {self.name}")

    def cdf(self, x):
        if self.name == "std_normal":
            return float(ndtr(x))
        if self.name == "uniform01":
            return min(1.0, max(0.0, x))
        if self.name == "exponential1":
            return 1.0 - math.exp(-x) if x >= 0 else 0.0
        if self.name == "rademacher":
            if x < -1:
                return 0.0
            return 0.5 if x < 1 else 1.0
        raise UnsupportedModelError(f"no cdf for {self.name}")

    def sample(self, rng: np.random.Generator, size):
        if self.name == "std_normal":
            return rng.standard_normal(size)
        if self.name == "uniform01":
            return rng.random(size)
        if self.name == "exponential1":
            return rng.standard_exponential(size)
        if self.name == "rademacher":
            return rng.integers(0, 2, size).astype(np.float64) * 2.0 - 1.0
        raise UnsupportedModelError(f"no sampler for {self.name}")


DIST_CATALOG = {
    "std_normal": BaseDist("std_normal", 0.0, 1.0, 3.0, (-12.0, 12.0)),
    "uniform01": BaseDist("uniform01", 0.5, 1.0 / 12.0, 1.0 / 80.0, (0.0, 1.0)),
    "rademacher": BaseDist("rademacher", 0.0, 1.0, 1.0, (-1.0, 1.0), continuous=False),
    "exponential1": BaseDist("exponential1", 1.0, 1.0, 9.0, (0.0, 60.0)),
}


class StatisticModel(ABC):
    """Capability bundle for one statistic. Immutable after construction."""

    name: str
    linear_part: LinearPart
    # sizes of exchangeable index groups, in index order; representative-index
    # shortcuts evaluate the first index of each group and weight by the size
    group_sizes: tuple
    delta_is_zero: bool = False
    variant_modes = ("zero_out", "resample")

    @abstractmethod
    def sample_data(self, rng: np.random.Generator):
        """One replicate's raw observations."""

    @abstractmethod
    def statistic(self, data) -> float:
        """The normalized statistic T."""

    @abstractmethod
    def linear_terms(self, data) -> np.ndarray:
        """All g_i(X_i), normalized so sum_i E g_i^2 = 1."""

    def delta(self, data) -> float:
        if self.delta_is_zero:
            return 0.0
        return self.statistic(data) - float(np.sum(self.linear_terms(data)))

    @abstractmethod
    def delta_variant(self, data, i: int, mode: str, rng) -> float:
        """Delta recomputed with X_i replaced: by 0 (zero_out) or by a fresh
        independent draw (resample). Both leave Delta_i independent of X_i;
        resample additionally makes it a function of the other X_j only in
        the stronger sense needed by the pointwise bounds."""

    # --- engine hooks -----------------------------------------------------

    def rep_indexes(self):
        """First index of each exchangeable group."""
        out = []
        pos = 0
        for size in self.group_sizes:
            out.append(pos)
            pos += size
        return out

    def sample_chunk(self, rng: np.random.Generator, count: int, mode=None):
        """Vectorized chunk evaluation; the base version loops replicates.

        mode None -> {'t': array, 'w': array}
        mode 'zero_out'/'resample' -> adds 'delta', 'g_rep', 'dvar_rep'
        (count x n_groups arrays for the representative indexes).
        """
        t = np.empty(count)
        w = np.empty(count)
        if mode is None:
            for r in range(count):
                data = self.sample_data(rng)
                g = self.linear_terms(data)
                w[r] = g.sum()
                t[r] = w[r] + self.delta(data)
            return {"t": t, "w": w}
        reps = self.rep_indexes()
        delta = np.empty(count)
        g_rep = np.empty((count, len(reps)))
        dvar_rep = np.empty((count, len(reps)))
        for r in range(count):
            data = self.sample_data(rng)
            g = self.linear_terms(data)
            w[r] = g.sum()
            delta[r] = self.delta(data)
            t[r] = w[r] + delta[r]
            for j, i in enumerate(reps):
                g_rep[r, j] = g[i]
                dvar_rep[r, j] = self.delta_variant(data, i, mode, rng)
        return {"t": t, "w": w, "delta": delta, "g_rep": g_rep, "dvar_rep": dvar_rep}

    def decompose_one(self, rng: np.random.Generator, mode="zero_out"):
        """Single-replicate decomposition (chunk of size 1)."""
        chunk = self.sample_chunk(rng, 1, mode=mode)
        return DecompositionSample(
            w=float(chunk["w"][0]),
            delta=float(chunk["delta"][0]),
            g_values=tuple(chunk["g_rep"][0]),
            delta_variants=tuple(chunk["dvar_rep"][0]),
            variant_weights=tuple(float(s) for s in self.group_sizes),
            rep_index_only=True,
            variant_mode=mode,
        )

    # --- analytic hooks (override where the catalog knows the answer) -----

    def linear_ks_exact(self):
        """Exact sup-distance between the law of W and the standard normal,
        when known in closed form (0.0 for an exactly normal W)."""
        return None

    def prob_abs_w_minus_g_above(self, group: int, t: float):
        """P(|W - g_i| > t) for an index in the given group, when analytic."""
        return None

    def delta_tail_analytic(self, t: float):
        """P(|Delta| > t) when analytic; None to fall back to Monte Carlo."""
        return None

    def group_g_l2(self):
        """Per-group ||g_i||_2, analytic from the linear part."""
        out = []
        for (marg, cnt), size in zip(self.linear_part.groups, self.group_sizes):
            assert cnt == size
            out.append(marg.l2())
        return tuple(out)

    def nonuniform_third_term(self, z: float) -> float:
        """sum_i P(|W - g_i| > (|z|-2)/3) P(|g_i| > 1).

        The threshold may be negative, in which case the first factor is 1.
        Models whose g_i are bounded by 1 return 0 without needing the
        distribution of W - g_i.
        """
        thr = (abs(z) - 2.0) / 3.0
        total = 0.0
        for group, ((marg, cnt), size) in enumerate(
                zip(self.linear_part.groups, self.group_sizes)):
            p_g = marg.prob_abs_above(1.0)
            if p_g == 0.0:
                continue
            if thr < 0:
                p_w = 1.0
            else:
                p_w = self.prob_abs_w_minus_g_above(group, thr)
                if p_w is None:
                    raise UnsupportedModelError(
                        f"{self.name}: no oracle for the W - g_i tail")
            total += size * p_w * p_g
        return total


def sample_decomposition(model: StatisticModel, rng, variant_mode="zero_out"):
    """One realization of (W, Delta, g_i, Delta_i). Representative-index
    shortcut for exchangeable models, full per-index otherwise."""
    return model.decompose_one(rng, mode=variant_mode)
