"""Inverse-square-root perturbation of an exactly normal sum.

T = W - eps |W|^(-1/2) + eps * ISQRT_MEAN, with W standard normal and
ISQRT_MEAN = E|W|^(-1/2) = 2^(-1/4) Gamma(1/4) / sqrt(pi), so E Delta = 0.
The remainder has E|Delta|^q finite only for q < 2, which rules the
L2-flavored bounds out by construction while the first-moment machinery
still applies. W is realized as R + X_1 with R collecting the other n - 1
summands, so the representative-index variants need only two scalars per
replicate.

Conventions: at W = 0 (a null event) T = -inf. Sampling consumes draws in
the order R block, X_1 block, then in resample mode one fresh X_1 per
replicate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from ..errors import DomainError, UnsupportedModelError
from ..marginals import NORMAL_CUT, LinearPart, NormalMarginal, quad_segments
from .base import StatisticModel

# E|Z|^(-1/2) for standard normal Z
ISQRT_MEAN = 2.0 ** (-0.25) * math.gamma(0.25) / math.sqrt(math.pi)

# |z| below which the kept part of the remainder changes sign
_Z_KINK = ISQRT_MEAN ** -2


@dataclass(frozen=True)
class Example41Spec:
    """Descriptor for the perturbed-normal counterexample family."""

    epsilon: float
    n: int = 100

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.n < 2:
            raise DomainError("need n >= 2 to split off one summand")


def example41_transform(w, epsilon: float):
    """T as a function of W; -inf at W = 0."""
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore"):
        t = w - epsilon / np.sqrt(np.abs(w)) + epsilon * ISQRT_MEAN
    return np.where(w == 0.0, -np.inf, t)


def isqrt_delta(w, epsilon: float):
    """Delta = eps (ISQRT_MEAN - |W|^(-1/2)); -inf at W = 0."""
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore"):
        d = epsilon * (ISQRT_MEAN - 1.0 / np.sqrt(np.abs(w)))
    return np.where(w == 0.0, -np.inf, d)


@lru_cache(maxsize=32)
def delta_abs_moment(q: float = 1.0) -> float:
    """E|ISQRT_MEAN - |Z|^(-1/2)|^q, finite for q < 2."""
    if not 0.0 < q < 2.0:
        raise DomainError("the remainder has absolute moments only for q in (0, 2)")
    phi = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    fn = lambda z: abs(ISQRT_MEAN - z ** -0.5) ** q * phi(z)
    return 2.0 * quad_segments(fn, [0.0, _Z_KINK, NORMAL_CUT])


@lru_cache(maxsize=1)
def w_delta_abs_moment() -> float:
    """E|Z (ISQRT_MEAN - |Z|^(-1/2))|."""
    phi = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    fn = lambda z: z * abs(ISQRT_MEAN - z ** -0.5) * phi(z)
    return 2.0 * quad_segments(fn, [0.0, _Z_KINK, NORMAL_CUT])


def delta_tail_prob(t: float, epsilon: float) -> float:
    """P(|Delta| > t), in closed form through the normal cdf."""
    if t < 0:
        return 1.0
    if t == 0.0:
        return 1.0  # Delta = 0 only on a null set
    u = t / epsilon
    # |W|^(-1/2) > ISQRT_MEAN + u
    small = 1.0 - 2.0 * ndtr(-((ISQRT_MEAN + u) ** -2))
    large = 0.0
    if u < ISQRT_MEAN:
        # |W|^(-1/2) < ISQRT_MEAN - u
        large = 2.0 * ndtr(-((ISQRT_MEAN - u) ** -2))
    return small + large


def ks_lower_bound(epsilon: float) -> float:
    """Closed-form sup-distance lower bound between the laws of T and W.

    {T <= eps * ISQRT_MEAN} is exactly {W <= eps^(2/3)}, so the distance is
    at least Phi(eps^(2/3)) - Phi(eps * ISQRT_MEAN).
    """
    if not 0.0 < epsilon < ISQRT_MEAN ** -3:
        raise DomainError("the pinch point needs eps^(2/3) > eps * ISQRT_MEAN")
    return float(ndtr(epsilon ** (2.0 / 3.0)) - ndtr(epsilon * ISQRT_MEAN))


class IsqrtModel(StatisticModel):
    """Perturbed-normal counterexample with W = R + X_1 split."""

    def __init__(self, spec: Example41Spec):
        self.spec = spec
        self.epsilon = float(spec.epsilon)
        self.n = int(spec.n)
        self.name = f"isqrt-eps{self.epsilon:g}-n{self.n}"
        self.group_sizes = (self.n,)
        self._x_sd = 1.0 / math.sqrt(self.n)
        self._r_sd = math.sqrt((self.n - 1) / self.n)
        self.linear_part = LinearPart([(NormalMarginal(self._x_sd), self.n)])
        self.supports_delta_l2 = False

    # data is the pair (r, x1); the other summands are never materialized
    def sample_data(self, rng):
        r = float(rng.standard_normal()) * self._r_sd
        x1 = float(rng.standard_normal()) * self._x_sd
        return (r, x1)

    def statistic(self, data):
        r, x1 = data
        return float(example41_transform(r + x1, self.epsilon))

    def linear_terms(self, data):
        raise UnsupportedModelError(
            "per-index terms are not materialized; use the chunk interface")

    def delta(self, data):
        r, x1 = data
        return float(isqrt_delta(r + x1, self.epsilon))

    def delta_variant(self, data, i, mode, rng):
        r, _ = data
        v = 0.0 if mode == "zero_out" else float(rng.standard_normal()) * self._x_sd
        return float(isqrt_delta(r + v, self.epsilon))

    def sample_chunk(self, rng, count, mode=None):
        r = rng.standard_normal(count) * self._r_sd
        x1 = rng.standard_normal(count) * self._x_sd
        w = r + x1
        t = example41_transform(w, self.epsilon)
        if mode is None:
            return {"t": t, "w": w}
        delta = isqrt_delta(w, self.epsilon)
        if mode == "zero_out":
            v = np.zeros(count)
        else:
            v = rng.standard_normal(count) * self._x_sd
        dvar = isqrt_delta(r + v, self.epsilon)
        return {"t": t, "w": w, "delta": delta,
                "g_rep": x1[:, None], "dvar_rep": dvar[:, None]}

    def linear_ks_exact(self):
        return 0.0  # W is exactly standard normal

    def delta_tail_analytic(self, t):
        return delta_tail_prob(t, self.epsilon)

    def prob_abs_w_minus_g_above(self, group, t):
        if t < 0:
            return 1.0
        return float(2.0 * ndtr(-t / self._r_sd))

    def e_abs_delta(self) -> float:
        return self.epsilon * delta_abs_moment(1.0)

    def e_abs_w_delta(self) -> float:
        return self.epsilon * w_delta_abs_moment()


def example41_alpha(spec: Example41Spec, replicates: int, seed):
    """Monte Carlo estimate of the averaged resample-coupling moment
    (1/n) sum_i E|Delta(W) - Delta(W with X_i redrawn)|.

    The summands are exchangeable, so the average equals the i = 1 term and
    one replicate costs three draws (rest-of-sum R, X_1, fresh copy of X_1)
    whatever n is. Chunking and stream keying follow the engine conventions,
    so results are reproducible from (spec, replicates, master seed) alone.
    """
    from ..mc_engine import SeedSpec, chunk_layout
    from ..types import MomentEstimate
    if not isinstance(seed, SeedSpec):
        seed = SeedSpec(int(seed))
    model = IsqrtModel(spec)
    parts = []
    for c, _start, count in chunk_layout(replicates):
        chunk = model.sample_chunk(seed.substream(c), count, mode="resample")
        v = np.abs(chunk["delta"] - chunk["dvar_rep"][:, 0])
        parts.append((float(np.sum(v)), float(np.dot(v, v))))
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    mean = total / replicates
    if replicates > 1:
        var = max(0.0, (total_sq - replicates * mean * mean) / (replicates - 1))
        se = math.sqrt(var / replicates)
    else:
        se = 0.0
    return MomentEstimate(mean, se, replicates)
