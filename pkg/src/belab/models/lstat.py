"""Linear combinations of order statistics T(F_n) = (1/n) sum X_(i) J(i/n).

The normalized statistic is sqrt(n)(T(F_n) - T(F)) / sigma with
T(F) = E[X J(F(X))] and sigma^2 the double integral of
J(F(s)) J(F(t)) F(s ^ t)(1 - F(s v t)). The linear terms come from the
influence function infl(x) = integral (I(x <= s) - F(s)) J(F(s)) ds via
g_i = -infl(X_i) / (sqrt(n) sigma); infl is nonincreasing for J >= 0, so the
per-index marginal is a monotone transform of X.

sigma from the double integral is cross-checked against E g^2 from the
influence function to 1e-8; disagreement raises NumericError instead of
silently certifying with an inconsistent scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from ..errors import NumericError, UnsupportedModelError
from ..marginals import LinearPart, MonotoneMarginal, quad_segments
from .base import DIST_CATALOG, BaseDist, StatisticModel

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class WeightFn:
    """Score function J on (0, 1] with a declared Lipschitz constant."""

    name: str
    c_lip: float
    fn: object  # vectorized callable on [0, 1]


WEIGHT_CATALOG = {
    "const1": WeightFn("const1", 0.0, lambda t: np.ones_like(np.asarray(t, dtype=float))),
    "identity": WeightFn("identity", 1.0, lambda t: np.asarray(t, dtype=float)),
}


@dataclass(frozen=True)
class LStatSpec:
    """Descriptor for a catalog L-statistic."""

    weight: str
    dist: str
    n: int

    def __post_init__(self):
        if self.weight not in WEIGHT_CATALOG:
            raise UnsupportedModelError(f"unknown weight {self.weight!r}")
        if self.dist not in DIST_CATALOG or not DIST_CATALOG[self.dist].continuous:
            raise UnsupportedModelError(
                "order-statistic weights need a continuous distribution")
        if self.n < 4:
            raise UnsupportedModelError("need n >= 4")


def check_lipschitz(weight: WeightFn, gridsize: int = 2001):
    """Validate the declared Lipschitz constant on a uniform grid."""
    t = np.linspace(0.0, 1.0, gridsize)
    vals = np.asarray(weight.fn(t), dtype=float)
    steps = np.abs(np.diff(vals))
    allowed = weight.c_lip * np.diff(t) + 1e-12
    if (steps > allowed).any():
        raise UnsupportedModelError(
            f"weight {weight.name!r} violates its Lipschitz constant {weight.c_lip}")


def lstat_value(data, weight: WeightFn) -> float:
    """Raw T(F_n) = (1/n) sum X_(i) J(i/n)."""
    x = np.sort(np.asarray(data, dtype=float))
    n = x.size
    jv = np.asarray(weight.fn(np.arange(1, n + 1) / n), dtype=float)
    return float(x @ jv) / n


def influence_closed(weight: WeightFn, dist: BaseDist):
    """Vectorized influence function for catalog (weight, dist) pairs."""
    if weight.name == "const1":
        return lambda x: dist.mean - np.asarray(x, dtype=float)
    if weight.name == "identity":
        if dist.name == "uniform01":
            return lambda x: 1.0 / 6.0 - np.asarray(x, dtype=float) ** 2 / 2.0
        if dist.name == "std_normal":
            def infl(x):
                x = np.asarray(x, dtype=float)
                phi = np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
                return 1.0 / _SQRT_PI - x * ndtr(x) - phi
            return infl
        if dist.name == "exponential1":
            return lambda x: 1.5 - np.asarray(x, dtype=float) - np.exp(
                -np.asarray(x, dtype=float))
    return None


def influence_quadrature(weight: WeightFn, dist: BaseDist):
    """Influence function by quadrature; the generic (slow) path."""
    lo, hi = dist.support

    def infl(x):
        def integrand(s):
            fs = dist.cdf(s)
            return ((1.0 if x <= s else 0.0) - fs) * float(weight.fn(fs))
        edges = sorted({lo, hi, min(max(x, lo), hi)})
        return quad_segments(integrand, edges)

    return infl


def t_center(weight: WeightFn, dist: BaseDist) -> float:
    """T(F) = E[X J(F(X))]."""
    lo, hi = dist.support
    fn = lambda x: x * float(weight.fn(dist.cdf(x))) * dist.pdf(x)
    mid = min(max(dist.mean, lo), hi)
    return quad_segments(fn, sorted({lo, mid, hi}))


def sigma_double_integral(weight: WeightFn, dist: BaseDist) -> float:
    """sigma^2 = 2 * iint_{s<t} J(F(s)) J(F(t)) F(s)(1 - F(t)) dt ds."""
    lo, hi = dist.support

    def inner(t, s):
        return (float(weight.fn(dist.cdf(s))) * float(weight.fn(dist.cdf(t)))
                * dist.cdf(s) * (1.0 - dist.cdf(t)))

    val, err = integrate.dblquad(inner, lo, hi, lambda s: s, hi,
                                 epsabs=1e-11, epsrel=1e-11)
    if err > 1e-8:
        raise NumericError(f"scale double integral error {err:.3e} too large")
    return 2.0 * val


def lstat_projection_sigma(weight: WeightFn, dist: BaseDist):
    """(influence, sigma) with the two scale computations reconciled."""
    infl = influence_closed(weight, dist)
    if infl is None:
        scalar = influence_quadrature(weight, dist)
        infl = lambda x: np.array([scalar(v) for v in np.atleast_1d(x)])
    s_sq = sigma_double_integral(weight, dist)
    lo, hi = dist.support
    e_g2 = quad_segments(
        lambda x: float(infl(np.array([x]))[0]) ** 2 * dist.pdf(x),
        sorted({lo, min(max(dist.mean, lo), hi), hi}))
    if abs(s_sq - e_g2) > 1e-8 + 1e-8 * abs(s_sq):
        raise NumericError(
            f"scale mismatch: double integral {s_sq!r} vs E g^2 {e_g2!r}")
    return infl, math.sqrt(s_sq)


class LStatModel(StatisticModel):
    """Catalog L-statistic over i.i.d. continuous observations."""

    def __init__(self, spec: LStatSpec):
        self.spec = spec
        self.weight = WEIGHT_CATALOG[spec.weight]
        self.dist = DIST_CATALOG[spec.dist]
        self.n = spec.n
        check_lipschitz(self.weight)
        self.name = f"lstat-{spec.weight}-{spec.dist}-n{spec.n}"
        self.group_sizes = (self.n,)
        self._infl, self.sigma = lstat_projection_sigma(self.weight, self.dist)
        self._center = t_center(self.weight, self.dist)
        self._jvec = np.asarray(
            self.weight.fn(np.arange(1, self.n + 1) / self.n), dtype=float) / self.n
        self._scale = 1.0 / (math.sqrt(self.n) * self.sigma)
        lo, hi = self.dist.support
        # marginal of -g_i = infl(X)/(sqrt(n) sigma); |g_i| oracles are
        # sign-invariant, which is all the bounds consume
        self.linear_part = LinearPart([(MonotoneMarginal(
            lambda x: float(self._infl(np.array([x]))[0]) * self._scale,
            lo, hi, self.dist.pdf,
            sampler=lambda rng, size: self.dist.sample(rng, size),
            cdf=self.dist.cdf, decreasing=True), self.n)])
        self.x2_moment = self.dist.var + self.dist.mean ** 2

    def sample_data(self, rng):
        return self.dist.sample(rng, self.n)

    def statistic(self, data):
        x = np.sort(np.asarray(data, dtype=float))
        return (float(x @ self._jvec) - self._center) * math.sqrt(self.n) / self.sigma

    def linear_terms(self, data):
        return -np.asarray(self._infl(data)) * self._scale

    def delta_variant(self, data, i, mode, rng):
        x = np.asarray(data, dtype=float).copy()
        v = 0.0 if mode == "zero_out" else float(self.dist.sample(rng, 1)[0])
        g = self.linear_terms(x)
        w_new = float(np.sum(g)) - float(g[i]) + float(
            -self._infl(np.array([v]))[0] * self._scale)
        x[i] = v
        return self.statistic(x) - w_new

    def sample_chunk(self, rng, count, mode=None):
        x = self.dist.sample(rng, (count, self.n))
        xs = np.sort(x, axis=1)
        t = (xs @ self._jvec - self._center) * (math.sqrt(self.n) / self.sigma)
        g = -self._infl(x) * self._scale
        w = g.sum(axis=1)
        if mode is None:
            return {"t": t, "w": w}
        delta = t - w
        if mode == "zero_out":
            v = np.zeros(count)
        else:
            v = self.dist.sample(rng, (count, 1))[:, 0]
        xv = x.copy()
        xv[:, 0] = v
        tv = (np.sort(xv, axis=1) @ self._jvec - self._center) * (
            math.sqrt(self.n) / self.sigma)
        gv = -self._infl(v) * self._scale
        wv = w - g[:, 0] + gv
        return {"t": t, "w": w, "delta": delta,
                "g_rep": g[:, :1], "dvar_rep": (tv - wv)[:, None]}

    def lipschitz_constant(self):
        return self.weight.c_lip

    def influence_abs_moment(self, p: float) -> float:
        """E|infl(X)|^p in raw influence units."""
        marg, _count = self.linear_part.groups[0]
        return marg.e_abs_p(p) * (math.sqrt(self.n) * self.sigma) ** p
