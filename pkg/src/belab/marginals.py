"""Per-index distribution summaries for the linear part.

A Marginal answers moment queries about one g_i(X_i): full and truncated
absolute moments, tail probabilities, and the capped first moment
E|g| min(d, |g|). Answers come from a three-tier chain: closed forms where
the catalog has them, adaptive quadrature otherwise, and plain sample means
as a last resort for user-supplied models (SampleMarginal, the only tier
with a nonzero standard error).

A LinearPart groups identical marginals with counts and exposes the sums
that the bound formulas need.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np
from scipy import integrate
from scipy.special import gammainc, gammaln, ndtr

from .errors import NumericError

QUAD_EPSABS = 1e-12
QUAD_LIMIT = 200
# quadrature windows, in standardized units; mass beyond is < 1e-30
NORMAL_CUT = 12.0
EXP_CUT = 60.0


def quad_segments(fn, edges, epsabs=QUAD_EPSABS):
    """Integrate fn over consecutive [edges[k], edges[k+1]] segments.

    Splitting at known kinks/transitions keeps the adaptive rule honest;
    a naive single call can miss narrow features entirely.
    """
    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        v, e = integrate.quad(fn, a, b, epsabs=epsabs, limit=QUAD_LIMIT)
        total += v
        err += e
    if err > max(1e-9, 1e-6 * abs(total)):
        raise NumericError(
            f"quadrature error estimate {err:.3e} too large for value {total:.6e}")
    return total


class Marginal(ABC):
    """Moment oracle for a single g_i."""

    @abstractmethod
    def e_abs_p(self, p: float) -> float:
        """E |g|^p."""

    @abstractmethod
    def e_abs_p_below(self, p: float, t: float) -> float:
        """E |g|^p I(|g| <= t)."""

    @abstractmethod
    def prob_abs_above(self, t: float) -> float:
        """P(|g| > t), strict inequality (matters at atoms)."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draws of g itself (signed)."""

    def e2(self) -> float:
        return self.e_abs_p(2.0)

    def e2_above(self, t: float) -> float:
        """E g^2 I(|g| > t)."""
        if t <= 0:
            return self.e2()
        return max(0.0, self.e2() - self.e_abs_p_below(2.0, t))

    def e_abs_min(self, d: float) -> float:
        """E |g| min(d, |g|) = E g^2 I(|g|<=d) + d E|g| I(|g|>d)."""
        if d <= 0:
            return 0.0
        below2 = self.e_abs_p_below(2.0, d)
        above1 = max(0.0, self.e_abs_p(1.0) - self.e_abs_p_below(1.0, d))
        return below2 + d * above1

    def l2(self) -> float:
        return math.sqrt(self.e2())

    def abs_bounded_by(self):
        """Essential sup of |g| where known, else None."""
        return None

    def oracle_se(self, kind: str, *args) -> float:
        """Standard error of the named oracle; 0 except for the sampling tier."""
        return 0.0

    def scale_by(self, factor: float) -> "Marginal":
        """Marginal of factor * g, factor > 0."""
        raise NotImplementedError(type(self).__name__)


def normal_abs_moment(p: float) -> float:
    """E|Z|^p for standard normal Z."""
    return math.exp(p / 2 * math.log(2.0) + gammaln((p + 1) / 2)) / math.sqrt(math.pi)


class NormalMarginal(Marginal):
    """g = scale * Z with Z standard normal. All oracles closed-form."""

    def __init__(self, scale: float):
        if scale <= 0:
            raise ValueError("scale must be > 0")
        self.scale = float(scale)

    def e_abs_p(self, p):
        return self.scale ** p * normal_abs_moment(p)

    def e_abs_p_below(self, p, t):
        if t <= 0:
            return 0.0
        u = t / self.scale
        # 2 int_0^u x^p phi(x) dx via the regularized lower incomplete gamma
        shape = (p + 1) / 2
        full = normal_abs_moment(p)
        return self.scale ** p * full * gammainc(shape, u * u / 2)

    def prob_abs_above(self, t):
        if t < 0:
            return 1.0
        return 2.0 * ndtr(-t / self.scale)

    def e2(self):
        return self.scale ** 2

    def sample(self, rng, size):
        return rng.standard_normal(size) * self.scale

    def scale_by(self, factor):
        return NormalMarginal(self.scale * factor)


class UniformMarginal(Marginal):
    """g uniform on [-halfwidth, halfwidth]."""

    def __init__(self, halfwidth: float):
        if halfwidth <= 0:
            raise ValueError("halfwidth must be > 0")
        self.halfwidth = float(halfwidth)

    def e_abs_p(self, p):
        return self.halfwidth ** p / (p + 1)

    def e_abs_p_below(self, p, t):
        if t <= 0:
            return 0.0
        t = min(t, self.halfwidth)
        return t ** (p + 1) / ((p + 1) * self.halfwidth)

    def prob_abs_above(self, t):
        if t < 0:
            return 1.0
        return max(0.0, 1.0 - t / self.halfwidth)

    def e2(self):
        return self.halfwidth ** 2 / 3.0

    def abs_bounded_by(self):
        return self.halfwidth

    def sample(self, rng, size):
        return rng.uniform(-self.halfwidth, self.halfwidth, size)

    def scale_by(self, factor):
        return UniformMarginal(self.halfwidth * factor)


class AtomMarginal(Marginal):
    """Finite support; exact sums with strict inequalities at atoms."""

    def __init__(self, values, probs):
        self.values = np.asarray(values, dtype=float)
        self.probs = np.asarray(probs, dtype=float)
        if self.values.shape != self.probs.shape:
            raise ValueError("values and probs must align")
        if abs(self.probs.sum() - 1.0) > 1e-12 or (self.probs < 0).any():
            raise ValueError("probs must be a distribution")

    @classmethod
    def rademacher(cls, scale: float):
        return cls([-scale, scale], [0.5, 0.5])

    def e_abs_p(self, p):
        return float((np.abs(self.values) ** p * self.probs).sum())

    def e_abs_p_below(self, p, t):
        mask = np.abs(self.values) <= t
        return float((np.abs(self.values[mask]) ** p * self.probs[mask]).sum())

    def prob_abs_above(self, t):
        return float(self.probs[np.abs(self.values) > t].sum())

    def abs_bounded_by(self):
        return float(np.abs(self.values).max())

    def sample(self, rng, size):
        return rng.choice(self.values, size=size, p=self.probs)

    def scale_by(self, factor):
        return AtomMarginal(self.values * factor, self.probs)


class ExpCenteredMarginal(Marginal):
    """g = scale * (X - 1) with X standard exponential. Quadrature tier."""

    def __init__(self, scale: float):
        if scale <= 0:
            raise ValueError("scale must be > 0")
        self.scale = float(scale)

    def _edges(self, extra=()):
        edges = [0.0, 1.0, EXP_CUT]
        edges.extend(e for e in extra if 0.0 < e < EXP_CUT)
        return sorted(set(edges))

    def e_abs_p(self, p):
        s = self.scale
        fn = lambda x: abs(s * (x - 1.0)) ** p * math.exp(-x)
        return quad_segments(fn, self._edges())

    def e_abs_p_below(self, p, t):
        if t <= 0:
            return 0.0
        u = t / self.scale
        # region |x - 1| <= u, kink of |g|^p at x = 1
        lo, hi = max(0.0, 1.0 - u), min(1.0 + u, EXP_CUT)
        if hi <= lo:
            return 0.0
        s = self.scale
        fn = lambda x: abs(s * (x - 1.0)) ** p * math.exp(-x)
        edges = sorted({lo, hi} | ({1.0} if lo < 1.0 < hi else set()))
        return quad_segments(fn, edges)

    def prob_abs_above(self, t):
        if t < 0:
            return 1.0
        u = t / self.scale
        upper = math.exp(-(1.0 + u))
        lower = 1.0 - math.exp(-(1.0 - u)) if u < 1.0 else 0.0
        return upper + lower

    def e2(self):
        return self.scale ** 2  # Var(Exp(1)) = 1

    def sample(self, rng, size):
        return (rng.standard_exponential(size) - 1.0) * self.scale

    def scale_by(self, factor):
        return ExpCenteredMarginal(self.scale * factor)


class QuadraticMarginal(Marginal):
    """g = a * ((X - b)^2 - c) for a base X with known density; a, c > 0.

    Covers centered-square projections. Region algebra: |g| <= t is
    |X - b| in [sqrt(max(0, c - t/a)), sqrt(c + t/a)].
    """

    def __init__(self, a, b, c, density, support, sampler, cdf=None):
        if a <= 0 or c <= 0:
            raise ValueError("a and c must be > 0")
        self.a, self.b, self.c = float(a), float(b), float(c)
        self.density = density
        self.x_lo, self.x_hi = support
        self.sampler = sampler
        self.cdf = cdf

    def _clip(self, x):
        return min(max(x, self.x_lo), self.x_hi)

    def _g(self, x):
        return self.a * ((x - self.b) ** 2 - self.c)

    def _quad_abs_p(self, p, edges):
        fn = lambda x: abs(self._g(x)) ** p * self.density(x)
        return quad_segments(fn, edges)

    def _base_edges(self, extra=()):
        root = math.sqrt(self.c)
        edges = {self.x_lo, self.x_hi, self._clip(self.b - root),
                 self._clip(self.b + root), self._clip(self.b)}
        for e in extra:
            edges.add(self._clip(e))
        return sorted(edges)

    def e_abs_p(self, p):
        return self._quad_abs_p(p, self._base_edges())

    def _region_points(self, t):
        lo = math.sqrt(max(0.0, self.c - t / self.a))
        hi = math.sqrt(self.c + t / self.a)
        return lo, hi

    def e_abs_p_below(self, p, t):
        if t <= 0:
            return 0.0
        lo, hi = self._region_points(t)
        segs = []
        left = (self._clip(self.b - hi), self._clip(self.b - lo))
        right = (self._clip(self.b + lo), self._clip(self.b + hi))
        for a, b in (left, right):
            if b > a:
                segs.append((a, b))
        total = 0.0
        for a, b in segs:
            mid = self._clip(self.b) if a < self.b < b else None
            edges = [a, b] if mid is None else [a, mid, b]
            total += self._quad_abs_p(p, edges)
        return total

    def prob_abs_above(self, t):
        if t < 0:
            return 1.0
        if self.cdf is not None:
            lo, hi = self._region_points(t)
            inside = (self.cdf(self._clip(self.b + lo)) - self.cdf(self._clip(self.b - lo))
                      if lo > 0 else 0.0)
            outside_hi = 1.0 - self.cdf(self._clip(self.b + hi)) if self.b + hi < self.x_hi else 0.0
            outside_lo = self.cdf(self._clip(self.b - hi)) if self.b - hi > self.x_lo else 0.0
            return max(0.0, outside_hi + outside_lo + inside)
        fn = lambda x: self.density(x) if abs(self._g(x)) > t else 0.0
        lo, hi = self._region_points(t)
        edges = self._base_edges(extra=(self.b - hi, self.b - lo, self.b + lo, self.b + hi))
        return quad_segments(fn, edges, epsabs=1e-11)

    def sample(self, rng, size):
        x = self.sampler(rng, size)
        return self.a * ((x - self.b) ** 2 - self.c)

    def scale_by(self, factor):
        return QuadraticMarginal(self.a * factor, self.b, self.c, self.density,
                                 (self.x_lo, self.x_hi), self.sampler, self.cdf)


class MonotoneMarginal(Marginal):
    """g = fn(X) with fn continuous and strictly monotone on [x_lo, x_hi].

    Preimages found by bisection against fn; used for L-statistic projections
    where fn is itself quadrature-backed.
    """

    def __init__(self, fn, x_lo, x_hi, density, sampler, cdf, decreasing=True):
        self.fn = fn
        self.x_lo, self.x_hi = float(x_lo), float(x_hi)
        self.density = density
        self.sampler = sampler
        self.cdf = cdf
        self.decreasing = decreasing
        self._f_lo = fn(self.x_lo)
        self._f_hi = fn(self.x_hi)
        if decreasing and self._f_lo < self._f_hi:
            raise ValueError("fn is not decreasing on the support")

    def _preimage(self, y):
        """x with fn(x) = y, clipped to the support (decreasing fn)."""
        from scipy.optimize import brentq
        if y >= self._f_lo:
            return self.x_lo
        if y <= self._f_hi:
            return self.x_hi
        return brentq(lambda x: self.fn(x) - y, self.x_lo, self.x_hi, xtol=1e-14)

    def _zero(self):
        return self._preimage(0.0)

    def e_abs_p(self, p):
        fn = lambda x: abs(self.fn(x)) ** p * self.density(x)
        return quad_segments(fn, sorted({self.x_lo, self._zero(), self.x_hi}))

    def e_abs_p_below(self, p, t):
        if t <= 0:
            return 0.0
        # g in [-t, t] is x in [preimage(t), preimage(-t)] for decreasing fn
        a, b = self._preimage(t), self._preimage(-t)
        if b <= a:
            return 0.0
        fn = lambda x: abs(self.fn(x)) ** p * self.density(x)
        edges = sorted({a, b} | ({self._zero()} if a < self._zero() < b else set()))
        return quad_segments(fn, edges)

    def prob_abs_above(self, t):
        if t < 0:
            return 1.0
        a, b = self._preimage(t), self._preimage(-t)
        inside = max(0.0, self.cdf(b) - self.cdf(a))
        return max(0.0, 1.0 - inside)

    def abs_bounded_by(self):
        return max(abs(self._f_lo), abs(self._f_hi))

    def sample(self, rng, size):
        x = self.sampler(rng, size)
        return np.array([self.fn(v) for v in np.atleast_1d(x)])

    def scale_by(self, factor):
        if factor <= 0:
            raise ValueError("factor must be > 0")
        return MonotoneMarginal(lambda x: factor * self.fn(x), self.x_lo,
                                self.x_hi, self.density, self.sampler,
                                self.cdf, decreasing=self.decreasing)


class SampleMarginal(Marginal):
    """Monte Carlo tier: plug-in oracles from a frozen draw of g values.

    Last resort for user-supplied models without analytic or quadrature
    oracles; the only marginal whose answers carry standard errors.
    """

    def __init__(self, draws):
        self.draws = np.asarray(draws, dtype=float)
        if self.draws.size < 2:
            raise ValueError("need at least 2 draws")
        self._absd = np.abs(self.draws)

    def _mean_se(self, vals):
        m = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(vals.size))
        return m, se

    def e_abs_p(self, p):
        return self._mean_se(self._absd ** p)[0]

    def e_abs_p_below(self, p, t):
        return self._mean_se(np.where(self._absd <= t, self._absd ** p, 0.0))[0]

    def prob_abs_above(self, t):
        return self._mean_se((self._absd > t).astype(float))[0]

    def oracle_se(self, kind, *args):
        if kind == "e_abs_p":
            return self._mean_se(self._absd ** args[0])[1]
        if kind == "e_abs_p_below":
            p, t = args
            return self._mean_se(np.where(self._absd <= t, self._absd ** p, 0.0))[1]
        if kind == "prob_abs_above":
            return self._mean_se((self._absd > args[0]).astype(float))[1]
        if kind == "e_abs_min":
            d = args[0]
            return self._mean_se(self._absd * np.minimum(d, self._absd))[1]
        raise ValueError(f"unknown oracle {kind}")

    def sample(self, rng, size):
        return rng.choice(self.draws, size=size, replace=True)

    def scale_by(self, factor):
        return SampleMarginal(self.draws * factor)


class LinearPart:
    """The linear half of the decomposition: marginals of g_i with counts.

    groups is a list of (marginal, count); indexes within a group are i.i.d.
    """

    def __init__(self, groups):
        self.groups = [(m, int(k)) for m, k in groups]
        if any(k < 1 for _, k in self.groups):
            raise ValueError("group counts must be >= 1")

    @property
    def n_indexes(self):
        return sum(k for _, k in self.groups)

    def sum_e2(self):
        return sum(k * m.e2() for m, k in self.groups)

    def _sum_with_se(self, fn, se_kind, *args):
        val = sum(k * fn(m) for m, k in self.groups)
        se = sum(k * m.oracle_se(se_kind, *args) for m, k in self.groups)
        return val, se

    def beta_terms(self):
        """(value, se) of sum_i [E g_i^2 I(|g_i|>1) + E|g_i|^3 I(|g_i|<=1)]."""
        val = 0.0
        se = 0.0
        for m, k in self.groups:
            val += k * (m.e2_above(1.0) + m.e_abs_p_below(3.0, 1.0))
            se += k * (m.oracle_se("e_abs_p", 2.0) + m.oracle_se("e_abs_p_below", 3.0, 1.0))
        return val, se

    def l_of(self, d):
        """L(d) = sum_i E|g_i| min(d, |g_i|); nondecreasing, L(inf) = sum E g^2."""
        return sum(k * m.e_abs_min(d) for m, k in self.groups)

    def trunc_sum(self, d):
        """sum_i E g_i^2 I(|g_i| > d); nonincreasing, right-continuous."""
        return sum(k * m.e2_above(d) for m, k in self.groups)

    def sum_abs_p(self, p):
        return self._sum_with_se(lambda m: m.e_abs_p(p), "e_abs_p", p)

    def sum_prob_above(self, t):
        return sum(k * m.prob_abs_above(t) for m, k in self.groups)

    def sum_l2(self):
        return sum(k * m.l2() for m, k in self.groups)

    def all_bounded_by_one(self):
        bounds = [m.abs_bounded_by() for m, _ in self.groups]
        return all(b is not None and b <= 1.0 for b in bounds)
