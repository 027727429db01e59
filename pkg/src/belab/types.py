"""Shared value types.

Everything here is an immutable record. Instances are safe to share across
threads; all computation happens in the modules that produce them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class MomentEstimate:
    """A scalar moment with its sampling uncertainty.

    replicates == 0 marks an analytic or quadrature value, in which case
    std_error must be 0 as well.
    """

    value: float
    std_error: float = 0.0
    replicates: int = 0

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")
        if self.replicates == 0 and self.std_error != 0.0:
            raise ValueError("analytic/quadrature estimates carry std_error 0")

    @property
    def analytic(self) -> bool:
        return self.replicates == 0


@dataclass(frozen=True)
class BoundComponents:
    """Scalar ingredients of the general uniform and non-uniform bounds.

    Every value is paired with a standard error (0 for analytic values).
    delta may be NaN when no delta construction was requested.
    """

    beta: float = math.nan
    beta_se: float = 0.0
    delta: float = math.nan
    delta_se: float = 0.0
    e_abs_w_delta: float = 0.0
    e_abs_w_delta_se: float = 0.0
    sum_g_delta_diff: float = 0.0
    sum_g_delta_diff_se: float = 0.0
    delta_l2: float = 0.0
    delta_l2_se: float = 0.0
    sum_g_l2_delta_l2: float = 0.0
    sum_g_l2_delta_l2_se: float = 0.0

    def __post_init__(self):
        for name in ("beta", "e_abs_w_delta", "sum_g_delta_diff", "delta_l2",
                     "sum_g_l2_delta_l2"):
            v = getattr(self, name)
            if not math.isnan(v) and v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        if not math.isnan(self.delta) and self.delta <= 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")


@dataclass(frozen=True)
class NonUniformInputs:
    """Tail probabilities entering the non-uniform bound at a point z."""

    z: float
    p_delta_tail: float
    p_delta_tail_se: float = 0.0
    sum_p_g_tail: float = 0.0
    sum_p_w_minus_g_tail: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_delta_tail <= 1.0:
            raise ValueError("p_delta_tail must be a probability")
        if self.sum_p_g_tail < 0 or self.sum_p_w_minus_g_tail < 0:
            raise ValueError("tail sums must be >= 0")


@dataclass(frozen=True)
class BoundValue:
    """A bound split into an explicit part and a part carrying the unspecified
    absolute constant. Pass/fail verification may only consume bounds with
    c_coeff == 0; the constant itself is never assigned a number.
    """

    known: float
    c_coeff: float
    equation_tag: str
    known_se: float = 0.0

    def __post_init__(self):
        if self.known < 0 or self.c_coeff < 0 or self.known_se < 0:
            raise ValueError("bound parts must be >= 0")

    @property
    def trivial(self) -> bool:
        """True when the explicit part already exceeds 1 (bound says nothing)."""
        return self.known >= 1.0

    @property
    def verifiable(self) -> bool:
        return self.c_coeff == 0.0


@dataclass(frozen=True)
class KSResult:
    """Empirical Kolmogorov distance with a distribution-free confidence radius."""

    distance: float
    replicates: int
    dkw_radius: float

    def __post_init__(self):
        if not 0.0 <= self.distance <= 1.0:
            raise ValueError("distance must lie in [0, 1]")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")


@dataclass(frozen=True)
class DecompositionSample:
    """One realization of T = W + Delta.

    g_values holds every g_i(X_i). delta_variants holds the leave-one-out
    Delta_i values; when rep_index_only is set the model is exchangeable and
    only representative indexes were evaluated (one per exchangeable group,
    recorded with the group size as weight).
    """

    w: float
    delta: float
    g_values: tuple
    delta_variants: tuple
    variant_weights: tuple = ()
    rep_index_only: bool = False
    variant_mode: str = "zero_out"

    @property
    def t(self) -> float:
        return self.w + self.delta
