"""Tail bounds for ``f(X) - center`` when X is alpha-stable.

The theorems only promise "absolute constants"; here the constants are the
alpha-dependent expressions that come out of the proofs, and every result
carries a validity flag instead of raising when ``x`` is too small.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .deviation_kernel import OptimizerParams, solve_lemma2_regime
from .levy_core import (
    AxisLevySpec,
    SpecError,
    StableSpec,
    _check_alpha,
    _check_positive,
    c_alpha,
    truncate,
)

__all__ = [
    "BoundResult",
    "Theorem3Lipschitz",
    "SlowlyVaryingSpec",
    "REGIMES",
    "theorem1_default_params",
    "theorem1_bound",
    "theorem1_general",
    "optimize_theorem1",
    "theorem2_bound",
    "theorem2_threshold",
    "theorem2_internals",
    "theorem3_bound",
    "compute_a2_for_family",
    "mean_median_gap",
    "regvar_bound",
    "tail_constant_A",
    "sharpness_limit_1d",
    "araujo_gine_limit",
    "best_bound",
]

E = math.e
K3 = 1.0 + 8.0 * E**2

REGIMES = ("theorem1", "theorem1_general", "theorem2", "theorem3", "lemma1", "lemma2", "generic", "regvar")


@dataclass(frozen=True)
class BoundResult:
    x: float
    raw_value: float
    valid: bool
    regime: str
    constants: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if math.isnan(self.raw_value):
            raise SpecError(f"{self.regime} bound evaluated to NaN at x={self.x!r}")

    @property
    def value(self) -> float:
        return min(1.0, self.raw_value)


@dataclass(frozen=True)
class Theorem3Lipschitz:
    """Coordinate-increment data ``(a^2, c)`` for the independent-coordinates bound."""

    a2: float
    c: float

    def __post_init__(self) -> None:
        _check_positive("a2", self.a2)
        _check_positive("c", self.c)

    @property
    def a(self) -> float:
        return math.sqrt(self.a2)


@dataclass(frozen=True)
class SlowlyVaryingSpec:
    """A slowly varying factor ``L`` and the range where it is locally bounded."""

    L: Callable[[float], float]
    x_min: float = 0.0
    x_max: float = math.inf
    name: str = "L"

    def __call__(self, x: float) -> float:
        if not (self.x_min <= x <= self.x_max):
            raise SpecError(f"x={x!r} lies outside the declared range [{self.x_min}, {self.x_max}] of L")
        value = float(self.L(x))
        if not value > 0:
            raise SpecError(f"L({x!r}) = {value!r} is not positive")
        return value


def _check_x_pos(x: float) -> float:
    x = float(x)
    if not (x > 0 and math.isfinite(x)):
        raise SpecError(f"x must be positive, got {x!r}")
    return x


def _k1(alpha: float) -> float:
    return 4.0**alpha * (2.0 - alpha + E * alpha)


def theorem1_default_params(alpha: float) -> OptimizerParams:
    """``A = 2`` and the delta that balances the two radius conditions."""
    alpha = _check_alpha(alpha)
    return OptimizerParams(A=2.0, delta=(2.0 - alpha) / (2.0 * (2.0 - alpha + E * alpha)))


def theorem1_general(x: float, alpha: float, lambda_total: float, params: OptimizerParams) -> BoundResult:
    """``(e C1 + C2)(2 + A)^alpha / x^alpha`` with its (A, delta) validity region."""
    x = _check_x_pos(x)
    alpha = _check_alpha(alpha)
    lam = _check_positive("lambda_total", lambda_total)
    A, delta = params.A, params.delta
    C1 = lam / (2.0 - alpha)
    C2 = lam / alpha
    r15 = (C2 / delta) ** (1.0 / alpha)
    r20 = (2.0 * C1 / A) ** (1.0 / alpha) * (math.exp(A / 2.0) / (0.5 - delta)) ** (2.0 / (alpha * A))
    threshold = (2.0 + A) * max(r15, r20)
    raw = (E * C1 + C2) * (2.0 + A) ** alpha / x**alpha
    return BoundResult(
        x=x,
        raw_value=raw,
        valid=x >= threshold,
        regime="theorem1_general",
        constants={"A": A, "delta": delta, "C1": C1, "C2": C2, "threshold": threshold},
    )


def theorem1_bound(x: float, alpha: float, lambda_total: float) -> BoundResult:
    """Median deviation bound ``K1 lambda / (alpha (2 - alpha) x^alpha)``.

    ``K1 = 4^alpha (2 - alpha + e alpha)`` and validity starts at
    ``x^alpha >= K2 lambda / (alpha (2 - alpha))`` with ``K2 = 2 K1``.
    """
    general = theorem1_general(x, alpha, lambda_total, theorem1_default_params(alpha))
    k1 = _k1(alpha)
    constants = dict(general.constants, K1=k1, K2=2.0 * k1)
    return BoundResult(general.x, general.raw_value, general.valid, "theorem1", constants)


def optimize_theorem1(x: float, alpha: float, lambda_total: float, grid: int = 50) -> BoundResult:
    """Smallest valid ``theorem1_general`` value over an (A, delta) grid.

    The default ``A = 2`` instantiation is always a candidate. Returns the
    default result (flagged invalid) when no grid point is valid at ``x``.
    """
    best = default = theorem1_general(x, alpha, lambda_total, theorem1_default_params(alpha))
    for A in np.geomspace(0.05, 50.0, grid):
        for delta in np.linspace(0.0, 0.5, grid + 2)[1:-1]:
            cand = theorem1_general(x, alpha, lambda_total, OptimizerParams(float(A), float(delta)))
            if cand.valid and (not best.valid or cand.raw_value < best.raw_value):
                best = cand
    return best if best.valid else default


def theorem2_threshold(alpha: float, lambda_total: float) -> float:
    """Smallest x with ``x^alpha >= 4 lambda M log M log(1 + 2 M log M)``."""
    M = 1.0 / (2.0 - alpha)
    return (4.0 * lambda_total * M * math.log(M) * math.log1p(2.0 * M * math.log(M))) ** (1.0 / alpha)


def _check_theorem2_alpha(alpha: float, what: str) -> float:
    alpha = _check_alpha(alpha)
    if not alpha > 1.5:
        raise SpecError(f"{what} requires alpha > 3/2, got {alpha!r}")
    return alpha


def theorem2_bound(x: float, alpha: float, lambda_total: float) -> BoundResult:
    """Mean deviation bound ``(1 + 8 e^2) lambda / x^alpha`` for alpha > 3/2."""
    alpha = _check_theorem2_alpha(alpha, "theorem2")
    x = _check_x_pos(x)
    lam = _check_positive("lambda_total", lambda_total)
    M = 1.0 / (2.0 - alpha)
    lhs = 4.0 * lam * M * math.log(M) * math.log1p(2.0 * M * math.log(M))
    return BoundResult(
        x=x,
        raw_value=K3 * lam / x**alpha,
        valid=x**alpha >= lhs,
        regime="theorem2",
        constants={"K3": K3, "M": M, "threshold": lhs ** (1.0 / alpha)},
    )


@dataclass(frozen=True)
class Theorem2Internals:
    R: float
    M: float
    s0_bracket: tuple[float, float]
    x0_bracket: tuple[float, float]
    K_bound: float
    branch_value: float
    branch_power_bound: float
    mean_shift: float
    mean_shift_cap: float
    # solved from the actual truncated moments at this R
    s0: float
    x0: float
    K: float


def theorem2_internals(x: float, alpha: float, lambda_total: float) -> Theorem2Internals:
    """Intermediate quantities of the alpha > 3/2 argument with ``R = x``."""
    alpha = _check_theorem2_alpha(alpha, "theorem2")
    x = _check_x_pos(x)
    lam = _check_positive("lambda_total", lambda_total)
    R = x
    M = 1.0 / (2.0 - alpha)
    logM = math.log(M)
    x0_lo = 2.0 * lam * M * logM / ((3.0 - alpha) * R ** (alpha - 1.0))
    K_bound = math.exp(4.0 * lam * M * logM * math.log1p(2.0 * M * logM) / ((3.0 - alpha) * R**alpha))
    q = 2.0 * lam / ((3.0 - alpha) * x**alpha)
    branch = E * math.exp(1.0 - (1.0 + q) * math.log1p(1.0 / q))
    split = truncate(alpha, R, lam)
    regime = solve_lemma2_regime(R, split.V2, split.W3)
    return Theorem2Internals(
        R=R,
        M=M,
        s0_bracket=(logM / R, 2.0 * logM / R),
        x0_bracket=(x0_lo, 2.0 * x0_lo),
        K_bound=K_bound,
        branch_value=branch,
        branch_power_bound=2.0 * E**2 * lam / x**alpha,
        mean_shift=lam * R ** (1.0 - alpha) / (alpha - 1.0),
        mean_shift_cap=x / (4.0 * math.log(2.0) * math.log1p(4.0 * math.log(2.0))),
        s0=regime.s0,
        x0=regime.x0,
        K=regime.K,
    )


def theorem3_bound(
    x: float,
    alpha: float,
    lambda_total: float,
    lip: Theorem3Lipschitz,
    K: float = 0.5,
) -> BoundResult:
    """Independent-coordinates bound with ``R = K x / (2 alpha c)``.

    With the default ``K = 1/2`` the validity condition is
    ``x^alpha >= 4 (4 alpha)^(alpha-1) c^(alpha-1) lambda``; other ``K`` use
    ``(2 alpha)^(alpha-1) K^(1-alpha) / ((alpha-1)(1-K)) c^(alpha-1) lambda``.
    """
    alpha = _check_theorem2_alpha(alpha, "theorem3")
    x = _check_x_pos(x)
    lam = _check_positive("lambda_total", lambda_total)
    if not (0.0 < K < 1.0):
        raise SpecError("K must lie in (0, 1)")
    a, c = lip.a, lip.c
    raw = ((2.0 * alpha) ** alpha * lam * c**alpha + alpha * (4.0 * alpha) ** (alpha / 2.0) * a**alpha) / (
        alpha * K**alpha * x**alpha
    )
    if K == 0.5:
        lhs = 4.0 * (4.0 * alpha) ** (alpha - 1.0) * c ** (alpha - 1.0) * lam
    else:
        lhs = (2.0 * alpha) ** (alpha - 1.0) / (alpha - 1.0) * K ** (1.0 - alpha) / (1.0 - K) * c ** (alpha - 1.0) * lam
    return BoundResult(
        x=x,
        raw_value=raw,
        valid=x**alpha >= lhs,
        regime="theorem3",
        constants={
            "K": K,
            "K4": (2.0 * alpha) ** alpha / (alpha * K**alpha),
            "K5": (4.0 * alpha) ** (alpha / 2.0) / K**alpha,
            "a2": lip.a2,
            "c": c,
            "threshold": lhs ** (1.0 / alpha),
        },
    )


def compute_a2_for_family(axis: AxisLevySpec, T: float) -> Theorem3Lipschitz:
    """``(a^2, c)`` for ``f_T(x) = d^(-1/2) sum_k min(|x_k|, T)``.

    Coordinate increments are bounded by ``min(|u|, 2T) / sqrt(d)``; the
    integral against ``w |u|^(-1-alpha)`` is done numerically, split at 2T
    after rescaling to the unit cap.
    """
    T = float(T)
    if not T > 0:
        raise SpecError("cap T must be positive")
    alpha, w, d = axis.alpha, axis.per_axis_weight, axis.dim
    cap = 2.0 * T
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    # u = cap * v pulls out cap^(2 - alpha)
    inner, _ = integrate.quad(lambda v: v ** (1.0 - alpha), 0.0, 1.0, **opts)
    outer, _ = integrate.quad(lambda v: v ** (-1.0 - alpha), 1.0, math.inf, **opts)
    # d axes, both signs, (1/sqrt(d))^2 from the normalisation
    a2 = d * 2.0 * w * cap ** (2.0 - alpha) * (inner + outer) / d
    return Theorem3Lipschitz(a2=a2, c=1.0 / math.sqrt(d))


def mean_median_gap(alpha: float, lambda_total: float) -> float:
    """Bound on ``E|f(X) - m(f(X))|`` from integrating the median tail bound."""
    alpha = _check_alpha(alpha)
    if not alpha > 1.0:
        raise SpecError(f"gap bound requires alpha > 1, got {alpha!r}")
    lam = _check_positive("lambda_total", lambda_total)
    k1 = _k1(alpha)
    k2 = 2.0 * k1
    base = alpha * (2.0 - alpha)
    t2 = k2 * lam / base
    return 2.0 * t2 ** (1.0 / alpha) + 2.0 / (alpha - 1.0) * (k1 * lam / base) * t2 ** ((1.0 - alpha) / alpha)


def regvar_bound(x: float, alpha: float, lambda_total: float, sv: SlowlyVaryingSpec) -> BoundResult:
    """Median bound for a Lévy density carrying a slowly varying factor ``L``."""
    L = sv(float(x))
    base = theorem1_bound(x, alpha, lambda_total)
    threshold = base.constants["threshold"]
    return BoundResult(
        x=base.x,
        raw_value=base.raw_value * L,
        valid=base.x / L ** (1.0 / float(alpha)) >= threshold,
        regime="regvar",
        constants=dict(base.constants, L=L),
    )


def tail_constant_A(alpha: float) -> float:
    """``lim x^alpha P(X >= x)`` for the unit-scale symmetric stable law."""
    alpha = _check_alpha(alpha)
    if alpha == 1.0:
        return 1.0 / math.pi
    return (1.0 - alpha) / (2.0 * math.gamma(2.0 - alpha) * math.cos(math.pi * alpha / 2.0))


def sharpness_limit_1d(alpha: float, lambda_plus: float) -> float:
    """``sigma^alpha A_alpha`` with ``sigma^alpha = 2 lambda(1) c_alpha``."""
    lam = _check_positive("lambda_plus", lambda_plus)
    return 2.0 * lam * c_alpha(alpha) * tail_constant_A(alpha)


def araujo_gine_limit(spec: StableSpec) -> float:
    """``c_alpha lambda(S^{d-1}) A_alpha``, the norm-tail constant as stated."""
    return c_alpha(spec.alpha) * spec.lambda_total * tail_constant_A(spec.alpha)


def best_bound(x: float, alpha: float, lambda_total: float) -> BoundResult:
    """The smaller of the valid power-law bounds at ``x``.

    ``theorem1`` centres at a median and ``theorem2`` at the mean, so this is a
    comparison of the two constants rather than of one tail.
    """
    results = [theorem1_bound(x, alpha, lambda_total)]
    if alpha > 1.5:
        results.append(theorem2_bound(x, alpha, lambda_total))
    valid = [r for r in results if r.valid]
    pool = valid or results
    return min(pool, key=lambda r: r.raw_value)
