"""Deviation kernels for infinitely divisible vectors with bounded jumps.

Everything here bounds ``P(f(X) - center >= x)`` for 1-Lipschitz ``f`` when
the Lévy measure lives in the ball of radius ``R``. The stable bounds in
:mod:`stableconc.stable_bounds` are assembled from these pieces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from ._numerics import adaptive_gauss_legendre_many, bisect_increasing, gauss_legendre, newton_bracketed_increasing
from .levy_core import SpecError, TruncationSplit, _check_alpha, _check_positive

__all__ = [
    "Lemma2Inapplicable",
    "Lemma2Regime",
    "GenericIDSpec",
    "OptimizerParams",
    "MedianShift",
    "lemma1_median_bound",
    "lemma1_mean_bound",
    "solve_lemma2_regime",
    "lemma2_bound",
    "h_function",
    "h_inverse",
    "inverse_h_integral",
    "generic_id_mean_bound",
    "H_R",
    "I_R",
    "tail_mass_radius",
    "median_shift_radius",
    "median_shift_bound",
]


class Lemma2Inapplicable(SpecError):
    pass


def _out(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def _check_x(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise SpecError("x must be nonnegative")
    return x


def _bennett(x, R, V2):
    """``exp{x/R - (x/R + V2/R^2) log(1 + R x / V2)}``, vectorized."""
    x = _check_x(x)
    R = _check_positive("R", R)
    V2 = _check_positive("V2", V2)
    u = x / R
    log_b = u - (u + V2 / R**2) * np.log1p(R * x / V2)
    return _out(np.minimum(1.0, np.exp(log_b)))


def lemma1_mean_bound(x, R: float, V2: float):
    """Deviation from the mean: ``exp{x/R - (x/R + V2/R^2) log(1 + Rx/V2)}``."""
    return _bennett(x, R, V2)


def lemma1_median_bound(x, R: float, V2: float):
    """Deviation from a median; the mean bound evaluated at ``x/2``."""
    return _bennett(0.5 * np.asarray(x, dtype=float), R, V2)


@dataclass(frozen=True)
class Lemma2Regime:
    """Crossover between the Gaussian and Poisson branches of :func:`lemma2_bound`."""

    R: float
    V2: float
    W3: float
    M: float
    s0: float
    x0: float
    K: float

    @property
    def gauss_variance(self) -> float:
        return self.V2 - self.W3 / self.R


def solve_lemma2_regime(R: float, V2: float, W3: float) -> Lemma2Regime:
    R = _check_positive("R", R)
    V2 = _check_positive("V2", V2)
    W3 = _check_positive("W3", W3)
    M = R * V2 / W3 - 1.0
    if not M > 1.0:
        raise Lemma2Inapplicable(
            f"lemma2 inapplicable: need V2/W3 > 2/R (R*V2/W3 - 1 = {M:.6g} must exceed 1)"
        )
    # (e^z - 1)/z is increasing in z = s R, lies in [1 + z/2, e^z], so log M <= z0 <= 2(M - 1)
    z0 = optimize.brentq(
        lambda z: math.expm1(z) / z - M, math.log(M), 2.0 * (M - 1.0), xtol=1e-300, rtol=4 * np.finfo(float).eps
    )
    s0 = z0 / R
    c = V2 - W3 / R
    x0 = 2.0 * c * s0
    K = math.exp(-(x0**2) / (4.0 * c)) * math.exp(
        -x0 / R + (x0 / R + 2.0 * W3 / R**3) * math.log1p(R**2 * x0 / (2.0 * W3))
    )
    return Lemma2Regime(R=R, V2=V2, W3=W3, M=M, s0=s0, x0=x0, K=K)


def _lemma2_branches(x, regime: Lemma2Regime):
    R, W3 = regime.R, regime.W3
    gauss = np.exp(-(x**2) / (4.0 * regime.gauss_variance))
    poisson = regime.K * np.exp(x / R - (x / R + 2.0 * W3 / R**3) * np.log1p(R**2 * x / (2.0 * W3)))
    return gauss, poisson


def lemma2_bound(x, R: float, V2: float, W3: float, regime: Lemma2Regime | None = None):
    """Two-regime deviation-from-mean bound, clamped to 1."""
    if regime is None:
        regime = solve_lemma2_regime(R, V2, W3)
    elif not (
        math.isclose(regime.R, R) and math.isclose(regime.V2, V2) and math.isclose(regime.W3, W3)
    ):
        raise SpecError("regime was solved for different (R, V2, W3)")
    x = _check_x(x)
    gauss, poisson = _lemma2_branches(x, regime)
    return _out(np.minimum(1.0, np.where(x <= regime.x0, gauss, poisson)))


@dataclass(frozen=True)
class GenericIDSpec:
    """Radial description of a Lévy measure supported in a ball.

    Either a truncated stable measure (density ``lambda_total * r^(-1-alpha)``
    on ``(0, R]``) or finitely many radial atoms ``(radius, mass)``.
    """

    kind: str
    R: float
    alpha: float | None = None
    lambda_total: float | None = None
    radii: tuple[float, ...] = ()
    masses: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "truncated_stable":
            _check_alpha(self.alpha)
            _check_positive("lambda_total", self.lambda_total)
            _check_positive("R", self.R)
        elif self.kind == "atoms":
            if not self.radii or len(self.radii) != len(self.masses):
                raise SpecError("atoms need matching nonempty radii and masses")
            for r, m in zip(self.radii, self.masses):
                _check_positive("atom radius", r)
                _check_positive("atom mass", m)
            if not math.isclose(self.R, max(self.radii)):
                raise SpecError("R must be the largest atom radius")
        else:
            raise SpecError(f"unknown GenericIDSpec kind {self.kind!r}")

    @classmethod
    def truncated_stable(cls, alpha: float, lambda_total: float, R: float) -> "GenericIDSpec":
        return cls("truncated_stable", float(R), alpha=float(alpha), lambda_total=float(lambda_total))

    @classmethod
    def atoms(cls, radii, masses) -> "GenericIDSpec":
        radii = tuple(float(r) for r in radii)
        return cls("atoms", max(radii), radii=radii, masses=tuple(float(m) for m in masses))

    # bounded support => E exp(t|X|) < inf for every t
    finite_exponential_moments = True

    def moment(self, p: float) -> float:
        if self.kind == "atoms":
            return math.fsum(m * r**p for r, m in zip(self.radii, self.masses))
        return self.lambda_total * self.R ** (p - self.alpha) / (p - self.alpha)

    @property
    def V2(self) -> float:
        return self.moment(2.0)

    @property
    def W3(self) -> float:
        return self.moment(3.0)


_H_ORDER = 24
_JACOBI_CACHE: dict[float, tuple[np.ndarray, np.ndarray]] = {}


def _jacobi_unit(alpha: float):
    """Nodes/weights for ``int_0^1 g(u) u^(1-alpha) du``."""
    if alpha not in _JACOBI_CACHE:
        x, w = special.roots_jacobi(_H_ORDER, 0.0, 1.0 - alpha)
        _JACOBI_CACHE[alpha] = (0.5 * (x + 1.0), w * 2.0 ** (alpha - 2.0))
    return _JACOBI_CACHE[alpha]


def _truncated_stable_h(s: np.ndarray, alpha: float, lam: float, R: float, grad: bool = False):
    # h(s) = lam R^(1-alpha) int_0^1 [expm1(z t)/t] t^(1-alpha) dt with z = s R,
    # h'(s) = lam R^(2-alpha) int_0^1 e^(z t) t^(1-alpha) dt.
    # Panels keep z * width <= 2 so the polynomial rules are exact to rounding.
    z = s * R
    n_panels = max(1, int(math.ceil(float(np.max(z, initial=0.0)) / 2.0)))
    width = 1.0 / n_panels
    u, wj = _jacobi_unit(alpha)
    t0 = width * u
    zt = np.multiply.outer(z, t0)
    first = width ** (2.0 - alpha) * wj
    total = (np.expm1(zt) / t0) @ first
    slope = np.exp(zt) @ (first * width) if grad else None
    if n_panels > 1:
        g, wg = gauss_legendre(_H_ORDER)
        left = np.arange(1, n_panels) * width
        t = (left[:, None] + 0.5 * width * (g[None, :] + 1.0)).ravel()
        wt = np.tile(0.5 * width * wg, n_panels - 1) * t ** (-alpha)
        zt = np.multiply.outer(z, t)
        total = total + np.expm1(zt) @ wt
        if grad:
            slope = slope + np.exp(zt) @ (wt * t)
    value = lam * R ** (1.0 - alpha) * total
    if grad:
        return value, lam * R ** (2.0 - alpha) * slope
    return value


def h_function(spec: GenericIDSpec, s):
    """``h(s) = int |u| (e^{s|u|} - 1) nu(du)``; vectorized in ``s``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise SpecError("s must be nonnegative")
    if spec.kind == "atoms":
        r = np.asarray(spec.radii)
        m = np.asarray(spec.masses)
        val = np.expm1(np.multiply.outer(s, r)) @ (m * r)
    else:
        val = _truncated_stable_h(s.ravel(), spec.alpha, spec.lambda_total, spec.R).reshape(s.shape)
    return _out(val)


def _h_and_grad(spec: GenericIDSpec, s: np.ndarray):
    if spec.kind == "atoms":
        r = np.asarray(spec.radii)
        m = np.asarray(spec.masses)
        sr = np.multiply.outer(s, r)
        return np.expm1(sr) @ (m * r), np.exp(sr) @ (m * r * r)
    return _truncated_stable_h(s, spec.alpha, spec.lambda_total, spec.R, grad=True)


def h_inverse(spec: GenericIDSpec, t):
    """Inverse of :func:`h_function` by safeguarded Newton.

    ``V2 s <= h(s) <= (V2/R)(e^{sR} - 1)`` gives the starting bracket.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise SpecError("t must be nonnegative")
    R, V2 = spec.R, spec.V2
    flat = t.ravel()
    lo = np.log1p(R * flat / V2) / R * (1.0 - 1e-12)
    hi = np.maximum(flat / V2, lo) * (1.0 + 1e-12)
    out = np.zeros_like(flat)
    pos = flat > 0
    if pos.any():
        out[pos] = newton_bracketed_increasing(lambda s: _h_and_grad(spec, s), flat[pos], lo[pos], hi[pos])
    return _out(out.reshape(t.shape))


def inverse_h_integral(spec: GenericIDSpec, x, rtol: float = 1e-9):
    """``int_0^x h^{-1}(t) dt`` for each entry of ``x``.

    The integral is split at the sorted grid points and accumulated.
    """
    x = _check_x(x)
    flat = x.ravel()
    order = np.argsort(flat)
    edges = np.concatenate([[0.0], flat[order]])
    pieces = adaptive_gauss_legendre_many(
        lambda t: h_inverse(spec, t), edges[:-1], edges[1:], rtol=rtol
    )
    out = np.empty_like(flat)
    out[order] = np.cumsum(pieces)
    return _out(out.reshape(x.shape))


def generic_id_mean_bound(spec: GenericIDSpec, x, rtol: float = 1e-9):
    """``exp{-int_0^x h^{-1}(t) dt}``, the exponential-moment deviation bound."""
    return _out(np.minimum(1.0, np.exp(-np.asarray(inverse_h_integral(spec, x, rtol=rtol)))))


def H_R(x, R: float, C1: float, alpha: float):
    """Median deviation bound for ``Y(R)`` of a stable law (``V2 = C1 R^(2-alpha)``)."""
    x = _check_x(x)
    R = _check_positive("R", R)
    C1 = _check_positive("C1", C1)
    alpha = _check_alpha(alpha)
    u = x / (2.0 * R)
    log_h = u - (u + C1 / R**alpha) * np.log1p(R**alpha * x / (2.0 * R * C1))
    return _out(np.minimum(1.0, np.exp(log_h)))


def I_R(y, R: float, C1: float, alpha: float):
    """``sup{z >= 0 : H_R(z) >= y}``."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise SpecError("I_R needs y > 0")
    inside = y < 1.0
    out = np.zeros_like(y)
    if np.any(inside):
        # -H_R is increasing; solve -H_R(z) = -y
        root = bisect_increasing(
            lambda z: -np.asarray(H_R(z, R, C1, alpha)), -y[inside], lo=0.0, hi=R, xtol=1e-12
        )
        out[inside] = root
    return _out(out)


@dataclass(frozen=True)
class OptimizerParams:
    """Free parameters ``(A, delta)`` of the median-centred power-law bound."""

    A: float
    delta: float

    def __post_init__(self) -> None:
        if not (self.A > 0 and math.isfinite(self.A)):
            raise SpecError("A must be positive")
        if not (0.0 < self.delta < 0.5):
            raise SpecError("delta must lie in (0, 1/2)")


def tail_mass_radius(alpha: float, lambda_total: float, delta: float) -> float:
    """Smallest ``R`` with tail mass ``C2 R^-alpha <= delta``."""
    return (lambda_total / alpha / delta) ** (1.0 / alpha)


def median_shift_radius(alpha: float, lambda_total: float, params: OptimizerParams) -> float:
    """Smallest ``R`` for which the crude bound gives ``H_R(A R) <= 1/2 - delta``."""
    A, delta = params.A, params.delta
    C1 = lambda_total / (2.0 - alpha)
    return ((2.0 * C1 / A) ** (A / 2.0) * math.exp(A / 2.0) / (0.5 - delta)) ** (2.0 / (alpha * A))


@dataclass(frozen=True)
class MedianShift:
    value: float
    A_R: float
    radius_condition_holds: bool

    @property
    def usable(self) -> bool:
        return self.radius_condition_holds and math.isfinite(self.value)


def median_shift_bound(split: TruncationSplit, alpha: float, params: OptimizerParams) -> MedianShift:
    """Bound on ``|m(f(Y(R))) - m(f(X))|`` via ``I_R(1/2 - delta)``."""
    if split.tail_mass > params.delta:
        raise SpecError(
            f"truncation too small for delta: tail mass {split.tail_mass:.6g} > delta {params.delta:.6g}"
        )
    y = 0.5 - params.delta
    AR = params.A * split.R
    holds = bool(H_R(AR, split.R, split.C1, alpha) <= y)
    try:
        value = float(I_R(y, split.R, split.C1, alpha))
    except (RuntimeError, FloatingPointError):
        value = math.inf
    return MedianShift(value=value, A_R=AR, radius_condition_holds=holds)
