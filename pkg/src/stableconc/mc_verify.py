"""Monte Carlo checks of the tail bounds and of the tail asymptotics.

Tail probabilities get exact Clopper-Pearson intervals. The centre (median
or mean) is itself estimated, so the interval used for a verdict is widened
by evaluating the exceedance count at both ends of the centre's interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .levy_core import AxisLevySpec, SpecError, SpectralMeasure, StableSpec
from .sampler import RngStream, sample_spec, sas_scale
from .stable_bounds import (
    BoundResult,
    araujo_gine_limit,
    compute_a2_for_family,
    sharpness_limit_1d,
    tail_constant_A,
    theorem1_bound,
    theorem2_bound,
    theorem3_bound,
)

__all__ = [
    "LEVEL",
    "clopper_pearson",
    "CenterEstimate",
    "estimate_median",
    "estimate_mean",
    "LipschitzFunctional",
    "TailRow",
    "TailReport",
    "verify_bound",
    "SharpnessReport",
    "sharpness_report",
    "AraujoGineReport",
    "araujo_gine_report",
]

LEVEL = 0.99
THEOREMS = ("theorem1", "theorem2", "theorem3")


def clopper_pearson(k, n: int, level: float = LEVEL):
    """Exact two-sided binomial interval for ``k`` successes out of ``n``."""
    k = np.asarray(k)
    a = 1.0 - level
    with np.errstate(invalid="ignore"):
        lo = np.where(k > 0, stats.beta.ppf(a / 2, np.maximum(k, 1), n - k + 1), 0.0)
        hi = np.where(k < n, stats.beta.ppf(1 - a / 2, k + 1, np.maximum(n - k, 1)), 1.0)
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


@dataclass(frozen=True)
class CenterEstimate:
    kind: str
    value: float
    lo: float
    hi: float

    @property
    def half_width(self) -> float:
        return 0.5 * (self.hi - self.lo)


def estimate_median(values, level: float = LEVEL) -> CenterEstimate:
    """Sample median with a distribution-free order-statistic interval.

    With ``B ~ Binomial(n, 1/2)`` and ``k`` its ``(1-level)/2`` quantile,
    ``[X_(k), X_(n-k+1)]`` covers any median with probability >= level.
    """
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n < 100:
        raise SpecError(f"median interval needs n >= 100, got {n}")
    k = int(stats.binom.ppf((1.0 - level) / 2.0, n, 0.5))
    k = max(k, 1)
    lo_i, hi_i = k - 1, n - k
    mid = [(n - 1) // 2, n // 2]
    part = np.partition(v, sorted({lo_i, hi_i, *mid}))
    median = float(0.5 * (part[mid[0]] + part[mid[1]]))
    return CenterEstimate("median", median, float(part[lo_i]), float(part[hi_i]))


def estimate_mean(values, level: float = LEVEL) -> CenterEstimate:
    """Sample mean with a normal-approximation interval.

    For heavy tails the standard error is only indicative; the interval is
    used to widen verdicts, not to certify the mean.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2:
        raise SpecError("mean estimate needs at least two values")
    m = float(v.mean())
    h = float(stats.norm.ppf(0.5 + level / 2.0) * v.std(ddof=1) / math.sqrt(v.size))
    return CenterEstimate("mean", m, m - h, m + h)


@dataclass(frozen=True)
class LipschitzFunctional:
    """A 1-Lipschitz functional ``f: R^d -> R``.

    kinds: ``euclidean_norm``, ``linear`` (unit ``u``), ``dist_to_halfspace``
    (distance to ``{<u, x> <= t}``), ``coord_min``, ``capped_l1_family``
    (``d^(-1/2) sum_k min(|x_k|, T)``).
    """

    kind: str
    u: tuple[float, ...] = ()
    t: float = 0.0
    cap: float = 1.0
    lip_constant: float = field(default=1.0, init=False)

    def __post_init__(self) -> None:
        if self.kind not in ("euclidean_norm", "linear", "dist_to_halfspace", "coord_min", "capped_l1_family"):
            raise SpecError(f"unknown functional {self.kind!r}")
        if self.kind in ("linear", "dist_to_halfspace"):
            if not self.u or abs(math.hypot(*self.u) - 1.0) > 1e-12:
                raise SpecError(f"{self.kind} needs a unit vector u")
        if self.kind == "capped_l1_family" and not self.cap > 0:
            raise SpecError("cap T must be positive")

    @classmethod
    def identity(cls) -> "LipschitzFunctional":
        return cls("linear", u=(1.0,))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "euclidean_norm":
            return np.linalg.norm(x, axis=1)
        if self.kind == "coord_min":
            return x.min(axis=1)
        if self.kind == "capped_l1_family":
            return np.minimum(np.abs(x), self.cap).sum(axis=1) / math.sqrt(x.shape[1])
        u = np.asarray(self.u)
        if u.size != x.shape[1]:
            raise SpecError("functional direction does not match the dimension")
        proj = x @ u
        if self.kind == "linear":
            return proj
        return np.maximum(proj - self.t, 0.0)

    def describe(self) -> str:
        if self.kind in ("linear", "dist_to_halfspace"):
            extra = f"u={list(self.u)}" + (f",t={self.t}" if self.kind == "dist_to_halfspace" else "")
            return f"{self.kind}({extra})"
        if self.kind == "capped_l1_family":
            return f"capped_l1_family(T={self.cap})"
        return self.kind


VERDICTS = ("DOMINATED", "VIOLATED", "INCONCLUSIVE", "OUT_OF_VALIDITY")


@dataclass(frozen=True)
class TailRow:
    x: float
    count: int
    p_hat: float
    p_lo: float
    p_hi: float
    bound: float
    valid: bool
    verdict: str


@dataclass(frozen=True)
class TailReport:
    theorem: str
    functional: str
    n: int
    center: CenterEstimate
    rows: tuple[TailRow, ...]
    bounds: tuple[BoundResult, ...]

    @property
    def x_grid(self) -> list[float]:
        return [r.x for r in self.rows]

    @property
    def any_violated(self) -> bool:
        return any(r.verdict == "VIOLATED" for r in self.rows)

    def verdict_counts(self) -> dict[str, int]:
        return {v: sum(r.verdict == v for r in self.rows) for v in VERDICTS}


def _verdict(p_lo: float, p_hi: float, bound: float, valid: bool) -> str:
    if not valid:
        return "OUT_OF_VALIDITY"
    if p_lo > bound:
        return "VIOLATED"
    if p_hi <= bound:
        return "DOMINATED"
    return "INCONCLUSIVE"


def _count_at_least(sorted_vals: np.ndarray, thresholds) -> np.ndarray:
    n = sorted_vals.size
    return n - np.searchsorted(sorted_vals, np.asarray(thresholds, dtype=float), side="left")


def _theorem_bounds(spec: StableSpec, functional: LipschitzFunctional, theorem: str, xs) -> list[BoundResult]:
    lam = spec.lambda_total
    if theorem == "theorem1":
        return [theorem1_bound(x, spec.alpha, lam) for x in xs]
    if theorem == "theorem2":
        return [theorem2_bound(x, spec.alpha, lam) for x in xs]
    if theorem == "theorem3":
        if functional.kind != "capped_l1_family":
            raise SpecError("theorem3 needs the capped_l1_family functional (it carries a and c)")
        lip = compute_a2_for_family(AxisLevySpec.from_stable_spec(spec), functional.cap)
        return [theorem3_bound(x, spec.alpha, lam, lip) for x in xs]
    raise SpecError(f"unknown theorem selector {theorem!r}")


def verify_bound(
    spec: StableSpec,
    functional: LipschitzFunctional,
    theorem: str,
    x_grid,
    n: int,
    stream: RngStream,
    workers: int | None = None,
    generator: str | None = None,
    bound_scale: float = 1.0,
) -> TailReport:
    """Compare empirical tails of ``f(X) - centre`` with a theorem's bound.

    ``theorem1`` is centred at the median, ``theorem2`` and ``theorem3`` at the mean.
    ``bound_scale`` multiplies every bound; values other than 1 exist only to
    demonstrate that the check can fail.
    """
    xs = sorted(float(x) for x in x_grid)
    if not xs or xs[0] <= 0:
        raise SpecError("x grid must be nonempty and positive")
    bounds = _theorem_bounds(spec, functional, theorem, xs)
    batch = sample_spec(spec, n, stream, generator=generator, workers=workers)
    values = np.sort(functional(batch.data))
    center = estimate_median(values) if theorem == "theorem1" else estimate_mean(values)

    xs_arr = np.asarray(xs)
    k_hat = _count_at_least(values, center.value + xs_arr)
    k_hi = _count_at_least(values, center.lo + xs_arr)
    k_lo = _count_at_least(values, center.hi + xs_arr)
    _, p_hi = clopper_pearson(k_hi, values.size)
    p_lo, _ = clopper_pearson(k_lo, values.size)
    rows = []
    for i, b in enumerate(bounds):
        bound = bound_scale * b.value
        rows.append(
            TailRow(
                x=xs[i],
                count=int(k_hat[i]),
                p_hat=float(k_hat[i]) / values.size,
                p_lo=float(p_lo[i]),
                p_hi=float(p_hi[i]),
                bound=bound,
                valid=b.valid,
                verdict=_verdict(float(p_lo[i]), float(p_hi[i]), bound, b.valid),
            )
        )
    return TailReport(theorem, functional.describe(), values.size, center, tuple(rows), tuple(bounds))


@dataclass(frozen=True)
class SharpnessRow:
    x: float
    p_hat: float
    scaled: float
    scaled_lo: float
    scaled_hi: float
    limit: float
    ratio: float


@dataclass(frozen=True)
class SharpnessReport:
    alpha: float
    lambda_plus: float
    n: int
    limit: float
    rows: tuple[SharpnessRow, ...]
    band: tuple[float, float] = (0.8, 1.2)

    @property
    def passed(self) -> bool:
        """Ratio at the largest grid point lies in the band."""
        lo, hi = self.band
        return lo <= self.rows[-1].ratio <= hi


def _scaled_tail_rows(values_sorted: np.ndarray, xs, alpha: float, limit: float) -> list[SharpnessRow]:
    n = values_sorted.size
    k = _count_at_least(values_sorted, xs)
    lo, hi = clopper_pearson(k, n)
    rows = []
    for x, ki, li, hi_ in zip(xs, k, lo, hi):
        scale = x**alpha
        p = ki / n
        rows.append(
            SharpnessRow(float(x), float(p), float(scale * p), float(scale * li), float(scale * hi_), limit, float(scale * p / limit))
        )
    return rows


def sharpness_report(
    alpha: float,
    lambda_plus: float,
    x_grid,
    n: int,
    stream: RngStream,
    workers: int | None = None,
) -> SharpnessReport:
    """``x^alpha P(X >= x)`` for the symmetric 1-d law with ``lambda(1) = lambda(-1) = lambda_plus``."""
    spec = StableSpec(alpha, 1, SpectralMeasure.symmetric_pairs([(1.0,)], [lambda_plus]))
    xs = sorted(float(x) for x in x_grid)
    batch = sample_spec(spec, n, stream, generator="sas1d", workers=workers)
    values = np.sort(batch.data[:, 0])
    limit = sharpness_limit_1d(alpha, lambda_plus)
    return SharpnessReport(alpha, lambda_plus, values.size, limit, tuple(_scaled_tail_rows(values, xs, alpha, limit)))


@dataclass(frozen=True)
class AraujoGineRow:
    x: float
    p_hat: float
    constant: float
    constant_lo: float
    constant_hi: float


@dataclass(frozen=True)
class AraujoGineReport:
    spec_digest: str
    n: int
    candidates: dict[str, float]
    rows: tuple[AraujoGineRow, ...]
    consistent: dict[str, bool]
    tolerance: float

    @property
    def discrepancy_flagged(self) -> bool:
        return not self.consistent.get("stated", True)


def araujo_gine_report(
    spec: StableSpec,
    x_grid,
    n: int,
    stream: RngStream,
    workers: int | None = None,
    tolerance: float = 0.05,
) -> AraujoGineReport:
    """Empirical ``x^alpha P(|X| >= x)`` against the candidate limit constants.

    ``stated`` is ``c_alpha lambda(S) A_alpha``; ``twice_stated`` is
    double that, which for d = 1 equals the two-sided limit ``2 sigma^alpha A_alpha``
    implied by the one-sided sharpness constant. A candidate is consistent
    when it lies in the 99% interval at the largest x, widened by
    ``tolerance`` (relative) for pre-asymptotic bias. Nothing is corrected.
    """
    xs = sorted(float(x) for x in x_grid)
    batch = sample_spec(spec, n, stream, workers=workers)
    norms = np.sort(np.linalg.norm(batch.data - np.asarray(spec.shift), axis=1))
    stated = araujo_gine_limit(spec)
    candidates = {"stated": stated, "twice_stated": 2.0 * stated}
    if spec.dim == 1:
        sigma_alpha = sas_scale(spec) ** spec.alpha
        candidates["two_sided_sharpness"] = 2.0 * sigma_alpha * tail_constant_A(spec.alpha)
    scaled = _scaled_tail_rows(norms, xs, spec.alpha, stated)
    rows = tuple(AraujoGineRow(r.x, r.p_hat, r.scaled, r.scaled_lo, r.scaled_hi) for r in scaled)
    last = rows[-1]
    lo, hi = last.constant_lo * (1.0 - tolerance), last.constant_hi * (1.0 + tolerance)
    consistent = {name: bool(lo <= v <= hi) for name, v in candidates.items()}
    return AraujoGineReport(spec.digest(), norms.size, candidates, rows, consistent, tolerance)
