"""Stable laws, their Lévy measures and the closed-form constants built from them.

A stable law here is described by its index ``alpha``, the dimension, a
spectral (spherical) measure ``lambda`` and a shift. Every bound in this
package only ever looks at the total mass ``lambda(S^{d-1})``; the atoms
matter for sampling.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate

__all__ = [
    "SpecError",
    "SpectralMeasure",
    "StableSpec",
    "AxisLevySpec",
    "TruncationSplit",
    "c_alpha",
    "c_alpha_d",
    "truncate",
    "prob_Z_nonzero",
    "radial_moment_quadrature",
]

_UNIT_TOL = 1e-12


class SpecError(ValueError):
    """Raised for parameters outside the domain of a law or formula."""


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 2.0):
        raise SpecError(f"alpha must lie in (0, 2), got {alpha!r}")
    return alpha


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0.0) or not math.isfinite(value):
        raise SpecError(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class SpectralMeasure:
    """Finite measure on the unit sphere.

    ``kind`` is ``"uniform"`` (uniform with total ``mass``) or ``"atoms"``
    (finitely many weighted unit directions).
    """

    kind: str
    mass: float | None = None
    directions: tuple[tuple[float, ...], ...] = ()
    weights: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "uniform":
            _check_positive("spectral mass", self.mass)
            if self.directions or self.weights:
                raise SpecError("uniform spectral measure takes no atoms")
        elif self.kind == "atoms":
            if not self.directions or len(self.directions) != len(self.weights):
                raise SpecError("atoms need matching, nonempty directions and weights")
            dim = len(self.directions[0])
            for xi, w in zip(self.directions, self.weights):
                if len(xi) != dim:
                    raise SpecError("all atom directions must share one dimension")
                if abs(math.sqrt(sum(c * c for c in xi)) - 1.0) > _UNIT_TOL:
                    raise SpecError(f"atom direction {xi!r} is not a unit vector")
                _check_positive("atom weight", w)
        else:
            raise SpecError(f"unknown spectral kind {self.kind!r}")

    @classmethod
    def uniform(cls, mass: float) -> "SpectralMeasure":
        return cls(kind="uniform", mass=float(mass))

    @classmethod
    def atoms(cls, directions, weights) -> "SpectralMeasure":
        dirs = tuple(tuple(float(c) for c in xi) for xi in directions)
        return cls(kind="atoms", directions=dirs, weights=tuple(float(w) for w in weights))

    @classmethod
    def symmetric_pairs(cls, directions, weights) -> "SpectralMeasure":
        """Atoms at every ``+xi`` and ``-xi`` with the same weight."""
        dirs, ws = [], []
        for xi, w in zip(directions, weights):
            xi = tuple(float(c) for c in xi)
            dirs += [xi, tuple(-c for c in xi)]
            ws += [float(w), float(w)]
        return cls.atoms(dirs, ws)

    def total_mass(self) -> float:
        if self.kind == "uniform":
            return float(self.mass)
        return float(math.fsum(self.weights))

    @property
    def dim(self) -> int | None:
        return len(self.directions[0]) if self.kind == "atoms" else None

    @property
    def symmetric(self) -> bool:
        if self.kind == "uniform":
            return True
        return self.symmetric_pair_list() is not None

    def symmetric_pair_list(self) -> list[tuple[np.ndarray, float]] | None:
        """Group atoms into ``(xi, w)`` pairs standing for ``w`` at both ``+-xi``.

        Returns ``None`` when the atoms are not symmetric.
        """
        remaining = [(np.asarray(xi), w) for xi, w in zip(self.directions, self.weights)]
        pairs = []
        while remaining:
            xi, w = remaining.pop(0)
            for j, (eta, v) in enumerate(remaining):
                if np.allclose(eta, -xi, atol=1e-12) and math.isclose(v, w, rel_tol=1e-12):
                    remaining.pop(j)
                    pairs.append((xi, w))
                    break
            else:
                return None
        return pairs

    def to_json(self) -> dict[str, Any]:
        if self.kind == "uniform":
            return {"kind": "uniform", "mass": self.mass}
        return {
            "kind": "atoms",
            "atoms": [{"xi": list(xi), "w": w} for xi, w in zip(self.directions, self.weights)],
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "SpectralMeasure":
        if not isinstance(doc, dict):
            raise SpecError("spectral must be a JSON object")
        kind = doc.get("kind")
        if kind == "uniform":
            _reject_unknown(doc, {"kind", "mass"}, "spectral")
            if "mass" not in doc:
                raise SpecError("uniform spectral measure needs 'mass'")
            return cls.uniform(doc["mass"])
        if kind == "atoms":
            _reject_unknown(doc, {"kind", "atoms"}, "spectral")
            atoms = doc.get("atoms")
            if not isinstance(atoms, list) or not atoms:
                raise SpecError("'atoms' must be a nonempty list")
            for atom in atoms:
                if not isinstance(atom, dict):
                    raise SpecError("each atom must be an object {xi, w}")
                _reject_unknown(atom, {"xi", "w"}, "atom")
                if "xi" not in atom or "w" not in atom:
                    raise SpecError("each atom needs 'xi' and 'w'")
            return cls.atoms([a["xi"] for a in atoms], [a["w"] for a in atoms])
        raise SpecError(f"unknown spectral kind {kind!r}")


def _reject_unknown(doc: dict, allowed: set[str], where: str) -> None:
    extra = set(doc) - allowed
    if extra:
        raise SpecError(f"unknown keys in {where}: {sorted(extra)}")


@dataclass(frozen=True)
class StableSpec:
    """An alpha-stable law on R^d without Gaussian part."""

    alpha: float
    dim: int
    spectral: SpectralMeasure
    shift: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        if isinstance(self.dim, bool) or int(self.dim) != self.dim or self.dim < 1:
            raise SpecError(f"dim must be an integer >= 1, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        if self.spectral.dim is not None and self.spectral.dim != self.dim:
            raise SpecError("atom directions do not match dim")
        shift = tuple(float(b) for b in self.shift) or (0.0,) * self.dim
        if len(shift) != self.dim:
            raise SpecError("shift length does not match dim")
        object.__setattr__(self, "shift", shift)

    @property
    def lambda_total(self) -> float:
        return self.spectral.total_mass()

    def to_json(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "dim": self.dim,
            "spectral": self.spectral.to_json(),
            "shift": list(self.shift),
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "StableSpec":
        if not isinstance(doc, dict):
            raise SpecError("spec must be a JSON object")
        _reject_unknown(doc, {"alpha", "dim", "spectral", "shift"}, "spec")
        for key in ("alpha", "dim", "spectral"):
            if key not in doc:
                raise SpecError(f"spec is missing {key!r}")
        return cls(
            alpha=doc["alpha"],
            dim=doc["dim"],
            spectral=SpectralMeasure.from_json(doc["spectral"]),
            shift=tuple(doc.get("shift", ())),
        )

    @classmethod
    def loads(cls, text: str) -> "StableSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"malformed spec JSON: {exc}") from exc
        return cls.from_json(doc)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    @classmethod
    def cauchy_1d(cls) -> "StableSpec":
        """The symmetric Cauchy law with ``lambda(+-1) = 1/2`` (scale pi/2)."""
        return cls(1.0, 1, SpectralMeasure.symmetric_pairs([(1.0,)], [0.5]))


@dataclass(frozen=True)
class AxisLevySpec:
    """Lévy measure concentrated on the coordinate axes (independent coordinates).

    Each coordinate carries ``w |u|^(-1-alpha) du`` on both half-lines, i.e.
    the spectral measure has weight ``w`` at every ``+-e_k``.
    """

    alpha: float
    dim: int
    per_axis_weight: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        if self.dim < 1:
            raise SpecError("dim must be >= 1")
        _check_positive("per_axis_weight", self.per_axis_weight)

    @property
    def lambda_total(self) -> float:
        return 2.0 * self.dim * self.per_axis_weight

    def spectral(self) -> SpectralMeasure:
        eye = np.eye(self.dim)
        return SpectralMeasure.symmetric_pairs(eye, [self.per_axis_weight] * self.dim)

    def stable_spec(self) -> StableSpec:
        return StableSpec(self.alpha, self.dim, self.spectral())

    @classmethod
    def from_stable_spec(cls, spec: StableSpec) -> "AxisLevySpec":
        pairs = spec.spectral.symmetric_pair_list() if spec.spectral.kind == "atoms" else None
        if pairs is None or len(pairs) != spec.dim:
            raise SpecError("spec is not axes-concentrated with one +-e_k pair per axis")
        seen = set()
        for xi, _ in pairs:
            k = int(np.argmax(np.abs(xi)))
            if not np.allclose(np.abs(xi), np.eye(spec.dim)[k], atol=1e-12):
                raise SpecError("spectral atoms are not on the coordinate axes")
            seen.add(k)
        weights = {w for _, w in pairs}
        if len(seen) != spec.dim or len(weights) != 1:
            raise SpecError("axes-concentrated spec needs one equal-weight pair per axis")
        return cls(spec.alpha, spec.dim, weights.pop())


def c_alpha(alpha: float) -> float:
    """Constant in ``phi(u) = exp(-c_alpha * int |<u, xi>|^alpha lambda(d xi))``."""
    alpha = _check_alpha(alpha)
    return (
        math.sqrt(math.pi) * math.gamma((2.0 - alpha) / 2.0)
        / (alpha * 2.0**alpha * math.gamma((1.0 + alpha) / 2.0))
    )


def c_alpha_d(alpha: float, dim: int) -> float:
    """``c_alpha * E|<e, xi>|^alpha`` for xi uniform on S^{d-1}.

    A rotationally invariant law with uniform spectral mass ``m`` has
    characteristic function ``exp(-m * c_alpha_d * |u|^alpha)``.
    """
    alpha = _check_alpha(alpha)
    if int(dim) != dim or dim < 1:
        raise SpecError(f"dim must be an integer >= 1, got {dim!r}")
    return (
        math.gamma(dim / 2.0) * math.gamma((2.0 - alpha) / 2.0)
        / (alpha * 2.0**alpha * math.gamma((dim + alpha) / 2.0))
    )


@dataclass(frozen=True)
class TruncationSplit:
    """Constants of the split ``X = Y(R) + Z(R)`` at jump radius ``R``."""

    R: float
    alpha: float
    lambda_total: float
    C1: float
    C2: float
    V2: float
    W3: float
    tail_mass: float


def truncate(spec: StableSpec | float, R: float, lambda_total: float | None = None) -> TruncationSplit:
    """Split at radius ``R``; accepts a spec or ``(alpha, R, lambda_total)``."""
    if isinstance(spec, StableSpec):
        alpha, lam = spec.alpha, spec.lambda_total
    else:
        alpha = _check_alpha(spec)
        if lambda_total is None:
            raise SpecError("lambda_total is required when no StableSpec is given")
        lam = _check_positive("lambda_total", lambda_total)
    R = _check_positive("R", R)
    C1 = lam / (2.0 - alpha)
    C2 = lam / alpha
    return TruncationSplit(
        R=R,
        alpha=alpha,
        lambda_total=lam,
        C1=C1,
        C2=C2,
        V2=C1 * R ** (2.0 - alpha),
        W3=lam * R ** (3.0 - alpha) / (3.0 - alpha),
        tail_mass=C2 * R ** (-alpha),
    )


@dataclass(frozen=True)
class ZProbability:
    exact: float
    crude: float


def prob_Z_nonzero(split: TruncationSplit, alpha: float | None = None) -> ZProbability:
    """``P(Z(R) != 0) = 1 - exp(-tail_mass)`` and the cruder ``min(1, tail_mass)``."""
    if alpha is not None and not math.isclose(alpha, split.alpha):
        raise SpecError("alpha does not match the split")
    t = split.tail_mass
    return ZProbability(exact=-math.expm1(-t), crude=min(1.0, t))


def radial_moment_quadrature(alpha: float, lambda_total: float, R: float, which: str) -> float:
    """Numerically integrate the stable Lévy measure radially.

    ``which`` is ``"V2"`` (second moment inside R), ``"W3"`` (third moment
    inside R) or ``"tail"`` (mass outside R). The power-law piece on
    ``[0, 1e-6 R]`` uses its antiderivative; the rest is adaptive quadrature.
    """
    alpha = _check_alpha(alpha)
    lam = _check_positive("lambda_total", lambda_total)
    R = _check_positive("R", R)
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=200)
    if which not in ("V2", "W3", "tail"):
        raise SpecError(f"unknown moment {which!r}; expected V2, W3 or tail")
    if which == "tail":
        # r = R / t maps (R, inf) onto (0, 1]; the t -> 0 end is again a power law
        eps = 1e-6
        body, _ = integrate.quad(lambda t: t ** (alpha - 1.0), eps, 1.0, **opts)
        return lam * R ** (-alpha) * (eps**alpha / alpha + body)
    power = {"V2": 2.0, "W3": 3.0}[which]
    eps = 1e-6 * R
    p = power - alpha
    head = eps**p / p
    body, _ = integrate.quad(lambda r: r ** (p - 1.0), eps, R, **opts)
    return lam * (head + body)
