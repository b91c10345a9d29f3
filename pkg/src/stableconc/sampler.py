"""Reproducible samplers for the stable laws covered by the bounds.

Streams
-------
A batch of ``n`` variates is cut into fixed chunks of ``CHUNK`` rows. Chunk
``j`` of stream ``(master_seed, stream_index)`` draws from
``Philox(SeedSequence(master_seed, spawn_key=(stream_index, j)))``. Chunking
does not depend on the number of workers, so the output is bit-identical for
any worker count. Batches of different sizes are not prefixes of each other.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .levy_core import SpecError, StableSpec, _check_alpha, _check_positive, c_alpha, c_alpha_d

__all__ = [
    "CHUNK",
    "RngStream",
    "SampleBatch",
    "default_workers",
    "sas_scale",
    "sample_sas_1d",
    "sample_discrete_spectral",
    "sample_rotinv",
    "sample_Z_tail",
    "sample_spec",
    "empirical_cf",
    "chambers_mallows_stuck",
    "positive_stable",
]

CHUNK = 1 << 16


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.master_seed < 2**64):
            raise SpecError("master_seed must be a 64-bit unsigned integer")
        if self.stream_index < 0:
            raise SpecError("stream_index must be nonnegative")

    def generator(self, chunk: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index, chunk))
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, index: int) -> "RngStream":
        return RngStream(self.master_seed, index)


@dataclass(frozen=True)
class SampleBatch:
    data: np.ndarray
    generator: str
    seed: int
    stream_index: int
    spec_digest: str

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def sidecar(self) -> dict:
        return {
            "generator": self.generator,
            "seed": self.seed,
            "stream_index": self.stream_index,
            "spec_digest": self.spec_digest,
            "n": self.n,
            "dim": self.dim,
        }


def default_workers() -> int:
    raw = os.environ.get("STABLECONC_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise SpecError(f"STABLECONC_THREADS must be an integer, got {raw!r}") from None


def _chunked(
    draw: Callable[[np.random.Generator, int], np.ndarray],
    n: int,
    stream: RngStream,
    workers: int | None,
) -> np.ndarray:
    if int(n) != n or n < 1:
        raise SpecError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    sizes = [min(CHUNK, n - start) for start in range(0, n, CHUNK)]
    jobs = [(j, size) for j, size in enumerate(sizes)]
    run = lambda job: draw(stream.generator(job[0]), job[1])  # noqa: E731
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(jobs) == 1:
        parts = [run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    return np.concatenate(parts, axis=0)


def _digest(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def chambers_mallows_stuck(alpha: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Unit-scale symmetric stable variates, ``E exp(iuX) = exp(-|u|^alpha)``."""
    V = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size)
    W = rng.standard_exponential(size)
    if alpha == 1.0:
        return np.tan(V)
    return (
        np.sin(alpha * V) / np.cos(V) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * V) / W) ** ((1.0 - alpha) / alpha)
    )


def positive_stable(beta: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Totally skewed positive stable with ``E exp(-sA) = exp(-s^beta)``, 0 < beta < 1.

    This is the one-sided (skewness 1) case of the same uniform/exponential
    transform, written in Kanter's form with U uniform on (0, pi).
    """
    U = rng.uniform(0.0, np.pi, size)
    W = rng.standard_exponential(size)
    return (
        np.sin(beta * U) / np.sin(U) ** (1.0 / beta)
        * (np.sin((1.0 - beta) * U) / W) ** ((1.0 - beta) / beta)
    )


def sas_scale(spec: StableSpec) -> float:
    """Scale sigma of a 1-d symmetric spec: ``sigma^alpha = c_alpha * lambda_total``."""
    if spec.dim != 1 or not spec.spectral.symmetric:
        raise SpecError("sas1d needs a symmetric one-dimensional spec")
    return (c_alpha(spec.alpha) * spec.lambda_total) ** (1.0 / spec.alpha)


def sample_sas_1d(
    alpha: float,
    sigma: float,
    n: int,
    stream: RngStream,
    workers: int | None = None,
    shift: float = 0.0,
) -> SampleBatch:
    """Symmetric stable with characteristic function ``exp(-sigma^alpha |u|^alpha)``."""
    alpha = _check_alpha(alpha)
    sigma = _check_positive("sigma", sigma)
    data = _chunked(lambda g, m: sigma * chambers_mallows_stuck(alpha, g, m), n, stream, workers)
    return SampleBatch(
        data=data[:, None] + shift,
        generator="sas1d",
        seed=stream.master_seed,
        stream_index=stream.stream_index,
        spec_digest=_digest({"alpha": alpha, "sigma": sigma, "shift": shift}),
    )


def sample_discrete_spectral(
    spec: StableSpec, n: int, stream: RngStream, workers: int | None = None
) -> SampleBatch:
    """``X = b + sum_j sigma_j S_j xi_j`` over the ``+-xi_j`` pairs of the spectral atoms.

    ``S_j`` are independent unit symmetric stable variates and
    ``sigma_j^alpha = 2 w_j c_alpha``, which reproduces
    ``exp(-c_alpha sum_atoms w |<u, xi>|^alpha)``.
    """
    if spec.spectral.kind != "atoms":
        raise SpecError("spectral sampler needs a discrete spectral measure")
    pairs = spec.spectral.symmetric_pair_list()
    if pairs is None:
        raise SpecError("sampler supports symmetric spectral measures only")
    alpha = spec.alpha
    dirs = np.array([xi for xi, _ in pairs])
    scales = np.array([(2.0 * w * c_alpha(alpha)) ** (1.0 / alpha) for _, w in pairs])

    def draw(g: np.random.Generator, m: int) -> np.ndarray:
        S = chambers_mallows_stuck(alpha, g, m * len(pairs)).reshape(m, len(pairs))
        return (S * scales) @ dirs

    data = _chunked(draw, n, stream, workers) + np.asarray(spec.shift)
    return SampleBatch(data, "spectral", stream.master_seed, stream.stream_index, spec.digest())


def sample_rotinv(
    alpha: float,
    dim: int,
    c_scale: float,
    n: int,
    stream: RngStream,
    workers: int | None = None,
) -> SampleBatch:
    """Rotationally invariant stable with ``E exp(i<u, X>) = exp(-c_scale |u|^alpha)``.

    ``X = sqrt(2 A) G`` with ``G`` standard normal in R^d and
    ``A = c_scale^(2/alpha) P``, where ``P`` is positive (alpha/2)-stable with
    ``E exp(-sP) = exp(-s^(alpha/2))``. Then
    ``E exp(i<u,X>) = E exp(-A |u|^2) = exp(-c_scale |u|^alpha)``.
    """
    alpha = _check_alpha(alpha)
    c_scale = _check_positive("c_scale", c_scale)
    if int(dim) != dim or dim < 1:
        raise SpecError("dim must be a positive integer")
    dim = int(dim)
    kappa = c_scale ** (2.0 / alpha)

    def draw(g: np.random.Generator, m: int) -> np.ndarray:
        A = kappa * positive_stable(alpha / 2.0, g, m)
        G = g.standard_normal((m, dim))
        return np.sqrt(2.0 * A)[:, None] * G

    data = _chunked(draw, n, stream, workers)
    digest = _digest({"alpha": alpha, "dim": dim, "c_scale": c_scale})
    return SampleBatch(data, "rotinv", stream.master_seed, stream.stream_index, digest)


def _spectral_directions(spec: StableSpec, g: np.random.Generator, m: int) -> np.ndarray:
    if spec.spectral.kind == "uniform":
        v = g.standard_normal((m, spec.dim))
        return v / np.linalg.norm(v, axis=1, keepdims=True)
    w = np.asarray(spec.spectral.weights)
    idx = g.choice(len(w), size=m, p=w / w.sum())
    return np.asarray(spec.spectral.directions)[idx]


def sample_Z_tail(
    spec: StableSpec, R: float, n: int, stream: RngStream, workers: int | None = None
) -> SampleBatch:
    """Compound Poisson part of the split at radius ``R`` (the jumps longer than R).

    Jump count is Poisson with mean ``lambda_total R^-alpha / alpha``; radii
    are ``R U^(-1/alpha)`` and directions follow the normalised spectral measure.
    """
    R = _check_positive("R", R)
    rate = spec.lambda_total * R ** (-spec.alpha) / spec.alpha

    def draw(g: np.random.Generator, m: int) -> np.ndarray:
        counts = g.poisson(rate, m)
        total = int(counts.sum())
        out = np.zeros((m, spec.dim))
        if total:
            radii = R * g.uniform(0.0, 1.0, total) ** (-1.0 / spec.alpha)
            jumps = radii[:, None] * _spectral_directions(spec, g, total)
            np.add.at(out, np.repeat(np.arange(m), counts), jumps)
        return out

    data = _chunked(draw, n, stream, workers)
    digest = _digest({"spec": spec.digest(), "R": R})
    return SampleBatch(data, "ztail", stream.master_seed, stream.stream_index, digest)


def sample_spec(
    spec: StableSpec,
    n: int,
    stream: RngStream,
    generator: str | None = None,
    workers: int | None = None,
    R: float | None = None,
) -> SampleBatch:
    """Draw from ``spec`` with the named generator (or the natural one)."""
    if generator is None:
        if spec.spectral.kind == "uniform":
            generator = "sas1d" if spec.dim == 1 else "rotinv"
        else:
            generator = "sas1d" if spec.dim == 1 else "spectral"
    if generator == "sas1d":
        batch = sample_sas_1d(spec.alpha, sas_scale(spec), n, stream, workers, shift=spec.shift[0])
        return SampleBatch(batch.data, "sas1d", batch.seed, batch.stream_index, spec.digest())
    if generator == "spectral":
        return sample_discrete_spectral(spec, n, stream, workers)
    if generator == "rotinv":
        if spec.spectral.kind != "uniform":
            raise SpecError("rotinv needs a uniform spectral measure")
        c_scale = spec.lambda_total * c_alpha_d(spec.alpha, spec.dim)
        batch = sample_rotinv(spec.alpha, spec.dim, c_scale, n, stream, workers)
        data = batch.data + np.asarray(spec.shift)
        return SampleBatch(data, "rotinv", batch.seed, batch.stream_index, spec.digest())
    if generator == "ztail":
        if R is None:
            raise SpecError("ztail needs a truncation radius R")
        return sample_Z_tail(spec, R, n, stream, workers)
    raise SpecError(f"unknown generator {generator!r}")


@dataclass(frozen=True)
class CFEstimate:
    u: np.ndarray
    value: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    n: int

    @property
    def stderr_bound(self) -> float:
        """The distribution-free bound ``1/sqrt(n)`` on each part's standard error."""
        return 1.0 / math.sqrt(self.n)


def empirical_cf(batch: SampleBatch | np.ndarray, u_grid) -> CFEstimate:
    """``(1/n) sum exp(i <u, X_k>)`` at each grid point, with standard errors."""
    data = batch.data if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    u = np.atleast_2d(np.asarray(u_grid, dtype=float))
    if data.shape[0] == 0 or u.size == 0:
        raise SpecError("empirical_cf needs a nonempty batch and grid")
    if u.shape[1] != data.shape[1]:
        raise SpecError("grid points must match the batch dimension")
    n = data.shape[0]
    values, se_re, se_im = [], [], []
    for row in u:
        phase = data @ row
        c, s = np.cos(phase), np.sin(phase)
        values.append(complex(c.mean(), s.mean()))
        se_re.append(c.std(ddof=1) / math.sqrt(n) if n > 1 else 1.0)
        se_im.append(s.std(ddof=1) / math.sqrt(n) if n > 1 else 1.0)
    return CFEstimate(u=u, value=np.array(values), stderr_re=np.array(se_re), stderr_im=np.array(se_im), n=n)
