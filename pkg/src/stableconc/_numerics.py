"""Bracketed root finding and adaptive Gauss-Legendre quadrature."""
from __future__ import annotations

from typing import Callable

import numpy as np

MAX_ITER = 200
_EPS = np.finfo(float).eps


class ConvergenceError(RuntimeError):
    pass


def bisect_increasing(
    fn: Callable[[np.ndarray], np.ndarray],
    target,
    lo=0.0,
    hi=1.0,
    xtol: float = 0.0,
    rtol: float = 4 * _EPS,
    max_iter: int = MAX_ITER,
):
    """Solve ``fn(s) = target`` for a strictly increasing, vectorized ``fn``.

    ``lo`` must satisfy ``fn(lo) <= target``. ``hi`` is only a first guess:
    it is doubled until ``fn(hi) >= target``. Iteration stops once every
    bracket is narrower than ``xtol + rtol * |hi|`` or stops shrinking.
    Works elementwise on arrays; scalars in give a scalar out.
    """
    target = np.asarray(target, dtype=float)
    scalar = target.ndim == 0
    target = np.atleast_1d(target)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    if np.any(fn(lo) > target):
        raise ValueError("lower bracket already exceeds the target")

    for it in range(max_iter + 1):
        short = fn(hi) < target
        if not short.any():
            break
        if it == max_iter:
            raise ConvergenceError("could not bracket the root")
        lo = np.where(short, hi, lo)
        hi = np.where(short, 2.0 * hi, hi)
        if not np.all(np.isfinite(hi)):
            raise ConvergenceError("bracket expansion overflowed")

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        done = (hi - lo <= xtol + rtol * np.abs(hi)) | (mid <= lo) | (mid >= hi)
        if done.all():
            break
        below = fn(mid) < target
        lo = np.where(below & ~done, mid, lo)
        hi = np.where(~below & ~done, mid, hi)
    else:
        raise ConvergenceError(f"bisection did not converge in {max_iter} iterations")

    root = 0.5 * (lo + hi)
    return float(root[0]) if scalar else root


def newton_bracketed_increasing(
    fn_and_grad: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    target,
    lo,
    hi,
    rtol: float = 4 * _EPS,
    max_iter: int = MAX_ITER,
) -> np.ndarray:
    """Safeguarded Newton for an increasing ``fn`` with ``fn(lo) <= target <= fn(hi)``.

    Iteration starts at ``lo``. A Newton step is taken only if it stays in the
    current bracket and is at most half the previous step; otherwise the
    bracket is bisected. ``fn_and_grad`` returns ``(fn, fn')``; non-finite
    values count as lying above the target.
    """
    target = np.atleast_1d(np.asarray(target, dtype=float))
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    x = lo.copy()
    last_step = hi - lo
    live = np.ones(target.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(live)
        with np.errstate(over="ignore", invalid="ignore"):
            f, g = fn_and_grad(x[idx])
        resid = np.where(np.isfinite(f), f - target[idx], np.inf)
        xl = x[idx]
        lol = np.where(resid <= 0, xl, lo[idx])
        hil = np.where(resid >= 0, xl, hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            step = xl - resid / g
        newton = (step > lol) & (step < hil) & (np.abs(step - xl) <= 0.5 * last_step[idx])
        new = np.where(newton, step, 0.5 * (lol + hil))
        new = np.where(resid == 0, xl, new)
        done = (resid == 0) | (np.abs(new - xl) <= rtol * np.abs(new)) | (hil - lol <= rtol * np.abs(hil))
        last_step[idx] = np.abs(new - xl)
        x[idx], lo[idx], hi[idx] = new, lol, hil
        live[idx[done]] = False
        if not live.any():
            return x
    raise ConvergenceError(f"Newton iteration did not converge in {max_iter} steps")


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _panels(fn, lo: np.ndarray, hi: np.ndarray, n: int) -> np.ndarray:
    """Gauss-Legendre estimate on every panel ``[lo_i, hi_i]`` with one call to ``fn``."""
    t, w = gauss_legendre(n)
    half = 0.5 * (hi - lo)
    nodes = lo[:, None] + half[:, None] * (t[None, :] + 1.0)
    vals = np.asarray(fn(nodes.ravel()), dtype=float).reshape(nodes.shape)
    return half * (vals @ w)


def adaptive_gauss_legendre_many(
    fn: Callable[[np.ndarray], np.ndarray],
    a,
    b,
    rtol: float = 1e-9,
    order: int = 16,
    max_depth: int = 30,
) -> np.ndarray:
    """Integrate a vectorized ``fn`` over each interval ``[a_i, b_i]``.

    Every panel is compared with the sum over its two halves and accepted
    once they agree to ``rtol`` relative to the running estimate of its own
    interval. All live panels are refined together, so ``fn`` is called once
    per refinement round.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    result = np.zeros(a.shape)
    live = a != b
    owner = np.flatnonzero(live)
    lo, hi = a[live], b[live]
    est = _panels(fn, lo, hi, order) if owner.size else np.empty(0)
    scale = np.zeros(a.shape)
    np.add.at(scale, owner, np.abs(est))
    for depth in range(max_depth + 1):
        if owner.size == 0:
            return result
        mid = 0.5 * (lo + hi)
        both = _panels(fn, np.concatenate([lo, mid]), np.concatenate([mid, hi]), order)
        left, right = both[: lo.size], both[lo.size :]
        refined = left + right
        ok = np.abs(refined - est) <= rtol * scale[owner]
        if depth == max_depth and not ok.all():
            raise ConvergenceError("adaptive quadrature hit its depth limit")
        np.add.at(result, owner[ok], refined[ok])
        keep = ~ok
        owner = np.concatenate([owner[keep], owner[keep]])
        lo, hi = np.concatenate([lo[keep], mid[keep]]), np.concatenate([mid[keep], hi[keep]])
        est = np.concatenate([left[keep], right[keep]])
    return result


def adaptive_gauss_legendre(fn, a: float, b: float, rtol: float = 1e-9, order: int = 16) -> float:
    return float(adaptive_gauss_legendre_many(fn, [a], [b], rtol=rtol, order=order)[0])
