"""Numerical primitives: quadrature, Beta function, monotone inversion, crossings.

The quadrature rule is double-exponential (tanh-sinh).  Nodes cluster
double-exponentially at both endpoints, so integrands such as ``t**alpha``
with ``alpha > -1`` are integrated to near machine precision without any
special treatment, provided the integrand can be evaluated accurately close
to the endpoint.  Nodes are placed at ``a + r*delta`` / ``b - r*delta`` where
``delta`` (the distance to the endpoint) is computed without cancellation;
at a lower endpoint of 0 this gives full relative accuracy.  For a singularity
at the *upper* endpoint pass ``upper_complement`` so the integrand is evaluated
from the distance ``b - x`` directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import BracketError, DomainError, InputError, QuadratureError

DEFAULT_TOL = 1e-10
MIN_LEVEL = 3
MAX_LEVEL = 11
# sinh(6) ~ 201.7; beyond this the endpoint distance underflows ~1e-275
_U_MAX = 6.0
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise InputError("abs_error_estimate must be non-negative")
        if self.evaluations < 1:
            raise InputError("evaluations must be at least 1")


@lru_cache(maxsize=None)
def _level_nodes(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint distances and weights for the positive abscissae new at ``level``.

    Level 0 uses u = 1, 2, ...; level k > 0 adds the odd multiples of 2**-k.
    The centre node u = 0 is handled by the caller.
    """
    h = 2.0 ** -level
    if level == 0:
        u = np.arange(1, int(_U_MAX) + 1, dtype=float)
    else:
        u = np.arange(1, int(_U_MAX / h) + 1, 2, dtype=float) * h
    e = np.exp(-np.pi * np.sinh(u))
    delta = 2.0 * e / (1.0 + e)
    weight = 2.0 * np.pi * np.cosh(u) * e / (1.0 + e) ** 2
    delta.setflags(write=False)
    weight.setflags(write=False)
    return delta, weight


def _evaluate(f, x: np.ndarray, shape: tuple) -> np.ndarray:
    y = np.asarray(f(x), dtype=float)
    return np.broadcast_to(y, shape + x.shape)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = DEFAULT_TOL,
    *,
    upper_complement: Callable[[np.ndarray], np.ndarray] | None = None,
    max_level: int = MAX_LEVEL,
) -> QuadratureResult:
    """Integrate ``f`` over ``[a, b]`` with tanh-sinh quadrature.

    ``f`` must accept a numpy array of abscissae.  The step is halved until two
    successive estimates agree to ``tol`` (absolute), or to a few ulps of the
    integral of ``|f|`` when that is larger.

    Args:
        f: vectorised integrand.
        a, b: finite limits, ``a <= b``.
        tol: absolute error target.
        upper_complement: optional ``s -> f(b - s)`` evaluated accurately for
            small ``s``; used for the nodes in the upper half of the interval.
        max_level: refinement budget (number of step halvings).

    Raises:
        QuadratureError: the budget ran out, or the integrand returned a
            non-finite value at an interior node.
    """
    value, err, evaluations = integrate_vector(
        f, a, b, tol, shape=(), upper_complement=upper_complement, max_level=max_level)
    return QuadratureResult(float(value), float(err), evaluations)


def integrate_vector(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = DEFAULT_TOL,
    *,
    shape: tuple = (),
    upper_complement: Callable[[np.ndarray], np.ndarray] | None = None,
    max_level: int = MAX_LEVEL,
) -> tuple[np.ndarray, float, int]:
    """Tanh-sinh core for integrands returning ``shape + x.shape`` arrays.

    All components share one node set; refinement continues until every
    component has converged.  Returns ``(values, max_abs_error, evaluations)``.
    """
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise InputError("integration limits must be finite")
    if a > b:
        raise InputError(f"lower limit {a} exceeds upper limit {b}")
    if a == b:
        return np.zeros(shape), 0.0, 1

    c = 0.5 * (a + b)
    r = 0.5 * (b - a)
    centre = _evaluate(f, np.array([c]), shape)[..., 0]
    total = np.pi / 2 * centre
    total_abs = np.abs(total)
    evaluations = 1
    previous = None
    estimate = np.full(shape, math.nan)
    err = math.inf

    for level in range(max_level + 1):
        delta, weight = _level_nodes(level)
        d = r * delta
        left = a + d
        keep_left = left > a
        fl = _evaluate(f, left[keep_left], shape)
        if upper_complement is not None:
            keep_right = d > 0
            fr = _evaluate(upper_complement, d[keep_right], shape)
        else:
            right = b - d
            keep_right = right < b
            fr = _evaluate(f, right[keep_right], shape)
        evaluations += fl.shape[-1] + fr.shape[-1]
        if not (np.all(np.isfinite(fl)) and np.all(np.isfinite(fr))):
            raise QuadratureError("integrand is not finite at an interior node",
                                  _first(estimate), err)
        wl = weight[keep_left]
        wr = weight[keep_right]
        total = total + fl @ wl + fr @ wr
        total_abs = total_abs + np.abs(fl) @ wl + np.abs(fr) @ wr

        h = 2.0 ** -level
        estimate = r * h * total
        if previous is not None:
            diff = np.abs(estimate - previous)
            floor = 64.0 * _EPS * r * h * total_abs
            err = float(np.max(np.maximum(diff, floor)))
            if level >= MIN_LEVEL and np.all(diff <= np.maximum(tol, floor)):
                return estimate, err, evaluations
        previous = estimate

    raise QuadratureError(
        f"no convergence on [{a}, {b}] after {max_level} refinements", _first(estimate), err)


def integrate_pieces(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float],
    tol: float = DEFAULT_TOL,
    *,
    shape: tuple = (),
) -> tuple[np.ndarray, float, int]:
    """Sum of :func:`integrate_vector` over consecutive ``breakpoints``.

    Splitting at points where the integrand has a kink keeps every piece
    smooth, which is what the double-exponential rule needs.
    """
    pts = np.asarray(breakpoints, dtype=float)
    total = np.zeros(shape)
    err = 0.0
    evaluations = 0
    for lo, hi in zip(pts[:-1], pts[1:]):
        value, e, k = integrate_vector(f, lo, hi, tol, shape=shape)
        total = total + value
        err += e
        evaluations += k
    return total, err, evaluations


def _first(x) -> float:
    return float(np.ravel(x)[0])


def probe_integrable_at_zero(g: Callable[[np.ndarray], np.ndarray], shape: tuple = ()) -> np.ndarray:
    """Divergence probe for ``int_0 g``: does ``t*|g(t)|`` still decay as ``t -> 0``?

    Samples ``t = 2**-k`` for ``k = 10..60``; a power law ``t**alpha`` passes
    iff ``alpha > -1`` (``t*|g|`` shrinks at every halving, or is already 0).
    Returns a boolean per component.
    """
    t = 2.0 ** -np.arange(10, 61, 2, dtype=float)
    with np.errstate(all="ignore"):
        s = np.abs(np.broadcast_to(np.asarray(g(t), dtype=float), shape + t.shape)) * t
    finite = np.all(np.isfinite(s), axis=-1)
    tail = s[..., -6:]
    vanished = tail[..., -1] == 0
    shrinking = np.all(tail[..., :-1] > tail[..., 1:] * (1.0 + 1e-9), axis=-1)
    return finite & (vanished | shrinking)


# Stirling-series coefficients B_{2k} / (2k (2k-1))
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156,
             -3617 / 122400)
_STIRLING_MIN = 10.0


def _stirling_tail(x: float) -> float:
    """``lgamma(x) - [(x - 1/2) ln x - x + ln(2 pi)/2]`` for ``x >= 10``."""
    r = 1.0 / (x * x)
    acc = 0.0
    for c in reversed(_STIRLING):
        acc = acc * r + c
    return acc / x


def log_beta(a: float, b: float) -> float:
    """Natural log of the Beta function.

    When the larger argument is big, ``lgamma(b) - lgamma(a + b)`` is
    evaluated as one Stirling-series difference instead of subtracting two
    large log-Gammas, which keeps full accuracy when ``a`` is small.
    """
    if not (a > 0 and b > 0):
        raise DomainError(f"log_beta requires a > 0 and b > 0, got a={a}, b={b}")
    a, b = float(min(a, b)), float(max(a, b))
    if b < _STIRLING_MIN:
        return float(gammaln(a) + gammaln(b) - gammaln(a + b))
    x = a / b
    # (a+b-1/2) ln(a+b) - (b-1/2) ln b - a, rewritten with log1p to avoid cancellation
    l1 = math.log1p(x)
    head = (a - 0.5) * x + (a + b - 0.5) * (l1 - x) if x < 0.1 else (a + b - 0.5) * l1 - a
    diff = -(a * math.log(b) + head) + _stirling_tail(b) - _stirling_tail(a + b)
    return float(gammaln(a)) + diff


def beta(a: float, b: float) -> float:
    return math.exp(log_beta(a, b))


def invert_monotone(
    g: Callable,
    target,
    lo: float,
    hi: float,
    tol: float = 1e-12,
    max_iter: int = 1100,
):
    """Solve ``g(x) = target`` for nondecreasing ``g`` by bisection.

    ``target`` may be a scalar or an array (solved elementwise, ``g`` must then
    be vectorised).  Iteration stops once the bracket is narrower than ``tol``
    or ``|g(x) - target| <= tol``.  With ``tol=0`` bisection runs until the
    bracket cannot shrink in floating point, which gives full relative
    accuracy for roots near zero.
    """
    scalar = np.ndim(target) == 0
    shape = np.shape(target)
    t = np.asarray(target, dtype=float).ravel()
    g_lo = float(np.asarray(g(np.array([lo], dtype=float))).ravel()[0])
    g_hi = float(np.asarray(g(np.array([hi], dtype=float))).ravel()[0])
    if np.any(t < g_lo) or np.any(t > g_hi):
        raise BracketError(
            f"target outside [g(lo), g(hi)] = [{g_lo}, {g_hi}]")

    lo_arr = np.full_like(t, float(lo))
    hi_arr = np.full_like(t, float(hi))
    done = (t == g_lo) | (t == g_hi)
    x = np.where(t == g_hi, hi_arr, lo_arr)
    active = ~done
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        l, u = lo_arr[idx], hi_arr[idx]
        mid = 0.5 * (l + u)
        gm = np.asarray(g(mid), dtype=float)
        resid = gm - t[idx]
        below = resid < 0
        lo_arr[idx] = np.where(below, mid, l)
        hi_arr[idx] = np.where(below, u, mid)
        x[idx] = mid
        stuck = (mid == l) | (mid == u)
        finished = stuck | (hi_arr[idx] - lo_arr[idx] <= tol) | (np.abs(resid) <= tol)
        active[idx[finished]] = False
    return float(x[0]) if scalar else x.reshape(shape)


@dataclass(frozen=True)
class CrossingReport:
    count: int
    locations: list[float] = field(default_factory=list)
    brackets: list[tuple[float, float]] = field(default_factory=list)


def crossing_count(
    grid: Sequence[float],
    curve_a: Sequence[float],
    curve_b: Sequence[float],
    deadband: float | None = None,
) -> CrossingReport:
    """Count strict sign changes of ``curve_a - curve_b`` along ``grid``.

    Differences within ``deadband`` of zero are ignored (default
    ``1e-9 * (max|A| + max|B|)``).  Each crossing is bracketed by the two
    surviving grid points around it; ``locations`` holds the linear
    interpolant's root inside each bracket.
    """
    x = np.asarray(grid, dtype=float)
    ya = np.asarray(curve_a, dtype=float)
    yb = np.asarray(curve_b, dtype=float)
    if ya.shape != x.shape or yb.shape != x.shape:
        raise InputError("curves must be sampled on the same grid")
    if x.ndim != 1 or x.size < 3:
        raise InputError("grid must be one-dimensional with at least 3 points")
    if np.any(np.diff(x) <= 0):
        raise InputError("grid must be strictly increasing")
    if deadband is None:
        deadband = 1e-9 * (np.max(np.abs(ya)) + np.max(np.abs(yb)))

    diff = ya - yb
    live = np.flatnonzero(np.abs(diff) > deadband)
    locations: list[float] = []
    brackets: list[tuple[float, float]] = []
    for i, j in zip(live[:-1], live[1:]):
        if np.sign(diff[i]) != np.sign(diff[j]):
            xi, xj = x[i], x[j]
            root = xi - diff[i] * (xj - xi) / (diff[j] - diff[i])
            brackets.append((float(xi), float(xj)))
            locations.append(float(root))
    return CrossingReport(len(locations), locations, brackets)
