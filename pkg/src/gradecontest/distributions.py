"""Ability distributions on [0, 1] and the profile ``h(t) = t / F^{-1}(t)``.

Three families are supported:

* ``power(p)``: ``F(x) = x**p``
* ``reflected_power(p)``: ``F(x) = 1 - (1 - x)**p``
* ``tabulated``: a strictly increasing CDF table, interpolated with a
  monotone (PCHIP) cubic.

Lower ability parameters mean lower marginal cost, i.e. more productive agents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, InputError
from .numerics import integrate, invert_monotone

FAMILIES = ("power", "reflected_power", "tabulated")
SIGN_SLACK = 1e-9


@dataclass(frozen=True)
class Distribution:
    """An ability law on [0, 1]; immutable once constructed.

    Use :func:`construct_distribution` (or :func:`power`,
    :func:`reflected_power`, :func:`tabulated`) rather than calling this
    directly, so that the invariants get checked.
    """

    family: str
    p: float | None = None
    table: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    _interp: Any = field(default=None, compare=False, repr=False)

    # -- scalar/array evaluators -------------------------------------------------
    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "power":
            return x ** self.p
        if self.family == "reflected_power":
            with np.errstate(divide="ignore"):
                return -np.expm1(self.p * np.log1p(-x))
        return np.where(x >= 1.0, 1.0, np.clip(self._interp(x), 0.0, 1.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        p = self.p
        with np.errstate(divide="ignore"):
            if self.family == "power":
                return p * x ** (p - 1.0)
            if self.family == "reflected_power":
                return p * (1.0 - x) ** (p - 1.0)
        return np.maximum(self._interp(x, 1), 0.0)

    def pdf_prime(self, x):
        x = np.asarray(x, dtype=float)
        p = self.p
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.family == "power":
                return p * (p - 1.0) * x ** (p - 2.0)
            if self.family == "reflected_power":
                return -p * (p - 1.0) * (1.0 - x) ** (p - 2.0)
        return self._interp(x, 2)

    def pdf_from_top(self, s):
        """Density at ``1 - s``, accurate for tiny ``s``."""
        s = np.asarray(s, dtype=float)
        if self.family == "reflected_power":
            with np.errstate(divide="ignore"):
                return self.p * s ** (self.p - 1.0)
        return self.pdf(1.0 - s)

    def quantile(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "power":
            return t ** (1.0 / self.p)
        if self.family == "reflected_power":
            with np.errstate(divide="ignore"):
                return -np.expm1(np.log1p(-t) / self.p)
        x = invert_monotone(self.cdf, np.clip(t, 0.0, 1.0), 0.0, 1.0, tol=0.0)
        return x if np.ndim(t) else float(x)

    def h(self, t):
        """``t / F^{-1}(t)`` for ``t`` in (0, 1]."""
        t = np.asarray(t, dtype=float)
        if self.family == "power":
            return t ** (1.0 - 1.0 / self.p)
        return t / self.quantile(t)

    def quantile_breakpoints(self) -> np.ndarray:
        """Points of [0, 1] in quantile space, endpoints included, between which
        ``F^{-1}`` is smooth (the table's CDF values for tabulated laws)."""
        if self.family == "tabulated":
            return np.asarray(self.table[1], dtype=float)
        return np.array([0.0, 1.0])

    def has_closed_form(self) -> bool:
        return self.family in ("power", "reflected_power")

    def describe(self) -> dict:
        if self.family == "tabulated":
            return {"family": "tabulated", "rows": len(self.table[0])}
        return {"family": self.family, "p": self.p}


def power(p: float) -> Distribution:
    return construct_distribution({"family": "power", "p": p})


def reflected_power(p: float) -> Distribution:
    return construct_distribution({"family": "reflected_power", "p": p})


def tabulated(theta: Sequence[float], cdf: Sequence[float]) -> Distribution:
    return construct_distribution({"family": "tabulated", "theta": theta, "cdf": cdf})


def parse_cdf_table(text: str) -> tuple[list[float], list[float]]:
    """Parse a two-column ``theta, F(theta)`` table with one header row.

    Columns may be separated by commas, tabs or spaces.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if len(lines) < 3:
        raise InputError("CDF table needs a header and at least two rows")
    theta, cdf = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise InputError(f"CDF table row {lineno}: expected 2 columns, got {len(parts)}")
        try:
            theta.append(float(parts[0]))
            cdf.append(float(parts[1]))
        except ValueError as exc:
            raise InputError(f"CDF table row {lineno}: {exc}") from None
    return theta, cdf


def load_cdf_table(path: str | Path) -> Distribution:
    theta, cdf = parse_cdf_table(Path(path).read_text())
    return tabulated(theta, cdf)


def construct_distribution(spec: Mapping[str, Any]) -> Distribution:
    """Build and validate a distribution from a family descriptor.

    ``spec`` is a mapping with key ``family``; the parametric families need
    ``p > 0``; ``tabulated`` needs ``theta`` and ``cdf`` sequences (or
    ``table``, a path to a two-column text table).
    """
    family = spec.get("family")
    if family not in FAMILIES:
        raise InputError(f"unknown distribution family {family!r}; expected one of {FAMILIES}")

    if family == "tabulated":
        if "table" in spec:
            theta, cdf = parse_cdf_table(Path(spec["table"]).read_text())
        else:
            theta, cdf = spec.get("theta"), spec.get("cdf")
            if theta is None or cdf is None:
                raise InputError("tabulated family needs 'theta' and 'cdf' (or 'table')")
        x = np.asarray(theta, dtype=float)
        y = np.asarray(cdf, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise InputError("theta and cdf must be equal-length 1-d sequences")
        if x[0] != 0.0 or x[-1] != 1.0 or y[0] != 0.0 or y[-1] != 1.0:
            raise InputError("CDF table must start at (0, 0) and end at (1, 1)")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(y) <= 0):
            raise InputError("CDF table must be strictly increasing in both columns")
        d = Distribution("tabulated", None, (tuple(x), tuple(y)), PchipInterpolator(x, y))
    else:
        p = spec.get("p")
        if p is None or not np.isfinite(p) or p <= 0:
            raise DomainError(f"{family} requires a parameter p > 0, got {p!r}")
        d = Distribution(family, float(p))

    _check_invariants(d)
    return d


def _check_invariants(d: Distribution) -> None:
    grid = np.linspace(0.0, 1.0, 1024)
    F = d.cdf(grid)
    if abs(F[0]) > 1e-15 or abs(F[-1] - 1.0) > 1e-15:
        raise InputError("CDF must satisfy F(0) = 0 and F(1) = 1")
    if np.any(np.diff(F) < 0):
        raise InputError("CDF is not monotone")
    inner = grid[1:-1]
    if np.any(d.pdf(inner) < 0):
        raise InputError("density is negative somewhere")

    if d.family == "tabulated":
        knots = np.asarray(d.table[0])
        mass = sum(integrate(d.pdf, lo, hi).value for lo, hi in zip(knots[:-1], knots[1:]))
    else:
        mass = integrate(d.pdf, 0.0, 1.0, upper_complement=d.pdf_from_top).value
    if abs(mass - 1.0) > 1e-8:
        raise InputError(f"density integrates to {mass}, not 1")

    t = np.linspace(0.0, 1.0, 258)[1:-1]
    if np.max(np.abs(d.cdf(d.quantile(t)) - t)) > 1e-10:
        raise InputError("quantile does not invert the CDF to 1e-10")


# -- tail integrability ----------------------------------------------------------

@dataclass(frozen=True)
class Assumption1Report:
    passed: bool
    tail_samples: list[tuple[float, float, float]]
    tail_exponents: tuple[float, float]


def validate_assumption1(d: Distribution) -> Assumption1Report:
    """Probe ``f(x)F(x)`` and ``x**2 / F^{-1}(x)`` on ``x = 2**-5 ... 2**-30``.

    Both sequences must shrink strictly at every halving of ``x``; and either
    end below 1e-4 or still be decaying at a visible power-law rate
    (log2 ratio of the last two probes at least 1e-3).  Slowly vanishing tails
    such as ``x**0.2`` never reach 1e-4 on this grid yet satisfy the limits.
    """
    x = 2.0 ** -np.arange(5, 31)
    s1 = d.pdf(x) * d.cdf(x)
    s2 = x ** 2 / np.asarray(d.quantile(x))
    samples = [(float(a), float(b), float(c)) for a, b, c in zip(x, s1, s2)]

    def _ok(s: np.ndarray) -> tuple[bool, float]:
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            return False, math.nan
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = s[:-1] / s[1:]
        if not np.all(ratios > 1.0 + 1e-9):
            return False, float(np.log2(ratios[-1])) if np.isfinite(ratios[-1]) else math.nan
        exponent = float(np.log2(ratios[-1]))
        return bool(s[-1] < 1e-4 or exponent >= 1e-3), exponent

    ok1, e1 = _ok(s1)
    ok2, e2 = _ok(s2)
    return Assumption1Report(ok1 and ok2, samples, (e1, e2))


def require_assumption1(d: Distribution) -> None:
    if not validate_assumption1(d).passed:
        raise DomainError(f"distribution {d.describe()} fails the tail integrability conditions")


# -- profile h ----------------------------------------------------------------------

def h_profile(d: Distribution, t):
    """Return ``(h(t), h'(t))`` with ``h(t) = t / F^{-1}(t)``.

    The derivative uses ``(x f(x) - t) / (f(x) x**2)`` at ``x = F^{-1}(t)``;
    where the density vanishes a central difference is used instead.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0) or np.any(t_arr > 1):
        raise DomainError("h is defined on (0, 1] only")
    if d.family == "power":
        # t**(1 - 1/p); avoids the quantile underflowing for tiny t
        h = t_arr ** (1.0 - 1.0 / d.p)
        hp = (1.0 - 1.0 / d.p) * t_arr ** (-1.0 / d.p)
        return (float(h), float(hp)) if np.ndim(t) == 0 else (h, hp)
    x = np.asarray(d.quantile(t_arr), dtype=float)
    fx = np.asarray(d.pdf(x), dtype=float)
    h = t_arr / x
    with np.errstate(divide="ignore", invalid="ignore"):
        hp = (x * fx - t_arr) / (fx * x * x)
    bad = ~np.isfinite(hp) | (fx <= 0)
    if np.any(bad):
        hp = np.where(bad, _h_prime_fd(d, t_arr), hp)
    if np.ndim(t) == 0:
        return float(h), float(hp)
    return h, hp


def _h_prime_fd(d: Distribution, t: np.ndarray) -> np.ndarray:
    step = np.minimum(1e-5, np.minimum(t / 2, (1 - t) / 2))
    back = np.minimum(1e-5, t / 2)
    central = step > 0
    lo = np.where(central, t - step, t - back)
    hi = np.where(central, t + step, t)
    return (d.h(hi) - d.h(lo)) / (hi - lo)


@dataclass(frozen=True)
class HClassification:
    monotonicity: str  # increasing | decreasing | indeterminate
    curvature: str  # concave | convex | indeterminate
    method: str  # closed_form | numeric
    flat: bool = False  # |h'| < 1e-9 everywhere (uniform law)

    @property
    def determinate(self) -> bool:
        return "indeterminate" not in (self.monotonicity, self.curvature)


def classify_h(d: Distribution, method: str = "auto") -> HClassification:
    """Monotonicity and curvature of ``h``.

    Parametric families use the known answers (power: increasing/concave for
    ``p >= 1``, decreasing/convex for ``1/2 < p < 1``; reflected power:
    decreasing/concave for ``p >= 1``, increasing/convex for ``p < 1``).
    ``p = 1`` is the uniform law with flat ``h``; it gets the ``p >= 1`` label
    and ``flat=True``.  ``method="numeric"`` forces the grid test.
    """
    if d.family == "power" and d.p <= 0.5:
        raise DomainError(f"power({d.p}) fails the tail integrability conditions (needs p > 1/2)")
    if method not in ("auto", "closed_form", "numeric"):
        raise InputError(f"unknown classification method {method!r}")
    if method == "closed_form" and not d.has_closed_form():
        raise InputError("closed_form classification needs a parametric family")

    if d.has_closed_form() and method != "numeric":
        flat = d.p == 1.0
        if d.family == "power":
            mono, curv = ("increasing", "concave") if d.p >= 1 else ("decreasing", "convex")
        else:
            mono, curv = ("decreasing", "concave") if d.p >= 1 else ("increasing", "convex")
        return HClassification(mono, curv, "closed_form", flat)
    return _classify_numeric(d)


def _classify_numeric(d: Distribution) -> HClassification:
    t = np.linspace(0.0, 1.0, 513)[1:]
    h, hp = h_profile(d, t)
    inc = bool(np.all(hp >= -SIGN_SLACK))
    dec = bool(np.all(hp <= SIGN_SLACK))
    d2 = h[2:] - 2 * h[1:-1] + h[:-2]
    concave = bool(np.all(d2 <= SIGN_SLACK))
    convex = bool(np.all(d2 >= -SIGN_SLACK))
    flat = inc and dec
    if flat:
        # constant h: both labels hold; report the p >= 1 convention
        if d.has_closed_form():
            ref = classify_h(d, "closed_form")
            return HClassification(ref.monotonicity, ref.curvature, "numeric", True)
        return HClassification("increasing", "concave", "numeric", True)
    mono = "increasing" if inc else "decreasing" if dec else "indeterminate"
    curv = "concave" if concave and not convex else "convex" if convex and not concave else (
        "indeterminate")
    return HClassification(mono, curv, "numeric", False)


def monotone_direction(values: np.ndarray, slack: float = SIGN_SLACK) -> str | None:
    """'increasing', 'decreasing' or None for a sampled sequence."""
    dv = np.diff(np.asarray(values, dtype=float))
    if np.all(np.abs(dv) <= slack):
        return "constant"
    if np.all(dv >= -slack):
        return "increasing"
    if np.all(dv <= slack):
        return "decreasing"
    return None


def density_direction(d: Distribution) -> str | None:
    """Monotonicity of the density on a 1024-point interior grid."""
    x = np.linspace(0.0, 1.0, 1026)[1:-1]
    return monotone_direction(d.pdf(x))


def competition_index_direction(d: Distribution) -> str | None:
    """Monotonicity of ``f(t) t**2 / F(t)**2`` (decides the curvature of h)."""
    x = np.linspace(0.0, 1.0, 1026)[1:-1]
    return monotone_direction(d.pdf(x) * x ** 2 / d.cdf(x) ** 2)


def stochastically_dominates(dF: Distribution, dG: Distribution) -> bool:
    """True iff ``F(x) <= G(x)`` on a 1024-point grid (F puts more mass on high cost)."""
    x = np.linspace(0.0, 1.0, 1024)
    return bool(np.all(dF.cdf(x) <= dG.cdf(x) + 1e-12))
