"""Closed-form and quadrature evaluation of the exactly known laws and bounds.

``mt_cdf_exact`` is the exact law of the scaled-maximum-jump functional
``M_t = sup_{t<=s<=1} m_s / a(s)``; for the pure power tail it collapses to a
Frechet law after the ``(1 - log t)^(1/alpha)`` normalization. The two
exponential bounds of ``prop1_bound_eq1``/``prop1_bound_eq2`` control the tail
of the compensated small-jump processes truncated at level ``a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from .errors import DomainError
from .families import (
    LevyMeasureSpec,
    NormingScale,
    tail_pos,
    trunc_second_moment,
)

__all__ = [
    "CdfCurve",
    "mt_cdf_exact",
    "mt_quantile",
    "frechet_cdf",
    "stable_mt_cdf",
    "prop1_bound_eq1",
    "prop1_bound_eq2",
    "Eq2Bound",
]


@dataclass
class CdfCurve:
    """An evaluated CDF on an ordered positive grid, with provenance."""

    x: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.x <= 0) or np.any(np.diff(self.x) <= 0):
            raise ValueError("abscissae must be positive and increasing")
        if np.any(self.values < -1e-12) or np.any(self.values > 1 + 1e-12):
            raise ValueError("CDF values must lie in [0, 1]")
        if np.any(np.diff(self.values) < -1e-12):
            raise ValueError("CDF values must be nondecreasing")

    def to_csv(self, path):
        rows = np.column_stack([self.x, self.values])
        header = "x,F"
        np.savetxt(path, rows, delimiter=",", header=header, comments="",
                   fmt="%.17g")


def _tail_at(spec: LevyMeasureSpec, z: float) -> float:
    """tail_pos extended by zero beyond the support end (safe for any z>0)."""
    if z >= spec.x_sup:
        return 0.0
    return tail_pos(spec, z)


def mt_cdf_exact(spec: LevyMeasureSpec, scale: NormingScale, t: float,
                 x: float) -> float:
    """Exact CDF of the scaled maximum jump:
    ``exp{ -int_t^1 tail(a(u) x) du - t * tail(a(t) x) }``.

    The time integral runs over the disjoint exceedance regions of the jump
    point process; it is evaluated after the log-time substitution
    ``u = exp(-v)`` because both a and the tail are regularly varying. The
    integrand vanishes wherever ``a(u) * x`` exceeds the support end.
    """
    if not 0 < t < 1:
        raise DomainError("mt_cdf_exact needs t in (0, 1)")
    if not x > 0:
        raise DomainError("mt_cdf_exact needs x > 0")

    # largest u with a(u) * x still inside the support
    u_hi = 1.0
    if spec.x_sup / x < scale.a(1.0):
        crit = _tail_at(spec, spec.x_sup / x)
        u_hi = 1.0 / crit if crit > 0 else t
    u_hi = min(u_hi, 1.0)
    if u_hi <= t:
        return 1.0  # no jump can reach level x anywhere on [t, 1]

    def g(v):
        u = math.exp(-v)
        return u * _tail_at(spec, scale.a(u) * x)

    integral, _ = quad(g, -math.log(u_hi), -math.log(t), epsabs=0.0,
                       epsrel=1e-10, limit=400)
    boundary = t * _tail_at(spec, scale.a(t) * x)
    return math.exp(-integral - boundary)


def mt_quantile(spec: LevyMeasureSpec, scale: NormingScale, t: float,
                p: float) -> float:
    """Level x with ``mt_cdf_exact(t, x) = p``, by bracketed root finding on
    log x (the CDF is continuous and strictly increasing below the support
    ceiling)."""
    if not 0 < p < 1:
        raise DomainError("mt_quantile needs p in (0, 1)")
    from scipy.optimize import brentq

    lo, hi = -2.0, 2.0
    while mt_cdf_exact(spec, scale, t, math.exp(lo)) > p:
        lo -= 2.0
        if lo < -80:
            raise DomainError("quantile bracket failed from below")
    while mt_cdf_exact(spec, scale, t, math.exp(hi)) < p:
        hi += 2.0
        if hi > 80:
            raise DomainError("quantile bracket failed from above")
    root = brentq(lambda lx: mt_cdf_exact(spec, scale, t, math.exp(lx)) - p,
                  lo, hi, xtol=1e-13, rtol=1e-13)
    return math.exp(root)


def frechet_cdf(x, alpha: float):
    """Frechet CDF ``exp(-x**(-alpha))`` on x > 0; 0 for x <= 0."""
    if not 0 < alpha < 2:
        raise DomainError("frechet_cdf supports alpha in (0, 2)")
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-x[pos] ** (-alpha))
    return float(out) if scalar else out


def stable_mt_cdf(t: float, x: float, alpha: float) -> float:
    """Closed form ``exp{-x**(-alpha) * (1 - log t)}`` for the pure power
    tail, equivalently the Frechet law after the ``(1 - log t)^(1/alpha)``
    rescaling."""
    if not 0 < alpha < 2:
        raise DomainError("stable_mt_cdf supports alpha in (0, 2)")
    if not 0 < t < 1:
        raise DomainError("stable_mt_cdf needs t in (0, 1)")
    if not x > 0:
        raise DomainError("stable_mt_cdf needs x > 0")
    return math.exp(-(x ** -alpha) * (1.0 - math.log(t)))


def prop1_bound_eq1(spec: LevyMeasureSpec, a: float, b: float, t: float,
                    p: int) -> float:
    """Exponential-moment bound for ``P(sup_{s<=t} X^{(a)}_s > b)``:

        exp{ b / ((1 + 1/p) a) * (1 + log(t B(a) (p!)^(1/p) / (a b))) }

    May exceed 1 (vacuous); returned unclamped.
    """
    if not (a > 0 and b > 0 and t > 0):
        raise DomainError("prop1_bound_eq1 needs a, b, t > 0")
    if not (isinstance(p, (int, np.integer)) and p >= 1):
        raise DomainError("prop1_bound_eq1 needs integer p >= 1")
    big_b = trunc_second_moment(spec, a)
    inner = t * big_b * math.factorial(p) ** (1.0 / p) / (a * b)
    return math.exp(b / ((1.0 + 1.0 / p) * a) * (1.0 + math.log(inner)))


class Eq2Bound(NamedTuple):
    value: float
    degenerate: bool  # True when the relevant B(+-a) vanishes


def prop1_bound_eq2(spec: LevyMeasureSpec, a: float, b: float, t: float,
                    sign: str = "+") -> Eq2Bound:
    """Gaussian-type bound ``exp{-b^2 / (2 t B(+-a))}`` for the downward
    (sign '+') or upward (sign '-') excursions of the truncated compensated
    process; the sign selects which side's truncated second moment enters."""
    if not (a > 0 and b >= 0 and t > 0):
        raise DomainError("prop1_bound_eq2 needs a > 0, b >= 0, t > 0")
    big_b = trunc_second_moment(spec, a, sign)
    if big_b == 0.0:
        return Eq2Bound(0.0, True)
    if b == 0.0:
        return Eq2Bound(1.0, False)
    return Eq2Bound(math.exp(-b * b / (2.0 * t * big_b)), False)
