"""Analytic layer for jump-measure tails of the form ``x**(-alpha) * ell(x)``.

Provides the slowly-varying families ``ell``, the positive/negative tail
functions, their generalized inverse, the norming scale ``a(t)`` with
``t * tail(a(t)) = 1``, truncated moments, drift/centering constants, and a
numerical diagnostic separating super-slowly varying families from merely
slowly varying ones.
"""

from __future__ import annotations

import functools
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError

__all__ = [
    "SlowlyVarying",
    "LevyMeasureSpec",
    "NormingScale",
    "tail_pos",
    "tail_neg",
    "phi",
    "norming_a",
    "trunc_second_moment",
    "first_moment_tail",
    "gamma_shifts",
    "centering_c",
    "ssv_diagnostic",
]

# exp(-e): upper end of the domain of the log-over-loglog family
E_NEG_E = math.exp(-math.e)

_KINDS = ("constant", "log_power", "exp_log_power", "log_over_loglog")


@dataclass(frozen=True)
class SlowlyVarying:
    """A slowly varying function ``ell`` on (0, 1).

    kind:
        ``constant``         ell(x) = c                          (param c > 0)
        ``log_power``        ell(x) = (-log x)**beta             (param beta > 0)
        ``exp_log_power``    ell(x) = exp{(-log x)**beta}        (param beta in (0,1))
        ``log_over_loglog``  ell(x) = exp{(-log x)/log(-log x)}  (no param;
                             defined only for x < exp(-e))
    """

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown slowly varying kind {self.kind!r}")
        if self.kind == "constant" and not self.param > 0:
            raise ValueError("constant family needs c > 0")
        if self.kind == "log_power" and not self.param > 0:
            raise ValueError("log_power family needs beta > 0")
        if self.kind == "exp_log_power" and not 0 < self.param < 1:
            raise ValueError("exp_log_power family needs beta in (0, 1)")

    @classmethod
    def constant(cls, c: float = 1.0) -> "SlowlyVarying":
        return cls("constant", c)

    @classmethod
    def log_power(cls, beta: float = 1.0) -> "SlowlyVarying":
        return cls("log_power", beta)

    @classmethod
    def exp_log_power(cls, beta: float = 0.5) -> "SlowlyVarying":
        return cls("exp_log_power", beta)

    @classmethod
    def log_over_loglog(cls) -> "SlowlyVarying":
        return cls("log_over_loglog", 0.0)

    @property
    def x_sup(self) -> float:
        """Right end of the domain on which ell may be evaluated."""
        if self.kind == "log_over_loglog":
            return E_NEG_E
        if self.kind == "constant":
            return math.inf
        return 1.0

    def value(self, x):
        """Evaluate ell(x); x scalar or array, must lie in (0, x_sup]."""
        scalar = np.isscalar(x)
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("ell requires x > 0")
        if self.kind == "log_over_loglog":
            if np.any(x >= E_NEG_E):
                raise DomainError(
                    "log_over_loglog family is defined only for x < exp(-e)"
                )
        elif self.kind != "constant" and np.any(x > 1.0):
            raise DomainError("ell is defined on (0, 1]")
        v = -np.log(x)
        if self.kind == "constant":
            out = np.full_like(x, self.param)
        elif self.kind == "log_power":
            out = v**self.param
        elif self.kind == "exp_log_power":
            out = np.exp(v**self.param)
        else:
            out = np.exp(v / np.log(v))
        return float(out) if scalar else out

    def describe(self) -> str:
        if self.kind == "constant":
            return f"constant:{self.param:g}"
        if self.kind == "log_over_loglog":
            return "loglog"
        return f"{self.kind}:{self.param:g}"

    @classmethod
    def parse(cls, text: str) -> "SlowlyVarying":
        """Parse ``family[:param]`` strings as used by the CLI."""
        name, _, par = text.partition(":")
        name = name.strip().lower().replace("-", "_")
        if name in ("loglog", "log_over_loglog"):
            return cls.log_over_loglog()
        if name == "constant":
            return cls.constant(float(par) if par else 1.0)
        if name in ("log_power", "logpower"):
            return cls.log_power(float(par) if par else 1.0)
        if name in ("exp_log_power", "explogpower"):
            return cls.exp_log_power(float(par) if par else 0.5)
        raise ValueError(f"cannot parse slowly varying family from {text!r}")


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Jump measure with positive tail ``tail_pos(x) = x**(-alpha) * ell(x)``.

    The negative tail is the fixed multiple ``neg_ratio * tail_pos``, so the
    spectrally negative part never dominates. Jump sizes are capped at
    ``cutoff`` (1 by default). ``cutoff=inf`` is allowed for the constant
    family only and gives the pure power tail on all of (0, inf).
    """

    alpha: float
    ell: SlowlyVarying
    neg_ratio: float = 0.0
    cutoff: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise DomainError("alpha must lie in (0, 2)")
        if self.neg_ratio < 0:
            raise DomainError("neg_ratio must be >= 0")
        if self.cutoff != 1.0:
            if not (math.isinf(self.cutoff) and self.ell.kind == "constant"):
                raise DomainError(
                    "cutoff must be 1, or inf for the constant family"
                )
        self._check_decreasing()

    @property
    def x_sup(self) -> float:
        """Largest jump size carrying mass (min of cutoff and ell's domain)."""
        return min(self.cutoff, self.ell.x_sup)

    @property
    def tail_limit(self) -> float:
        """Left limit of the positive tail at the support end x_sup."""
        if math.isinf(self.x_sup):
            return 0.0
        if self.ell.kind == "log_power":
            return 0.0
        if self.ell.kind == "log_over_loglog":
            # ell(exp(-e)-) = exp(e)
            return self.x_sup ** (-self.alpha) * math.exp(math.e)
        return self.x_sup ** (-self.alpha) * self.ell.value(self.x_sup)

    def _check_decreasing(self):
        hi = self.x_sup if math.isfinite(self.x_sup) else 1e6
        if self.ell.kind == "log_over_loglog":
            hi *= 1.0 - 1e-9
        grid = np.geomspace(hi * 1e-12, hi, 128)
        vals = tail_pos(self, grid)
        if not np.all(np.diff(vals) < 0):
            raise ValueError("positive tail is not strictly decreasing")


def tail_pos(spec: LevyMeasureSpec, x):
    """Rate of positive jumps exceeding x: ``x**(-alpha) * ell(x)``, 0 beyond
    the cutoff."""
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("tail_pos requires x > 0")
    if spec.ell.kind == "log_over_loglog":
        if np.any(x >= E_NEG_E):
            raise DomainError(
                "log_over_loglog tail is defined only for x < exp(-e)"
            )
    out = np.zeros_like(x)
    inside = x <= spec.x_sup
    xi = x[inside]
    if xi.size:
        out[inside] = xi ** (-spec.alpha) * spec.ell.value(xi)
    return float(out) if scalar else out


def tail_neg(spec: LevyMeasureSpec, x):
    """Rate of negative jumps below -x: ``neg_ratio * tail_pos(x)``."""
    if spec.neg_ratio == 0.0:
        # still validate the domain
        t = tail_pos(spec, x)
        return 0.0 * t if not np.isscalar(t) else 0.0
    return spec.neg_ratio * tail_pos(spec, x)


def phi(spec: LevyMeasureSpec, u: float, rel_tol: float = 1e-12) -> float:
    """Generalized inverse of the positive tail: sup{x : tail_pos(x) > u}.

    For u below the tail's left limit at the support end the inverse is the
    support end itself (all the remaining mass sits at or above it); otherwise
    the unique root of ``tail_pos(x) = u`` on the strictly decreasing branch,
    located by bracketed root finding in log coordinates.
    """
    if not u > 0:
        raise DomainError("phi requires u > 0")
    alpha = spec.alpha
    if spec.ell.kind == "constant":
        c = spec.ell.param
        x = (c / u) ** (1.0 / alpha)
        return min(x, spec.cutoff)
    if u <= spec.tail_limit:
        if spec.ell.kind == "log_over_loglog":
            raise DomainError(
                "phi: u is below the invertible range of the log_over_loglog "
                "tail (inverse would leave the family's domain)"
            )
        return spec.x_sup

    if spec.ell.kind == "log_power":
        # work entirely in log coordinates: near the support end exp(logx)
        # rounds to 1.0 and the tail underflows to zero, but
        # log tail = -alpha*logx + beta*log(-logx) stays exact
        beta = spec.ell.param

        def f(logx):
            return -alpha * logx + beta * math.log(-logx) - math.log(u)

    else:
        def f(logx):
            return math.log(tail_pos(spec, math.exp(logx))) - math.log(u)

    hi = math.log(spec.x_sup)
    if spec.ell.kind == "log_over_loglog":
        # step just inside the open right end of the family's domain
        hi = math.log(spec.x_sup) - 1e-12
        if f(hi) >= 0:
            return spec.x_sup * (1.0 - 1e-12)
    if spec.ell.kind == "log_power":
        # tail -> 0 at 1; shrink the right bracket end geometrically until
        # it is below u
        hi = -1e-9
        for _ in range(4000):
            if f(hi) < 0:
                break
            hi *= 0.5
        else:  # pragma: no cover
            raise DomainError("phi: failed to bracket near the support end")
    lo = hi - 1.0
    for _ in range(200):
        if f(lo) > 0:
            break
        lo -= 2.0
    else:  # pragma: no cover
        raise DomainError("phi: failed to bracket the tail inverse")
    root = brentq(f, lo, hi, xtol=min(rel_tol, 1e-13), rtol=8.9e-16)
    return math.exp(root)


@dataclass
class NormingScale:
    """Cached evaluation of ``a(t) = phi(1/t)`` for a fixed jump measure.

    The continuous inverse makes ``t * tail_pos(a(t)) = 1`` hold to the
    inversion tolerance whenever ``1/t`` exceeds the tail's value at the
    support end. Dense log-uniform tables for fast in-kernel interpolation are
    built lazily and only appended to, so concurrent readers are safe.
    """

    spec: LevyMeasureSpec
    inversion_tol: float = 1e-12
    _cache: dict = field(default_factory=dict, repr=False)
    _tables: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def a(self, t: float) -> float:
        """Norming value a(t) = phi(1/t), cached; t in (0, 1]."""
        if not 0 < t <= 1:
            raise DomainError("norming scale needs t in (0, 1]")
        hit = self._cache.get(t)
        if hit is None:
            hit = phi(self.spec, 1.0 / t, self.inversion_tol)
            self._cache[t] = hit
        return hit

    def phi(self, u: float) -> float:
        return phi(self.spec, u, self.inversion_tol)

    def a_table(self, t_lo: float, t_hi: float = 1.0, n: int = 4096):
        """Log-uniform table (log_t0, dlog, values) of a(t) on [t_lo, t_hi].

        Node values are exact inversions; intermediate queries interpolate
        log a linearly in log t. For the constant family the interpolant is
        exact.
        """
        key = (t_lo, t_hi, n)
        with self._lock:
            tab = self._tables.get(key)
            if tab is None:
                logs = np.linspace(math.log(t_lo), math.log(t_hi), n)
                vals = np.array([self.a(math.exp(s)) for s in logs])
                tab = (logs[0], logs[1] - logs[0], np.log(vals))
                self._tables[key] = tab
        return tab


def norming_a(scale: NormingScale, t: float) -> float:
    """a(t) = phi(1/t) for t in (0, 1]."""
    return scale.a(t)


# ---------------------------------------------------------------------------
# truncated moments and drift constants


def _tail_integral(spec: LevyMeasureSpec, lo: float, hi: float) -> float:
    """integral of tail_pos(y) dy over [lo, hi], hi <= x_sup."""
    if hi <= lo:
        return 0.0
    a = spec.alpha
    if spec.ell.kind == "constant":
        c = spec.ell.param
        if a == 1.0:
            return c * (math.log(hi) - math.log(lo)) if lo > 0 else math.inf
        val_hi = c * hi ** (1 - a) / (1 - a)
        if lo == 0.0:
            return val_hi if a < 1 else math.inf
        return val_hi - c * lo ** (1 - a) / (1 - a)

    def g(v):
        y = math.exp(-v)
        if y == 0.0:  # underflow deep in the tail; integrand decayed long ago
            return 0.0
        return math.exp(-(1 - a) * v) * spec.ell.value(y)

    v_hi = math.inf if lo == 0.0 else -math.log(lo)
    v_lo = -math.log(hi)
    val, _ = quad(g, v_lo, v_hi, epsabs=0.0, epsrel=1e-11, limit=400)
    return val


def _y_tail_integral(spec: LevyMeasureSpec, hi: float) -> float:
    """integral of y * tail_pos(y) dy over [0, hi], hi <= x_sup."""
    if hi <= 0:
        return 0.0
    a = spec.alpha
    if spec.ell.kind == "constant":
        return spec.ell.param * hi ** (2 - a) / (2 - a)

    def g(v):
        y = math.exp(-v)
        if y == 0.0:
            return 0.0
        return math.exp(-(2 - a) * v) * spec.ell.value(y)

    val, _ = quad(g, -math.log(hi), math.inf, epsabs=0.0, epsrel=1e-11,
                  limit=400)
    return val


def trunc_second_moment(spec: LevyMeasureSpec, a: float, sign: str = "+") -> float:
    """Truncated second moment B(a) = int_0^a y^2 Lambda(dy).

    Computed through integration by parts as
    ``2 * int_0^a y*tail(y) dy - a^2 * tail(a)``; the negative side is the
    fixed multiple ``neg_ratio * B(a)``.
    """
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    if a < 0 or a > min(1.0, spec.x_sup):
        raise DomainError("trunc_second_moment needs 0 <= a <= min(1, x_sup)")
    if a == 0.0:
        return 0.0
    val = 2.0 * _y_tail_integral(spec, a) - a * a * tail_pos(spec, a)
    if sign == "-":
        val *= spec.neg_ratio
    return val


def first_moment_tail(spec: LevyMeasureSpec, eps: float) -> float:
    """int_{(eps,1]} y Lambda(dy): mean drift of positive jumps above eps.

    By parts this is ``eps*tail(eps) + int_eps^1 tail(y) dy`` minus, when the
    support extends beyond 1, the boundary value ``tail(1)`` (no boundary atom
    in that case). With the default cutoff the mass ell(1-) concentrated at
    the cutoff is included, matching what the sampler generates.
    """
    if eps < 0:
        raise DomainError("first_moment_tail needs eps >= 0")
    top = min(1.0, spec.x_sup)
    if eps >= top:
        return 0.0
    val = _tail_integral(spec, eps, top)
    if eps > 0:
        val += eps * tail_pos(spec, eps)
    if spec.x_sup > 1.0:
        val -= tail_pos(spec, 1.0)
    return val


@functools.lru_cache(maxsize=256)
def _pos_mean_jump_finite(spec: LevyMeasureSpec) -> bool:
    """Whether int_{(0,1]} y Lambda(dy) converges, by partial-integral
    doubling; cross-checked against the analytic criterion alpha < 1."""
    vals = [first_moment_tail(spec, 2.0**-k) for k in range(8, 30)]
    diffs = np.abs(np.diff(vals))
    if diffs[-1] < 1e-8 * max(1.0, abs(vals[-1])):
        converged = True
    else:
        # increments of a doubling grid shrink geometrically iff the mean
        # jump integral converges; ratio 2**(alpha-1) for a pure power tail
        ratios = diffs[1:] / diffs[:-1]
        converged = bool(np.median(ratios) < 0.999)
    analytic = spec.alpha < 1.0
    if converged != analytic:  # pragma: no cover - guards future families
        raise RuntimeError(
            "numeric and analytic finiteness tests for the mean jump disagree"
        )
    return converged


@functools.lru_cache(maxsize=256)
def gamma_shifts(spec: LevyMeasureSpec) -> tuple[float, float]:
    """Drift constants (gamma_plus, gamma_minus) of the path decomposition.

    gamma_plus is ``int_{(0,1]} y Lambda(dy)`` when finite, else 0;
    gamma_minus is the mirrored quantity, ``-neg_ratio * gamma_plus`` when the
    negative mean jump is finite, else 0.
    """
    if _pos_mean_jump_finite(spec):
        gp = first_moment_tail(spec, 0.0)
    else:
        gp = 0.0
    if spec.neg_ratio == 0.0:
        gm = 0.0
    else:
        gm = -spec.neg_ratio * gp if spec.alpha < 1.0 else 0.0
    return gp, gm


def centering_c(scale: NormingScale, t: float, alpha_mode: str = "general") -> float:
    """Centering function c(t) = t * (gamma_plus - int_{(a(t),1]} y Lambda(dy)).

    The same expression covers every branch: for alpha < 1 it equals
    ``t * int_{(0,a(t)]} y Lambda(dy)``, for alpha > 1 (gamma_plus = 0) it is
    ``-t * int_{(a(t),1]} y Lambda(dy)``, and for alpha = 1 it selects the
    branch dictated by finiteness of the mean jump automatically.
    """
    if alpha_mode not in ("general", "one"):
        raise ValueError("alpha_mode must be 'general' or 'one'")
    if alpha_mode == "one" and scale.spec.alpha != 1.0:
        raise ValueError("alpha_mode='one' requires alpha == 1")
    if not 0 < t <= 1:
        raise DomainError("centering_c needs t in (0, 1]")
    gp, _ = gamma_shifts(scale.spec)
    return t * (gp - first_moment_tail(scale.spec, scale.a(t)))


# ---------------------------------------------------------------------------
# super-slow-variation diagnostic


def ssv_diagnostic(ell: SlowlyVarying, delta_max: float, t_grid,
                   n_delta: int = 64) -> np.ndarray:
    """Per-t sup over delta in [0, delta_max] of |ell(t*xi(t)**delta)/ell(t) - 1|
    with the auxiliary scale xi(t) = 1/(-log t).

    A vanishing sup along t -> 0 is the defining property of super-slow
    variation relative to xi; the log-over-loglog family stays bounded away
    from zero.
    """
    if delta_max <= 0:
        raise ValueError("delta_max must be > 0")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid >= math.exp(-1.0)):
        raise DomainError("ssv_diagnostic needs t < exp(-1) so that xi(t) < 1")
    deltas = np.linspace(0.0, delta_max, n_delta)
    out = np.empty(t_grid.size)
    for i, t in enumerate(t_grid):
        xi = 1.0 / (-math.log(t))
        args = t * xi**deltas
        out[i] = np.max(np.abs(ell.value(args) / ell.value(t) - 1.0))
    return out


def ssv_verdict(devs: np.ndarray) -> bool:
    """True when the sup-deviation sequence (along decreasing t) behaves like
    a super-slowly varying family: identically tiny, or strictly shrinking."""
    devs = np.asarray(devs, dtype=float)
    if np.all(devs < 1e-12):
        return True
    return bool(np.all(np.diff(devs) < 0) and devs[-1] < devs[0])
