"""Path reconstruction and scaled extreme functionals.

A sampled jump set determines the path through the jump-diffusion-free
decomposition: piecewise-linear drift (base drift plus the band compensator)
interrupted by jumps. The continuous-time suprema of X(s)/a(s), of the
running supremum over a(s), and of the maximum-jump process over a(s) reduce
to maxima over a finite evaluation set: jump times, window edges, report
times, and — only where the drift is positive, so a ratio can peak inside a
linear segment — a fixed number of interior sample points per segment.

The per-point scan (running maximum, scaled ratios, suffix maxima) is the hot
kernel; it exists as a numba loop and as an equivalent numpy reduction chain
selected by ``LEVYSUP_BACKEND``. Both produce bit-identical floats: the same
additions in the same order, and max/divide are exact operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import USE_NUMBA, njit
from .errors import ConfigurationError
from .families import (
    LevyMeasureSpec,
    NormingScale,
    centering_c,
    first_moment_tail,
    gamma_shifts,
)
from .sampler import JumpSet, ThresholdProfile

__all__ = [
    "TimeGrid",
    "PathFunctionals",
    "build_path",
    "scaled_extremes",
    "max_jump_from_events",
    "centering_table",
]


@dataclass(frozen=True)
class TimeGrid:
    """Geometric evaluation grid q^n down to t_min plus the report times."""

    q: float
    t_min: float
    report_times: tuple

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ConfigurationError("grid ratio q must lie in (0, 1)")
        if not 0 < self.t_min < 1:
            raise ConfigurationError("t_min must lie in (0, 1)")
        rt = tuple(sorted(set(float(t) for t in self.report_times)))
        if rt and (rt[0] < self.t_min or rt[-1] > 1.0):
            raise ConfigurationError("report times must lie in [t_min, 1]")
        object.__setattr__(self, "report_times", rt)

    @property
    def points(self) -> np.ndarray:
        n_max = int(math.ceil(math.log(self.t_min) / math.log(self.q)))
        pts = self.q ** np.arange(n_max + 1)
        pts = np.concatenate([pts, self.report_times, [self.t_min, 1.0]])
        pts = np.unique(pts)
        return pts[(pts >= self.t_min) & (pts <= 1.0)]


@dataclass
class PathFunctionals:
    """Per-evaluation-point path state for one replicate.

    ``x`` holds the post-jump value at each point, ``x_pre`` the left limit,
    ``x_bar`` the running supremum of the path (including within-segment
    left limits), ``a_s`` the norming scale at the point. Raw positive-jump
    data is kept for the exact maximum-jump reduction.
    """

    s: np.ndarray
    x: np.ndarray
    x_pre: np.ndarray
    x_bar: np.ndarray
    a_s: np.ndarray
    ev_times: np.ndarray
    ev_sizes: np.ndarray
    ev_a: np.ndarray
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# interpolation helpers


def _interp_a(scale: NormingScale, s: np.ndarray, t_min: float) -> np.ndarray:
    log_t0, dlog, log_a = scale.a_table(t_min, 1.0)
    ls = np.log(np.clip(s, t_min, 1.0))
    return np.exp(np.interp(ls, log_t0 + dlog * np.arange(log_a.size), log_a))


_C_TABLE_CACHE: dict = {}


def centering_table(scale: NormingScale, t_min: float, n: int = 2048):
    """(log-t grid, c(t)/t values) for fast centering interpolation; c(t)/t
    is smooth and slowly varying in log t."""
    key = (scale.spec, round(math.log(t_min), 9), n)
    tab = _C_TABLE_CACHE.get(key)
    if tab is None:
        mode = "one" if scale.spec.alpha == 1.0 else "general"
        lt = np.linspace(math.log(t_min), 0.0, n)
        ratios = np.array([centering_c(scale, math.exp(v), mode) / math.exp(v)
                           for v in lt])
        tab = (lt, ratios)
        _C_TABLE_CACHE[key] = tab
    return tab


def _interp_c(scale: NormingScale, s: np.ndarray, t_min: float) -> np.ndarray:
    lt, ratios = centering_table(scale, t_min)
    return s * np.interp(np.log(np.clip(s, t_min, 1.0)), lt, ratios)


# ---------------------------------------------------------------------------
# drift layout


def _drift_windows(spec: LevyMeasureSpec, jumps: JumpSet):
    """(window edges, slope per window) implied by the sampling threshold."""
    gamma = sum(gamma_shifts(spec))
    if jumps.profile is not None:
        prof: ThresholdProfile = jumps.profile
        slopes_cache = prof.meta.setdefault("_slopes", {})
        slopes = slopes_cache.get(spec)
        if slopes is None:
            m1 = np.array([first_moment_tail(spec, float(e))
                           for e in prof.eps])
            slopes = gamma + (spec.neg_ratio - 1.0) * m1
            slopes_cache[spec] = slopes
        return prof.edges, slopes
    if jumps.eps is None:
        raise ConfigurationError("jump set carries neither eps nor profile")
    top = min(1.0, spec.x_sup)
    m1 = first_moment_tail(spec, min(jumps.eps, top))
    return (np.array([0.0, 1.0]),
            np.array([gamma + (spec.neg_ratio - 1.0) * m1]))


# ---------------------------------------------------------------------------
# evaluation-set construction


def build_path(jumps: JumpSet, scale: NormingScale, grid: TimeGrid,
               k_interior: int = 8) -> PathFunctionals:
    """Evaluate the path at the complete candidate set for the suprema.

    Points: all events, all drift-window edges and grid/report points, plus
    ``k_interior`` interior points per segment inside positive-slope windows
    (the only place a scaled ratio can attain its maximum strictly inside a
    linear segment).
    """
    spec = scale.spec
    edges, slopes = _drift_windows(spec, jumps)

    fixed = np.unique(np.concatenate([
        grid.points, edges[(edges > 0.0) & (edges <= 1.0)]]))
    base = np.concatenate([jumps.times, fixed])
    kind = np.concatenate([np.ones(jumps.n, dtype=np.bool_),
                           np.zeros(fixed.size, dtype=np.bool_)])
    jmp = np.concatenate([jumps.sizes, np.zeros(fixed.size)])
    order = np.argsort(base, kind="stable")
    base, kind, jmp = base[order], kind[order], jmp[order]

    if k_interior > 0 and np.any(slopes > 0):
        # a segment (s_{i-1}, s_i] lives in the window containing its right
        # endpoint's left neighborhood
        w_right = np.searchsorted(edges, base, side="left") - 1
        w_right = np.clip(w_right, 0, slopes.size - 1)
        seg_pos = np.zeros(base.size, dtype=np.bool_)
        seg_pos[1:] = slopes[w_right[1:]] > 0.0
        lo = np.concatenate([[0.0], base[:-1]])[seg_pos]
        hi = base[seg_pos]
        frac = (np.arange(1, k_interior + 1) / (k_interior + 1))
        extra = (lo[:, None] + (hi - lo)[:, None] * frac[None, :]).ravel()
        extra = extra[extra > 0.0]
        base = np.concatenate([base, extra])
        kind = np.concatenate([kind, np.zeros(extra.size, dtype=np.bool_)])
        jmp = np.concatenate([jmp, np.zeros(extra.size)])
        order = np.argsort(base, kind="stable")
        base, kind, jmp = base[order], kind[order], jmp[order]

    # piecewise-linear drift integral at each point
    w = np.clip(np.searchsorted(edges, base, side="right") - 1, 0,
                slopes.size - 1)
    durs = np.diff(edges)
    cum = np.concatenate([[0.0], np.cumsum(slopes * durs)])
    drift = cum[w] + slopes[w] * (base - edges[w])

    a_s = _interp_a(scale, base, grid.t_min)

    x_pre = drift + np.concatenate([[0.0], np.cumsum(jmp)[:-1]])
    x = x_pre + jmp

    pre_or_post = np.maximum(x_pre, x)
    x_bar = np.maximum.accumulate(np.maximum(pre_or_post, 0.0))

    is_pos_event = kind & (jmp > 0.0)
    ev_idx = np.flatnonzero(is_pos_event)
    return PathFunctionals(
        s=base, x=x, x_pre=x_pre, x_bar=x_bar, a_s=a_s,
        ev_times=base[ev_idx], ev_sizes=jmp[ev_idx], ev_a=a_s[ev_idx],
        meta={"edges": edges, "slopes": slopes, "k_interior": k_interior},
    )


# ---------------------------------------------------------------------------
# suprema kernels


@njit(cache=True)
def _extremes_kernel_numba(v, pre, a_s, pos):  # pragma: no cover - jit path
    n = v.size
    xbar = np.empty(n)
    acc = 0.0  # paths start at 0, so the running supremum is at least 0
    for i in range(n):
        cand = pre[i] if pre[i] > v[i] else v[i]
        if cand > acc:
            acc = cand
        xbar[i] = acc
    sy = np.empty(n)
    sz = np.empty(n)
    best_y = -np.inf
    best_z = -np.inf
    for i in range(n - 1, -1, -1):
        ry = xbar[i] / a_s[i]
        m = pre[i] if pre[i] > v[i] else v[i]
        rz = m / a_s[i]
        if ry > best_y:
            best_y = ry
        if rz > best_z:
            best_z = rz
        sy[i] = best_y
        sz[i] = best_z
    k = pos.size
    y_out = np.empty(k)
    z_out = np.empty(k)
    for j in range(k):
        y_out[j] = sy[pos[j]]
        z_out[j] = sz[pos[j]]
    return y_out, z_out


def _extremes_kernel_numpy(v, pre, a_s, pos):
    m = np.maximum(pre, v)
    xbar = np.maximum.accumulate(np.maximum(m, 0.0))
    sy = np.maximum.accumulate((xbar / a_s)[::-1])[::-1]
    sz = np.maximum.accumulate((m / a_s)[::-1])[::-1]
    return sy[pos].copy(), sz[pos].copy()


def _extremes_kernel(v, pre, a_s, pos):
    if USE_NUMBA:
        return _extremes_kernel_numba(v, pre, a_s, pos)
    return _extremes_kernel_numpy(v, pre, a_s, pos)


def _max_jump_reduce(pf: PathFunctionals, scale: NormingScale,
                     report_times: np.ndarray, t_min: float) -> np.ndarray:
    """Exact M_t: fold each event to y / a(max(u, t)) and maximize."""
    y, u, a_u = pf.ev_sizes, pf.ev_times, pf.ev_a
    if y.size == 0:
        return np.zeros(report_times.size)
    score = y / a_u
    suff = np.maximum.accumulate(score[::-1])[::-1]
    pref = np.maximum.accumulate(y)
    a_t = _interp_a(scale, report_times, t_min)
    out = np.empty(report_times.size)
    for j, t in enumerate(report_times):
        idx = np.searchsorted(u, t, side="right")
        best = suff[idx] if idx < y.size else 0.0
        if idx > 0:
            best = max(best, pref[idx - 1] / a_t[j])
        out[j] = best
    return out


def max_jump_from_events(times: np.ndarray, sizes: np.ndarray,
                         scale: NormingScale, report_times: np.ndarray,
                         t_min: float) -> np.ndarray:
    """M_t directly from a raw event list, skipping path construction — the
    fast route for experiments that only need the maximum-jump functional."""
    pos = sizes > 0.0
    u, y = times[pos], sizes[pos]
    report = np.asarray(report_times, dtype=np.float64)
    if y.size == 0:
        return np.zeros(report.size)
    a_u = _interp_a(scale, u, t_min)
    pf = PathFunctionals(s=u, x=y, x_pre=y, x_bar=y, a_s=a_u,
                         ev_times=u, ev_sizes=y, ev_a=a_u)
    return _max_jump_reduce(pf, scale, report, t_min)


def scaled_extremes(pf: PathFunctionals, scale: NormingScale,
                    grid: TimeGrid, centered: bool = False) -> dict:
    """Y_t, Z_t, M_t at the grid's report times for one replicate.

    ``centered`` replaces the path value by X(s) - c(s) inside the running
    supremum and the process supremum (the maximum-jump functional is never
    centered).
    """
    report = np.asarray(grid.report_times, dtype=np.float64)
    if report.size == 0:
        raise ConfigurationError("no report times requested")
    if centered:
        c_s = _interp_c(scale, pf.s, grid.t_min)
        v = pf.x - c_s
        pre = pf.x_pre - c_s
    else:
        v = pf.x
        pre = pf.x_pre
    pos = np.searchsorted(pf.s, report, side="left").astype(np.int64)
    y_out, z_out = _extremes_kernel(v, pre, pf.a_s, pos)
    m_out = _max_jump_reduce(pf, scale, report, grid.t_min)
    return {"t": report, "Y": y_out, "Z": z_out, "M": m_out}
