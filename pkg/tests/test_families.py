"""Tests for the jump-measure families, tail inversion, and derived scales."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levysup import (
    DomainError,
    LevyMeasureSpec,
    NormingScale,
    SlowlyVarying,
    centering_c,
    first_moment_tail,
    gamma_shifts,
    norming_a,
    phi,
    ssv_diagnostic,
    ssv_verdict,
    tail_neg,
    tail_pos,
    trunc_second_moment,
)

CONST1 = SlowlyVarying.constant(1.0)


def make(alpha, ell=None, r=0.0, cutoff=1.0):
    return LevyMeasureSpec(alpha, ell or CONST1, neg_ratio=r, cutoff=cutoff)


# ---------------------------------------------------------------------------
# tail_pos / tail_neg


def test_tail_pos_pure_stable():
    assert tail_pos(make(1.0), 0.1) == pytest.approx(10.0, rel=1e-14)


def test_tail_pos_log_power():
    spec = make(0.5, SlowlyVarying.log_power(1.0))
    x = math.exp(-4.0)
    assert tail_pos(spec, x) == pytest.approx(math.exp(2.0) * 4.0, rel=1e-14)


def test_tail_pos_above_cutoff_is_zero():
    assert tail_pos(make(1.0), 2.0) == 0.0


def test_tail_pos_vectorized_matches_scalar():
    spec = make(0.7, SlowlyVarying.exp_log_power(0.5))
    xs = np.geomspace(1e-8, 0.9, 40)
    vec = tail_pos(spec, xs)
    assert vec == pytest.approx([tail_pos(spec, float(x)) for x in xs])


def test_tail_neg_scaling():
    assert tail_neg(make(1.0, r=0.0), 0.3) == 0.0
    assert tail_neg(make(1.0, r=0.5), 0.1) == pytest.approx(5.0)
    assert tail_neg(make(0.5, r=2.0), 0.25) == pytest.approx(4.0)


def test_loglog_domain_error_at_support_end():
    spec = make(0.5, SlowlyVarying.log_over_loglog())
    with pytest.raises(DomainError):
        tail_pos(spec, math.exp(-math.e))


def test_tail_requires_positive_x():
    with pytest.raises(DomainError):
        tail_pos(make(1.0), 0.0)


# ---------------------------------------------------------------------------
# phi and norming


def test_phi_closed_forms():
    assert phi(make(1.0), 25.0) == pytest.approx(0.04, rel=1e-12)
    assert phi(make(0.5), 4.0) == pytest.approx(1.0 / 16.0, rel=1e-12)


def test_phi_returns_cutoff_below_boundary_mass():
    # intensity below the mass at the cutoff: generalized inverse sticks at 1
    assert phi(make(1.0), 0.5) == 1.0


def test_phi_bisection_residual():
    spec = make(1.0, SlowlyVarying.log_power(1.0))
    x = phi(spec, 1e4)
    assert abs(tail_pos(spec, x) * 1e-4 - 1.0) <= 1e-9


def test_phi_rejects_nonpositive_intensity():
    with pytest.raises(DomainError):
        phi(make(1.0), 0.0)


@settings(max_examples=60, deadline=None)
@given(
    u=st.floats(min_value=1e2, max_value=1e10),
    alpha=st.sampled_from([0.5, 1.0, 1.5]),
    beta=st.floats(min_value=0.25, max_value=2.0),
)
def test_phi_inverts_tail(u, alpha, beta):
    spec = make(alpha, SlowlyVarying.log_power(beta))
    x = phi(spec, u)
    assert abs(tail_pos(spec, x) / u - 1.0) <= 1e-8


def test_norming_a_examples():
    assert norming_a(NormingScale(make(1.0)), 0.01) == pytest.approx(0.01)
    assert norming_a(NormingScale(make(0.5)), 0.1) == pytest.approx(0.01)


def test_norming_residual_all_families():
    cases = [
        make(0.5),
        make(1.0, SlowlyVarying.log_power(1.0)),
        make(1.5, SlowlyVarying.exp_log_power(0.5)),
        make(0.5, SlowlyVarying.log_over_loglog()),
        make(1.5, cutoff=math.inf),
    ]
    for spec in cases:
        scale = NormingScale(spec)
        for t in np.geomspace(1e-12, 1e-2, 11):
            a = scale.a(float(t))
            assert abs(t * tail_pos(spec, a) - 1.0) <= 1e-8


def test_norming_a_nondecreasing_and_cached():
    scale = NormingScale(make(1.0, SlowlyVarying.log_power(1.0)))
    ts = np.geomspace(1e-10, 1.0, 50)
    vals = np.array([scale.a(float(t)) for t in ts])
    assert np.all(np.diff(vals) >= 0)
    assert scale.a(float(ts[7])) == vals[7]  # cache hit returns same float


def test_norming_a_domain():
    with pytest.raises(DomainError):
        norming_a(NormingScale(make(1.0)), 0.0)


# ---------------------------------------------------------------------------
# truncated moments


def test_trunc_second_moment_closed_form():
    spec = make(1.0, r=0.5)
    assert trunc_second_moment(spec, 0.5) == pytest.approx(0.5, rel=1e-10)
    assert trunc_second_moment(spec, 0.0) == 0.0
    assert trunc_second_moment(spec, 0.5, "-") == pytest.approx(0.25, rel=1e-10)


def test_trunc_second_moment_riemann_cross_check():
    # independent oracle: midpoint rule on y^2 * density over a log grid
    spec = make(0.5, SlowlyVarying.log_power(1.0))
    a = 0.3
    edges = np.geomspace(1e-12, a, 1_000_001)
    tails = tail_pos(spec, edges)
    mids = np.sqrt(edges[:-1] * edges[1:])
    oracle = float(np.sum(mids**2 * (tails[:-1] - tails[1:])))
    got = trunc_second_moment(spec, a)
    assert got == pytest.approx(oracle, rel=1e-6)


def test_trunc_second_moment_domain():
    with pytest.raises(DomainError):
        trunc_second_moment(make(1.0), 1.5)
    with pytest.raises(DomainError):
        trunc_second_moment(make(1.0), -0.1)


def test_karamata_limit():
    # B(y) / (y^2 tail(y)) -> alpha/(2-alpha); the slowly varying correction
    # decays like 1/log(1/y), so non-constant families need y extremely small
    # before the 5% band is reached.
    for spec, y, tol in [
        (make(0.5), 1e-4, 1e-9),
        (make(1.5), 1e-4, 1e-9),
        (make(0.5, SlowlyVarying.log_power(1.0)), 1e-24, 0.05),
        # exp_log_power deviates like 1/sqrt(log(1/y)); 8% at y=1e-100
        (make(1.2, SlowlyVarying.exp_log_power(0.5)), 1e-100, 0.08),
    ]:
        alpha = spec.alpha
        ratio = trunc_second_moment(spec, y) / (y**2 * tail_pos(spec, y))
        assert ratio == pytest.approx(alpha / (2.0 - alpha), rel=tol)


def test_karamata_deviation_shrinks():
    spec = make(1.2, SlowlyVarying.exp_log_power(0.5))
    limit = spec.alpha / (2.0 - spec.alpha)
    devs = [abs(trunc_second_moment(spec, y) / (y**2 * tail_pos(spec, y))
                / limit - 1.0) for y in (1e-6, 1e-24, 1e-100)]
    assert devs[0] > devs[1] > devs[2]


def test_first_moment_tail_closed_form():
    # alpha=0.5 Constant(1): continuous part int_eps^1 0.5 y^(-1/2) dy plus,
    # for cutoff 1, the boundary mass tail(1)=1 sitting at the cutoff itself
    eps = 0.04
    assert first_moment_tail(make(0.5), eps) == pytest.approx(
        2.0 - eps**0.5, rel=1e-10)
    assert first_moment_tail(make(0.5, cutoff=math.inf), eps) == pytest.approx(
        1.0 - eps**0.5, rel=1e-10)


# ---------------------------------------------------------------------------
# gamma shifts and centering


def test_gamma_shifts_examples():
    g_pos, g_neg = gamma_shifts(make(0.5, cutoff=math.inf))
    assert g_pos == pytest.approx(1.0, rel=1e-8)
    assert g_neg == 0.0
    assert gamma_shifts(make(1.5))[0] == 0.0
    assert gamma_shifts(make(0.5, r=0.0))[1] == 0.0


def test_gamma_shifts_negative_side():
    g_pos, g_neg = gamma_shifts(make(0.5, r=0.5, cutoff=math.inf))
    assert g_neg == pytest.approx(-0.5 * g_pos, rel=1e-8)


def test_gamma_alpha_one_divergence():
    # alpha = 1 with constant ell: int y Lambda(dy) = int 1/y dy diverges
    assert gamma_shifts(make(1.0))[0] == 0.0


def test_centering_examples():
    scale = NormingScale(make(0.5, cutoff=math.inf))
    c = centering_c(scale, 0.1)
    assert c == pytest.approx(0.01, rel=1e-8)
    assert c / scale.a(0.1) == pytest.approx(1.0, rel=1e-8)


def test_centering_ratio_alpha_three_halves():
    # alpha=1.5, Constant(1), cutoff 1: c(t)/a(t) = -3 + 2 t^(1/3) exactly, so
    # the limit -3 is approached at a slow t^(1-1/alpha) rate
    scale = NormingScale(make(1.5))
    t = 1e-8
    ratio = centering_c(scale, t) / scale.a(t)
    assert ratio == pytest.approx(-3.0 + 2.0 * t ** (1.0 / 3.0), rel=1e-9)
    # the deviation scales like (c t)^(1/3); a lighter tail constant puts the
    # ratio within 1e-3 of the limit at the same t
    scale_small = NormingScale(
        LevyMeasureSpec(1.5, SlowlyVarying.constant(1e-3)))
    assert centering_c(scale_small, t) / scale_small.a(t) == pytest.approx(
        -3.0, abs=1e-3)


def test_centering_alpha_one_log_branch():
    scale = NormingScale(make(1.0, cutoff=math.inf))
    got = centering_c(scale, 0.01, alpha_mode="one")
    assert got == pytest.approx(-0.01 * math.log(100.0), rel=1e-8)


# ---------------------------------------------------------------------------
# super-slow variation


T_GRID = np.geomspace(1e-4, 1e-16, 7)


def test_ssv_constant_is_exact():
    devs = ssv_diagnostic(SlowlyVarying.constant(2.0), 2.0, T_GRID)
    assert np.all(devs == 0.0)
    assert ssv_verdict(devs)


def test_ssv_exp_log_power_passes():
    devs = ssv_diagnostic(SlowlyVarying.exp_log_power(0.5), 2.0, T_GRID)
    assert np.all(np.diff(devs) < 0)
    assert ssv_verdict(devs)


def test_ssv_loglog_fails_with_floor():
    devs = ssv_diagnostic(SlowlyVarying.log_over_loglog(), 2.0, T_GRID)
    assert np.min(devs) >= 0.05
    assert not ssv_verdict(devs)


def test_ssv_domain_requires_small_t():
    with pytest.raises(DomainError):
        ssv_diagnostic(CONST1, 2.0, [0.5])


# ---------------------------------------------------------------------------
# parsing / construction


def test_parse_family_strings():
    assert SlowlyVarying.parse("constant:2").value(0.5) == 2.0
    assert SlowlyVarying.parse("log_power:1").kind == "log_power"
    assert SlowlyVarying.parse("loglog").kind == "log_over_loglog"
    with pytest.raises(ValueError):
        SlowlyVarying.parse("nope:1")


def test_spec_validation():
    with pytest.raises(DomainError):
        LevyMeasureSpec(2.5, CONST1)
    with pytest.raises(DomainError):
        LevyMeasureSpec(1.0, CONST1, neg_ratio=-0.5)
    with pytest.raises(DomainError):
        # infinite cutoff only meaningful for the pure power tail
        LevyMeasureSpec(1.0, SlowlyVarying.log_power(1.0), cutoff=math.inf)
