"""Tests for the exact maximum-jump law and the exponential tail bounds."""

import math

import numpy as np
import pytest

from levysup import LevyMeasureSpec, NormingScale, SlowlyVarying, DomainError
from levysup.exact_dist import (
    CdfCurve,
    Eq2Bound,
    frechet_cdf,
    mt_cdf_exact,
    prop1_bound_eq1,
    prop1_bound_eq2,
    stable_mt_cdf,
)

STABLE1 = LevyMeasureSpec(1.0, SlowlyVarying.constant(1.0), cutoff=math.inf)


def test_mt_cdf_stable_point():
    scale = NormingScale(STABLE1)
    got = mt_cdf_exact(STABLE1, scale, math.exp(-1.0), 2.0)
    assert got == pytest.approx(math.exp(-1.0), abs=1e-9)


def test_mt_cdf_beyond_cutoff_is_one():
    spec = LevyMeasureSpec(1.0, SlowlyVarying.constant(1.0))
    scale = NormingScale(spec)
    assert mt_cdf_exact(spec, scale, 0.5, 1.0 / scale.a(0.5) + 5.0) == 1.0


def test_mt_cdf_riemann_oracle_log_power():
    spec = LevyMeasureSpec(0.5, SlowlyVarying.log_power(1.0))
    scale = NormingScale(spec)
    t, x = 1e-3, 1.0
    v = np.linspace(0.0, -math.log(t), 1_000_001)
    u = np.exp(-v)
    z = np.array([scale.a(float(ui)) for ui in u[::1000]])  # coarse a, then
    # interpolate a on the fine grid in log-log space (a is smooth there)
    a_fine = np.exp(np.interp(np.log(u), np.log(u[::1000][::-1]),
                              np.log(z[::-1])))
    zz = a_fine * x
    tail = np.where(zz < 1.0, zz**-0.5 * (-np.log(np.minimum(zz, 1 - 1e-300))),
                    0.0)
    integral = np.trapezoid(u * tail, v)
    zb = scale.a(t) * x
    boundary = t * zb**-0.5 * (-math.log(zb))
    oracle = math.exp(-integral - boundary)
    assert mt_cdf_exact(spec, scale, t, x) == pytest.approx(oracle, rel=1e-5)


def test_mt_cdf_monotone_in_x_and_t():
    spec = LevyMeasureSpec(0.5, SlowlyVarying.log_power(1.0))
    scale = NormingScale(spec)
    xs = np.linspace(0.3, 5.0, 15)
    for t_big, t_small in [(1e-2, 1e-3), (1e-3, 1e-4)]:
        big = np.array([mt_cdf_exact(spec, scale, t_big, x) for x in xs])
        small = np.array([mt_cdf_exact(spec, scale, t_small, x) for x in xs])
        assert np.all(np.diff(big) >= -1e-14)
        assert np.all(small <= big + 1e-12)


def test_mt_cdf_domain():
    scale = NormingScale(STABLE1)
    with pytest.raises(DomainError):
        mt_cdf_exact(STABLE1, scale, 1.0, 1.0)
    with pytest.raises(DomainError):
        mt_cdf_exact(STABLE1, scale, 0.5, 0.0)


def test_stable_identity_cross_oracle():
    for alpha in (0.5, 1.0, 1.5):
        spec = LevyMeasureSpec(alpha, SlowlyVarying.constant(1.0),
                               cutoff=math.inf)
        scale = NormingScale(spec)
        for t in (1e-1, 1e-3, 1e-6):
            for x in (0.5, 1.0, 2.0):
                assert mt_cdf_exact(spec, scale, t, x) == pytest.approx(
                    stable_mt_cdf(t, x, alpha), abs=1e-9)


def test_stable_normalized_identity():
    # P(M_t <= x (1 - log t)^(1/alpha)) = exp(-x^(-alpha)) for every t
    for alpha in (0.5, 1.0, 1.5):
        spec = LevyMeasureSpec(alpha, SlowlyVarying.constant(1.0),
                               cutoff=math.inf)
        scale = NormingScale(spec)
        for t in (1e-1, 1e-2, 1e-4, 1e-6):
            for x in (0.5, 1.0, 2.0):
                lvl = x * (1.0 - math.log(t)) ** (1.0 / alpha)
                got = mt_cdf_exact(spec, scale, t, lvl)
                assert abs(got - frechet_cdf(x, alpha)) <= 1e-8


def test_stable_mt_cdf_examples():
    assert stable_mt_cdf(math.exp(-1.0), 2.0, 1.0) == pytest.approx(
        math.exp(-1.0))
    assert stable_mt_cdf(0.5, 1.0, 1.0) == pytest.approx(
        math.exp(-(1.0 + math.log(2.0))))


def test_frechet_cdf():
    assert frechet_cdf(1.0, 1.0) == pytest.approx(math.exp(-1.0))
    assert frechet_cdf(1e12, 1.0) == pytest.approx(1.0)
    assert frechet_cdf(-3.0, 0.5) == 0.0
    with pytest.raises(DomainError):
        frechet_cdf(1.0, 2.0)


def test_prop1_eq1_example():
    spec = LevyMeasureSpec(1.0, SlowlyVarying.constant(1.0))
    got = prop1_bound_eq1(spec, 0.1, 0.2, 0.01, 1)
    # B(0.1) = 0.1; inner ratio = 0.01*0.1*1/(0.1*0.2) = 0.05
    want = math.exp((0.2 / (2.0 * 0.1)) * (1.0 + math.log(0.05)))
    assert got == pytest.approx(want, rel=1e-10)


def test_prop1_eq1_limits():
    spec = LevyMeasureSpec(1.0, SlowlyVarying.constant(1.0))
    small = prop1_bound_eq1(spec, 0.1, 50.0, 0.01, 1)
    assert small < 1e-100
    # for small b/a the p=1 bound is the tightest member of the family; the
    # (p!)^(1/p) growth dominates the exponent tightening there
    p1 = prop1_bound_eq1(spec, 0.1, 0.2, 0.01, 1)
    p20 = prop1_bound_eq1(spec, 0.1, 0.2, 0.01, 20)
    assert p1 < 1.0 < p20


def test_prop1_eq1_can_be_vacuous():
    spec = LevyMeasureSpec(1.0, SlowlyVarying.constant(1.0))
    assert prop1_bound_eq1(spec, 0.5, 1e-4, 0.9, 1) > 1.0


def test_prop1_eq2_example():
    spec = LevyMeasureSpec(1.0, SlowlyVarying.constant(1.0))
    got = prop1_bound_eq2(spec, 0.1, 0.2, 0.01)
    assert got == Eq2Bound(pytest.approx(math.exp(-20.0), rel=1e-10), False)


def test_prop1_eq2_edge_cases():
    spec = LevyMeasureSpec(1.0, SlowlyVarying.constant(1.0), neg_ratio=0.0)
    assert prop1_bound_eq2(spec, 0.1, 0.0, 0.01).value == 1.0
    assert prop1_bound_eq2(spec, 0.1, 0.2, 0.01, "-") == Eq2Bound(0.0, True)
    bs = [prop1_bound_eq2(spec, 0.1, b, 0.01).value
          for b in np.linspace(0.0, 1.0, 9)]
    assert all(x <= y + 1e-15 for x, y in zip(bs[1:], bs))
    assert max(bs) <= 1.0


def test_cdf_curve_validation_and_csv(tmp_path):
    x = np.array([0.5, 1.0, 2.0])
    curve = CdfCurve(x, np.array([0.1, 0.4, 0.9]), meta={"t": 0.01})
    out = tmp_path / "curve.csv"
    curve.to_csv(out)
    back = np.loadtxt(out, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(back[:, 0], x)
    with pytest.raises(ValueError):
        CdfCurve(x, np.array([0.5, 0.4, 0.9]))
    with pytest.raises(ValueError):
        CdfCurve(np.array([-1.0, 1.0, 2.0]), np.array([0.1, 0.2, 0.3]))
