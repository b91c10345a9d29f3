import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stableconc import stable_bounds as sb
from stableconc.deviation_kernel import OptimizerParams
from stableconc.levy_core import AxisLevySpec, SpecError, StableSpec, c_alpha

E = math.e


def test_theorem1_cauchy_values():
    r = sb.theorem1_bound(100.0, 1.0, 1.0)
    assert r.raw_value == pytest.approx(4 * (1 + E) / 100, rel=1e-14)
    assert r.constants["threshold"] == pytest.approx(8 * (1 + E), rel=1e-14)
    assert r.valid and r.value == r.raw_value


@pytest.mark.parametrize("alpha", [0.2, 0.7, 1.0, 1.4, 1.9])
@pytest.mark.parametrize("lam", [0.3, 1.0, 5.0])
def test_theorem1_closed_form(alpha, lam):
    k1 = 4**alpha * (2 - alpha + E * alpha)
    thr = (2 * k1 * lam / (alpha * (2 - alpha))) ** (1 / alpha)
    for x in (0.5 * thr, thr * 1.0000001, 10 * thr):
        r = sb.theorem1_bound(x, alpha, lam)
        assert r.raw_value == pytest.approx(k1 * lam / (alpha * (2 - alpha) * x**alpha), rel=1e-13)
        assert r.constants["threshold"] == pytest.approx(thr, rel=1e-13)
        assert r.valid == (x >= thr)


def test_theorem1_below_threshold_still_computed():
    r = sb.theorem1_bound(1.0, 1.0, 1.0)
    assert not r.valid
    assert r.raw_value > 1 and r.value == 1.0


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(0.05, 1.95), lam=st.floats(0.01, 10), x=st.floats(0.1, 1e4))
def test_theorem1_general_default_is_theorem1(alpha, lam, x):
    a = sb.theorem1_bound(x, alpha, lam)
    b = sb.theorem1_general(x, alpha, lam, sb.theorem1_default_params(alpha))
    assert a.raw_value == b.raw_value and a.valid == b.valid
    assert a.constants["threshold"] == b.constants["threshold"]
    assert a.raw_value * x**alpha == pytest.approx(sb.theorem1_bound(2 * x, alpha, lam).raw_value * (2 * x) ** alpha)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.6])
def test_optimizer_never_worse_at_default_threshold(alpha):
    x = sb.theorem1_bound(1.0, alpha, 1.0).constants["threshold"] * (1 + 1e-12)
    default = sb.theorem1_bound(x, alpha, 1.0)
    best = sb.optimize_theorem1(x, alpha, 1.0)
    assert best.valid
    assert best.raw_value <= default.raw_value


def test_small_delta_pushes_threshold_out():
    thr = [sb.theorem1_general(1.0, 1.0, 1.0, OptimizerParams(2.0, d)).constants["threshold"] for d in (1e-2, 1e-4, 1e-8)]
    assert thr[0] < thr[1] < thr[2] and thr[2] > 1e7


def test_theorem2_value():
    r = sb.theorem2_bound(20.0, 1.8, 1.0)
    assert r.raw_value == pytest.approx((1 + 8 * E**2) / 20**1.8, rel=1e-14)
    assert r.raw_value == pytest.approx(0.2735964310648587, abs=1e-12)
    assert r.constants["threshold"] == pytest.approx(12.284, abs=1e-3)
    assert r.constants["M"] == pytest.approx(5.0)
    assert r.valid


def test_theorem2_threshold_closed_form():
    M = 5.0
    thr = (4 * M * math.log(M) * math.log(1 + 2 * M * math.log(M))) ** (1 / 1.8)
    assert sb.theorem2_threshold(1.8, 1.0) == pytest.approx(thr, rel=1e-14)


def test_theorem2_alpha_precondition():
    with pytest.raises(SpecError, match="alpha > 3/2"):
        sb.theorem2_bound(10.0, 1.5, 1.0)
    assert sb.theorem2_bound(100.0, 1.6, 1.0).constants["M"] == pytest.approx(2.5)


def test_theorem2_internals():
    it = sb.theorem2_internals(20.0, 1.8, 1.0)
    assert it.mean_shift == pytest.approx(20**-0.8 / 0.8, rel=1e-14)
    assert it.mean_shift == pytest.approx(0.11378526, rel=1e-7)
    assert it.x0_bracket[1] == pytest.approx(2 * it.x0_bracket[0])
    assert it.s0_bracket[0] <= it.s0 <= it.s0_bracket[1]
    assert it.K_bound < E
    assert it.branch_value <= it.branch_power_bound


@pytest.mark.parametrize("alpha", [1.55, 1.7, 1.9, 1.99])
def test_theorem2_K_bound_below_e_on_validity(alpha):
    thr = sb.theorem2_threshold(alpha, 1.0)
    for x in (thr, 3 * thr, 100 * thr):
        assert sb.theorem2_internals(x, alpha, 1.0).K_bound <= E * (1 + 1e-12)


def test_best_bound_prefers_theorem2_near_two():
    x = 1e3
    assert sb.best_bound(x, 1.95, 1.0).regime == "theorem2"
    assert sb.best_bound(x, 1.0, 1.0).regime == "theorem1"


def test_theorem3_arithmetic_oracle():
    a = mp.mpf("1.8")
    expected = ((2 * a) ** a * mp.mpf("0.1") ** a + a * (4 * a) ** (a / 2)) / (a * mp.mpf("0.5") ** a * 10**a)
    r = sb.theorem3_bound(10.0, 1.8, 1.0, sb.Theorem3Lipschitz(a2=1.0, c=0.1))
    assert r.raw_value == pytest.approx(float(expected), rel=1e-13)
    assert r.valid == (10**1.8 >= 4 * 7.2**0.8 * 0.1**0.8)


def test_theorem3_K4_limit():
    r = sb.theorem3_bound(10.0, 2 - 1e-9, 1.0, sb.Theorem3Lipschitz(1.0, 0.1))
    assert r.constants["K4"] == pytest.approx(32.0, rel=1e-7)


def test_theorem3_c_to_zero():
    a2 = 2.0
    r = sb.theorem3_bound(5.0, 1.7, 1.0, sb.Theorem3Lipschitz(a2, 1e-12))
    k5 = r.constants["K5"]
    assert r.raw_value == pytest.approx(k5 * a2 ** (1.7 / 2) / 5**1.7, rel=1e-9)
    thr = [sb.theorem3_bound(5.0, 1.7, 1.0, sb.Theorem3Lipschitz(a2, c)).constants["threshold"] for c in (1e-2, 1e-12)]
    assert thr[1] / thr[0] == pytest.approx(1e-10 ** (0.7 / 1.7), rel=1e-10)


@pytest.mark.parametrize("alpha", [1.51, 1.7, 1.99])
def test_theorem3_stated_threshold_covers_general_K(alpha):
    # for alpha > 3/2 the stated K = 1/2 condition implies the general one
    lip = sb.Theorem3Lipschitz(1.0, 0.3)
    stated = sb.theorem3_bound(4.0, alpha, 2.0, lip).constants["threshold"]
    general = sb.theorem3_bound(4.0, alpha, 2.0, lip, K=0.5 + 1e-12).constants["threshold"]
    assert general <= stated
    expected = (2 * (4 * alpha) ** (alpha - 1) / (alpha - 1) * 0.3 ** (alpha - 1) * 2.0) ** (1 / alpha)
    assert general == pytest.approx(expected, rel=1e-9)


def test_compute_a2_closed_form():
    lip = sb.compute_a2_for_family(AxisLevySpec(1.8, 1, 1.0), 1.0)
    exact = 2 * (2**0.2 / 0.2 + 4 * 2**-1.8 / 1.8)
    assert lip.a2 == pytest.approx(exact, rel=1e-10)
    assert lip.c == 1.0


def test_compute_a2_scaling():
    base = sb.compute_a2_for_family(AxisLevySpec(1.6, 3, 0.5), 0.7).a2
    assert sb.compute_a2_for_family(AxisLevySpec(1.6, 3, 1.5), 0.7).a2 == pytest.approx(3 * base, rel=1e-10)
    tiny = sb.compute_a2_for_family(AxisLevySpec(1.6, 3, 0.5), 0.7e-8).a2
    assert tiny == pytest.approx(base * 1e-8**0.4, rel=1e-10)
    assert sb.compute_a2_for_family(AxisLevySpec(1.6, 4, 0.5), 0.7).c == pytest.approx(0.5)


def test_mean_median_gap():
    assert sb.mean_median_gap(1.5, 1.0) == pytest.approx(84.8, abs=0.3)
    gaps = [sb.mean_median_gap(a, 1.0) for a in (1.5, 1.1, 1.01, 1.001)]
    assert all(g1 < g2 for g1, g2 in zip(gaps, gaps[1:]))
    assert sb.mean_median_gap(1.5, 1e-8) < 1e-3
    with pytest.raises(SpecError):
        sb.mean_median_gap(0.9, 1.0)


def test_regvar():
    one = sb.SlowlyVaryingSpec(lambda x: 1.0)
    log = sb.SlowlyVaryingSpec(lambda x: math.log(E + x))
    for x in (1.0, 50.0, 1e4):
        base = sb.theorem1_bound(x, 1.2, 0.7)
        r1 = sb.regvar_bound(x, 1.2, 0.7, one)
        assert r1.raw_value == base.raw_value and r1.valid == base.valid
        rl = sb.regvar_bound(x, 1.2, 0.7, log)
        assert rl.raw_value == pytest.approx(base.raw_value * math.log(E + x), rel=1e-15)
        assert rl.valid <= base.valid


def test_slowly_varying_range_checked():
    sv = sb.SlowlyVaryingSpec(lambda x: 1.0, x_min=1.0, x_max=10.0)
    with pytest.raises(SpecError):
        sb.regvar_bound(20.0, 1.0, 1.0, sv)
    with pytest.raises(SpecError):
        sb.regvar_bound(5.0, 1.0, 1.0, sb.SlowlyVaryingSpec(lambda x: -1.0))


def test_tail_constant_A():
    assert sb.tail_constant_A(1.0) == pytest.approx(1 / math.pi, rel=1e-15)
    assert sb.tail_constant_A(0.5) == pytest.approx(0.5 / (2 * math.gamma(1.5) * math.cos(math.pi / 4)), rel=1e-14)
    for a in (1 - 1e-4, 1 + 1e-4):
        assert sb.tail_constant_A(a) == pytest.approx(1 / math.pi, abs=1e-6 + 1e-4)


@pytest.mark.parametrize("alpha", [0.4, 0.9, 1.3, 1.8])
def test_tail_constant_against_gamma_sine_form(alpha):
    # Gamma(alpha) sin(pi alpha / 2) / pi
    assert sb.tail_constant_A(alpha) == pytest.approx(math.gamma(alpha) * math.sin(math.pi * alpha / 2) / math.pi, rel=1e-13)
    assert c_alpha(alpha) * sb.tail_constant_A(alpha) == pytest.approx(1 / (2 * alpha), rel=1e-13)


def test_sharpness_and_norm_limits():
    assert sb.sharpness_limit_1d(1.0, 0.5) == pytest.approx(0.5, rel=1e-15)
    assert sb.sharpness_limit_1d(1.3, 1.0) == pytest.approx(2 * sb.sharpness_limit_1d(1.3, 0.5))
    sigma = math.pi / 2
    exact = 100 * (0.5 - math.atan(100 / sigma) / math.pi)
    assert exact == pytest.approx(sb.sharpness_limit_1d(1.0, 0.5), rel=1e-2)
    spec = StableSpec.cauchy_1d()
    assert sb.araujo_gine_limit(spec) == pytest.approx(0.5, rel=1e-15)
    # two-sided 1-d constant is twice the stated value
    assert 2 * sb.sharpness_limit_1d(1.0, 0.5) == pytest.approx(2 * sb.araujo_gine_limit(spec))


def test_bound_result_clamps():
    r = sb.BoundResult(1.0, 7.0, True, "theorem1")
    assert r.value == 1.0
    with pytest.raises(SpecError):
        sb.BoundResult(1.0, float("nan"), True, "theorem1")
