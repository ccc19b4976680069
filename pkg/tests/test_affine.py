import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selfsim.affine import (
    AdmissibleFunctionSpec,
    ChainParams,
    TruncationSpec,
    affine_apply,
    self_similar_sum,
    validate_band,
)
from selfsim.errors import BandError, NonConvergenceError



def one_minus_cos(t):
    # 1 - cos t written without cancellation at small t
    return 2.0 * math.sin(0.5 * t) ** 2


ONE_MINUS_COS = AdmissibleFunctionSpec(one_minus_cos, alpha=2.0, beta=0.0, a0=0.5, c_inf=2.0)
# same generator with |f'| <= 1 declared, so argument rounding is charged too
ONE_MINUS_COS_L = AdmissibleFunctionSpec(one_minus_cos, alpha=2.0, beta=0.0, a0=0.5, c_inf=2.0, lipschitz=1.0)


def brute_sum(f, N, delta, t, lo=-200, hi=200):
    return math.fsum(math.exp(-delta * s * math.log(N)) * f(N**s * t) for s in range(lo, hi + 1))


def test_params_derived_quantities():
    p = ChainParams(1.5, 0.7, 2.0)
    assert p.xi == pytest.approx(1.5**-0.7)
    assert p.lam == pytest.approx(1.5**0.7)
    assert p.epsilon == math.log(1.5)
    assert 0 < p.xi < 1


@pytest.mark.parametrize("N", [1.0, 0.5, float("nan"), float("inf")])
def test_params_reject_bad_scale(N):
    with pytest.raises(BandError):
        ChainParams(N, 1.0)


def test_params_reject_bad_length():
    with pytest.raises(BandError):
        ChainParams(1.5, 1.0, 0.0)


def test_params_allow_delta_outside_wave_band():
    p = ChainParams(1.5, 2.5)
    with pytest.raises(BandError, match="0 < delta < 2"):
        p.require_wave_band()


def test_truncation_spec_invariants():
    assert TruncationSpec(-3, 4, 0.0).n_terms == 8
    with pytest.raises(ValueError):
        TruncationSpec(1, 4, 0.0)
    with pytest.raises(ValueError):
        TruncationSpec(-1, 4, -1e-3)


@pytest.mark.parametrize(
    "f, N, s, t, expected",
    [
        (lambda t: t, 2.0, 1, 3.0, 6.0),
        (lambda t: t, 2.0, 0, 3.0, 3.0),
        (math.sin, 1.5, 2, 1.0, math.sin(2.25)),
    ],
)
def test_affine_apply(f, N, s, t, expected):
    assert affine_apply(f, ChainParams(N, 1.0), s, t) == pytest.approx(expected, rel=1e-15)


def test_affine_apply_needs_positive_argument():
    with pytest.raises(ValueError):
        affine_apply(math.sin, ChainParams(1.5, 1.0), 1, 0.0)


def test_band_accepts_inside():
    check = validate_band(ONE_MINUS_COS, ChainParams(1.5, 1.2))
    assert check.accepted and check.band == (0.0, 2.0)


def test_band_rejects_upper_edge():
    check = validate_band(ONE_MINUS_COS, ChainParams(1.5, 2.0))
    assert not check and "delta < alpha" in check.reason


def test_band_rejects_below_beta():
    spec = AdmissibleFunctionSpec(math.sqrt, alpha=1.0, beta=0.5, a0=1.0, c_inf=1.0)
    check = validate_band(spec, ChainParams(1.5, 0.3))
    assert not check and "beta < delta" in check.reason


def test_spec_requires_nonempty_band():
    with pytest.raises(BandError):
        AdmissibleFunctionSpec(math.sin, alpha=0.0, beta=1.0, a0=1.0, c_inf=1.0)


def test_asymptotic_probe():
    assert ONE_MINUS_COS.check_asymptotics()
    wrong = AdmissibleFunctionSpec(lambda t: t**3, alpha=2.0, beta=0.0, a0=1.0, c_inf=1.0)
    assert not wrong.check_asymptotics()


def test_sum_matches_wide_window():
    p = ChainParams(1.5, 1.0)
    value, trunc = self_similar_sum(ONE_MINUS_COS, p, 1.0, 1e-10)
    assert trunc.tail_bound <= 1e-10
    assert value == pytest.approx(brute_sum(ONE_MINUS_COS.f, 1.5, 1.0, 1.0), abs=1e-10)


def test_sum_of_zero_function():
    zero = AdmissibleFunctionSpec(lambda t: 0.0, alpha=2.0, beta=0.0, a0=0.0, c_inf=0.0)
    value, _ = self_similar_sum(zero, ChainParams(1.5, 1.0), 2.0, 1e-10)
    assert value == 0.0


def test_sum_is_self_similar():
    p = ChainParams(1.5, 0.7)
    a, ta = self_similar_sum(ONE_MINUS_COS_L, p, 1.5 * 0.3, 1e-10)
    b, tb = self_similar_sum(ONE_MINUS_COS_L, p, 0.3, 1e-10)
    assert abs(a - p.lam * b) <= 2 * max(ta.tail_bound, tb.tail_bound) * max(1.0, p.lam)


def test_sum_rejects_band_violation():
    with pytest.raises(BandError):
        self_similar_sum(ONE_MINUS_COS, ChainParams(1.5, 2.5), 1.0, 1e-10)


def test_sum_detects_envelope_violation():
    # grows like t**1 while claiming bounded growth
    liar = AdmissibleFunctionSpec(lambda t: t if t > 1 else t * t, alpha=2.0, beta=0.0, a0=1.0, c_inf=1.0)
    with pytest.raises(NonConvergenceError):
        self_similar_sum(liar, ChainParams(1.5, 1.0), 1.0, 1e-10)


def test_rounding_charge_only_with_lipschitz():
    p = ChainParams(1.5, 0.5)
    _, plain = self_similar_sum(ONE_MINUS_COS, p, 1.0, 1e-10)
    _, charged = self_similar_sum(ONE_MINUS_COS_L, p, 1.0, 1e-10)
    assert plain.tail_bound <= 1e-10 < charged.tail_bound


def test_tail_bound_is_a_true_bound():
    p = ChainParams(1.5, 0.7)
    value, trunc = self_similar_sum(ONE_MINUS_COS, p, 0.8, 1e-8)
    wide = brute_sum(ONE_MINUS_COS.f, 1.5, 0.7, 0.8, trunc.s_min - 50, trunc.s_max + 50)
    assert abs(wide - value) <= trunc.tail_bound


def test_index_reversal_leaves_value_unchanged():
    # (N, Lambda) -> (1/N, 1/Lambda) reorders the same terms
    N, d, t = 1.5, 0.9, 0.7
    forward = brute_sum(ONE_MINUS_COS.f, N, d, t, -150, 150)
    reverse = math.fsum((1 / N) ** (-d * s) * ONE_MINUS_COS.f((1 / N) ** s * t) for s in range(-150, 151))
    value, trunc = self_similar_sum(ONE_MINUS_COS, ChainParams(N, d), t, 1e-10)
    assert forward == pytest.approx(reverse, rel=1e-14)
    assert abs(value - reverse) <= trunc.tail_bound + 1e-13


@settings(max_examples=40, deadline=None)
@given(
    st.floats(1.1, 3.0),
    st.floats(0.05, 1.95),
    st.floats(0.01, 50.0),
)
def test_self_similarity_property(N, delta, t):
    p = ChainParams(N, delta)
    a, ta = self_similar_sum(ONE_MINUS_COS_L, p, N * t, 1e-9)
    b, tb = self_similar_sum(ONE_MINUS_COS_L, p, t, 1e-9)
    # the rounding of N * t is inside the 4 ulp per argument charged by the sum
    assert abs(a - p.lam * b) <= (1 + p.lam) * max(ta.tail_bound, tb.tail_bound)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 1.9), st.floats(0.05, 20.0))
def test_linearity_property(c1, c2, delta, t):
    f2 = AdmissibleFunctionSpec(lambda x: math.sin(x) ** 2, alpha=2.0, beta=0.0, a0=1.0, c_inf=1.0)
    combo = AdmissibleFunctionSpec(
        lambda x: c1 * ONE_MINUS_COS.f(x) + c2 * f2.f(x),
        alpha=2.0, beta=0.0, a0=abs(c1) * 0.5 + abs(c2), c_inf=2 * abs(c1) + abs(c2),
    )
    # combination and parts see identical arguments, so rounding cancels
    p = ChainParams(1.5, delta)
    tol = 1e-9
    whole, tw = self_similar_sum(combo, p, t, tol)
    a, ta = self_similar_sum(ONE_MINUS_COS, p, t, tol)
    b, tb = self_similar_sum(f2, p, t, tol)
    bound = tw.tail_bound + abs(c1) * ta.tail_bound + abs(c2) * tb.tail_bound
    assert abs(whole - (c1 * a + c2 * b)) <= bound + 1e-12 * (abs(c1 * a) + abs(c2 * b) + 1)
