import math
import warnings
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import field_laplacian_brute, laplacian_brute, omega2_brute
from selfsim.affine import ChainParams
from selfsim.dispersion import omega2_cycles
from selfsim.errors import BandError
from selfsim.laplacian import (
    AnalyticProbe,
    ConditioningWarning,
    Field,
    FieldOperator,
    elastic_energy_density,
    laplacian_apply_analytic,
    laplacian_apply_field,
    laplacian_scaling_check,
    spectral_multiplier,
    total_elastic_energy,
)


def grid_omega2(n, dx, m, p):
    return omega2_cycles(Fraction(m) * Fraction(p.h) / (n * Fraction(dx)), p, 1e-14)[0]


# ---------------------------------------------------------------- analytic probes


def test_constant_probe_gives_zero():
    value, trunc = laplacian_apply_analytic(AnalyticProbe.constant(3.0), ChainParams(1.5, 0.7), 0.4)
    assert abs(value) <= trunc.tail_bound


@pytest.mark.parametrize("x", [0.0, 0.7, -3.1])
def test_cosine_eigenrelation(x):
    p = ChainParams(1.5, 0.7)
    period = 5.0  # exact, so the probe's phases are exact too
    value, trunc = laplacian_apply_analytic(AnalyticProbe.cosine(period), p, x, 1e-12)
    w2 = omega2_brute(None, 1.5, 0.7, cycles=Fraction(1, 5))
    assert abs(value + w2 * math.cos(2 * math.pi * x / period)) <= trunc.tail_bound + 1e-13


def test_gaussian_matches_wide_window():
    p = ChainParams(1.5, 1.0)
    value, trunc = laplacian_apply_analytic(AnalyticProbe.gaussian(1.0), p, 0.0, 1e-8)
    ref = laplacian_brute(lambda y: mp.exp(-y * y), 0.0, 1.5, 1.0, 1.0, -300, 300)
    assert trunc.tail_bound <= 1e-8
    assert abs(value - ref) <= trunc.tail_bound


def test_probe_without_metadata_uses_probed_bounds():
    p = ChainParams(1.5, 0.9)
    bare = AnalyticProbe(lambda y: np.exp(-np.asarray(y) ** 2 / 2.0))
    value, trunc = laplacian_apply_analytic(bare, p, 0.3, 1e-8)
    ref = laplacian_brute(lambda y: mp.exp(-y * y / 2), 0.3, 1.5, 0.9, 1.0, -300, 300)
    assert abs(value - ref) <= trunc.tail_bound


def test_analytic_rejects_band():
    with pytest.raises(BandError):
        laplacian_apply_analytic(AnalyticProbe.gaussian(), ChainParams(1.5, 2.0), 0.0)


def test_conditioning_warning_near_band_edge():
    with pytest.warns(ConditioningWarning):
        laplacian_apply_analytic(AnalyticProbe.gaussian(), ChainParams(1.5, 1.99), 0.0, 1e-6)


@pytest.mark.parametrize(
    "probe, delta",
    [(AnalyticProbe.cosine(3.0), 0.7), (AnalyticProbe.constant(), 0.7), (AnalyticProbe.gaussian(0.8), 1.3)],
)
def test_scaling_check(probe, delta):
    res, bound = laplacian_scaling_check(probe, ChainParams(1.5, delta), 0.25)
    assert res <= bound + 1e-14


# ---------------------------------------------------------------- fields


def test_field_validation():
    with pytest.raises(ValueError):
        Field(np.zeros(1), 1.0)
    with pytest.raises(ValueError):
        Field(np.zeros(4), 0.0)
    with pytest.raises(ValueError):
        Field(np.zeros(4), 1.0, periodic=False)


def test_constant_field_gives_zero():
    out = laplacian_apply_field(Field(np.full(16, 2.5), 0.5), ChainParams(1.5, 0.5))
    assert np.max(np.abs(out.samples)) <= out.err + 1e-14


@pytest.mark.parametrize("n, m", [(32, 1), (32, 5), (33, 16), (32, 16)])
def test_field_mode_eigenrelation(n, m):
    p = ChainParams(1.5, 0.7)
    u = Field.mode(n, 0.7, m)
    out = laplacian_apply_field(u, p, 1e-12)
    w2 = grid_omega2(n, 0.7, m, p)
    assert np.max(np.abs(out.samples + w2 * u.samples)) <= out.err + 1e-13 * w2


def test_field_matches_dense_oracle():
    rng = np.random.default_rng(0)
    u = rng.standard_normal(32)
    out = laplacian_apply_field(Field(u, 1.0), ChainParams(1.5, 0.5), 1e-12)
    ref = field_laplacian_brute(u, 1.0, 1.5, 0.5, 1.0, -100, 180)
    assert np.max(np.abs(out.samples - ref)) <= out.err + 1e-13


@pytest.mark.parametrize("order", [3, 5, 7])
def test_lagrange_matches_oracle_within_estimate(order):
    p = ChainParams(1.5, 0.8)
    n, dx = 64, 1.0
    x = np.arange(n) * dx
    u = np.exp(-((x - 32.0) / 6.0) ** 2)
    out = laplacian_apply_field(Field(u, dx), p, 1e-10, interp="lagrange", order=order)
    ref = laplacian_apply_field(Field(u, dx), p, 1e-12)
    assert np.max(np.abs(out.samples - ref.samples)) <= out.err


def test_lagrange_converges_with_order():
    p = ChainParams(1.5, 0.8)
    x = np.arange(64)
    u = Field(np.exp(-((x - 32.0) / 6.0) ** 2), 1.0)
    ref = laplacian_apply_field(u, p, 1e-12).samples
    errs = [np.max(np.abs(laplacian_apply_field(u, p, 1e-10, "lagrange", k).samples - ref)) for k in (3, 5, 7, 9)]
    assert errs == sorted(errs, reverse=True)


def test_bad_interpolation_order():
    u = Field(np.zeros(8), 1.0)
    for order in (2, 0, 9):
        with pytest.raises(ValueError):
            laplacian_apply_field(u, ChainParams(1.5, 1.0), interp="lagrange", order=order)
    with pytest.raises(ValueError):
        laplacian_apply_field(u, ChainParams(1.5, 1.0), interp="spline")


def test_operator_eigenvalues_match_multiplier():
    p = ChainParams(1.3, 1.1)
    op = FieldOperator(24, 0.4, p)
    w2, _ = spectral_multiplier(24, 0.4, p)
    assert np.array_equal(op.eigenvalues(), -w2)
    lag = FieldOperator(24, 0.4, p, interp="lagrange", order=7)
    impulse = np.zeros(24)
    impulse[3] = 1.0
    # symmetric circulant: the impulse response is even about its source
    r = np.roll(lag(impulse), -3)
    assert np.allclose(r[1:], r[1:][::-1], atol=1e-14)


def test_operator_grid_mismatch():
    op = FieldOperator(16, 1.0, ChainParams(1.5, 1.0))
    with pytest.raises(ValueError):
        op.apply(np.zeros(8))
    with pytest.raises(ValueError):
        op.apply_field(Field(np.zeros(16), 0.5))


field_st = st.integers(8, 40).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-1, 1), min_size=n, max_size=n),
        st.lists(st.floats(-1, 1), min_size=n, max_size=n),
    )
)


@settings(max_examples=30, deadline=None)
@given(field_st, st.floats(0.1, 1.9), st.floats(1.2, 2.5), st.sampled_from(["fourier", "lagrange"]))
def test_semidefinite_and_symmetric(uv, delta, N, interp):
    u, v = (Field(np.array(a), 0.6) for a in uv)
    p = ChainParams(N, delta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        lu = laplacian_apply_field(u, p, 1e-12, interp, 3)
        lv = laplacian_apply_field(v, p, 1e-12, interp, 3)
    scale = 1e-12 * (1 + float(np.sum(np.abs(lu.samples)) + np.sum(np.abs(lv.samples))))
    assert u.inner(lu) <= scale
    assert abs(v.inner(lu) - u.inner(lv)) <= scale


# ---------------------------------------------------------------- energy


def test_energy_of_constant_is_zero():
    V = elastic_energy_density(Field(np.full(10, -4.0), 0.3), ChainParams(1.5, 0.9))
    assert np.all(V.samples == 0.0)


def test_energy_density_scaling_in_h():
    rng = np.random.default_rng(3)
    u = Field(rng.standard_normal(24), 0.5)
    p = ChainParams(1.5, 0.8, 0.7)
    v1 = elastic_energy_density(u, p, 1e-13)
    v2 = elastic_energy_density(u, p.with_h(float(Fraction(0.7) * Fraction(1.5))), 1e-13)
    assert np.max(np.abs(v2.samples - v1.samples / p.xi)) <= 1e-11 * np.max(v1.samples) + v1.err / p.xi + v2.err


def test_single_mode_energy():
    n, dx, m, A = 32, 0.5, 3, 1.7
    p = ChainParams(1.5, 0.6)
    E = total_elastic_energy(Field.mode(n, dx, m, A), p, 1e-13)
    w2 = grid_omega2(n, dx, m, p)
    assert E == pytest.approx(0.5 * A**2 * w2 * n * dx / 2, rel=1e-12)


def test_single_mode_energy_by_direct_summation():
    # V summed directly from shifted cosines, independent of the grid machinery
    n, dx, m = 16, 1.0, 2
    p = ChainParams(1.5, 1.0)
    k = 2 * math.pi * m / (n * dx)
    x = np.arange(n) * dx
    with mp.workdps(80):
        V = np.zeros(n)
        for s in range(-120, 121):
            a = mp.mpf(1.5) ** s
            w = float(mp.mpf(1.5) ** -s)
            for j in range(n):
                xj = mp.mpf(x[j])
                d1 = mp.cos(k * xj) - mp.cos(k * (xj + a))
                d2 = mp.cos(k * xj) - mp.cos(k * (xj - a))
                V[j] += 0.5 * w * float(d1 * d1 + d2 * d2)
    ref = 0.5 * float(np.sum(V)) * dx
    assert total_elastic_energy(Field.mode(n, dx, m), p, 1e-13) == pytest.approx(ref, rel=1e-10)


def test_energy_nonnegative_density():
    rng = np.random.default_rng(9)
    V = elastic_energy_density(Field(rng.standard_normal(30), 0.2), ChainParams(2.0, 1.5), 1e-12)
    assert np.all(V.samples >= -V.err)


@settings(max_examples=25, deadline=None)
@given(field_st, st.floats(0.05, 1.95), st.floats(1.2, 2.5))
def test_energy_identity(uv, delta, N):
    u = Field(np.array(uv[0]), 0.8)
    p = ChainParams(N, delta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        lu = laplacian_apply_field(u, p, 1e-12)
        E = total_elastic_energy(u, p, 1e-12)
    lhs = -u.inner(lu)
    assert abs(lhs - 2 * E) <= 1e-9 * max(lhs, 1e-300) + 1e-14
