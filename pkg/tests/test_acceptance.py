"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test records a PASS/FAIL line that is printed in the terminal summary.
"""

import io
import math
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from selfsim import cli
from selfsim import io as sio
from selfsim.affine import ChainParams
from selfsim.continuum import (
    c_constant,
    density_empirical_check,
    fractional_laplacian_integral,
    kernel_convolution,
    long_wave_omegas,
    riemann_liouville,
)
from selfsim.dimension import dimension_curve, estimate_dimension
from selfsim.dispersion import long_wave_ratio, omega2, omega2_cycles, scaling_residual
from selfsim.laplacian import AnalyticProbe, ConditioningWarning, laplacian_apply_analytic
from selfsim.simulate import (
    SimRun,
    SpectralState,
    dalembert_residual,
    evolve_realspace,
    evolve_spectral,
    preset_gaussian,
    preset_mode,
    simulate,
    stability_limit,
)


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def test_criterion_1_scaling_law(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    with Clock() as clk:
        for _ in range(200):
            kh = float(rng.uniform(1e-3, 30.0))
            p = ChainParams(float(rng.uniform(1.1, 3.0)), float(rng.uniform(0.05, 1.95)))
            res, _ = scaling_residual(kh, p, 1, 1e-10)
            worst = max(worst, res / ((1.0 + p.lam) * 1e-10))
    ok = worst <= 1.0 and clk.seconds < 10
    report(1, ok, clk.seconds, 10, f"worst residual / bound = {worst:.3e}")
    assert ok


def test_criterion_2_eigenrelation(report):
    rng = np.random.default_rng(7)
    worst = 0.0
    with Clock() as clk, warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        for _ in range(50):
            p = ChainParams(float(rng.uniform(1.1, 3.0)), float(rng.uniform(0.05, 1.95)), float(rng.uniform(0.5, 2.0)))
            period = float(rng.uniform(1.0, 40.0))
            x = float(rng.uniform(-10.0, 10.0))
            value, _ = laplacian_apply_analytic(AnalyticProbe.cosine(period), p, x, 1e-12)
            w2, _ = omega2_cycles(Fraction(p.h) / Fraction(period), p, 1e-14)
            c = math.cos(2 * math.pi * x / period)
            worst = max(worst, abs(value + w2 * c) / w2)
    ok = worst < 1e-8 and clk.seconds < 10
    report(2, ok, clk.seconds, 10, f"worst relative residual = {worst:.3e}")
    assert ok


def test_criterion_3_continuum_constant(report):
    with Clock() as clk:
        c1 = c_constant(1.0)
        ratio = long_wave_ratio(ChainParams(1.01, 1.0), 1e-3)
    e1 = abs(c1 - math.pi)
    e2 = abs(ratio / math.pi - 1.0)
    ok = e1 < 1e-8 and e2 < 0.05 and clk.seconds < 5
    report(3, ok, clk.seconds, 5, f"|C(1) - pi| = {e1:.2e}, long-wave ratio off pi by {e2:.2%}")
    assert ok


def test_criterion_4_density_power_law(report):
    slopes = {}
    with Clock() as clk:
        for d in (0.5, 1.0, 1.5):
            p = ChainParams(1.01, d)
            slopes[d] = density_empirical_check(p, long_wave_omegas(p))
    rel = {d: abs(s / (2 / d - 1) - 1) for d, s in slopes.items()}
    ok = max(rel.values()) < 0.05 and clk.seconds < 30
    detail = ", ".join(f"delta={d}: slope {s:.4f} (expect {2 / d - 1:g})" for d, s in slopes.items())
    report(4, ok, clk.seconds, 30, detail)
    assert ok


def test_criterion_5_representations(report):
    probe = AnalyticProbe.gaussian(1.0)
    worst = 0.0
    with Clock() as clk, warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        for d in (0.5, 1.0, 1.5):
            p = ChainParams(1.001, d)
            discrete, _ = laplacian_apply_analytic(probe, p, 0.0, 1e-10)
            direct = fractional_laplacian_integral(probe, p, 0.0)
            conv = kernel_convolution(probe, p, 0.0)
            for a, b in ((discrete, direct), (discrete, conv), (direct, conv)):
                worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
    ok = worst < 0.01 and clk.seconds < 30
    report(5, ok, clk.seconds, 30, f"worst pairwise relative gap = {worst:.3e}")
    assert ok


def test_criterion_6_fractal_dimension(report):
    with Clock() as clk:
        D = {d: estimate_dimension(dimension_curve(ChainParams(1.5, d))).D_estimated for d in (0.1, 0.5, 0.9, 1.2)}
    ok = 1.35 <= D[0.5] <= 1.65 and D[0.1] > D[0.5] > D[0.9] and 0.9 <= D[1.2] <= 1.1 and clk.seconds < 60
    report(6, ok, clk.seconds, 60, ", ".join(f"D(delta={d})={v:.3f}" for d, v in D.items()))
    assert ok


def _dalembert_ratio(p):
    u, v = preset_gaussian(64)
    res = []
    for dt in (0.05, 0.025):
        steps = round(2.0 / dt)
        res.append(dalembert_residual(simulate(SimRun(u, v, dt, steps, method="spectral", snapshots=steps + 1), p), p))
    return res[0] / res[1]


def test_criterion_7_simulation(report):
    p = ChainParams(1.5, 1.0)
    with Clock() as clk:
        # spectral: 100 periods of the slowest mode
        u, v = preset_gaussian(64)
        st0 = SpectralState.from_fields(u, v, p)
        period = 2 * math.pi / math.sqrt(st0.omega2()[1])
        e0 = st0.energy()
        drift = max(abs(evolve_spectral(st0, t).energy() - e0) / e0 for t in np.linspace(0, 100 * period, 101))

        # Verlet on a 64-sample single mode at a quarter of the stability limit
        um, vm = preset_mode(64)
        dt = 0.25 * stability_limit(p, 64, 1.0)
        traj = evolve_realspace(SimRun(um, vm, dt, 10**4), p)
        osc = traj.meta["energy_oscillation"]
        shadow = traj.meta["shadow_oscillation"]

        # oracle match on the same single mode, at a step Verlet can resolve to 1e-6
        small = SimRun(um, vm, 1e-3, 10**4, snapshots=101)
        mismatch = float(np.max(np.abs(evolve_realspace(small, p).u - simulate(
            SimRun(um, vm, 1e-3, 10**4, method="spectral", snapshots=101), p).u)))

        ratio = _dalembert_ratio(p)
    parts = {
        "spectral drift < 1e-12": drift < 1e-12,
        "Verlet energy oscillation < 1e-6": osc < 1e-6,
        "Verlet vs spectral < 1e-6": mismatch < 1e-6,
        "Richardson ratio 4 +/- 0.5": abs(ratio - 4) <= 0.5,
        "runtime < 60 s": clk.seconds < 60,
    }
    ok = all(parts.values())
    detail = (f"spectral drift {drift:.2e}; Verlet energy oscillation {osc:.2e} "
              f"(shadow energy {shadow:.2e}); oracle mismatch {mismatch:.2e}; Richardson {ratio:.3f}")
    failed = [k for k, v in parts.items() if not v]
    if failed:
        detail += "; failing: " + ", ".join(failed)
    report(7, ok, clk.seconds, 60, detail)
    assert ok, detail


def test_criterion_8_riemann_liouville(report):
    polys = [[1.0], [0.5, -2.0], [1.0, 2.0, 3.0], [0.0, 0.0, 0.0, 4.0]]
    worst_int = 0.0
    with Clock() as clk:
        for a, x in ((0.0, 1.3), (-0.5, 2.0)):
            for coeffs in polys:
                v = np.polynomial.Polynomial(coeffs)
                once, twice = v.integ(1, lbnd=a), v.integ(2, lbnd=a)
                worst_int = max(worst_int, abs(riemann_liouville(v, a, x, 1.0) - once(x)),
                                abs(riemann_liouville(v, a, x, 2.0) - twice(x)))
        # t**p with D = 1/2 gives Gamma(p + 1) / Gamma(p + 3/2) x**(p + 1/2)
        worst_half = max(
            abs(riemann_liouville(lambda t: t**p, 0.0, 1.7, 0.5)
                - math.gamma(p + 1) / math.gamma(p + 1.5) * 1.7 ** (p + 0.5))
            for p in (0, 1, 2, 3)
        )
    ok = worst_int < 1e-10 and worst_half < 1e-8 and clk.seconds < 5
    report(8, ok, clk.seconds, 5, f"integer orders {worst_int:.2e}, half order {worst_half:.2e}")
    assert ok


def test_criterion_9_figure_presets(report, capsys):
    rng = np.random.default_rng(99)
    worst_err, worst_scale = 0.0, 0.0
    with Clock() as clk:
        for name in ("fig1", "fig2", "fig3", "fig4"):
            code = cli.main(["dispersion", "--preset", name])
            out = capsys.readouterr().out
            assert code == 0
            meta, cols = sio.read_csv(io.StringIO(out))
            p = ChainParams(meta["N"], meta["delta"], meta["h"])
            worst_err = max(worst_err, float(cols["err"].max()))
            for i in rng.choice(len(cols["kh"]), 10, replace=False):
                kh = Fraction(float(cols["kh"][i]))
                lhs, _ = omega2(kh * Fraction(p.N), p, 1e-10)
                worst_scale = max(worst_scale, abs(lhs - p.lam * cols["omega2"][i]) / ((1 + p.lam) * 1e-10))
    ok = worst_err < 1e-8 and worst_scale <= 1.0 and clk.seconds < 20
    report(9, ok, clk.seconds, 20, f"max certified err {worst_err:.2e}, worst scaling residual / bound {worst_scale:.3e}")
    assert ok
