"""Invariant battery behind ``selfsim check``.

Every check is a cheap instance of a property the library promises; the
quick mode shrinks sizes so the whole battery fits in about 30 seconds.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .affine import ChainParams
from .continuum import (
    c_constant,
    density_empirical_check,
    fractional_laplacian_integral,
    gamma_fn,
    kernel_convolution,
    long_wave_omegas,
    riemann_liouville,
)
from .dimension import dimension_curve, estimate_dimension
from .dispersion import long_wave_ratio, omega2_cycles, scaling_residual
from .laplacian import (
    AnalyticProbe,
    ConditioningWarning,
    Field,
    laplacian_apply_analytic,
    laplacian_apply_field,
    total_elastic_energy,
)
from .simulate import (
    SimRun,
    SpectralState,
    evolve_realspace,
    evolve_spectral,
    preset_random,
    stability_limit,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<34} value={self.value:.3e}  limit={self.limit:.3e}  ({self.seconds:.2f}s)"


def _scaling(quick: bool):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20 if quick else 200):
        d, N, kh = rng.uniform(0.05, 1.95), rng.uniform(1.1, 3.0), rng.uniform(0.01, 20.0)
        res, bound = scaling_residual(kh, ChainParams(N, d), 1, 1e-10)
        worst = max(worst, res / bound)
    return worst, 1.0


def _eigenrelation(quick: bool):
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(10 if quick else 50):
        p = ChainParams(rng.uniform(1.2, 3.0), rng.uniform(0.1, 1.9), rng.uniform(0.5, 2.0))
        period, x = rng.uniform(1.0, 10.0), rng.uniform(-5.0, 5.0)
        probe = AnalyticProbe.cosine(period)
        val, _ = laplacian_apply_analytic(probe, p, x, 1e-12)
        w2, _ = omega2_cycles(Fraction(p.h) / Fraction(period), p, 1e-13)
        ref = -w2 * math.cos(2 * math.pi * x / period)
        worst = max(worst, abs(val - ref) / max(w2, 1e-300))
    return worst, 1e-8


def _c_constant(quick: bool):
    return abs(c_constant(1.0) - math.pi), 1e-8


def _long_wave(quick: bool):
    return abs(long_wave_ratio(ChainParams(1.01, 1.0), 1e-3) / math.pi - 1.0), 0.05


def _density(quick: bool):
    p = ChainParams(1.01, 1.0)
    slope = density_empirical_check(p, long_wave_omegas(p, n=8 if quick else 16))
    return abs(slope - 1.0), 0.05


def _representations(quick: bool):
    probe = AnalyticProbe.gaussian(1.0)
    worst = 0.0
    for d in (0.5,) if quick else (0.5, 1.0, 1.5):
        p = ChainParams(1.001, d)
        a = fractional_laplacian_integral(probe, p, 0.3)
        b = kernel_convolution(probe, p, 0.3)
        c, _ = laplacian_apply_analytic(probe, p, 0.3, 1e-10)
        worst = max(worst, abs(a - c) / abs(c), abs(b - c) / abs(c), abs(a - b) / abs(c))
    return worst, 0.01


def _dimension_order(quick: bool):
    n = 2**15 + 1 if quick else 2**18 + 1
    dims = [estimate_dimension(dimension_curve(ChainParams(1.5, d), n=n)).D_estimated for d in (0.1, 0.5, 0.9)]
    return min(dims[0] - dims[1], dims[1] - dims[2]), 0.0, "above"


def _spectral_energy(quick: bool):
    p = ChainParams(1.5, 0.8)
    u, v = preset_random(64, 1.0, 1.0, seed=3)
    st = SpectralState.from_fields(u, v, p)
    w_min = math.sqrt(st.omega2()[1])
    e0 = st.energy()
    e1 = evolve_spectral(st, 100 * 2 * math.pi / w_min).energy()
    return abs(e1 - e0) / e0, 1e-12


def _verlet_reversible(quick: bool):
    p = ChainParams(1.5, 0.8)
    u, v = preset_random(64, 1.0, 1.0, seed=4)
    dt = 0.25 * stability_limit(p, 64, 1.0)
    fwd = evolve_realspace(SimRun(u, v, dt, 50, snapshots=2), p)
    back = evolve_realspace(SimRun(fwd.field(-1), Field(-fwd.v[-1], 1.0), dt, 50, snapshots=2), p)
    return float(np.max(np.abs(back.u[-1] - u.samples))), 1e-10


def _momentum(quick: bool):
    p = ChainParams(1.5, 1.3)
    u, v = preset_random(64, 1.0, 1.0, seed=5)
    tr = evolve_realspace(SimRun(u, v, 0.05, 200 if quick else 2000, snapshots=8), p)
    return float(np.ptp(tr.v.mean(axis=1))), 1e-12


def _energy_identity(quick: bool):
    p = ChainParams(1.5, 0.6)
    u = Field(np.random.default_rng(6).standard_normal(32), 0.37)
    lhs = -u.inner(laplacian_apply_field(u, p, 1e-12))
    return abs(lhs - 2.0 * total_elastic_energy(u, p, 1e-12)) / lhs, 1e-10


def _riemann_liouville(quick: bool):
    err = max(
        abs(riemann_liouville(lambda t: 1.0, 0.0, 2.0, 1.0) - 2.0),
        abs(riemann_liouville(lambda t: 1.0, 0.0, 3.0, 2.0) - 4.5),
        abs(riemann_liouville(lambda t: t, 0.0, 1.0, 0.5) - 1.0 / math.gamma(2.5)),
    )
    return err, 1e-8


def _gamma_recurrence(quick: bool):
    xs = np.linspace(0.1, 10.0, 25 if quick else 200)
    return max(abs(gamma_fn(x + 1) / (x * gamma_fn(x)) - 1.0) for x in xs), 1e-12


CHECKS: list[tuple[str, Callable]] = [
    ("scaling law", _scaling),
    ("eigenrelation on cosines", _eigenrelation),
    ("C(1) = pi", _c_constant),
    ("long-wave ratio tends to C", _long_wave),
    ("density exponent", _density),
    ("continuum representations agree", _representations),
    ("dimension ordering in delta", _dimension_order),
    ("spectral energy conservation", _spectral_energy),
    ("Verlet time reversibility", _verlet_reversible),
    ("momentum conservation", _momentum),
    ("energy identity", _energy_identity),
    ("Riemann-Liouville values", _riemann_liouville),
    ("Gamma recurrence", _gamma_recurrence),
]


def run_checks(quick: bool = True) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS:
        start = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConditioningWarning)
            value, limit, *sense = fn(quick)
        passed = value > limit if sense == ["above"] else value < limit
        results.append(CheckResult(name, bool(passed), float(value), float(limit), time.perf_counter() - start))
    return results
