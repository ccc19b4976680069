"""Continuum limit of the chain as ``N -> 1``.

With ``eps = ln N`` the discrete Laplacian tends to

    (h**delta / eps) * int_0^inf (u(x - t) + u(x + t) - 2 u(x)) / t**(1 + delta) dt,

which also equals a convolution of ``u''`` with the kernel ``g`` below.  Plane
waves pick up ``-(|k| h)**delta * C(delta) / eps`` with the constant ``C``
computed by :func:`c_constant`, and the density of oscillator frequencies is a
power law in ``omega``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .affine import ChainParams
from .dispersion import omega2
from .errors import BandError, NonConvergenceError, SamplingError
from .laplacian import AnalyticProbe, ConditioningWarning, _probe_bounds

#: within this distance of delta = 1 the kernel switches to its log form
LOG_BRANCH_WIDTH = 1e-6

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _require_band(delta: float) -> None:
    if not (0.0 < delta < 2.0):
        raise BandError(f"delta must lie in (0, 2), got {delta!r}")


def gamma_fn(D: float) -> float:
    """Euler's Gamma function for ``D > 0``."""
    D = float(D)
    if not (math.isfinite(D) and D > 0.0):
        raise ValueError(f"Gamma is only defined here for D > 0, got {D!r}")
    return math.gamma(D)


# ---------------------------------------------------------------- constant C


def _panel(f: Callable, a: float, b: float) -> float:
    half = 0.5 * (b - a)
    return half * float(np.dot(_GL_WEIGHTS, f(a + half * (_GL_NODES + 1.0))))


def _euler_limit(partial: np.ndarray) -> tuple[float, float]:
    """Limit of alternating partial sums by repeated pairwise averaging."""
    row = np.asarray(partial, dtype=float)
    prev = row[-1]
    while row.size > 1:
        row = 0.5 * (row[1:] + row[:-1])
        prev, last = row[-1], prev
    return float(row[0]), abs(float(row[0]) - float(last))


def _alternating_tail(f: Callable, start: float, half_period: float, panels: int):
    sums = np.cumsum([_panel(f, start + j * half_period, start + (j + 1) * half_period)
                      for j in range(panels)])
    return _euler_limit(sums)


def c_constant(delta: float, quad_tol: float = 1e-12) -> float:
    """``C(delta) = 2 * int_0^inf (1 - cos t) / t**(1 + delta) dt``.

    On ``[0, 1]`` the cosine series is integrated term by term.  On
    ``[1, inf)`` the power is integrated exactly and the cosine part is summed
    over half periods between its zeros with Euler averaging.
    """
    _require_band(delta)
    head = 0.0
    term_sign, fact = 1.0, 1.0
    for j in range(1, 40):
        fact *= (2 * j - 1) * (2 * j)
        term = term_sign / (fact * (2 * j - delta))
        head += term
        term_sign = -term_sign
        if abs(term) < 1e-18 * abs(head):
            break

    def f(t):
        return np.cos(t) * t ** (-1.0 - delta)

    first = _panel(f, 1.0, 0.5 * math.pi)
    coarse, _ = _alternating_tail(f, 0.5 * math.pi, math.pi, 40)
    tail, spread = _alternating_tail(f, 0.5 * math.pi, math.pi, 64)
    err = max(abs(tail - coarse), spread)
    if err > quad_tol:
        raise NonConvergenceError(f"oscillatory tail of C({delta}) settled only to {err:.2e}")
    return 2.0 * (head + 1.0 / delta - first - tail)


# ---------------------------------------------------------------- direct integral


def _second_difference(u: AnalyticProbe, x: float):
    ux = float(u.u(x))
    return ux, lambda t: u.u(x + t) + u.u(x - t) - 2.0 * ux


def _quad(f, a, b, tol, **kw):
    val, err = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=400, **kw)[:2]
    if not math.isfinite(val) or err > max(100 * tol, 100 * tol * abs(val)):
        raise NonConvergenceError(f"quadrature on [{a}, {b}] left error {err:.2e}")
    return val


def fractional_laplacian_integral(
    u: AnalyticProbe, params: ChainParams, x: float, quad_tol: float = 1e-10
) -> float:
    """Continuum Laplacian of ``u`` at ``x`` from the direct singular integral.

    Near ``t = 0`` the second difference over ``t**2`` is fitted as
    ``A + B t**2`` and integrated exactly.  Beyond the probe's support the
    constant part ``-2 u(x)`` is integrated exactly; periodic probes are
    summed over half periods with Euler averaging instead.
    """
    d = params.delta
    _require_band(d)
    sup, curv = _probe_bounds(u, params, x, None)
    if sup == 0.0:
        return 0.0
    kappa = math.sqrt(curv / sup) if curv > 0 else 1.0 / params.h
    ux, F = _second_difference(u, x)

    t0 = 0.01 / kappa
    if u.derivs:
        A = float(u.derivs[0](x))
        B = float(u.derivs[1](x)) / 12.0
    else:
        r1 = float(F(t0)) / t0**2
        r2 = float(F(2.0 * t0)) / (2.0 * t0) ** 2
        B = (r2 - r1) / (3.0 * t0**2)
        A = r1 - B * t0**2
    total = A * t0 ** (2.0 - d) / (2.0 - d) + B * t0 ** (4.0 - d) / (4.0 - d)

    def integrand(t):
        return float(F(t)) * t ** (-1.0 - d)

    if u.period is not None:
        half = 0.5 * float(u.period)
        start = max(4.0 * half, 1.0 / kappa)
        total += _quad(integrand, t0, start, quad_tol)
        mean = float(np.mean(u.u(x + np.linspace(0.0, u.period, 4096, endpoint=False))))

        def centered(t):
            return (u.u(x + t) + u.u(x - t) - 2.0 * mean) * t ** (-1.0 - d)

        coarse, _ = _alternating_tail(centered, start, half, 48)
        tail, spread = _alternating_tail(centered, start, half, 96)
        if max(abs(tail - coarse), spread) > 100 * quad_tol * max(1.0, abs(total)):
            raise NonConvergenceError("oscillatory tail of the periodic probe did not settle")
        total += tail + 2.0 * (mean - ux) * start ** (-d) / d
    elif u.support is not None:
        reach = abs(x - u.center) + float(u.support)
        edges = np.geomspace(t0, reach, 12)
        total += sum(_quad(integrand, a, b, quad_tol) for a, b in zip(edges[:-1], edges[1:]))
        total += -2.0 * ux * reach ** (-d) / d
    else:
        total += _quad(integrand, t0, 1.0 / kappa, quad_tol)
        total += _quad(integrand, 1.0 / kappa, np.inf, quad_tol)
    return params.h**d / params.epsilon * total


# ---------------------------------------------------------------- kernel form


@dataclass(frozen=True)
class KernelModel:
    """Convolution kernel ``g(|x|)`` of the continuum Laplacian."""

    params: ChainParams
    branch: str

    def __post_init__(self):
        _require_band(self.params.delta)
        if self.branch not in ("power", "log"):
            raise ValueError(f"branch must be 'power' or 'log', got {self.branch!r}")

    @classmethod
    def from_params(cls, params: ChainParams) -> "KernelModel":
        d = params.delta
        if abs(d - 1.0) < LOG_BRANCH_WIDTH:
            if d != 1.0:
                warnings.warn(
                    f"delta={d!r} is within {LOG_BRANCH_WIDTH} of 1; using the log kernel",
                    ConditioningWarning,
                    stacklevel=2,
                )
            return cls(params, "log")
        return cls(params, "power")

    @property
    def prefactor(self) -> float:
        p = self.params
        if self.branch == "log":
            return -p.h / p.epsilon
        return p.h**p.delta / (p.delta * (p.delta - 1.0) * p.epsilon)


def kernel_eval(model: KernelModel, x):
    """``g(|x|)``: ``h**d |x|**(1-d) / (d (d-1) eps)``, or ``-(h/eps) ln|x|`` at ``d = 1``."""
    ax = np.abs(np.asarray(x, dtype=float))
    if np.any(ax == 0.0):
        raise ValueError("the kernel is singular at x = 0")
    if model.branch == "log":
        out = model.prefactor * np.log(ax)
    else:
        out = model.prefactor * ax ** (1.0 - model.params.delta)
    return float(out) if out.ndim == 0 else out


def kernel_convolution(
    u: AnalyticProbe, params: ChainParams, x: float, quad_tol: float = 1e-10
) -> float:
    """``int g(|x - y|) u''(y) dy`` for a probe with known ``u''`` and finite support."""
    model = KernelModel.from_params(params)
    if u.d2 is None:
        raise ValueError("kernel convolution needs the probe's second derivative (d2)")
    if u.support is None:
        raise ValueError("kernel convolution needs a probe with finite support")
    reach = abs(x - u.center) + float(u.support)
    sup, curv = _probe_bounds(u, params, x, None)
    near = min(reach, 4.0 * math.sqrt(sup / curv)) if curv > 0 else reach

    def both(t):
        return float(u.d2(x + t) + u.d2(x - t))

    d = params.delta
    if model.branch == "log":
        head = _quad(both, 0.0, near, quad_tol, weight="alg-loga", wvar=(0.0, 0.0))
        body = _quad(lambda t: both(t) * math.log(t), near, reach, quad_tol) if reach > near else 0.0
    else:
        head = _quad(both, 0.0, near, quad_tol, weight="alg", wvar=(1.0 - d, 0.0))
        body = _quad(lambda t: both(t) * t ** (1.0 - d), near, reach, quad_tol) if reach > near else 0.0
    return model.prefactor * (head + body)


# ---------------------------------------------------------------- Riemann-Liouville


def riemann_liouville(
    v: Callable, a: float, x: float, D: float, quad_tol: float = 1e-12
) -> float:
    """``(1 / Gamma(D)) int_a^x (x - t)**(D - 1) v(t) dt``.

    The endpoint factor is passed to the quadrature as an algebraic weight, so
    ``D < 1`` needs no special treatment by the caller.
    """
    if not x > a:
        raise ValueError(f"need x > a, got a={a!r}, x={x!r}")
    g = gamma_fn(D)

    def f(t):
        return float(v(t))

    if D == 1.0:
        val = _quad(f, a, x, quad_tol)
    else:
        val = _quad(f, a, x, quad_tol, weight="alg", wvar=(0.0, D - 1.0))
    return val / g


# ---------------------------------------------------------------- density of states


@dataclass(frozen=True)
class DensityModel:
    """Long-wave density of states ``rho(omega)`` of the chain."""

    params: ChainParams
    C: float

    def __post_init__(self):
        _require_band(self.params.delta)
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C!r}")

    @classmethod
    def from_params(cls, params: ChainParams) -> "DensityModel":
        return cls(params, c_constant(params.delta))

    @property
    def exponent(self) -> float:
        return 2.0 / self.params.delta - 1.0


def oscillator_density(model: DensityModel, omega):
    """``rho = 2 / (pi d h) * (eps / C)**(1/d) * omega**(2/d - 1)``; zero at ``omega = 0``."""
    p = model.params
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("omega must be nonnegative")
    d = p.delta
    out = 2.0 / (math.pi * d * p.h) * (p.epsilon / model.C) ** (1.0 / d) * w ** (2.0 / d - 1.0)
    return float(out) if out.ndim == 0 else out


def loglog_slope(omega, rho) -> float:
    """Least-squares slope of ``ln rho`` against ``ln omega``."""
    lw, lr = np.log(np.asarray(omega, dtype=float)), np.log(np.asarray(rho, dtype=float))
    return float(np.polyfit(lw, lr, 1)[0])


def long_wave_omegas(params: ChainParams, kh_lo: float = 1e-4, kh_hi: float = 1e-2, n: int = 16):
    """Frequencies of ``n`` log-spaced long waves, for use as a density window."""
    khs = np.geomspace(kh_lo, kh_hi, n)
    return np.sqrt([omega2(float(k), params, 1e-13)[0] for k in khs]) / params.h


def _invert(params: ChainParams, w: float, bracket) -> float:
    target = w * w * params.h**2

    def f(kh):
        return omega2(kh, params, 1e-14, exact=False)[0] - target

    lo, hi = bracket
    while f(lo) > 0:
        lo /= 2.0
    while f(hi) < 0:
        hi *= 2.0
    return optimize.brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=200)


def empirical_density(params: ChainParams, omega_grid, rel_step: float = 0.05) -> np.ndarray:
    """``rho(omega) = (1/pi) dk/domega`` from numerically inverting the dispersion relation.

    The derivative is a central difference over ``omega * (1 +- rel_step)``.
    For ``delta < 1`` the dispersion curve is rough on fine scales, so the step
    must stay wide; a pure power law is differentiated with the right exponent
    at any step.
    """
    _require_band(params.delta)
    grid = np.asarray(omega_grid, dtype=float)
    if np.any(grid <= 0):
        raise ValueError("omega grid must be positive")
    rho = np.empty_like(grid)
    C = c_constant(params.delta)
    for i, w in enumerate(grid):
        # long-wave guess from the continuum law, then bracketed
        guess = (w * w * params.h**2 * params.epsilon / C) ** (1.0 / params.delta)
        bracket = (0.5 * guess, 2.0 * guess)
        k_plus = _invert(params, w * (1.0 + rel_step), bracket) / params.h
        k_minus = _invert(params, w * (1.0 - rel_step), bracket) / params.h
        rho[i] = (k_plus - k_minus) / (2.0 * rel_step * w) / math.pi
    return rho


def density_empirical_check(params: ChainParams, omega_grid) -> float:
    """Fitted log-log exponent of the numerically obtained density of states.

    Compare with ``2/delta - 1``.  The grid must span at least a factor of two
    in ``omega`` with five or more points.
    """
    grid = np.sort(np.asarray(omega_grid, dtype=float))
    if grid.size < 5 or not grid[0] > 0 or grid[-1] / grid[0] < 2.0:
        raise SamplingError("omega window too narrow for a stable fit (need >= 5 points over a factor 2)")
    return loglog_slope(grid, empirical_density(params, grid))
