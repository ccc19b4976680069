"""Weierstrass-Mandelbrot dispersion relation of the self-similar chain.

``omega2(kh) = 4 * sum_s N**(-delta*s) * sin(kh * N**s / 2)**2``

Evaluation is certified: the discarded tails are bounded analytically, and
in the default exact mode every phase ``kh * N**s / 2`` is reduced modulo
``pi`` in fixed-point arithmetic so that rounding does not grow with ``N**s``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _core
from ._phase import Cycles, centered_phases
from .affine import WINDOW_SAFETY, ChainParams, TruncationSpec, _tail_sum, _upper_window

_EPS = np.finfo(float).eps
#: number of figure presets and their exponents (all at N = 1.5)
FIGURE_PRESETS = {
    "fig1": ChainParams(1.5, 1.2),
    "fig2": ChainParams(1.5, 0.7),
    "fig3": ChainParams(1.5, 0.5),
    "fig4": ChainParams(1.5, 0.1),
}


#: below this half-phase sin(x)**2 is replaced by x**2 - x**4/3 and summed in closed form
_SMALL_PHASE = 1e-5


def _geometric_below(order: float, params: ChainParams, top: int) -> float:
    # sum_{s <= top} N**(order*s) for order > 0
    ln_n = math.log(params.N)
    return math.exp(order * top * ln_n) / -math.expm1(-order * ln_n)


def lower_closed_form(kh: float, params: ChainParams, top: int) -> tuple[float, float]:
    """Sum of all terms with ``s <= top`` and a bound on its Taylor remainder.

    Valid when ``kh * N**top / 2 <= 1e-5``; uses
    ``sin(x)**2 = x**2 - x**4/3 + R`` with ``0 <= R <= 2 x**6 / 45``.
    """
    d = params.delta
    value = kh**2 * _geometric_below(2.0 - d, params, top)
    value -= kh**4 / 12.0 * _geometric_below(4.0 - d, params, top)
    remainder = kh**6 / 360.0 * _geometric_below(6.0 - d, params, top)
    return value, remainder


def _upper_tail(params: ChainParams, tol: float) -> tuple[int, float]:
    ratio = params.N ** (-params.delta)
    s_max = _upper_window(4.0, ratio, tol / 2) + WINDOW_SAFETY
    return s_max, _tail_sum(4.0, ratio, s_max + 1)


def _first_explicit(kh: float, params: ChainParams) -> int:
    top = math.floor(math.log(2.0 * _SMALL_PHASE / kh) / math.log(params.N))
    return min(top, -1) + 1


def truncation_window(kh: float, params: ChainParams, tol: float) -> TruncationSpec:
    """Explicitly summed window and the bound on what it leaves out.

    Terms above ``s_max`` are bounded with ``sin**2 <= 1``.  Terms below
    ``s_min`` are not dropped but summed in closed form; only their Taylor
    remainder enters ``tail_bound``.
    """
    params.require_wave_band()
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    kh = float(kh)
    if not kh > 0:
        raise ValueError(f"kh must be nonzero, got {kh!r}")
    s_max, upper = _upper_tail(params, tol)
    s_min = _first_explicit(kh, params)
    _, remainder = lower_closed_form(kh, params, s_min - 1)
    return TruncationSpec(s_min, max(s_max, 0), upper + remainder)


def _weights(params: ChainParams, s_min: int, s_max: int) -> np.ndarray:
    s = np.arange(s_min, s_max + 1, dtype=float)
    return np.exp(-params.delta * math.log(params.N) * s)


def _sum_exact(c: Cycles, kh: float, params: ChainParams, trunc: TruncationSpec) -> float:
    theta = centered_phases(c, params.N, trunc.s_min, trunc.s_max)
    terms = _weights(params, trunc.s_min, trunc.s_max) * np.sin(np.pi * theta) ** 2
    lower, _ = lower_closed_form(kh, params, trunc.s_min - 1)
    return 4.0 * math.fsum(terms) + lower


def _omega2_impl(c: Cycles | None, kh: float, params, tol, exact, window=None):
    if c is None:
        return 0.0, 0.0, TruncationSpec(0, 0, 0.0)
    trunc = window if window is not None else truncation_window(kh, params, tol)
    if exact:
        value = _sum_exact(c, kh, params, trunc)
        rounding = 16 * _EPS * value
    else:
        s = np.arange(trunc.s_min, trunc.s_max + 1, dtype=float)
        scales = params.N**s
        w = _weights(params, trunc.s_min, trunc.s_max)
        lower, _ = lower_closed_form(kh, params, trunc.s_min - 1)
        value = float(_core.omega2_series(np.array([kh]), scales, w)[0]) + lower
        # phase error of the floating-point half-phase kh * N**s / 2 and its
        # reduction, a few ulp of it; sin**2 moves by at most one unit
        phase_err = np.minimum(1.0, 4.0 * _EPS * kh * scales)
        rounding = 16 * _EPS * value + 4.0 * float(np.dot(w, phase_err))
    return value, trunc.tail_bound + rounding, trunc


def _as_cycles(kh) -> tuple[Cycles | None, float]:
    k = abs(Fraction(kh))
    if k == 0:
        return None, 0.0
    return Cycles.from_wavenumber(k), float(k)


def omega2(kh, params: ChainParams, tol: float = 1e-12, exact: bool = True) -> tuple[float, float]:
    """Squared frequency of the plane wave with dimensionless wavenumber ``kh``.

    ``kh`` may be a float or a :class:`fractions.Fraction`; either is used as
    an exact rational.  Returns ``(value, err)`` where ``err`` bounds the
    truncated tails plus rounding.  ``exact=False`` uses the compiled
    double-precision kernel, whose ``err`` then includes the phase loss of
    large ``kh * N**s`` and can be large for small ``delta``.
    """
    params.require_wave_band()
    c, k = _as_cycles(kh)
    value, err, _ = _omega2_impl(c, k, params, tol, exact)
    return value, err


def omega2_cycles(cycles, params: ChainParams, tol: float = 1e-12) -> tuple[float, float]:
    """``omega2(2*pi*cycles)`` for an exact rational ``cycles``.

    Grid modes ``k_m = 2 pi m / L`` give ``k_m h = 2 pi (m h / L)``; passing
    ``m h / L`` as a Fraction keeps the whole evaluation exact.
    """
    params.require_wave_band()
    frac = abs(Fraction(cycles))
    if frac == 0:
        return 0.0, 0.0
    kh = 2.0 * math.pi * float(frac)
    value, err, _ = _omega2_impl(Cycles(frac), kh, params, tol, True)
    return value, err


def omega2_with_window(kh, params: ChainParams, trunc: TruncationSpec) -> float:
    """Exact-phase partial sum over an explicit window (for certification checks)."""
    params.require_wave_band()
    c, k = _as_cycles(kh)
    if c is None:
        return 0.0
    return _sum_exact(c, k, params, trunc)


def scaling_residual(kh, params: ChainParams, m: int = 1, tol: float = 1e-12) -> tuple[float, float]:
    """``|omega2(N**m kh) - N**(m delta) omega2(kh)|`` and its allowed bound.

    ``N**m * kh`` is formed exactly as a rational, so the comparison tests the
    law itself rather than the rounding of the scaled argument.
    """
    scaled = Fraction(kh) * Fraction(params.N) ** m
    lhs, _ = omega2(scaled, params, tol)
    rhs, _ = omega2(kh, params, tol)
    factor = params.N ** (m * params.delta)
    return abs(lhs - factor * rhs), (1.0 + factor) * tol


@dataclass
class DispersionCurve:
    params: ChainParams
    grid: np.ndarray
    omega2: np.ndarray
    err: np.ndarray
    tol: float
    exact: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.grid) == len(self.omega2) == len(self.err)):
            raise ValueError("grid, omega2 and err must have equal length")

    def __len__(self) -> int:
        return len(self.grid)


def _eval_chunk(args):
    khs, params, tol, exact = args
    vals, errs = [], []
    for kh in khs:
        c, k = _as_cycles(float(kh))
        v, e, _ = _omega2_impl(c, k, params, tol, exact)
        vals.append(v)
        errs.append(e)
    return vals, errs


def _eval_fast_grid(grid: np.ndarray, params: ChainParams, tol: float):
    # the window chosen for the largest |kh| is valid for every smaller one
    absk = np.abs(grid)
    kmax = float(absk.max())
    trunc = truncation_window(kmax, params, tol)
    s = np.arange(trunc.s_min, trunc.s_max + 1, dtype=float)
    scales = params.N**s
    w = _weights(params, trunc.s_min, trunc.s_max)
    vals = _core.omega2_series(absk, scales, w)
    top, d = trunc.s_min - 1, params.delta
    g2 = _geometric_below(2.0 - d, params, top)
    g4 = _geometric_below(4.0 - d, params, top)
    vals = vals + absk**2 * g2 - absk**4 / 12.0 * g4
    # 4 * sum_s w_s * min(1, 4 eps kh N**s): scales are increasing, so split each
    # row where the product reaches 1 and use prefix sums on both sides
    below = np.concatenate([[0.0], np.cumsum(w * scales)])
    above = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    with np.errstate(divide="ignore"):
        cut = np.searchsorted(scales, 1.0 / (4.0 * _EPS * absk), side="left")
    phase_err = 4.0 * (4.0 * _EPS * absk * below[cut] + above[cut])
    errs = trunc.tail_bound + 16 * _EPS * vals + phase_err
    return vals, errs


def sample_curve(
    params: ChainParams,
    kh_min: float = 0.0,
    kh_max: float = 20.0,
    n: int = 2000,
    tol: float = 1e-10,
    exact: bool = True,
) -> DispersionCurve:
    """Evaluate the dispersion relation on a uniform ``kh`` grid."""
    params.require_wave_band()
    if not kh_min >= 0:
        raise ValueError(f"kh_min must be >= 0, got {kh_min!r}")
    if not kh_max > kh_min:
        raise ValueError("kh_max must exceed kh_min")
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    grid = np.linspace(kh_min, kh_max, n)
    if not exact:
        vals, errs = _eval_fast_grid(grid, params, tol)
        return DispersionCurve(params, grid, np.asarray(vals), np.asarray(errs), tol, False)

    workers = min(_core.thread_cap(), max(1, n // 256))
    if workers > 1:
        chunks = np.array_split(grid, workers)
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_eval_chunk, [(c, params, tol, True) for c in chunks]))
        vals = [v for p in parts for v in p[0]]
        errs = [e for p in parts for e in p[1]]
    else:
        vals, errs = _eval_chunk((grid, params, tol, True))
    return DispersionCurve(params, grid, np.asarray(vals), np.asarray(errs), tol, True)


def long_wave_ratio(params: ChainParams, kh: float, tol: float = 1e-12) -> float:
    """``omega2(kh) * epsilon / kh**delta``; tends to the continuum constant as ``N -> 1``."""
    if not kh > 0:
        raise ValueError(f"kh must be positive, got {kh!r}")
    value, _ = omega2(kh, params, tol)
    return value * params.epsilon / kh**params.delta
