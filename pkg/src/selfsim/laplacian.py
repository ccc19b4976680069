"""Self-similar Laplacian of the chain and its elastic energy density.

``Lap u(x) = sum_s xi**s * (u(x + N**s h) + u(x - N**s h) - 2 u(x))``

Fields live on a uniform periodic grid.  Off-grid displacements are resolved
either by band-limited (Fourier) interpolation, under which the operator is
diagonal with eigenvalues ``-omega2(k h)``, or by local Lagrange interpolation
evaluated shift by shift in real space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import hermite as _herm

from . import _core
from ._phase import Cycles, centered_phases
from .affine import WINDOW_SAFETY, ChainParams, TruncationSpec, _tail_sum, _upper_window
from .dispersion import omega2_cycles
from .errors import BandError, NonConvergenceError

_EPS = np.finfo(float).eps


class ConditioningWarning(UserWarning):
    """Window lengths explode as delta approaches 0 or 2."""


def _warn_conditioning(params: ChainParams) -> None:
    ratio = params.N ** (-min(params.delta, 2.0 - params.delta))
    if ratio > 0.99:
        warnings.warn(
            f"tail ratio {ratio:.4f} > 0.99 (delta={params.delta}, N={params.N}); "
            "truncation windows will be long",
            ConditioningWarning,
            stacklevel=3,
        )


# ---------------------------------------------------------------- fields


@dataclass
class Field:
    """Samples ``u_j = u(j dx)`` of a periodic field; ``err`` bounds their error."""

    samples: np.ndarray
    dx: float
    err: float = 0.0
    periodic: bool = True

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise ValueError("a field needs a 1-d array of at least 2 samples")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx!r}")
        if not self.periodic:
            raise ValueError("only periodic fields are supported")

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def length(self) -> float:
        return self.n * self.dx

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    def like(self, samples, err: float = 0.0) -> "Field":
        return Field(np.asarray(samples, dtype=float), self.dx, err)

    def inner(self, other: "Field") -> float:
        """Grid inner product ``sum u_j v_j dx``."""
        return float(np.dot(self.samples, other.samples) * self.dx)

    @classmethod
    def mode(cls, n: int, dx: float, m: int, amplitude: float = 1.0, phase: float = 0.0) -> "Field":
        """``A cos(2 pi m x / L + phase)`` sampled on ``n`` points."""
        j = np.arange(n)
        return cls(amplitude * np.cos(2.0 * np.pi * m * j / n + phase), dx)


def _mode_cycles(n: int, dx: float, h: float) -> list[Fraction]:
    # k_m h / (2 pi) = m h / L, kept exact
    base = Fraction(h) / (n * Fraction(dx))
    return [m * base for m in range(n // 2 + 1)]


def _mode_amplitudes(coef: np.ndarray, n: int) -> np.ndarray:
    amp = 2.0 * np.abs(coef) / n
    amp[0] /= 2.0
    if n % 2 == 0:
        amp[-1] /= 2.0
    return amp


@lru_cache(maxsize=64)
def _multiplier(n: int, dx: float, N: float, delta: float, h: float, tol: float):
    params = ChainParams(N, delta, h)
    vals, errs = [], []
    for c in _mode_cycles(n, dx, h):
        v, e = omega2_cycles(c, params, tol) if c else (0.0, 0.0)
        vals.append(v)
        errs.append(e)
    return np.array(vals), np.array(errs)


def spectral_multiplier(n: int, dx: float, params: ChainParams, tol: float = 1e-13):
    """``omega2(k_m h)`` and its error for the ``n // 2 + 1`` rfft modes of a grid."""
    params.require_wave_band()
    w2, err = _multiplier(n, float(dx), params.N, params.delta, params.h, tol)
    return w2.copy(), err.copy()


# ---------------------------------------------------------------- probes


@dataclass
class AnalyticProbe:
    """Closed-form test field.

    ``u`` must accept numpy arrays.  Optional metadata sharpens the tail
    bounds: ``period`` enables exact reduction of huge displacements,
    ``support`` (about ``center``) is a radius beyond which ``u`` vanishes to
    ``tail_eps``, ``derivs`` are the even derivatives ``u'', u'''', u^(6)``.
    """

    u: Callable
    description: str = ""
    period: float | None = None
    sup: float | None = None
    m2: float | None = None
    derivs: Sequence[Callable] = ()
    support: float | None = None
    center: float = 0.0
    tail_eps: float = 0.0
    d2: Callable | None = None

    def __call__(self, x):
        return self.u(x)

    @classmethod
    def cosine(cls, period: float, amplitude: float = 1.0, phase: float = 0.0) -> "AnalyticProbe":
        """``A cos(2 pi x / period + phase)``, exactly periodic in ``period``."""
        k = 2.0 * math.pi / period

        def u(x):
            return amplitude * np.cos(k * np.asarray(x, dtype=float) + phase)

        derivs = [(lambda x, p=p: (-1) ** p * k ** (2 * p) * u(x)) for p in (1, 2, 3)]
        return cls(
            u,
            f"cos(2 pi x / {period!r})",
            period=period,
            sup=abs(amplitude),
            m2=abs(amplitude) * k * k,
            derivs=derivs,
            d2=derivs[0],
        )

    @classmethod
    def gaussian(cls, width: float = 1.0, center: float = 0.0) -> "AnalyticProbe":
        """``exp(-((x - center) / width)**2)``."""

        def nth(order):
            coefs = np.zeros(order + 1)
            coefs[order] = 1.0

            def f(x):
                y = (np.asarray(x, dtype=float) - center) / width
                return (-1) ** order * _herm.hermval(y, coefs) * np.exp(-y * y) / width**order

            return f

        derivs = [nth(2), nth(4), nth(6)]
        return cls(
            nth(0),
            f"gaussian(width={width!r}, center={center!r})",
            sup=1.0,
            m2=2.0 / width**2,
            derivs=derivs,
            support=40.0 * width,
            center=center,
            d2=derivs[0],
        )

    @classmethod
    def constant(cls, value: float = 1.0) -> "AnalyticProbe":
        def u(x):
            return np.full(np.shape(x), float(value))

        zero = lambda x: np.zeros(np.shape(x))  # noqa: E731
        return cls(u, f"constant {value!r}", sup=abs(value), m2=0.0, derivs=[zero] * 3, d2=zero)


def _probe_span(probe: AnalyticProbe, params: ChainParams) -> float:
    if probe.period is not None:
        return float(probe.period)
    if probe.support is not None:
        return float(probe.support)
    return 10.0 * params.h


def _probe_bounds(probe: AnalyticProbe, params: ChainParams, x: float, m2: float | None):
    """``sup |u|`` and a curvature bound, supplied or probed (inflated twice)."""
    span = _probe_span(probe, params)
    sup = probe.sup
    if sup is None:
        pts = x + np.linspace(-span, span, 256)
        sup = 2.0 * float(np.max(np.abs(probe.u(pts))))
    if m2 is None:
        m2 = probe.m2
    if m2 is None:
        pts = x + np.linspace(-span, span, 64)
        step = span / 1000.0
        d2 = (probe.u(pts + step) + probe.u(pts - step) - 2.0 * probe.u(pts)) / step**2
        m2 = 2.0 * float(np.max(np.abs(d2)))
    if not (math.isfinite(sup) and math.isfinite(m2)):
        raise NonConvergenceError("could not bound |u| or |u''| for the lower tail; pass m2")
    return sup, m2


def _geometric_below(order: float, ln_n: float, top: int) -> float:
    # sum_{s <= top} N**(order * s), order > 0
    return math.exp(order * top * ln_n) / -math.expm1(-order * ln_n)


def _even_taylor(probe: AnalyticProbe, x: float, a_star: float) -> list[float]:
    """Coefficients ``c_k`` of ``u(x+a)+u(x-a)-2u(x) = sum_k c_k a**(2k)``, k = 1..3."""
    if probe.derivs:
        fact = (2.0, 24.0, 720.0)
        return [2.0 * float(d(x)) / f for d, f in zip(probe.derivs, fact)]
    steps = np.array([1.0, 2.0, 3.0]) * a_star
    u0 = float(probe.u(x))
    D = np.array([float(probe.u(x + a)) + float(probe.u(x - a)) - 2.0 * u0 for a in steps])
    V = np.stack([steps**2, steps**4, steps**6], axis=1)
    return list(np.linalg.solve(V, D))


def laplacian_apply_analytic(
    u: AnalyticProbe,
    params: ChainParams,
    x: float,
    tol: float = 1e-12,
    m2: float | None = None,
) -> tuple[float, TruncationSpec]:
    """Apply the self-similar Laplacian to a closed-form field at one point.

    Small displacements (``a < a*``, with ``a*`` a few percent of the probe's
    curvature length) are summed in closed form from the even Taylor
    coefficients at ``x``; large ones are summed term by term.  Returns the
    value and the window with a bound on the remainder.
    """
    params.require_wave_band()
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    _warn_conditioning(params)
    N, d, h = params.N, params.delta, params.h
    ln_n = math.log(N)
    xi = params.xi
    sup, curv = _probe_bounds(u, params, x, m2)
    if sup == 0.0:
        return 0.0, TruncationSpec(0, 0, 0.0)

    kappa = math.sqrt(curv / sup) if curv > 0 else 1.0 / h
    a_star = 0.02 / kappa
    s_min = min(math.ceil(math.log(a_star / h) / ln_n), 0)

    # upper end: either the exact far field of a decaying probe or a geometric bound
    ux = float(u.u(x))
    far_value, far_bound = 0.0, 0.0
    s_max = _upper_window(4.0 * sup, xi, tol / 2) + WINDOW_SAFETY
    upper_bound = _tail_sum(4.0 * sup, xi, s_max + 1)
    if u.support is not None:
        reach = abs(x - u.center) + u.support
        s_far = max(math.ceil(math.log(reach / h) / ln_n), 0) + 1
        if s_far <= s_max:
            s_max = s_far - 1
            far_value = -2.0 * ux * _tail_sum(1.0, xi, s_far)
            far_bound = 2.0 * u.tail_eps * _tail_sum(1.0, xi, s_far)
            upper_bound = 0.0
    s_max = max(s_max, 0)

    s = np.arange(s_min, s_max + 1)
    if u.period is not None:
        theta = centered_phases(Cycles(Fraction(h) / Fraction(u.period)), N, s_min, s_max)
        shifts = theta * u.period
    else:
        shifts = np.exp(math.log(h) + s * ln_n)
    w = np.exp(-d * ln_n * s)
    terms = w * (u.u(x + shifts) + u.u(x - shifts) - 2.0 * ux)

    G = [_geometric_below(2 * k - d, ln_n, s_min - 1) * h ** (2 * k) for k in (1, 2, 3, 4)]
    coefs = _even_taylor(u, x, a_star)
    lower = sum(ck * gk for ck, gk in zip(coefs, G))
    # next order estimated from the growth of the known coefficients
    growth = max(
        [abs(coefs[j + 1] / coefs[j]) for j in range(2) if coefs[j] != 0.0] + [kappa**2]
    )
    remainder = 4.0 * abs(coefs[2]) * growth * G[3]
    if not u.derivs:
        alt = _even_taylor(u, x, 1.5 * a_star)
        remainder += abs(sum((ca - cb) * gk for ca, cb, gk in zip(alt, coefs, G)))

    value = math.fsum(terms.tolist() + [lower, far_value])
    bound = upper_bound + far_bound + remainder + 8 * _EPS * float(np.sum(np.abs(terms)))
    return value, TruncationSpec(s_min, s_max, bound)


def laplacian_scaling_check(
    u: AnalyticProbe, params: ChainParams, x: float, tol: float = 1e-11
) -> tuple[float, float]:
    """Residual of ``Lap_{Nh} u(x) = N**delta Lap_h u(x)`` and its allowed bound.

    The bound is ``(1 + N**delta)`` times the larger certified tail bound.
    """
    big = params.with_h(float(Fraction(params.h) * Fraction(params.N)))
    lhs, t1 = laplacian_apply_analytic(u, big, x, tol)
    rhs, t2 = laplacian_apply_analytic(u, params, x, tol)
    lam = params.lam
    return abs(lhs - lam * rhs), (1.0 + lam) * max(t1.tail_bound, t2.tail_bound)


# ---------------------------------------------------------------- field operator


def _check_order(order: int, n: int) -> None:
    if not (isinstance(order, (int, np.integer)) and order >= 1 and order % 2 == 1 and order < n):
        raise ValueError(
            f"interpolation order must be an odd integer in [1, n-1], got {order!r} for n={n}"
        )


@lru_cache(maxsize=16)
def _symmetric_stencil(m: int) -> np.ndarray:
    """Coefficients ``E[i, k]`` with ``P(s)+P(-s)-2P(0) = sum_k E[i,k] u_i s**(2k)``.

    ``P`` interpolates nodes ``-m..m``; rows are nodes, columns ``k = 1..m``.
    """
    nodes = list(range(-m, m + 1))
    E = np.zeros((2 * m + 1, m))
    for i, xi_ in enumerate(nodes):
        poly = [Fraction(1)]
        for xj in nodes:
            if xj == xi_:
                continue
            den = Fraction(xi_ - xj)
            nxt = [Fraction(0)] * (len(poly) + 1)
            for p, c in enumerate(poly):
                nxt[p + 1] += c / den
                nxt[p] -= c * xj / den
            poly = nxt
        for k in range(1, m + 1):
            E[i, k - 1] = float(2 * poly[2 * k]) if 2 * k < len(poly) else 0.0
    return E


class FieldOperator:
    """The field Laplacian on a fixed grid, prepared once for repeated use.

    Both interpolations give a symmetric circulant matrix, so the operator is
    diagonal in the rfft basis; :meth:`eigenvalues` returns its diagonal.
    """

    def __init__(
        self,
        n: int,
        dx: float,
        params: ChainParams,
        tol: float = 1e-12,
        interp: str = "fourier",
        order: int = 5,
    ):
        params.require_wave_band()
        if not tol > 0:
            raise ValueError(f"tol must be positive, got {tol!r}")
        if interp not in ("fourier", "lagrange"):
            raise ValueError(f"unknown interpolation {interp!r}; use 'fourier' or 'lagrange'")
        _warn_conditioning(params)
        self.n, self.dx, self.params = int(n), float(dx), params
        self.tol, self.interp, self.order = tol, interp, order
        if interp == "fourier":
            self._w2, self._w2_err = spectral_multiplier(self.n, self.dx, params, min(tol, 1e-13))
        else:
            _check_order(order, self.n)
            self._plan = self._lagrange_plan(order)

    def _lagrange_plan(self, order: int):
        N, d, h = self.params.N, self.params.delta, self.params.h
        ln_n = math.log(N)
        xi = self.params.xi
        n, dx = self.n, self.dx
        # first scale whose displacement reaches one cell
        s1 = math.ceil(math.log(dx / h) / ln_n)
        s_max = max(_upper_window(4.0, xi, self.tol / 2) + WINDOW_SAFETY, s1)
        upper = _tail_sum(4.0, xi, s_max + 1)

        theta = centered_phases(Cycles(Fraction(h) / (n * Fraction(dx))), N, s1, s_max)
        shifts = np.abs(theta) * n
        w = np.exp(-d * ln_n * np.arange(s1, s_max + 1))
        # shifts below one cell act through a fixed symmetric stencil in closed form
        m = (order + 1) // 2
        ratio = h / dx
        G = np.array(
            [ratio ** (2 * k) * _geometric_below(2 * k - d, ln_n, s1 - 1) for k in range(1, m + 1)]
        )
        stencil = _symmetric_stencil(m) @ G
        return shifts, w, stencil, upper

    @staticmethod
    def _apply_plan(samples: np.ndarray, plan, order: int) -> np.ndarray:
        shifts, w, stencil, _ = plan
        out = _core.shift_sum_lagrange(samples, shifts, w, int(order))
        m = (len(stencil) - 1) // 2
        for i, wi in zip(range(-m, m + 1), stencil):
            out += wi * np.roll(samples, -i)
        return out

    def apply(self, samples) -> np.ndarray:
        """Laplacian of the periodic samples (no error bookkeeping)."""
        u = np.asarray(samples, dtype=float)
        if u.shape != (self.n,):
            raise ValueError(f"expected {self.n} samples, got shape {u.shape}")
        if self.interp == "fourier":
            return np.fft.irfft(-self._w2 * np.fft.rfft(u), n=self.n)
        return self._apply_plan(u, self._plan, self.order)

    __call__ = apply

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalue for each rfft mode (``-omega2(k_m h)`` for Fourier)."""
        if self.interp == "fourier":
            return -self._w2.copy()
        impulse = np.zeros(self.n)
        impulse[0] = 1.0
        return np.fft.rfft(self.apply(impulse)).real

    def max_frequency(self) -> float:
        """``sqrt(max |eigenvalue|)``, which sets the explicit step limit ``2 / omega_max``."""
        return math.sqrt(float(np.max(np.abs(self.eigenvalues()))))

    def apply_field(self, u: Field) -> Field:
        """Laplacian of a field with its error bound, as :func:`laplacian_apply_field`."""
        if u.n != self.n or u.dx != self.dx:
            raise ValueError("field does not match the operator's grid")
        if self.interp == "fourier":
            coef = np.fft.rfft(u.samples)
            amp = _mode_amplitudes(coef, u.n)
            out = np.fft.irfft(-self._w2 * coef, n=u.n)
            bound = float(np.dot(amp, self._w2_err)) + 8 * _EPS * float(np.dot(amp, self._w2))
            return u.like(out, bound)
        sup = float(np.max(np.abs(u.samples)))
        out = self._apply_plan(u.samples, self._plan, self.order)
        upper = sup * self._plan[3]
        if self.order + 2 < u.n:
            finer_plan = self._lagrange_plan(self.order + 2)
            finer = self._apply_plan(u.samples, finer_plan, self.order + 2)
            interp_err = 2.0 * float(np.max(np.abs(finer - out)))
        else:
            interp_err = float("nan")
        return u.like(out, upper + interp_err)


def laplacian_apply_field(
    u: Field,
    params: ChainParams,
    tol: float = 1e-12,
    interp: str = "fourier",
    order: int = 5,
) -> Field:
    """Self-similar Laplacian of a periodic field.

    ``interp="fourier"`` (default) uses band-limited interpolation, exact for
    grid modes; ``interp="lagrange"`` sums every shift in real space with odd
    degree ``order`` interpolation.  The returned field's ``err`` holds the
    truncation bound plus, for Lagrange, an estimate of the interpolation error
    (twice the change when the degree is raised to ``order + 2``).
    """
    if interp == "lagrange":
        _check_order(order, u.n)
    if interp == "fourier":
        # tighten the multiplier tolerance to the field's total amplitude
        amp_total = float(_mode_amplitudes(np.fft.rfft(u.samples), u.n).sum())
        tol = min(tol / max(amp_total, 1e-300), tol)
    return FieldOperator(u.n, u.dx, params, tol, interp, order).apply_field(u)


# ---------------------------------------------------------------- energy


def _shift_differences(coef: np.ndarray, n: int, theta: float):
    """``u(x + a) - u(x)`` and ``u(x - a) - u(x)`` for ``a = theta * L``."""
    m = np.arange(coef.size)
    half = np.pi * m * theta
    # e^{i 2 half} - 1 = 2 i sin(half) e^{i half}, no cancellation for small shifts
    plus = 2j * np.sin(half) * np.exp(1j * half)
    minus = np.conj(plus)
    if n % 2 == 0:
        nyq = -2.0 * np.sin(half[-1]) ** 2
        plus[-1] = nyq
        minus[-1] = nyq
    return np.fft.irfft(coef * plus, n=n), np.fft.irfft(coef * minus, n=n)


#: below this half-phase of the highest grid mode, shifts are summed in closed form
_SMALL_PHASE = 1e-5


def _spectral_derivs(coef: np.ndarray, n: int, length: float, orders) -> list[np.ndarray]:
    k = 2.0 * np.pi * np.arange(coef.size) / length
    out = []
    for p in orders:
        mult = (1j * k) ** p
        if n % 2 == 0 and p % 2 == 1:
            mult[-1] = 0.0
        out.append(np.fft.irfft(coef * mult, n=n))
    return out


def _energy_terms(u: Field, params: ChainParams, tol: float):
    """Grid density ``V``, the Nyquist correction of its grid sum, and a bound."""
    params.require_wave_band()
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    _warn_conditioning(params)
    N, d, h = params.N, params.delta, params.h
    ln_n = math.log(N)
    xi = params.xi
    n = u.n
    coef = np.fft.rfft(u.samples)
    amp = _mode_amplitudes(coef, n)
    k = 2.0 * np.pi * np.arange(coef.size) / u.length
    sup = float(amp.sum())
    if sup == 0.0:
        return np.zeros(n), 0.0, 0.0
    M = [float(np.dot(amp, k**j)) for j in range(6)]

    s_max = _upper_window(4.0 * sup**2, xi, tol / 2) + WINDOW_SAFETY
    k_top = math.pi / u.dx
    s_min = min(math.floor(math.log(2.0 * _SMALL_PHASE / (k_top * h)) / ln_n) + 1, s_max)
    bound = _tail_sum(4.0 * sup**2, xi, s_max + 1)

    theta = centered_phases(Cycles(Fraction(h) / (n * Fraction(u.dx))), N, s_min, s_max)
    weights = np.exp(-d * ln_n * np.arange(s_min, s_max + 1))
    # smallest contributions first: both window ends inward
    order = np.argsort(weights * np.minimum(1.0, (np.abs(theta) * n) ** 2))
    acc = np.zeros(n)
    for j in order:
        dp, dm = _shift_differences(coef, n, theta[j])
        acc += 0.5 * weights[j] * (dp * dp + dm * dm)

    # shifts a below the window: V = a^2 u1^2 + a^4 (u2^2 / 4 + u1 u3 / 3) + O(a^6)
    G2, G4, G6 = (h**p * _geometric_below(p - d, ln_n, s_min - 1) for p in (2, 4, 6))
    d1, d2, d3 = _spectral_derivs(coef, n, u.length, (1, 2, 3))
    acc += G2 * d1 * d1 + G4 * (0.25 * d2 * d2 + d1 * d3 / 3.0)
    bound += 2.0 * G6 * (M[1] * M[5] / 60.0 + M[2] * M[4] / 24.0 + M[3] ** 2 / 36.0)

    alias = 0.0
    if n % 2 == 0:
        # a shifted Nyquist mode keeps only its cosine part on the grid; add back
        # the lost sine part so the grid sums obey the energy identity exactly
        a_ny = float(coef[-1].real) / n
        sn2 = np.sin(0.5 * np.pi * n * theta) ** 2
        q = 0.5 * k_top
        low = q**2 * G2 - (4.0 / 3.0) * q**4 * G4
        alias = 4.0 * n * a_ny**2 * (math.fsum(weights * sn2 * (1.0 - sn2)) + low)
    return acc, alias, bound


def elastic_energy_density(u: Field, params: ChainParams, tol: float = 1e-12) -> Field:
    """Pointwise elastic energy ``V(x)`` of a field snapshot.

    ``V = 1/2 sum_s xi**s [(u(x) - u(x + N**s h))**2 + (u(x) - u(x - N**s h))**2]``
    with band-limited interpolation for the shifted samples.
    """
    V, _, bound = _energy_terms(u, params, tol)
    return u.like(V, bound)


def total_elastic_energy(u: Field, params: ChainParams, tol: float = 1e-12) -> float:
    """Potential-energy term of the chain Hamiltonian, ``1/2 * integral V dx``.

    The integral is the grid sum of ``V`` times ``dx``.  On an even grid the
    Nyquist mode contributes an extra term that a grid density cannot hold
    (its shifted sine part vanishes at every sample); it is added here so that
    ``2 * energy == <u, -Lap u> dx`` holds on the grid.
    """
    V, alias, _ = _energy_terms(u, params, tol)
    return 0.5 * (math.fsum(V.tolist()) + alias) * u.dx
