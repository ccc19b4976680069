"""Affine scale operator and exactly self-similar sums built from it.

The affine operator maps ``f(t)`` to ``f(N t)``.  Summing its powers with
weights ``Lambda**-s`` over all integers ``s`` gives a function that obeys
``phi(N t) = Lambda * phi(t)`` exactly; this module evaluates such sums with
a certified bound on the discarded tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

from .errors import BandError, NonConvergenceError

#: inflation applied to asymptotic coefficients before they are used as bounds
TAIL_MARGIN = 1.5
#: extra indices appended to each analytically chosen window end
WINDOW_SAFETY = 2
_EPS = 2.0**-52


@dataclass(frozen=True)
class ChainParams:
    """Model identity ``(N, delta, h)``.

    ``N`` is the scale factor, ``delta`` the similarity exponent and ``h`` the
    base length.  ``delta`` is not restricted here; operations that need the
    chain Hamiltonian call :meth:`require_wave_band`.
    """

    N: float
    delta: float
    h: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.N) and self.N > 1.0):
            # N == 1 is the degenerate case; N < 1 is equivalent to 1/N
            raise BandError(f"scale factor must satisfy N > 1, got N={self.N!r}")
        if not (math.isfinite(self.h) and self.h > 0.0):
            raise BandError(f"base length must satisfy h > 0, got h={self.h!r}")
        if not math.isfinite(self.delta):
            raise BandError(f"delta must be finite, got {self.delta!r}")

    @property
    def xi(self) -> float:
        """Spring-weight ratio ``N**-delta``."""
        return self.N ** (-self.delta)

    @property
    def lam(self) -> float:
        """Eigenvalue ``Lambda = N**delta`` of the affine problem."""
        return self.N**self.delta

    @property
    def epsilon(self) -> float:
        """Continuum parameter, defined as ``ln N`` exactly."""
        return math.log(self.N)

    def with_h(self, h: float) -> "ChainParams":
        return replace(self, h=h)

    def require_wave_band(self) -> None:
        """Raise unless ``0 < delta < 2`` (finite elastic energy)."""
        if not (0.0 < self.delta < 2.0):
            raise BandError(
                f"delta={self.delta!r} outside the band 0 < delta < 2 required for "
                "finite elastic energy and a convergent self-similar Laplacian"
            )

    def as_dict(self) -> dict:
        return {"N": self.N, "delta": self.delta, "h": self.h}


@dataclass(frozen=True)
class TruncationSpec:
    """Summed index window ``[s_min, s_max]`` and a bound on everything left out."""

    s_min: int
    s_max: int
    tail_bound: float

    def __post_init__(self):
        if not (self.s_min <= 0 <= self.s_max):
            raise ValueError(f"window must contain 0: [{self.s_min}, {self.s_max}]")
        if not self.tail_bound >= 0.0:
            raise ValueError(f"tail bound must be nonnegative, got {self.tail_bound!r}")

    @property
    def n_terms(self) -> int:
        return self.s_max - self.s_min + 1


@dataclass(frozen=True)
class AdmissibleFunctionSpec:
    """Generator function with its power-law asymptotics.

    ``f(t) ~ a0 * t**alpha`` as ``t -> 0+`` and ``f(t) ~ c_inf * t**beta`` as
    ``t -> inf``.  For oscillating generators (``1 - cos t``) the coefficients
    are read as envelope bounds.  ``lipschitz`` bounds ``|f'|``; when given,
    the sum's error bound also covers the rounding of the arguments
    ``N**s * t``, which for oscillating ``f`` dominates at large ``s``.
    """

    f: Callable[[float], float]
    alpha: float
    beta: float
    a0: float
    c_inf: float
    lipschitz: float | None = None

    def __post_init__(self):
        if not self.beta < self.alpha:
            raise BandError(
                f"need beta < alpha for a nonempty band, got beta={self.beta}, alpha={self.alpha}"
            )

    def check_asymptotics(self, n_probe: int = 8, margin: float = TAIL_MARGIN) -> bool:
        """Probe that the inflated power laws dominate ``|f|`` at both ends."""
        small = [10.0 ** (-4 - k) for k in range(n_probe)]
        large = [10.0 ** (4 + k) for k in range(n_probe)]
        ok_small = all(
            abs(self.f(t)) <= margin * abs(self.a0) * t**self.alpha + 1e-300 for t in small
        )
        ok_large = all(
            abs(self.f(t)) <= margin * abs(self.c_inf) * t**self.beta + 1e-300 for t in large
        )
        return ok_small and ok_large


@dataclass(frozen=True)
class BandCheck:
    accepted: bool
    band: tuple[float, float]
    reason: str = ""

    def __bool__(self) -> bool:
        return self.accepted


def affine_apply(f: Callable[[float], float], params: ChainParams, s: int, t: float) -> float:
    """Apply the ``s``-th power of the affine operator: ``f(N**s * t)``."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}")
    return f(params.N ** int(s) * t)


def validate_band(spec: AdmissibleFunctionSpec, params: ChainParams) -> BandCheck:
    """Accept iff ``beta < delta < alpha``."""
    band = (spec.beta, spec.alpha)
    d = params.delta
    if not spec.beta < d:
        return BandCheck(False, band, f"beta < delta fails: beta={spec.beta} >= delta={d}")
    if not d < spec.alpha:
        return BandCheck(False, band, f"delta < alpha fails: delta={d} >= alpha={spec.alpha}")
    return BandCheck(True, band)


def _upper_window(coef: float, ratio: float, tol: float) -> int:
    # smallest S >= 0 with coef * ratio**(S+1) / (1 - ratio) <= tol
    if coef == 0.0:
        return 0
    need = math.log(tol * (1.0 - ratio) / coef) / math.log(ratio)
    return max(0, math.ceil(need) - 1)


def _tail_sum(coef: float, ratio: float, first: int) -> float:
    return coef * ratio**first / (1.0 - ratio) if coef else 0.0


def _weighted(value: float, lam: float, s: int) -> float:
    """``lam**-s * value`` without overflowing the weight near the band edges."""
    if value == 0.0:
        return 0.0
    try:
        return lam ** (-s) * value
    except OverflowError:
        return math.copysign(math.exp(math.log(abs(value)) - s * math.log(lam)), value)


def self_similar_sum(
    spec: AdmissibleFunctionSpec,
    params: ChainParams,
    t: float,
    tol: float,
) -> tuple[float, TruncationSpec]:
    """Evaluate ``sum_s Lambda**-s f(N**s t)`` with discarded tails bounded by ``tol``.

    The returned window's ``tail_bound`` covers the discarded tails.  If the
    generator declares a Lipschitz constant it also covers argument rounding, and
    may then exceed ``tol``.
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    check = validate_band(spec, params)
    if not check:
        raise BandError(check.reason)

    N, delta = params.N, params.delta
    up_coef = TAIL_MARGIN * abs(spec.c_inf) * t**spec.beta
    up_ratio = N ** (spec.beta - delta)
    lo_coef = TAIL_MARGIN * abs(spec.a0) * t**spec.alpha
    lo_ratio = N ** (delta - spec.alpha)

    s_max = _upper_window(up_coef, up_ratio, tol / 2) + WINDOW_SAFETY
    s_min = -(_upper_window(lo_coef, lo_ratio, tol / 2) + WINDOW_SAFETY)

    # the asymptotic envelopes must actually dominate f on the discarded ranges
    for k in range(8):
        s = s_max + 2**k
        arg = N**s * t
        if abs(spec.f(arg)) > TAIL_MARGIN * abs(spec.c_inf) * arg**spec.beta:
            raise NonConvergenceError(
                f"|f({arg:.3g})| exceeds the declared large-argument envelope c_inf*t**beta"
            )
        s = s_min - 2**k
        arg = N**s * t
        if abs(spec.f(arg)) > TAIL_MARGIN * abs(spec.a0) * arg**spec.alpha:
            raise NonConvergenceError(
                f"|f({arg:.3g})| exceeds the declared small-argument envelope a0*t**alpha"
            )

    lam = params.lam
    index = range(s_min, s_max + 1)
    args = [N**s * t for s in index]
    terms = [_weighted(spec.f(a), lam, s) for s, a in zip(index, args)]
    bound = _tail_sum(up_coef, up_ratio, s_max + 1) + _tail_sum(lo_coef, lo_ratio, 1 - s_min)
    if spec.lipschitz is not None:
        # each argument carries a few ulp; past the envelope the shift cannot matter more
        swing = (
            min(spec.lipschitz * 4 * _EPS * a, 2 * TAIL_MARGIN * abs(spec.c_inf) * a**spec.beta)
            if a > 1 else spec.lipschitz * 4 * _EPS * a
            for a in args
        )
        bound += math.fsum(_weighted(w, lam, s) for s, w in zip(index, swing))
        bound += 4 * _EPS * math.fsum(abs(x) for x in terms)
    # fsum is exact-rounded, so accumulation order cannot cost accuracy
    return math.fsum(terms), TruncationSpec(s_min, s_max, bound)
