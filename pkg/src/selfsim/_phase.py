"""Exact reduction of the phases ``c * N**s`` modulo one.

Lacunary sums evaluate ``sin(pi * c * N**s)`` for ``N**s`` far beyond
``2**53``.  Forming the product in floating point then loses every digit of
the phase, so the reduction is done in fixed-point integer arithmetic carrying
as many bits as the largest phase needs.  Inputs are treated as the exact
rationals that Python floats are.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from mpmath.libmp import pi_fixed

# fractional guard bits kept below the binary point
_GUARD = 72
# phases below this are taken directly in floating point (no reduction needed)
_DIRECT_LIMIT = 0.125


class Cycles:
    """A positive number of cycles ``c``, exactly ``p/q`` or ``p/(2*pi*q)``."""

    __slots__ = ("p", "q", "over_two_pi")

    def __init__(self, value, over_two_pi: bool = False):
        frac = Fraction(value)
        if frac <= 0:
            raise ValueError(f"cycle count must be positive, got {value!r}")
        self.p, self.q = frac.numerator, frac.denominator
        self.over_two_pi = over_two_pi

    @classmethod
    def from_wavenumber(cls, kh) -> "Cycles":
        """``kh / (2 pi)`` for an exact rational ``kh``."""
        return cls(kh, over_two_pi=True)

    def approx(self) -> float:
        v = self.p / self.q
        return v / (2.0 * math.pi) if self.over_two_pi else v

    def fixed(self, bits: int) -> int:
        """``floor(c * 2**bits)`` up to an error of a couple of units."""
        if not self.over_two_pi:
            return (self.p << bits) // self.q
        extra = bits + self.p.bit_length() + 8
        two_pi = pi_fixed(extra) << 1
        return (self.p << (bits + extra)) // (self.q * two_pi)


def _ratio(N) -> tuple[int, int]:
    fr = Fraction(N)
    return fr.numerator, fr.denominator


def centered_phases(c: Cycles, N: float, s_lo: int, s_hi: int) -> np.ndarray:
    """Return ``theta_s`` in ``[-1/2, 1/2]`` with ``theta_s = c N**s mod 1``.

    The result has one entry per ``s`` in ``[s_lo, s_hi]`` and is accurate to
    about ``2**-60`` in absolute terms regardless of the size of ``c N**s``.
    """
    n = s_hi - s_lo + 1
    out = np.empty(max(n, 0))
    if n <= 0:
        return out
    ln_n = math.log(N)
    ln_c = math.log(c.approx())
    # first index whose phase needs reduction
    s0 = math.floor((math.log(_DIRECT_LIMIT) - ln_c) / ln_n) + 1
    s0 = max(s0, s_lo)
    direct_hi = min(s0 - 1, s_hi)
    if direct_hi >= s_lo:
        s = np.arange(s_lo, direct_hi + 1, dtype=float)
        out[: direct_hi - s_lo + 1] = np.exp(ln_c + s * ln_n)
    if s0 > s_hi:
        return out

    a, b = _ratio(N)
    pow2_b = b & (b - 1) == 0
    qb = b.bit_length() - 1
    # bits for the integer part at s_hi plus headroom for error growth N/(N-1)
    top = (ln_c + s_hi * ln_n) / math.log(2.0)
    growth = math.log2(N / (N - 1.0))
    K = max(0, math.ceil(top)) + math.ceil(growth) + _GUARD

    if s0 >= 0:
        extra = math.ceil(s0 * ln_n / math.log(2.0)) + 4
        num = c.fixed(K + extra) * a**s0
        den = b**s0 << extra
    else:
        num = c.fixed(K) * b ** (-s0)
        den = a ** (-s0)
    G = num // den

    mask = (1 << K) - 1
    half = 1 << (K - 1)
    full = 1 << K
    shift = K - 62
    scale = 2.0**-62
    idx = s0 - s_lo
    for _ in range(s0, s_hi + 1):
        frac = G & mask
        if frac >= half:
            frac -= full
        out[idx] = (frac >> shift) * scale if frac >= 0 else -((-frac) >> shift) * scale
        idx += 1
        G = (G * a) >> qb if pow2_b else (G * a) // b
    return out
