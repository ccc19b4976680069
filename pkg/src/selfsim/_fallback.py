"""Pure numpy versions of the hot kernels.

Same signatures and semantics as the compiled ``_kernels`` module; selected by
``selfsim._core`` when the extension is unavailable or ``SELFSIM_PURE=1``.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 4096
_TWO_PI_HI = 6.283185307179586
_TWO_PI_LO = 2.4492935982947064e-16
_REDUCE_ABOVE = 1e5
# past this half-phase a double holds no phase information (4 ulp > 1 rad)
_PHASELESS_ABOVE = 1.125899906842624e15


def _sin2(x):
    return np.where(np.abs(x) >= _PHASELESS_ABOVE, 0.5, _sin_reduced(x) ** 2)


def _sin_reduced(x):
    # same reduction as the compiled kernel; exact for arguments below 1e5
    big = np.abs(x) > _REDUCE_ABOVE
    if np.any(big):
        q = np.rint(x[big] / _TWO_PI_HI)
        x = x.copy()
        x[big] = (x[big] - q * _TWO_PI_HI) - q * _TWO_PI_LO
    return np.sin(x)


def omega2_series(kh, scales, weights):
    """``4 * sum_s weights[s] * sin(kh * scales[s] / 2)**2`` for every ``kh``.

    Half-phases above 1e5 are reduced by a two-part ``2 pi`` first; the result
    differs from an exact ``sin`` of the rounded argument by a few ulp of the
    argument, which is the size of that argument's own rounding error.  Past
    ``2**50`` no phase information survives and ``sin**2`` is replaced by its
    mean ``1/2``; callers charge such terms a full unit of error either way.
    """
    kh = np.ascontiguousarray(kh, dtype=float)
    scales = np.asarray(scales, dtype=float)
    weights = 4.0 * np.asarray(weights, dtype=float)
    out = np.empty_like(kh)
    for start in range(0, kh.size, _CHUNK):
        block = kh[start : start + _CHUNK, None] * (0.5 * scales[None, :])
        out[start : start + _CHUNK] = _sin2(block) @ weights
    return out


def _lagrange_weights(frac, order):
    # nodes at offsets -(order-1)/2 .. (order+1)/2 around floor(position)
    lo = -(order - 1) // 2
    nodes = np.arange(lo, lo + order + 1, dtype=float)
    w = np.ones(order + 1)
    for i in range(order + 1):
        for j in range(order + 1):
            if i != j:
                w[i] *= (frac - nodes[j]) / (nodes[i] - nodes[j])
    return lo, w


def shift_sum_lagrange(u, shifts, weights, order):
    """``sum_s w_s (I(j+sigma_s) + I(j-sigma_s) - 2 u_j)`` on a periodic grid.

    ``shifts`` are displacements in grid cells, ``I`` is local Lagrange
    interpolation of odd degree ``order`` with ``order + 1`` nodes.
    """
    u = np.ascontiguousarray(u, dtype=float)
    n = u.size
    out = np.zeros(n)
    for sigma, wt in zip(np.asarray(shifts, dtype=float), np.asarray(weights, dtype=float)):
        acc = -2.0 * u
        for sign in (1.0, -1.0):
            pos = sign * sigma
            base = np.floor(pos)
            lo, w = _lagrange_weights(pos - base, order)
            b = int(base)
            for i in range(order + 1):
                acc = acc + w[i] * np.roll(u, -(b + lo + i))
        out += wt * acc
    return out


def box_count(x, y, sizes):
    """Boxes of side ``size`` met by the polyline through ``(x, y)`` in the unit square.

    ``x`` must be increasing.  Each column's vertical extent includes the
    polyline's crossings of the column edges.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    counts = np.empty(len(sizes), dtype=np.int64)
    for m, eps in enumerate(sizes):
        ncol = int(np.ceil(1.0 / eps - 1e-12))
        col = np.minimum((x / eps).astype(np.int64), ncol - 1)
        px, py = [col], [y]
        step = np.nonzero(col[1:] != col[:-1])[0]
        if step.size:
            c_right = col[step + 1]
            xb = c_right * eps
            t = (xb - x[step]) / (x[step + 1] - x[step])
            yb = y[step] + t * (y[step + 1] - y[step])
            px += [c_right - 1, c_right]
            py += [yb, yb]
        cols = np.concatenate(px)
        ys = np.concatenate(py)
        ymin = np.full(ncol, np.inf)
        ymax = np.full(ncol, -np.inf)
        np.minimum.at(ymin, cols, ys)
        np.maximum.at(ymax, cols, ys)
        used = np.isfinite(ymin)
        nrow = ncol
        lo = np.minimum((ymin[used] / eps).astype(np.int64), nrow - 1)
        hi = np.minimum((ymax[used] / eps).astype(np.int64), nrow - 1)
        counts[m] = int(np.sum(hi - lo + 1))
    return counts
