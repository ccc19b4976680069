"""Box-counting dimension of sampled dispersion curves."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import _core
from .affine import ChainParams
from .dispersion import DispersionCurve, sample_curve
from .errors import SamplingError

#: fraction of scales dropped at each end before fitting
TRIM = 0.2
#: samples required across the smallest box
MIN_SAMPLES_PER_BOX = 4
#: samples across the smallest box of the default scale ladder; finer boxes
#: undercount rough curves because oscillations between samples are missed
DEFAULT_SAMPLES_PER_BOX = 64
MIN_SCALES = 5
#: default kh window and sample count for dimension runs
DEFAULT_RANGE = (0.01, 100.0)
DEFAULT_SAMPLES = 2**18 + 1


def normalize(x, y) -> tuple[np.ndarray, np.ndarray]:
    """Map a curve affinely onto the unit square (a flat ``y`` maps to 0)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(np.diff(x) <= 0):
        raise SamplingError("curve abscissae must be strictly increasing with at least 2 samples")
    xs = (x - x[0]) / (x[-1] - x[0])
    span = float(np.ptp(y))
    ys = (y - y.min()) / span if span > 0 else np.zeros_like(y)
    return xs, ys


def default_scales(n_samples: int) -> np.ndarray:
    """Dyadic box sizes from 1/4 down to 64 samples per box."""
    finest = DEFAULT_SAMPLES_PER_BOX / (n_samples - 1)
    kmax = int(math.floor(-math.log2(finest)))
    if kmax < 2:
        raise SamplingError(f"{n_samples} samples cannot support any box size")
    return 2.0 ** -np.arange(2, kmax + 1)


def box_count_xy(x, y, scales) -> np.ndarray:
    """Boxes met by the polyline through ``(x, y)`` after normalisation, per scale."""
    xs, ys = normalize(x, y)
    scales = np.asarray(scales, dtype=float)
    if scales.size == 0 or np.any(scales <= 0) or np.any(scales > 1):
        raise ValueError("box sizes must lie in (0, 1]")
    spacing = float(np.max(np.diff(xs)))
    if float(scales.min()) < MIN_SAMPLES_PER_BOX * spacing * (1 - 1e-9):
        raise SamplingError(
            f"smallest box {scales.min():.3g} holds fewer than {MIN_SAMPLES_PER_BOX} samples "
            f"(spacing {spacing:.3g}); sample the curve more densely"
        )
    return _core.box_count(xs, ys, scales)


def box_count(curve: DispersionCurve, scales) -> np.ndarray:
    """Box counts of a dispersion curve normalised to the unit square."""
    return box_count_xy(curve.grid, curve.omega2, scales)


@dataclass
class DimensionReport:
    delta: float
    D_estimated: float
    ci: float
    scales: list
    counts: list
    D_expected: float | None = None
    clipped: bool = False
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def fit_dimension(scales, counts, trim: float = TRIM) -> tuple[float, float, np.ndarray]:
    """Slope of ``log count`` against ``log(1/size)`` over the central scales.

    Returns the slope, its standard error and the mask of scales used.
    """
    scales = np.asarray(scales, dtype=float)
    counts = np.asarray(counts, dtype=float)
    order = np.argsort(scales)
    drop = int(math.floor(trim * scales.size))
    keep = np.zeros(scales.size, dtype=bool)
    keep[order[drop: scales.size - drop]] = True
    keep &= counts > 0
    if keep.sum() < MIN_SCALES:
        raise SamplingError(f"only {int(keep.sum())} usable scales after trimming; need {MIN_SCALES}")
    fit = stats.linregress(np.log(1.0 / scales[keep]), np.log(counts[keep]))
    return float(fit.slope), float(fit.stderr), keep


def estimate_dimension(curve: DispersionCurve, scales=None, trim: float = TRIM) -> DimensionReport:
    """Box-counting dimension of the curve, with ``2 - delta`` alongside when ``0 < delta < 1``."""
    if scales is None:
        scales = default_scales(len(curve))
    scales = np.sort(np.asarray(scales, dtype=float))[::-1]
    counts = box_count(curve, scales)
    slope, err, keep = fit_dimension(scales, counts, trim)
    clipped = not (1.0 <= slope <= 2.0)
    if clipped:
        warnings.warn(f"box-counting slope {slope:.4f} lies outside [1, 2]; clipped", RuntimeWarning,
                      stacklevel=2)
    d = curve.params.delta
    return DimensionReport(
        delta=d,
        D_estimated=min(max(slope, 1.0), 2.0),
        ci=err,
        scales=scales.tolist(),
        counts=[int(c) for c in counts],
        D_expected=2.0 - d if 0.0 < d < 1.0 else None,
        clipped=clipped,
        meta={
            "N": curve.params.N,
            "h": curve.params.h,
            "kh_range": [float(curve.grid[0]), float(curve.grid[-1])],
            "samples": len(curve),
            "raw_slope": slope,
            "scales_used": scales[keep].tolist(),
        },
    )


def dimension_curve(
    params: ChainParams,
    kh_min: float = DEFAULT_RANGE[0],
    kh_max: float = DEFAULT_RANGE[1],
    n: int = DEFAULT_SAMPLES,
    tol: float = 1e-8,
) -> DispersionCurve:
    """Dense fast-mode dispersion curve suitable for box counting."""
    return sample_curve(params, kh_min, kh_max, n, tol, exact=False)
