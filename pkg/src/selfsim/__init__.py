"""Numerics for self-similar linear chains: dispersion, continuum limit, waves and dimension."""

__version__ = "0.1.0"

from ._core import BACKEND
from .affine import AdmissibleFunctionSpec, ChainParams, TruncationSpec, self_similar_sum, validate_band
from .continuum import (
    DensityModel,
    KernelModel,
    c_constant,
    empirical_density,
    fractional_laplacian_integral,
    gamma_fn,
    kernel_convolution,
    kernel_eval,
    oscillator_density,
    riemann_liouville,
)
from .dimension import DimensionReport, box_count, dimension_curve, estimate_dimension
from .dispersion import DispersionCurve, long_wave_ratio, omega2, sample_curve, scaling_residual
from .errors import BandError, InstabilityError, NonConvergenceError, SamplingError, SelfSimError
from .laplacian import (
    AnalyticProbe,
    Field,
    FieldOperator,
    elastic_energy_density,
    laplacian_apply_analytic,
    laplacian_apply_field,
    total_elastic_energy,
)
from .simulate import SimRun, SpectralState, Trajectory, evolve_spectral, simulate, stability_limit

__all__ = [name for name in dir() if not name.startswith("_")]
