"""Spin ensembles in random longitudinal fields under frequent measurements,
phase modulations, or a mix of both."""

from .dynamics import (
    Propagator2,
    SpinParams,
    one_period_propagator,
    p0_single,
    pmeas_single_survival,
    pmeas_single_transition,
    pmix_single_survival,
    pmix_single_transition,
    pmod_single,
    sin2_lambda,
)
from .protocols import (
    AsymptoticRates,
    Protocol,
    ProtocolKind,
    TransitionResult,
    asymptotics,
    crossing_scan,
    small_tau_ratios,
    transition_probability,
    two_pulse_meas,
    two_pulse_mod,
)
from .quadrature import QuadratureError
from .spectral import (
    DensityKind,
    EnsembleSpec,
    SpectralDensity,
    SpectralMoments,
    density_at,
    integrate_expectation,
    moments,
    normalize,
    quantile_sample,
)

__version__ = "0.1.0"
