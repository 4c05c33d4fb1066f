"""Three-level superradiant laser: exact stationary states and pulsed-regime analytics."""
from .params import DerivedParams, PhysicalParams, derive, pulse_parameters, stationary_inputs
from .perturbation import expand, occupations_to_p2
from .pulse import gaussian_approx, int_tau_quadrature, int_tau_series, pulse_profile
from .semiclassics import Regime, classify_regime
from .semiclassics import steady as semiclassical_steady
from .spectrum import harmonic_weights, time_averaged_spectrum
from .steady import (
    DensityMatrix,
    assemble_generator,
    assemble_literal_generator,
    coefficient_diff,
    evolve_oracle,
    observables,
    solve_stationary,
    stationary_state,
    sweep_pump,
)

__version__ = "0.1.0"
