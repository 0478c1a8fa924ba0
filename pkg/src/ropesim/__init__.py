"""Fall simulation and rope-law design for dynamic climbing ropes."""

from .analysis import (
    FallReport,
    closed_form_trajectory,
    ideal_acceleration,
    ideal_arrest_time,
    initial_velocity,
    jensen_gap,
    lower_bound_b0,
    make_report,
)
from .constitutive import (
    DEFAULT_RAMP_WIDTH,
    EnergyDensity,
    HysteresisLaw,
    MicroEnergySamples,
    PropertyReport,
    TensionCurve,
    check_properties,
    convexify,
    energy_density,
    energy_of_strain,
    hysteretic_tension,
    ideal_plateau_law,
    linear_law,
    make_hysteresis,
    plateau_law,
    strain_interval_of_tension,
    strain_of_tension,
    tension,
)
from .design import LawParameterization, OptimizationResult, optimality_certificate, optimize_law
from .dynamics import (
    IntegratorConfig,
    Trajectory,
    energy_ledger,
    simulate_carabiner_fall,
    simulate_cycles,
    simulate_fall,
    solve_segment_tension,
)
from .errors import *  # noqa: F401,F403
from .scenario import CarabinerScenario, Scenario, capstan_mu

__version__ = "0.1.0"
