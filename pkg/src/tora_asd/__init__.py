"""Additive-state-decomposition tracking control of the TORA benchmark.

A simulation library and CLI for rotor-angle tracking of the
translational oscillator with rotational actuator (TORA/RTAC) under
sinusoidal disturbances.  The state is split additively into an LTI
primary subsystem that absorbs every external signal — handled by a
disturbance observer plus an internal-model controller — and a
nonlinear secondary subsystem with zero equilibrium, stabilized by
backstepping; an exact (non-asymptotic) observer recovers both
subsystem states from the measured plant, and the two controls simply
add.

Modules
-------
numerics       eigenvalue bounds, observability rank, fixed-step RK4
plant          TORA dynamics, exosystem, configuration validation
decomposition  LTI skeleton, zero-term transform, primary/secondary split
estimators     disturbance observer, exact decomposition observer
control        internal-model gains, backstepping stabilizer, composite law
simulation     closed-loop assembly, integration engines, run reports
scenarios      built-in benchmark configurations (paper-1, paper-2)
configio       YAML config/report and CSV trajectory serialization
cli            `tora-asd check` / `tora-asd run`
"""

from .control import (
    BacksteppingIntermediates,
    PrimaryGains,
    b_upper_bound,
    backstepping_intermediates,
    backstepping_vs,
    build_A_a,
    composite_control,
    filtered_error,
    primary_controller,
    proposition1_gains,
    validate_b,
)
from .decomposition import (
    SystemMatrices,
    build_A,
    build_matrices,
    phi,
    primary_dynamics,
    secondary_coupling_g,
    secondary_dynamics,
    secondary_dynamics_expanded,
    verify_additive_decomposition,
)
from .estimators import (
    DisturbanceObserverParams,
    decomposition_observer_dynamics,
    disturbance_observer_dynamics,
    observer_lyapunov,
)
from .numerics import (
    NumericalBlowupError,
    max_real_eig,
    observability_rank,
    rk4_integrate,
    rk4_step,
)
from .plant import (
    ConfigurationError,
    ExoSystem,
    PlantParams,
    ReferenceParams,
    ValidationReport,
    coupling_coefficient,
    disturbance_output,
    exo_dynamics,
    split_unit_frequency,
    tora_dynamics,
    validate_configuration,
)
from .scenarios import BUILTIN_SCENARIOS, get_scenario, paper_1, paper_2
from .simulation import (
    RunReport,
    ScenarioConfig,
    Trajectory,
    build_loop_dynamics,
    independent_secondary_oracle,
    run,
    secondary_oracle_deviation,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_SCENARIOS",
    "BacksteppingIntermediates",
    "ConfigurationError",
    "DisturbanceObserverParams",
    "ExoSystem",
    "NumericalBlowupError",
    "PlantParams",
    "PrimaryGains",
    "ReferenceParams",
    "RunReport",
    "ScenarioConfig",
    "SystemMatrices",
    "Trajectory",
    "ValidationReport",
    "b_upper_bound",
    "backstepping_intermediates",
    "backstepping_vs",
    "build_A",
    "build_A_a",
    "build_loop_dynamics",
    "build_matrices",
    "composite_control",
    "coupling_coefficient",
    "decomposition_observer_dynamics",
    "disturbance_observer_dynamics",
    "disturbance_output",
    "exo_dynamics",
    "filtered_error",
    "get_scenario",
    "independent_secondary_oracle",
    "max_real_eig",
    "observability_rank",
    "observer_lyapunov",
    "paper_1",
    "paper_2",
    "phi",
    "primary_controller",
    "primary_dynamics",
    "proposition1_gains",
    "rk4_integrate",
    "rk4_step",
    "run",
    "secondary_coupling_g",
    "secondary_dynamics",
    "secondary_dynamics_expanded",
    "secondary_oracle_deviation",
    "split_unit_frequency",
    "tora_dynamics",
    "validate_b",
    "validate_configuration",
    "verify_additive_decomposition",
]
