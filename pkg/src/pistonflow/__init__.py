"""Simulation and boundary-feedback stabilization of a compressible gas
between two moving pistons.

The gas obeys the 1-D barotropic Navier-Stokes equations on the moving
domain between the pistons; the pistons obey Newton's law, the right one
pushed by a constant external pressure and the left one by the control
input.  Discretized in the Lagrangian mass coordinate the moving-boundary
problem becomes a fixed-domain ODE system with mass conservation built in.

Layout:

* ``gas``      -- pressure/viscosity laws and the derived potentials
* ``state``    -- mass-grid state, normalized profiles, deviation norm
* ``lyapunov`` -- energy functionals, dissipation identities, barrier bounds
* ``control``  -- the boundary feedback laws
* ``solver``   -- RK4 time integration and trajectory records
* ``harness``  -- scenarios, certification reports, parameter sweeps
* ``cli``      -- the ``pistonflow`` command
"""

from .control import ControlPolicy, Friction, FullFeedback, OpenLoop, control_input, \
    friction_clf_weight, friction_policy
from .gas import (GasModel, GasModelError, IdealGasLaw, QuadratureConfig,
                  QuadratureError, barrier_potential, check_gas_admissibility,
                  compression_energy_density, estimate_ratio_bound, generic_gas,
                  ideal_gas, solve_rho_star, tabulated_gas, viscosity_potential)
from .harness import (DecayFit, Diagnostics, RunResult, Scenario, ScenarioError,
                      check_gas, fit_decay, identity_residuals, load_scenario,
                      monotonicity_violations, run, sweep)
from .lyapunov import (BarrierBounds, BarrierUnavailableError, LyapunovReport,
                       barrier_bounds, clf_report, clf_value, deviation_squared,
                       dissipation_breakdown, dissipation_rates, potential_energy,
                       total_energy, transformed_energy)
from .solver import (DensityPositivityError, DivergedStateError, SolverConfig,
                     StepDiagnostics, TrajectoryRecord, momentum, semidiscrete_rhs,
                     simulate, stable_dt, step)
from .state import (InitialConditions, InvalidProfileError, NormalizedProfile,
                    SystemState, deviation_norm, make_initial_state, node_positions,
                    normalize_profiles, reconstruct)

__version__ = "0.1.0"

__all__ = [
    "BarrierBounds", "BarrierUnavailableError", "ControlPolicy", "DecayFit",
    "DensityPositivityError", "Diagnostics", "DivergedStateError", "Friction",
    "FullFeedback", "GasModel", "GasModelError", "IdealGasLaw",
    "InitialConditions", "InvalidProfileError", "LyapunovReport",
    "NormalizedProfile", "OpenLoop", "QuadratureConfig", "QuadratureError",
    "RunResult", "Scenario", "ScenarioError", "SolverConfig", "StepDiagnostics",
    "SystemState", "TrajectoryRecord", "barrier_bounds", "barrier_potential",
    "check_gas", "check_gas_admissibility", "clf_report", "clf_value",
    "compression_energy_density", "control_input", "deviation_norm",
    "deviation_squared", "dissipation_breakdown", "dissipation_rates",
    "estimate_ratio_bound", "fit_decay", "friction_clf_weight", "friction_policy",
    "generic_gas", "ideal_gas", "identity_residuals", "load_scenario",
    "make_initial_state", "momentum", "monotonicity_violations", "node_positions",
    "normalize_profiles", "potential_energy", "reconstruct", "run",
    "semidiscrete_rhs", "simulate", "solve_rho_star", "stable_dt", "step",
    "sweep", "tabulated_gas", "total_energy", "transformed_energy",
    "viscosity_potential",
]
