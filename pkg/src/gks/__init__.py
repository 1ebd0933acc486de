"""Simulation and control toolkit for the generalised Kuramoto-Sivashinsky equation."""

from .spectral import (GksParams, SpectralField, count_unstable, hilbert,
                       linear_symbol, nonlinear_galerkin, norms)
from .dynamics import StepperConfig, Trajectory, simulate
from .equilibria import (Branch, Equilibrium, continue_branch, find_pulse_wave,
                         newton_solve)
from .feedback import (ActuatorSet, FeedbackGain, build_matrices,
                       closed_loop_margin, equispaced_actuators, feedback_law,
                       place_poles, target_spectrum)
from .optimal import (CostSpec, PlacementProblem, evaluate_cost,
                      optimize_placement, solve_adjoint)
from .coupled import (CoupledField, CoupledParams, coupled_feedback,
                      coupled_simulate, coupled_steady_state,
                      coupled_unstable_count)

__all__ = [
    "GksParams", "SpectralField", "count_unstable", "hilbert", "linear_symbol",
    "nonlinear_galerkin", "norms", "StepperConfig", "Trajectory", "simulate",
    "Branch", "Equilibrium", "continue_branch", "find_pulse_wave",
    "newton_solve", "ActuatorSet", "FeedbackGain", "build_matrices",
    "closed_loop_margin", "equispaced_actuators", "feedback_law",
    "place_poles", "target_spectrum", "CostSpec", "PlacementProblem",
    "evaluate_cost", "optimize_placement", "solve_adjoint", "CoupledField",
    "CoupledParams", "coupled_feedback", "coupled_simulate",
    "coupled_steady_state", "coupled_unstable_count",
]
