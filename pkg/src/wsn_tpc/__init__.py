"""Transmission-power control for remote state estimation over an interference channel."""

from .channel import PropagationParams, Topology, build_gain_matrix, psr_from_sinr, sinr, sinr_from_psr
from .estimation import SystemModel
from .mdp import Policy, SolverConfig, StateGrid, extract_policy, value_iteration
from .power_control import FeasibleActionSet, Infeasible, enumerate_feasible_actions, foschini_miljanic, psi

__version__ = "0.1.0"
