"""Finite-state robot teams on typed square grids.

Simulation with failure semantics, verification and library-selection design
problems, and instance generators from 3SAT and Dominating Set.
"""
from .controller import Controller, Transition, TransitionTemplate, parse_controller, parse_formula, parse_template
from .gridworld import Environment, Position, parse_environment, render_environment
from .problems import (
    Bot,
    ContDesLSInstance,
    Found,
    TeamDesLSInstance,
    TeamEnvVerInstance,
    design_controllers_ls,
    design_team_homogeneous,
    design_team_ls,
    verify_team_env,
)
from .simulator import Configuration, RunResult, Team, TargetConfiguration, initial_configuration, run, simulate_reference, step

__all__ = [
    "Bot", "Configuration", "ContDesLSInstance", "Controller", "Environment", "Found", "Position", "RunResult",
    "TargetConfiguration", "Team", "TeamDesLSInstance", "TeamEnvVerInstance", "Transition", "TransitionTemplate",
    "design_controllers_ls", "design_team_homogeneous", "design_team_ls", "initial_configuration",
    "parse_controller", "parse_environment", "parse_formula", "parse_template", "render_environment", "run",
    "simulate_reference", "step", "verify_team_env",
]
