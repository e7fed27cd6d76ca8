"""Uplink power control in a two-tier macrocell/femtocell network.

Library layout:

* ``geometry``    -- deterministic grid and random disc layouts, distances
* ``channel``     -- path-loss gain model, gain matrix blocks, link budgets
* ``feasibility`` -- spectral radius, SINR feasibility, centralized powers
* ``pareto``      -- per-tier SINR frontier and upper bounds
* ``game``        -- utility-based distributed SINR adaptation
* ``protection``  -- cellular link-quality protection loop and metrics
* ``experiments`` -- Monte Carlo harnesses, config, CSV emission
* ``cli``         -- ``twotier`` command line front end
"""

from twotier.channel import GainMatrix, PropagationParams, build_gain_matrix
from twotier.feasibility import SinrTargets, is_feasible, solve_centralized, spectral_radius
from twotier.game import GameParams, run_to_equilibrium
from twotier.geometry import NetworkGeometry, make_grid_layout, make_random_layout
from twotier.protection import ProtectionConfig, run_protection

__version__ = "0.1.0"

__all__ = [
    "GainMatrix",
    "GameParams",
    "NetworkGeometry",
    "PropagationParams",
    "ProtectionConfig",
    "SinrTargets",
    "build_gain_matrix",
    "is_feasible",
    "make_grid_layout",
    "make_random_layout",
    "run_protection",
    "run_to_equilibrium",
    "solve_centralized",
    "spectral_radius",
    "__version__",
]
