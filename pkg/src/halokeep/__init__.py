"""Fuel-optimal, exit-safe stationkeeping on unstable halo orbits of the CR3BP."""

from .conic import ConicProgram, ConicSolution, Status, solve
from .controller import InjectionError, MissionConfig, MissionLog, inject_error, run_mission
from .dynamics import EARTH_MOON, SATURN_ENCELADUS, SystemParams, get_system, jacobi_constant, propagate, step_rk4
from .halo import ReferenceOrbit, build_reference_orbit, load_initial_guess, manifold_trajectories
from .linearize import LinearizedModel, discrete_jacobians
from .lqr import CostToGo, CostWeights, ellipsoid_shape, periodic_riccati
from .safety import SafetyConfig, classify_exit, verify_mission
from .stationkeeping import ConstraintConfig, StationkeepingProblem, assemble, plan_maneuvers

__version__ = "0.1.0"
