"""Active elastic sheet swarm simulator with TCACS parameter tuning."""

from .core import (
    AgentState,
    ConfigurationError,
    IntegrationDiverged,
    ModelParams,
    NoiseSample,
    SingularityError,
    SpringNetwork,
    SwarmState,
    build_lattice,
    heading_vector,
    spring_force,
    step,
    total_force,
)
from .scenario import ScenarioConfig, Trajectory, evaluate_objective, run_scenario, setup_config

__version__ = "0.1.0"
