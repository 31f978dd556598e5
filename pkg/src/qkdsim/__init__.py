"""Discrete-event simulator for trusted-relay QKD network routing."""

from .capability import (
    LinkMetricInputs,
    path_capability,
    recovery_capability,
    sustainable_working_time,
)
from .keypool import KeyPool, PoolState, SimulationIntegrityError
from .scenario import ConfigError, Scenario
from .simulation import Simulation, run_simulation
from .topology import Link, RateModel, Topology, key_rate_from_length, load_topology
from .workload import its_capacity, make_workload

__all__ = [
    "ConfigError",
    "KeyPool",
    "Link",
    "LinkMetricInputs",
    "PoolState",
    "RateModel",
    "Scenario",
    "Simulation",
    "SimulationIntegrityError",
    "Topology",
    "its_capacity",
    "key_rate_from_length",
    "load_topology",
    "make_workload",
    "path_capability",
    "recovery_capability",
    "run_simulation",
    "sustainable_working_time",
]

__version__ = "0.1.0"
