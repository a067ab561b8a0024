"""Spoofing-resilient quantum-illumination LIDAR: click probabilities,
security metrics and a shot-level Monte-Carlo simulator."""

from .scenario import Scenario
from .fock import (
    ComponentSet,
    PortParams,
    SeriesConvergenceError,
    SeriesPolicy,
    SourceParamsBB84,
    SourceParamsQI,
    component_values,
    q_factors,
    thermal_pmf,
)

__all__ = [
    "ComponentSet",
    "PortParams",
    "Scenario",
    "SeriesConvergenceError",
    "SeriesPolicy",
    "SourceParamsBB84",
    "SourceParamsQI",
    "component_values",
    "q_factors",
    "thermal_pmf",
]

__version__ = "0.1.0"
