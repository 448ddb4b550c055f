"""Two-stage stochastic supply-chain planning for an eVTOL manufacturer."""

from .domain import CostBreakdown, Instance, instance_from_dict, instance_to_dict, load_instance
from .errors import DataError, PlanningError, SolverError

__version__ = "0.1.0"

__all__ = [
    "CostBreakdown", "DataError", "Instance", "PlanningError", "SolverError", "instance_from_dict",
    "instance_to_dict", "load_instance",
]
