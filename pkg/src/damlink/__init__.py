"""Link-level simulator for multi-user delay alignment modulation."""

__version__ = "0.1.0"

from .channel import ChannelSet, PathComponent, SimConfig, UEChannel, generate_channel_set
from .delay_design import (
    DelayPlan,
    choose_compensation_counts,
    enumerate_alignment_sets,
    solve_compensation_delays,
)
from .numerics import null_space_basis, rank, svd, water_fill

__all__ = [
    "__version__",
    "ChannelSet",
    "DelayPlan",
    "PathComponent",
    "SimConfig",
    "UEChannel",
    "choose_compensation_counts",
    "enumerate_alignment_sets",
    "generate_channel_set",
    "null_space_basis",
    "rank",
    "solve_compensation_delays",
    "svd",
    "water_fill",
]
