"""Time-use estimation and activity spaces on polygon-network (PN) spaces from GPS data."""

__version__ = "0.1.0"

from .activity_space import ActivitySpace, composed_space, level_space, weighted_level_space
from .clustering import DayPattern, compress, remove_jitter_loops, single_linkage, tw_edit_distance
from .estimation import MarkedDay, TimeUseTable, compute_marks, estimate
from .geometry import Entity, PNSpace, nearest_entity, voronoi_margin
from .simulator import Scenario, simulate_study

__all__ = [
    "ActivitySpace", "DayPattern", "Entity", "MarkedDay", "PNSpace", "Scenario", "TimeUseTable",
    "composed_space", "compress", "compute_marks", "estimate", "level_space", "nearest_entity",
    "remove_jitter_loops", "simulate_study", "single_linkage", "tw_edit_distance", "voronoi_margin",
    "weighted_level_space",
]
