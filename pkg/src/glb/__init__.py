"""Lifeline-based global load balancing over message-passing places.

Workers process their local task bag n items at a time, answering steal
requests between batches; a drained worker steals from up to w random
victims, then registers on its z hypercube lifeline buddies and goes
inactive until one pushes it work.  Results fold through a commutative,
associative reducer once the whole group is quiescent.
"""

from .bags import Interval, IntervalBag, ListBag, SplitStrategy
from .core import (
    GlbConfig,
    GlbResult,
    StatsReport,
    TaskBag,
    TaskQueue,
    Worker,
    WorkerStats,
    aggregate_stats,
    glb_run,
    lifeline_buddies,
    random_victim,
)
from .errors import (
    GlbError,
    InvalidConfigError,
    ProtocolError,
    QuiescenceTimeout,
    RoutingError,
    WorkloadError,
)
from .runtime import Envelope, PlaceGroup, SchedulerMode, run_until_quiescent, spawn_places

__all__ = [
    "GlbConfig",
    "GlbResult",
    "GlbError",
    "Interval",
    "IntervalBag",
    "InvalidConfigError",
    "ListBag",
    "PlaceGroup",
    "Envelope",
    "ProtocolError",
    "QuiescenceTimeout",
    "RoutingError",
    "SchedulerMode",
    "SplitStrategy",
    "StatsReport",
    "TaskBag",
    "TaskQueue",
    "Worker",
    "WorkerStats",
    "WorkloadError",
    "aggregate_stats",
    "glb_run",
    "lifeline_buddies",
    "random_victim",
    "run_until_quiescent",
    "spawn_places",
]

__version__ = "0.1.0"
