"""Interpoint distance selection and optimization in the plane."""
from .brs import BrsOutput, CliqueCover, brs_for_L, complete_brs, partial_brs, partial_brs_bipartite, partial_brs_selfjoin
from .core import (
    ConstructionFailure,
    EmptyCollection,
    FallbackToEnumeration,
    IpdistError,
    NoFeasibleValue,
    Point,
    PointSequence,
    PointSet,
    RankOutOfRange,
    RunStats,
    SqInterval,
    WeightBoundViolated,
    sq_dist,
)
from .dfd import DfdInstance, dfd1, dfd1_decide, dfd2, dfd2_decide
from .framework import FrameworkConfig, ShrinkResult, optimize_deterministic, optimize_randomized, shrink_interval
from .selection import (
    SelectionConfig,
    count_cross_pairs_at_most,
    count_pairs_at_most,
    select_distance,
    select_distance_bipartite,
)
from .udg import RspInstance, rsp, udg_decide

__version__ = "0.1.0"
