"""Bushy-tree forcing, fireworks arguments and DNC-building probabilistic
algorithms, simulated at desk scale."""
from .bushy import (EnumerableSet, GrowthFn, PredicateSet, WitnessTree, avoidance_lower_bound,
                    closure, exact_avoid_probability, is_big_bounded, random_walk, verify_witness)
from .dnc import RunTrace, audit_trace, run_bounded_dnc, run_unbounded_dnc
from .growth import GrowthFamily
from .harness import ExperimentSpec, StatsReport, run_experiment

__version__ = "0.1.0"

__all__ = [
    "EnumerableSet", "ExperimentSpec", "GrowthFamily", "GrowthFn", "PredicateSet", "RunTrace",
    "StatsReport", "WitnessTree", "audit_trace", "avoidance_lower_bound", "closure",
    "exact_avoid_probability", "is_big_bounded", "random_walk", "run_bounded_dnc",
    "run_experiment", "run_unbounded_dnc", "verify_witness",
]
