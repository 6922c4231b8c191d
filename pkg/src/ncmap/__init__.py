"""Derivative-free optimization with non-commutative maps.

The exploration matrix W is built so that its quadratic form hits a target,
and a pair of generating functions turns m consecutive maps into an
approximate gradient step.
"""
from .engine import EngineConfig, ObjectivePort, RunRecord, run, transition_step
from .genfun import GeneratingPair, evaluate, make_pair
from .sequence import ExplorationMatrix, MapParameters, TargetSpec, compute_T_direct, construct_W
from .verify import VerificationReport

__all__ = [
    "EngineConfig",
    "ExplorationMatrix",
    "GeneratingPair",
    "MapParameters",
    "ObjectivePort",
    "RunRecord",
    "TargetSpec",
    "VerificationReport",
    "compute_T_direct",
    "construct_W",
    "evaluate",
    "make_pair",
    "run",
    "transition_step",
]
