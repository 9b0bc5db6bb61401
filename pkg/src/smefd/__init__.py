"""Set-membership fault detection, isolation and estimation toolkit."""

from .approximation import DirectionSet, generate_directions, outer_approximate
from .diagnosis import DiagnosisState, DetectionEvent, IsolationEvent, Mode
from .errors import SmefdError
from .estimator import RegressionBuffer, RegularizationPolicy, adaptive_lambda, estimate
from .interval import Interval, IntervalVector, include, state_box
from .polytope import (
    HPolytope,
    VertexSet,
    enumerate_vertices,
    intersect,
    is_empty,
    project_axis,
    remove_redundant,
    vertex_centroid,
)
from .sme import FpsState, UncertaintyBounds, build_ups, reset_fps, step_fps

__version__ = "0.1.0"

__all__ = [
    "DirectionSet",
    "DiagnosisState",
    "DetectionEvent",
    "IsolationEvent",
    "Mode",
    "SmefdError",
    "RegressionBuffer",
    "RegularizationPolicy",
    "adaptive_lambda",
    "estimate",
    "Interval",
    "IntervalVector",
    "include",
    "state_box",
    "HPolytope",
    "VertexSet",
    "enumerate_vertices",
    "intersect",
    "is_empty",
    "project_axis",
    "remove_redundant",
    "vertex_centroid",
    "FpsState",
    "UncertaintyBounds",
    "build_ups",
    "reset_fps",
    "step_fps",
    "generate_directions",
    "outer_approximate",
]
