"""Spiking looming-detector simulation and parameter tuning."""

__version__ = "0.1.0"

from .events import (EventStream, Label, LabelTrack, StimulusSpec, drop_events, parse_event_file,
                     pool_to_grid, synthesize, synthesize_composite)
from .network import REFERENCE_PARAMS, Bounds, ParamVector, Topology, Variant, build, simulate
from .objective import DetectorConfig, FitnessReport, ScoreConfig, evaluate, mann_whitney_u
from .problem import LoomingObjective

__all__ = [
    "EventStream", "Label", "LabelTrack", "StimulusSpec", "drop_events", "parse_event_file",
    "pool_to_grid", "synthesize", "synthesize_composite",
    "REFERENCE_PARAMS", "Bounds", "ParamVector", "Topology", "Variant", "build", "simulate",
    "DetectorConfig", "FitnessReport", "ScoreConfig", "evaluate", "mann_whitney_u",
    "LoomingObjective",
]
