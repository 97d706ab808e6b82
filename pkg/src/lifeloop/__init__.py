"""lifeloop: a rotation-driven interactive narrative engine.

Compile branching story scripts into a circular story graph, map streamed
user behavior onto camera-language render directives, and gate branch plots
on rotation and pause.
"""

from .behavior import BehaviorSample, Moving, Paused, estimate_motion
from .dsl import canonical_graph, canonical_script, compile_source, parse, serialize
from .engine import CameraDirective, Engine, EngineConfig, EngineState
from .replay import replay
from .story import StoryGraph, Structure, age_at, classify_structure, paths_enumerate, validate
from .traces import Trace, gen_trace

__version__ = "0.1.0"

__all__ = [
    "BehaviorSample", "Moving", "Paused", "estimate_motion",
    "canonical_graph", "canonical_script", "compile_source", "parse", "serialize",
    "CameraDirective", "Engine", "EngineConfig", "EngineState",
    "replay",
    "StoryGraph", "Structure", "age_at", "classify_structure",
    "paths_enumerate", "validate",
    "Trace", "gen_trace",
    "__version__",
]
