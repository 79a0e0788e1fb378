"""Selectionist learning with populations of small Hopfield networks."""

__version__ = "0.1.0"

from .alphabet import GlyphGrid, builtin_alphabet, decode_pattern, encode_grid, load_glyph_set
from .dynamics import GroupState, LearningParams
from .harness import MetricsRecord, SimConfig, Simulation, census, export_metrics, run_simulation
from .hopfield import converge, energy, is_stable, new_random_group
from .repertoire import build_abstraction_map, build_recognition_repertoire

__all__ = [
    "GlyphGrid", "GroupState", "LearningParams", "MetricsRecord", "SimConfig", "Simulation",
    "build_abstraction_map", "build_recognition_repertoire", "builtin_alphabet", "census",
    "converge", "decode_pattern", "encode_grid", "energy", "export_metrics", "is_stable",
    "load_glyph_set", "new_random_group", "run_simulation",
]
