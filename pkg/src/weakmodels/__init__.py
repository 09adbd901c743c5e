"""Trackability analysis and hidden-node tracking for weak models."""

__version__ = "0.1.0"

from .model import (
    NodeMapping,
    ParseError,
    WeakModel,
    WeakModelError,
    parse_model,
    serialize_model,
    to_single_colored,
)
from .structure import (
    Regime,
    automorphism_count,
    classify_nodes,
    classify_trackability,
    hypothesis_bound,
    pair_graph,
)
from .tracking import (
    enumerate_hypotheses,
    hypothesis_count,
    init_tracker,
    step,
    track,
    worst_case_growth,
)
from .markov import MarkovChain, attach_probabilities, uniform_chain
from .fixtures import load_fixture

__all__ = [
    "NodeMapping", "ParseError", "WeakModel", "WeakModelError", "parse_model",
    "serialize_model", "to_single_colored", "Regime", "automorphism_count",
    "classify_nodes", "classify_trackability", "hypothesis_bound", "pair_graph",
    "enumerate_hypotheses", "hypothesis_count", "init_tracker", "step", "track",
    "worst_case_growth", "MarkovChain", "attach_probabilities", "uniform_chain",
    "load_fixture",
]
