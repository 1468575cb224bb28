"""Random bipartite rating graphs and recommender performance benchmarks."""

from recgraph.generator import (
    Bigraph,
    GeneratorParams,
    GrowthTrace,
    ParameterError,
    bounce,
    generate,
    initialize,
    step,
)
from recgraph.graphio import GraphFormatError, read_graph, write_graph

__all__ = [
    "Bigraph",
    "GeneratorParams",
    "GraphFormatError",
    "GrowthTrace",
    "ParameterError",
    "bounce",
    "generate",
    "initialize",
    "read_graph",
    "step",
    "write_graph",
]

__version__ = "0.1.0"
