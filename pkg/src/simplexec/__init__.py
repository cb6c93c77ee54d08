"""Exact assembly-graph simplifiers and a neural executor trained to imitate them."""

from .errors import (FormatError, GraphError, InfeasibleSpecError, NonFiniteError, ShapeError,
                     SimplexecError, TraceError)
from .graph import AssemblyGraph, Edge, GroundTruth, build_graph, path_graph, remove_edges
from .simplify import (ALGORITHMS, Algorithm, SimplificationResult, SimplifyConfig, find_transitive_edges,
                       pop_bubbles, remove_transitive, run_pipeline, simplify_pipeline, trim_tips)
from .synthgen import GenSpec, density_spec, generate, generate_dataset
from .traces import ExecutionTrace, build_trace

__version__ = "0.1.0"
