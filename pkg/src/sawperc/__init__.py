"""Self-avoiding paths in Bernoulli bond percolation on Z^d.

Exact path counting, size-biased disorder and spined environments, bridge
constructions that lower-bound the number of open paths, and the reference
walk laws used to study typical spines.
"""
from .bridges import (
    BridgeSets,
    Selection,
    build_path,
    count_lower_bound,
    detect_bridges,
    enumerate_selected_paths,
    tilde_partition_floor,
)
from .environment import Environment, FiniteEnvironment, edge_uniform, enumerate_finite, relevant_edges
from .lattice import Direction, Edge, canonical_edge, origin
from .paths import (
    Path,
    PathCensus,
    census,
    count_open_saw,
    count_saw,
    count_saw_no4,
    enumerate_paths,
    is_good_spine,
    is_self_avoiding,
    normalized_partition,
)
from .refwalks import WalkLaw, importance_sampled_mean, rng_stream, sample_uniform_saw
from .sizebias import (
    Distribution,
    SpinedEnvironment,
    make_spined,
    size_biased_law_exact,
    spine_law_exact,
    strong_disorder_certificate,
    tilde_partition,
)

__all__ = [
    "BridgeSets", "Selection", "build_path", "count_lower_bound", "detect_bridges",
    "enumerate_selected_paths", "tilde_partition_floor",
    "Environment", "FiniteEnvironment", "edge_uniform", "enumerate_finite", "relevant_edges",
    "Direction", "Edge", "canonical_edge", "origin",
    "Path", "PathCensus", "census", "count_open_saw", "count_saw", "count_saw_no4",
    "enumerate_paths", "is_good_spine", "is_self_avoiding", "normalized_partition",
    "WalkLaw", "importance_sampled_mean", "rng_stream", "sample_uniform_saw",
    "Distribution", "SpinedEnvironment", "make_spined", "size_biased_law_exact",
    "spine_law_exact", "strong_disorder_certificate", "tilde_partition",
]
