"""Expander-graph connectivity toolkit.

Builds regular bipartite and Cayley XOR expanders, checks their spectral
and combinatorial properties, turns them into sparse layer masks, trains
small masked networks with gradual grouping, and counts parameters/MACs.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    FormatError,
    InvalidParameterError,
    InvalidStateError,
    ResourceError,
    TrainingDivergedError,
    XNetError,
)
from .graphs import (
    BipartiteGraph,
    CayleyGraph,
    ExpanderBudget,
    LayeredNetwork,
    RegularGraph,
    bipartite_double_cover,
    build_cayley_xor_graph,
    build_random_regular_bipartite,
    random_layered_network,
    sample_generators,
)
from .spectral import (
    check_expansion,
    check_mixing,
    estimate_second_eigenvalue,
    exact_cayley_spectrum,
    spectral_report,
)
from .connectivity import count_paths, reach_frontiers, sensitivity_depth
from .masks import ConnectivityMask, group_mask, shuffle_permutation, xconv_mask, xlinear_mask
from .accounting import CostReport, LayerSpec, count, count_model
