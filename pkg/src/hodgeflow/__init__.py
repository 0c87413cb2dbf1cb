"""Topological signal processing on oriented 2-dimensional simplicial complexes."""

__version__ = "0.1.0"

from .complex import (  # noqa: E402
    BoundaryPair,
    OrientedComplex2,
    boundaries,
    build_from_edges,
    clique_complex,
    line_graph,
    threshold_binarize,
)
from .errors import ConsistencyError, HodgeflowError, ValidationError  # noqa: E402
from .filters import FilterSpec, apply_spatial, apply_spectral, frequency_response  # noqa: E402
from .hodge import (  # noqa: E402
    BettiNumbers,
    HodgeLaplacians,
    HodgeSpectrum,
    betti,
    laplacians,
    lift_edge_to_node,
    quadratic_variation,
    spectrum,
)
from .leadlag import edge_signal, lag_form, leadlag_matrix, temporal_stats, triangle_signal  # noqa: E402
from .signal import curl, curl_energy_fraction, divergence, hodge_decompose, itft, tft  # noqa: E402
from .stats import (  # noqa: E402
    GroupAssignment,
    aggregate_curl_by_triplet,
    aggregate_edges_by_group_pair,
    aggregate_nodes_by_group,
    sign_flip_test,
)
