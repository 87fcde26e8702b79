"""Hamilton cycle and path extensions for hypercube matchings spanning few
directions, with exhaustive small-dimension verification campaigns."""

from .canon import CanonicalKey, canonical_key, orbit_size
from .certificates import (
    CycleCertificate,
    PathCertificate,
    validate_cycle,
    validate_path,
)
from .construct import (
    CubeSequence,
    HalfLayerSequence,
    attach_cube,
    disjoint_paths,
    extend_to_cycle,
    extend_to_path,
    gray_cycle,
    gray_path,
    gray_path_avoiding,
    sequence_path,
)
from .cube import (
    CConditionReport,
    Edge,
    HalfLayerDesc,
    Matching,
    Vertex,
    almost_half_layers_in,
    c_condition_report,
    edge_between,
    embed,
    format_matching,
    half_layers_in,
    neighbor,
    parity,
    parse_matching,
    project,
    spanned_directions,
    subcube_matching,
    unique_extension,
)
from .enumeration import (
    emit_dimacs,
    maximal_matchings,
    one_edge_away_instances,
    uncovered_classes,
)
from .errors import (
    ConjectureCounterexampleError,
    HypermatchError,
    NotUniquelyExtendableError,
    UnsupportedFallbackError,
)
from .solver import (
    endpoint_set,
    hamilton_cycle,
    hamilton_path,
    two_distinct_paths,
)
from .verify import (
    BqnWitness,
    CampaignReport,
    bqn_counterexample,
    verify_cycle_conjecture,
    verify_necessity,
    verify_path_conjecture,
)

__version__ = "0.1.0"
