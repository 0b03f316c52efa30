"""Incremental graph queries with standard and localized (marking-sensitive) RETE nets."""
from .graph import (
    Change,
    ChangeKind,
    DuplicateId,
    GraphError,
    HostGraph,
    Match,
    PinSet,
    PinUnknownVertex,
    TypeGraph,
    TypeMismatch,
    UnknownId,
    VertexHasIncidentEdges,
    apply_change,
    apply_changes,
    is_edge_dominated,
    navigate,
)
from .localized import INF, LocalizedEngine, LocalizedNet, MarkedConfiguration, execute_localized, localize, order
from .oracle import OracleReport, check_completeness_under, check_consistency, enumerate_matches
from .query import JoinTreePlan, QueryGraph, build_plan, parse_query, plan_join_tree
from .standard import Configuration, StandardNet, effective_size

__version__ = "0.1.0"
