from __future__ import annotations

import pytest

from localrete import Change, HostGraph, PinSet, TypeGraph, apply_changes, parse_query
from localrete.workloads import CONTAINMENT_QUERY, PATH_QUERY, ast_type_graph, synthetic_ast


def make_h0(extra_b: bool = False) -> HostGraph:
    """a:A with two T-edges to b:B and c:B."""
    g = HostGraph(TypeGraph({"A", "B"}, {"T": ("A", "B")}))
    changes = [Change.add_vertex("a", "A"), Change.add_vertex("b", "B"), Change.add_vertex("c", "B")]
    if extra_b:
        changes.append(Change.add_vertex("d", "B"))
    changes += [Change.add_edge("e1", "T", "a", "b"), Change.add_edge("e2", "T", "a", "c")]
    apply_changes(g, PinSet(), changes)
    g.changelog.clear()
    return g


@pytest.fixture
def h0() -> HostGraph:
    return make_h0()


@pytest.fixture
def single_t_query():
    return parse_query("vertex v A\nvertex w B\nedge t T v w\n")


@pytest.fixture
def containment_query():
    return parse_query(CONTAINMENT_QUERY, ast_type_graph())


@pytest.fixture
def path_query():
    return parse_query(PATH_QUERY, ast_type_graph())


@pytest.fixture
def ast1() -> tuple[HostGraph, PinSet]:
    return synthetic_ast(1, seed=0, pin_package=0)
