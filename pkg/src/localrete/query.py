"""Query graphs and left-deep join tree planning."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .graph import Match, TypeGraph


class QueryError(ValueError):
    pass


class QuerySyntaxError(QueryError):
    pass


class NotConnected(QueryError):
    pass


class NoEdges(QueryError):
    pass


class UnknownType(QueryError):
    pass


@dataclass
class QueryGraph:
    vertices: dict[str, str] = field(default_factory=dict)
    edges: dict[str, tuple[str, str, str]] = field(default_factory=dict)

    def edge_vertices(self, name: str) -> tuple[str, str]:
        _, src, tgt = self.edges[name]
        return src, tgt

    def validate(self, type_graph: TypeGraph | None = None) -> None:
        if not self.edges:
            raise NoEdges("query must contain at least one edge")
        for name, (etype, src, tgt) in self.edges.items():
            for v in (src, tgt):
                if v not in self.vertices:
                    raise QuerySyntaxError(f"edge {name!r} references undeclared vertex {v!r}")
        # weak connectivity via union-find over edges
        parent = {v: v for v in self.vertices}

        def find(v: str) -> str:
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for _, src, tgt in self.edges.values():
            parent[find(src)] = find(tgt)
        if len({find(v) for v in self.vertices}) != 1:
            raise NotConnected("query graph is not weakly connected")
        if type_graph is not None:
            self.check_types(type_graph)

    def check_types(self, type_graph: TypeGraph) -> None:
        for v, vtype in self.vertices.items():
            if vtype not in type_graph.vertex_types:
                raise UnknownType(f"vertex {v!r} has unknown type {vtype!r}")
        for name, (etype, src, tgt) in self.edges.items():
            ends = type_graph.edge_types.get(etype)
            if ends is None:
                raise UnknownType(f"edge {name!r} has unknown type {etype!r}")
            if ends != (self.vertices[src], self.vertices[tgt]):
                raise UnknownType(
                    f"edge {name!r} of type {etype!r} connects {ends[0]}->{ends[1]}, "
                    f"query has {self.vertices[src]}->{self.vertices[tgt]}"
                )


def parse_query(text: str, type_graph: TypeGraph | None = None) -> QueryGraph:
    """Parse ``vertex <name> <type>`` / ``edge <name> <type> <src> <tgt>`` lines."""
    q = QueryGraph()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] == "vertex" and len(fields) == 3:
            if fields[1] in q.vertices:
                raise QuerySyntaxError(f"line {lineno}: duplicate vertex {fields[1]!r}")
            q.vertices[fields[1]] = fields[2]
        elif fields[0] == "edge" and len(fields) == 5:
            if fields[1] in q.edges:
                raise QuerySyntaxError(f"line {lineno}: duplicate edge {fields[1]!r}")
            q.edges[fields[1]] = (fields[2], fields[3], fields[4])
        else:
            raise QuerySyntaxError(f"line {lineno}: cannot parse {line!r}")
    q.validate(type_graph)
    return q


def load_query(path: str | Path, type_graph: TypeGraph | None = None) -> QueryGraph:
    return parse_query(Path(path).read_text(encoding="utf-8"), type_graph)


def format_query(query: QueryGraph) -> str:
    lines = [f"vertex {v} {t}" for v, t in query.vertices.items()]
    lines += [f"edge {n} {t} {s} {tgt}" for n, (t, s, tgt) in query.edges.items()]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PlanNode:
    """A node of a well-formed join tree.

    Leaves carry ``edge``; joins carry ``left``/``right`` indexes into the plan's
    node list and the shared ``overlap`` vertices.
    """

    index: int
    vertices: frozenset[str]
    edges: frozenset[str]
    height: int
    edge: str | None = None
    left: int | None = None
    right: int | None = None
    overlap: tuple[str, ...] = ()

    @property
    def is_join(self) -> bool:
        return self.edge is None

    @property
    def label(self) -> str:
        if self.edge is not None:
            return f"E({self.edge})"
        return f"J{self.index}"


@dataclass(frozen=True)
class JoinTreePlan:
    query: QueryGraph
    nodes: tuple[PlanNode, ...]
    production: int

    @property
    def root(self) -> PlanNode:
        return self.nodes[self.production]

    def children(self, node: PlanNode) -> tuple[PlanNode, PlanNode]:
        return self.nodes[node.left], self.nodes[node.right]

    def shape(self, index: int | None = None) -> str:
        """Compact textual form, e.g. ``J(J(E(a),E(b)),E(c))``."""
        node = self.nodes[self.production if index is None else index]
        if not node.is_join:
            return node.label
        return f"J({self.shape(node.left)},{self.shape(node.right)})"


def build_plan(query: QueryGraph, tree: str | tuple) -> JoinTreePlan:
    """Plan with an explicit shape: an edge name, or a ``(left, right)`` pair of trees."""
    nodes: list[PlanNode] = []

    def build(t: str | tuple) -> PlanNode:
        if isinstance(t, str):
            src, tgt = query.edge_vertices(t)
            node = PlanNode(len(nodes), frozenset((src, tgt)), frozenset((t,)), 0, edge=t)
        else:
            left, right = build(t[0]), build(t[1])
            overlap = tuple(sorted(left.vertices & right.vertices))
            if not overlap:
                raise QueryError(f"join of {t!r} has no shared vertex")
            if left.edges & right.edges:
                raise QueryError(f"join of {t!r} uses an edge twice")
            node = PlanNode(
                len(nodes),
                left.vertices | right.vertices,
                left.edges | right.edges,
                1 + max(left.height, right.height),
                left=left.index,
                right=right.index,
                overlap=overlap,
            )
        nodes.append(node)
        return node

    root = build(tree)
    if root.edges != frozenset(query.edges):
        raise QueryError("plan does not cover every query edge")
    return JoinTreePlan(query, tuple(nodes), root.index)


def plan_join_tree(query: QueryGraph) -> JoinTreePlan:
    """Greedy left-deep plan: start with the smallest edge name, then repeatedly
    add the smallest-named edge touching the vertices covered so far."""
    remaining = sorted(query.edges)
    nodes: list[PlanNode] = []

    def leaf(name: str) -> PlanNode:
        src, tgt = query.edge_vertices(name)
        node = PlanNode(len(nodes), frozenset((src, tgt)), frozenset((name,)), 0, edge=name)
        nodes.append(node)
        return node

    acc = leaf(remaining.pop(0))
    while remaining:
        name = next(n for n in remaining if set(query.edge_vertices(n)) & acc.vertices)
        remaining.remove(name)
        right = leaf(name)
        overlap = tuple(sorted(acc.vertices & right.vertices))
        join = PlanNode(
            len(nodes),
            acc.vertices | right.vertices,
            acc.edges | right.edges,
            1 + max(acc.height, right.height),
            left=acc.index,
            right=right.index,
            overlap=overlap,
        )
        nodes.append(join)
        acc = join
    return JoinTreePlan(query, tuple(nodes), acc.index)


def edge_match(
    query: QueryGraph, name: str, host_types: dict[str, str], eid: str, src: str, tgt: str
) -> Match | None:
    """The single-edge match of query edge ``name`` onto host edge ``src -eid-> tgt``,
    or ``None`` if vertex types or loop structure disagree."""
    _, qsrc, qtgt = query.edges[name]
    if host_types.get(src) != query.vertices[qsrc] or host_types.get(tgt) != query.vertices[qtgt]:
        return None
    if qsrc == qtgt:
        if src != tgt:
            return None
        return Match(((qsrc, src),), ((name, eid),))
    return Match(tuple(sorted(((qsrc, src), (qtgt, tgt)))), ((name, eid),))
