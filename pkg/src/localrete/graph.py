"""Typed directed multigraphs with reverse navigation and a pinned relevant subgraph.

A :class:`HostGraph` stores vertices and edges keyed by opaque string ids and keeps
forward and backward adjacency indexes per edge type, so both directions of an
edge can be followed in time proportional to the result.  Every successful
:func:`apply_change` is appended to ``HostGraph.changelog``; engines keep their own
cursor into that log to pick up pending work.
"""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping


class GraphError(Exception):
    """Base class for invalid graph operations."""


class DuplicateId(GraphError):
    pass


class UnknownId(GraphError):
    pass


class TypeMismatch(GraphError):
    pass


class VertexHasIncidentEdges(GraphError):
    """Raised when removing a vertex that still has edges; delete the edges first."""


class PinUnknownVertex(GraphError):
    pass


@dataclass
class TypeGraph:
    vertex_types: set[str] = field(default_factory=set)
    edge_types: dict[str, tuple[str, str]] = field(default_factory=dict)

    def add_vertex_type(self, name: str) -> None:
        if name in self.vertex_types:
            raise DuplicateId(f"vertex type {name!r} already declared")
        self.vertex_types.add(name)

    def add_edge_type(self, name: str, source_type: str, target_type: str) -> None:
        if name in self.edge_types:
            raise DuplicateId(f"edge type {name!r} already declared")
        for vt in (source_type, target_type):
            if vt not in self.vertex_types:
                raise UnknownId(f"edge type {name!r} references unknown vertex type {vt!r}")
        self.edge_types[name] = (source_type, target_type)


class ChangeKind(enum.Enum):
    ADD_VERTEX = "+v"
    REMOVE_VERTEX = "-v"
    ADD_EDGE = "+e"
    REMOVE_EDGE = "-e"
    PIN = "+pin"
    UNPIN = "-pin"


@dataclass(frozen=True)
class Change:
    """A single host graph or pin set modification.

    Removals may omit ``type``/``source``/``target``; the copy recorded in the
    changelog always carries them.
    """

    kind: ChangeKind
    id: str
    type: str | None = None
    source: str | None = None
    target: str | None = None

    def __post_init__(self) -> None:
        if self.kind is ChangeKind.ADD_VERTEX and self.type is None:
            raise ValueError("AddVertex needs a type")
        if self.kind is ChangeKind.ADD_EDGE and None in (self.type, self.source, self.target):
            raise ValueError("AddEdge needs type, source and target")

    @classmethod
    def add_vertex(cls, vid: str, vtype: str) -> Change:
        return cls(ChangeKind.ADD_VERTEX, vid, vtype)

    @classmethod
    def remove_vertex(cls, vid: str) -> Change:
        return cls(ChangeKind.REMOVE_VERTEX, vid)

    @classmethod
    def add_edge(cls, eid: str, etype: str, source: str, target: str) -> Change:
        return cls(ChangeKind.ADD_EDGE, eid, etype, source, target)

    @classmethod
    def remove_edge(cls, eid: str) -> Change:
        return cls(ChangeKind.REMOVE_EDGE, eid)

    @classmethod
    def pin(cls, vid: str) -> Change:
        return cls(ChangeKind.PIN, vid)

    @classmethod
    def unpin(cls, vid: str) -> Change:
        return cls(ChangeKind.UNPIN, vid)

    def inverse(self) -> Change:
        """The change undoing this one; needs the full payload for removals."""
        k = self.kind
        if k is ChangeKind.ADD_VERTEX:
            return Change.remove_vertex(self.id)
        if k is ChangeKind.REMOVE_VERTEX:
            if self.type is None:
                raise ValueError("cannot invert a RemoveVertex without its type")
            return Change.add_vertex(self.id, self.type)
        if k is ChangeKind.ADD_EDGE:
            return Change.remove_edge(self.id)
        if k is ChangeKind.REMOVE_EDGE:
            if self.type is None:
                raise ValueError("cannot invert a RemoveEdge without its payload")
            return Change.add_edge(self.id, self.type, self.source, self.target)
        if k is ChangeKind.PIN:
            return Change.unpin(self.id)
        return Change.pin(self.id)


@dataclass
class PinSet:
    pinned: set[str] = field(default_factory=set)

    def __contains__(self, vid: object) -> bool:
        return vid in self.pinned

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self.pinned))

    def __len__(self) -> int:
        return len(self.pinned)


class HostGraph:
    def __init__(self, type_graph: TypeGraph | None = None) -> None:
        self.type_graph = type_graph if type_graph is not None else TypeGraph()
        self.vertices: dict[str, str] = {}
        self.edges: dict[str, tuple[str, str, str]] = {}
        self.out_index: defaultdict[tuple[str, str], set[str]] = defaultdict(set)
        self.in_index: defaultdict[tuple[str, str], set[str]] = defaultdict(set)
        self._incident: defaultdict[str, int] = defaultdict(int)
        self.changelog: list[Change] = []

    def __repr__(self) -> str:
        return f"HostGraph(|V|={len(self.vertices)}, |E|={len(self.edges)})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HostGraph):
            return NotImplemented
        return self.vertices == other.vertices and self.edges == other.edges

    def edges_of_type(self, etype: str) -> Iterator[tuple[str, str, str]]:
        """Yield ``(edge_id, source, target)`` for every edge of ``etype``."""
        for eid, (t, s, tgt) in self.edges.items():
            if t == etype:
                yield eid, s, tgt

    def vertices_of_type(self, vtype: str) -> Iterator[str]:
        return (vid for vid, t in self.vertices.items() if t == vtype)

    def has_incident_edges(self, vid: str) -> bool:
        return self._incident.get(vid, 0) > 0

    def copy(self) -> HostGraph:
        g = HostGraph(self.type_graph)
        g.vertices = dict(self.vertices)
        g.edges = dict(self.edges)
        for key, ids in self.out_index.items():
            if ids:
                g.out_index[key] = set(ids)
        for key, ids in self.in_index.items():
            if ids:
                g.in_index[key] = set(ids)
        g._incident = defaultdict(int, self._incident)
        return g


def navigate(graph: HostGraph, vertex: str, edge_type: str, direction: str) -> set[str]:
    """Ids of edges of ``edge_type`` leaving (``forward``) or entering (``backward``) ``vertex``."""
    if vertex not in graph.vertices:
        raise UnknownId(f"unknown vertex {vertex!r}")
    if direction == "forward":
        index = graph.out_index
    elif direction == "backward":
        index = graph.in_index
    else:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    return set(index.get((vertex, edge_type), ()))


def is_edge_dominated(graph: HostGraph) -> bool:
    vcount: defaultdict[str, int] = defaultdict(int)
    for vtype in graph.vertices.values():
        vcount[vtype] += 1
    ecount: defaultdict[str, int] = defaultdict(int)
    for etype, _, _ in graph.edges.values():
        ecount[etype] += 1
    for etype, (stype, ttype) in graph.type_graph.edge_types.items():
        if ecount[etype] < max(vcount[stype], vcount[ttype]):
            return False
    return True


def apply_change(graph: HostGraph, pins: PinSet, change: Change) -> None:
    """Apply ``change`` to ``graph``/``pins`` after validating it.

    Removing a pinned vertex unpins it first; both events land in the changelog.
    """
    k = change.kind
    vid = change.id
    if k is ChangeKind.ADD_VERTEX:
        if vid in graph.vertices:
            raise DuplicateId(f"vertex {vid!r} already exists")
        if change.type not in graph.type_graph.vertex_types:
            raise TypeMismatch(f"unknown vertex type {change.type!r}")
        graph.vertices[vid] = change.type
        graph.changelog.append(change)
    elif k is ChangeKind.REMOVE_VERTEX:
        if vid not in graph.vertices:
            raise UnknownId(f"unknown vertex {vid!r}")
        if graph.has_incident_edges(vid):
            raise VertexHasIncidentEdges(f"vertex {vid!r} still has incident edges")
        vtype = graph.vertices[vid]
        if change.type is not None and change.type != vtype:
            raise TypeMismatch(f"vertex {vid!r} has type {vtype!r}, not {change.type!r}")
        if vid in pins.pinned:
            pins.pinned.discard(vid)
            graph.changelog.append(Change.unpin(vid))
        del graph.vertices[vid]
        graph._incident.pop(vid, None)
        graph.changelog.append(Change(ChangeKind.REMOVE_VERTEX, vid, vtype))
    elif k is ChangeKind.ADD_EDGE:
        if vid in graph.edges:
            raise DuplicateId(f"edge {vid!r} already exists")
        ends = graph.type_graph.edge_types.get(change.type)
        if ends is None:
            raise TypeMismatch(f"unknown edge type {change.type!r}")
        for end, expected in zip((change.source, change.target), ends):
            if end not in graph.vertices:
                raise UnknownId(f"unknown vertex {end!r}")
            if graph.vertices[end] != expected:
                raise TypeMismatch(
                    f"edge {vid!r} of type {change.type!r} needs {expected!r} at {end!r}, "
                    f"found {graph.vertices[end]!r}"
                )
        graph.edges[vid] = (change.type, change.source, change.target)
        graph.out_index[(change.source, change.type)].add(vid)
        graph.in_index[(change.target, change.type)].add(vid)
        graph._incident[change.source] += 1
        graph._incident[change.target] += 1
        graph.changelog.append(change)
    elif k is ChangeKind.REMOVE_EDGE:
        if vid not in graph.edges:
            raise UnknownId(f"unknown edge {vid!r}")
        etype, src, tgt = graph.edges[vid]
        if change.type is not None and (change.type, change.source, change.target) != (etype, src, tgt):
            raise TypeMismatch(f"edge {vid!r} payload does not match stored edge")
        del graph.edges[vid]
        for index, key in ((graph.out_index, (src, etype)), (graph.in_index, (tgt, etype))):
            bucket = index[key]
            bucket.discard(vid)
            if not bucket:
                del index[key]
        graph._incident[src] -= 1
        graph._incident[tgt] -= 1
        graph.changelog.append(Change(ChangeKind.REMOVE_EDGE, vid, etype, src, tgt))
    elif k is ChangeKind.PIN:
        if vid not in graph.vertices:
            raise PinUnknownVertex(f"cannot pin unknown vertex {vid!r}")
        if vid not in pins.pinned:
            pins.pinned.add(vid)
            graph.changelog.append(change)
    elif k is ChangeKind.UNPIN:
        if vid not in graph.vertices:
            raise PinUnknownVertex(f"cannot unpin unknown vertex {vid!r}")
        if vid in pins.pinned:
            pins.pinned.discard(vid)
            graph.changelog.append(change)
    else:  # pragma: no cover
        raise ValueError(f"unhandled change kind {k}")


def apply_changes(graph: HostGraph, pins: PinSet, changes: Iterable[Change]) -> None:
    for change in changes:
        apply_change(graph, pins, change)


@dataclass(frozen=True)
class Match:
    """A typed morphism from a query (sub)graph into the host graph.

    Stored as name-sorted ``(query element, host element)`` pairs so equal
    mappings hash equally.
    """

    vertices: tuple[tuple[str, str], ...]
    edges: tuple[tuple[str, str], ...] = ()

    @classmethod
    def of(cls, vertex_map: Mapping[str, str], edge_map: Mapping[str, str] | None = None) -> Match:
        return cls(tuple(sorted(vertex_map.items())), tuple(sorted((edge_map or {}).items())))

    @property
    def vertex_map(self) -> dict[str, str]:
        return dict(self.vertices)

    @property
    def edge_map(self) -> dict[str, str]:
        return dict(self.edges)

    def __len__(self) -> int:
        return len(self.vertices) + len(self.edges)

    def __lt__(self, other: Match) -> bool:
        return (self.vertices, self.edges) < (other.vertices, other.edges)

    def restrict(self, vertices: Iterable[str], edges: Iterable[str] = ()) -> Match:
        vs = set(vertices)
        es = set(edges)
        return Match(
            tuple(p for p in self.vertices if p[0] in vs),
            tuple(p for p in self.edges if p[0] in es),
        )

    def union(self, other: Match) -> Match:
        vm = dict(self.vertices)
        vm.update(other.vertices)
        em = dict(self.edges)
        em.update(other.edges)
        return Match(tuple(sorted(vm.items())), tuple(sorted(em.items())))

    def to_json(self) -> dict[str, dict[str, str]]:
        return {"vertices": dict(self.vertices), "edges": dict(self.edges)}

    def __str__(self) -> str:
        parts = [f"{q}->{h}" for q, h in self.vertices + self.edges]
        return "{" + ", ".join(parts) + "}"
