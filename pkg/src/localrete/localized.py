"""Marking-sensitive RETE nets anchored to a pinned relevant subgraph.

:func:`localize` turns a well-formed join tree into a marking-sensitive net in
which every edge input is replaced by a local navigation structure (two pinned
vertex inputs, two extension-point unions, forward/backward navigation and a top
union) and every join gains two request projection structures (marking filter,
projection onto one shared vertex, marking assignment) that feed the opposite
subtree.  :func:`order` yields the execution sequence that makes one pass
sufficient for consistency from any starting configuration.

Markings are ints with ``math.inf`` as the distinguished maximum.
"""
from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .graph import Change, ChangeKind, HostGraph, Match, PinSet, apply_change, navigate
from .query import JoinTreePlan, PlanNode

INF = math.inf

Marking = float  # int or INF
MarkedSet = dict  # Match -> Marking


class Kind(enum.Enum):
    VERTEX_INPUT = "vertex"
    UNION = "union"
    FORWARD = "forward"
    BACKWARD = "backward"
    JOIN = "join"
    PROJECTION = "projection"
    FILTER = "filter"
    ASSIGN = "assign"


@dataclass
class LNode:
    id: int
    kind: Kind
    vertices: tuple[str, ...]
    edges: tuple[str, ...] = ()
    deps: list[int] = field(default_factory=list)
    label: str = ""
    vertex: str | None = None  # vertex input / projection target / navigation anchor
    vertex_type: str | None = None
    edge: str | None = None  # navigation query edge
    edge_type: str | None = None
    ends: tuple[str, str] = ("", "")  # navigated query edge as (source, target)
    end_types: tuple[str, str] = ("", "")
    value: int | None = None  # filter threshold or assigned marking
    overlap: tuple[str, ...] = ()

    def __repr__(self) -> str:
        return f"<{self.id}:{self.label}>"


@dataclass
class LocalNavigationStructure:
    edge: str
    source_input: int
    target_input: int
    source_union: int
    target_union: int
    forward: int
    backward: int
    top: int

    @property
    def node_ids(self) -> tuple[int, ...]:
        return (
            self.source_input,
            self.target_input,
            self.source_union,
            self.target_union,
            self.forward,
            self.backward,
            self.top,
        )


@dataclass
class RequestProjectionStructure:
    join: int
    side: str  # "l" filters the left dependency and requests from the right subtree
    vertex: str
    height: int
    filter: int
    projection: int
    assign: int
    extension_point: int

    @property
    def node_ids(self) -> tuple[int, int, int]:
        return (self.filter, self.projection, self.assign)


@dataclass
class OrderBlock:
    """A labelled run of the execution order (one LNS, one RPS, or a join)."""

    label: str
    nodes: tuple[int, ...]


@dataclass
class LocalizedNet:
    plan: JoinTreePlan
    nodes: list[LNode]
    production: int
    structures: list[LocalNavigationStructure]
    requests: list[RequestProjectionStructure]
    blocks: list[OrderBlock]
    dependents: dict[int, list[int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        deps: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            for d in n.deps:
                deps[d].append(n.id)
        self.dependents = deps

    def __len__(self) -> int:
        return len(self.nodes)

    def extension_points(self) -> list[int]:
        return [u for lns in self.structures for u in (lns.source_union, lns.target_union)]

    def nodes_of(self, kind: Kind) -> list[LNode]:
        return [n for n in self.nodes if n.kind is kind]


def localize(plan: JoinTreePlan) -> LocalizedNet:
    query = plan.query
    nodes: list[LNode] = []
    structures: list[LocalNavigationStructure] = []
    requests: list[RequestProjectionStructure] = []

    def new(kind: Kind, vertices: Iterable[str], edges: Iterable[str] = (), **kw) -> LNode:
        node = LNode(len(nodes), kind, tuple(sorted(set(vertices))), tuple(sorted(edges)), **kw)
        nodes.append(node)
        return node

    def lns(pnode: PlanNode) -> tuple[int, list[LocalNavigationStructure], list[OrderBlock]]:
        name = pnode.edge
        etype, v, w = query.edges[name]
        edge_vs = (v, w)
        vin = new(Kind.VERTEX_INPUT, (v,), vertex=v, vertex_type=query.vertices[v], label=f"[{v}]")
        win = new(Kind.VERTEX_INPUT, (w,), vertex=w, vertex_type=query.vertices[w], label=f"[{w}]")
        uv = new(Kind.UNION, (v,), deps=[vin.id], vertex=v, label=f"[U]_{v}")
        uw = new(Kind.UNION, (w,), deps=[win.id], vertex=w, label=f"[U]_{w}")
        nav = dict(edge=name, edge_type=etype, ends=(v, w), end_types=(query.vertices[v], query.vertices[w]))
        fwd = new(Kind.FORWARD, edge_vs, (name,), deps=[uv.id], vertex=v, label=f"[{v}->{w}]", **nav)
        bwd = new(Kind.BACKWARD, edge_vs, (name,), deps=[uw.id], vertex=w, label=f"[{w}<-{v}]", **nav)
        top = new(Kind.UNION, edge_vs, (name,), deps=[fwd.id, bwd.id], label=f"[U]_{name}")
        s = LocalNavigationStructure(name, vin.id, win.id, uv.id, uw.id, fwd.id, bwd.id, top.id)
        structures.append(s)
        return top.id, [s], [OrderBlock(f"LNS({name})", s.node_ids)]

    def attach(source_root: int, opposite: list[LocalNavigationStructure], v: str, height: int,
               join: PlanNode, side: str) -> RequestProjectionStructure:
        src = nodes[source_root]
        tag = f"{side}{join.index}"
        flt = new(Kind.FILTER, src.vertices, src.edges, deps=[source_root], value=height,
                  label=f"[phi>{height}]_{tag}")
        proj = new(Kind.PROJECTION, (v,), deps=[flt.id], vertex=v, label=f"[pi_{v}]_{tag}")
        asg = new(Kind.ASSIGN, (v,), deps=[proj.id], value=height, label=f"[phi:={height}]_{tag}")
        target = None
        for s in opposite:
            vin, win = nodes[s.source_input], nodes[s.target_input]
            if vin.vertex == v:
                target = s.source_union
            elif win.vertex == v:
                target = s.target_union
            if target is not None:
                break
        assert target is not None, "opposite subtree must contain the overlap vertex"
        nodes[target].deps.append(asg.id)
        rps = RequestProjectionStructure(join.index, side, v, height, flt.id, proj.id, asg.id, target)
        requests.append(rps)
        return rps

    def build(pnode: PlanNode) -> tuple[int, list[LocalNavigationStructure], list[OrderBlock]]:
        if not pnode.is_join:
            return lns(pnode)
        left, right = plan.children(pnode)
        lroot, llns, lorder = build(left)
        rroot, rlns, rorder = build(right)
        v = pnode.overlap[0]
        h = pnode.height
        join = new(Kind.JOIN, pnode.vertices, pnode.edges, deps=[lroot, rroot], overlap=pnode.overlap,
                   label=f"[join]_{pnode.index}")
        rps_l = attach(lroot, rlns, v, h, pnode, "l")
        rps_r = attach(rroot, llns, v, h, pnode, "r")
        bl = OrderBlock(f"RPS_l({v},{pnode.index})", rps_l.node_ids)
        br = OrderBlock(f"RPS_r({v},{pnode.index})", rps_r.node_ids)
        seq = [br, *lorder, bl, *rorder, br, *lorder, OrderBlock(f"JOIN({pnode.index})", (join.id,))]
        return join.id, llns + rlns, seq

    root, _, blocks = build(plan.root)
    return LocalizedNet(plan, nodes, root, structures, requests, blocks)


def order(net: LocalizedNet) -> list[int]:
    return [nid for block in net.blocks for nid in block.nodes]


def order_length(plan: JoinTreePlan, index: int | None = None) -> int:
    """Reference count of the execution sequence length for ``plan``."""
    node = plan.nodes[plan.production if index is None else index]
    if not node.is_join:
        return 7
    left = order_length(plan, node.left)
    return 3 + left + 3 + order_length(plan, node.right) + 3 + left + 1


@dataclass
class MarkedConfiguration:
    results: dict[int, MarkedSet] = field(default_factory=dict)

    def __getitem__(self, node: int) -> MarkedSet:
        return self.results.get(node, {})

    def copy(self) -> MarkedConfiguration:
        return MarkedConfiguration({n: dict(ms) for n, ms in self.results.items()})

    def marked_size(self) -> int:
        return sum(len(m) for ms in self.results.values() for m in ms)


def stripped_result_set(node: int, config: MarkedConfiguration | Mapping[int, MarkedSet]) -> set[Match]:
    return set(config[node])


# -- target result sets, computed from scratch ------------------------------------


def _single(v: str, x: str) -> Match:
    return Match(((v, x),))


def eval_ms_vertex_input(node: LNode, host: HostGraph, pins: PinSet) -> MarkedSet:
    return {
        _single(node.vertex, x): INF
        for x in pins.pinned
        if host.vertices.get(x) == node.vertex_type
    }


def nav_edge_match(node: LNode, host: HostGraph, eid: str) -> Match | None:
    """Match of the node's query edge onto host edge ``eid`` if both end types fit."""
    _, src, tgt = host.edges[eid]
    v, w = node.ends
    tv, tw = node.end_types
    types = host.vertices
    if types.get(src) != tv or types.get(tgt) != tw:
        return None
    if v == w:
        if src != tgt:
            return None
        return Match(((v, src),), ((node.edge, eid),))
    return Match(tuple(sorted(((v, src), (w, tgt)))), ((node.edge, eid),))


def navigate_matches(node: LNode, host: HostGraph, x: str) -> list[Match]:
    """Edge matches reachable from host vertex ``x`` in the node's direction."""
    direction = "forward" if node.kind is Kind.FORWARD else "backward"
    out = []
    for eid in navigate(host, x, node.edge_type, direction):
        m = nav_edge_match(node, host, eid)
        if m is not None:
            out.append(m)
    return out


def eval_nav(
    node: LNode,
    host: HostGraph,
    config: MarkedConfiguration | Mapping[int, MarkedSet],
    direction: str | None = None,
) -> MarkedSet:
    """Edges adjacent to the dependency's host vertices, each carrying that vertex match's marking."""
    if direction is not None:
        expected = Kind.FORWARD if direction == "forward" else Kind.BACKWARD
        if node.kind is not expected:
            raise ValueError(f"{node!r} is not a {direction} navigation node")
    out: MarkedSet = {}
    for m_anchor, phi in config[node.deps[0]].items():
        x = m_anchor.vertices[0][1]
        if x not in host.vertices:
            continue
        for m in navigate_matches(node, host, x):
            out[m] = phi
    return out


def eval_ms_union(node: LNode, config: MarkedConfiguration | Mapping[int, MarkedSet]) -> MarkedSet:
    out: MarkedSet = {}
    for d in node.deps:
        for m, phi in config[d].items():
            prev = out.get(m)
            if prev is None or phi > prev:
                out[m] = phi
    return out


def eval_ms_projection(node: LNode, config: MarkedConfiguration | Mapping[int, MarkedSet]) -> MarkedSet:
    out: MarkedSet = {}
    for m, phi in config[node.deps[0]].items():
        key = m.restrict(node.vertices)
        prev = out.get(key)
        if prev is None or phi > prev:
            out[key] = phi
    return out


def eval_marking_filter(
    node: LNode, config: MarkedConfiguration | Mapping[int, MarkedSet], threshold: int | None = None
) -> MarkedSet:
    h = node.value if threshold is None else threshold
    return {m: phi for m, phi in config[node.deps[0]].items() if phi > h}


def eval_marking_assign(
    node: LNode, config: MarkedConfiguration | Mapping[int, MarkedSet], value: int | None = None
) -> MarkedSet:
    h = node.value if value is None else value
    return {m: h for m in config[node.deps[0]]}


def eval_ms_join(node: LNode, config: MarkedConfiguration | Mapping[int, MarkedSet]) -> MarkedSet:
    left, right = (config[d] for d in node.deps)
    buckets: defaultdict[tuple, list[tuple[Match, Marking]]] = defaultdict(list)
    for mr, pr in right.items():
        vm = dict(mr.vertices)
        buckets[tuple(vm[v] for v in node.overlap)].append((mr, pr))
    out: MarkedSet = {}
    for ml, pl in left.items():
        vm = dict(ml.vertices)
        for mr, pr in buckets.get(tuple(vm[v] for v in node.overlap), ()):
            out[ml.union(mr)] = max(pl, pr)
    return out


def target_result_set_ms(
    node: LNode, net: LocalizedNet, host: HostGraph, pins: PinSet,
    config: MarkedConfiguration | Mapping[int, MarkedSet],
) -> MarkedSet:
    k = node.kind
    if k is Kind.VERTEX_INPUT:
        return eval_ms_vertex_input(node, host, pins)
    if k in (Kind.FORWARD, Kind.BACKWARD):
        return eval_nav(node, host, config)
    if k is Kind.UNION:
        return eval_ms_union(node, config)
    if k is Kind.PROJECTION:
        return eval_ms_projection(node, config)
    if k is Kind.FILTER:
        return eval_marking_filter(node, config)
    if k is Kind.ASSIGN:
        return eval_marking_assign(node, config)
    return eval_ms_join(node, config)


# -- incremental execution ------------------------------------------------------------

TraceHook = Callable[[int, Match, "Marking | None", "Marking | None"], None]


class LocalizedEngine:
    """Executes a localized net over a host graph and pin set.

    Each node keeps a pending set of work items (host vertices, dependency
    matches or overlap keys) accumulated since it last ran; nodes with nothing
    pending are skipped when :func:`order` reaches them.  Host and pin changes are
    picked up from ``host.changelog`` at the start of every pass.
    """

    def __init__(
        self,
        net: LocalizedNet,
        host: HostGraph,
        pins: PinSet,
        config: MarkedConfiguration | None = None,
    ) -> None:
        self.net = net
        self.host = host
        self.pins = pins
        self.sequence = order(net)
        self.executions = 0
        self.trace: TraceHook | None = None
        self._inputs = net.nodes_of(Kind.VERTEX_INPUT)
        self._nav_by_type: defaultdict[str, list[LNode]] = defaultdict(list)
        for n in net.nodes:
            if n.kind in (Kind.FORWARD, Kind.BACKWARD):
                self._nav_by_type[n.edge_type].append(n)
        self._dep_pos = {
            n.id: {d: i for i, d in enumerate(n.deps)} for n in net.nodes
        }
        # positions of the overlap vertices inside each join dependency's sorted vertex tuple
        self._join_pos: dict[int, tuple[tuple[int, ...], tuple[int, ...]]] = {}
        for n in net.nodes:
            if n.kind is Kind.JOIN:
                self._join_pos[n.id] = tuple(
                    tuple(net.nodes[d].vertices.index(v) for v in n.overlap) for d in n.deps
                )
        self._proj_pos = {
            n.id: net.nodes[n.deps[0]].vertices.index(n.vertex)
            for n in net.nodes
            if n.kind is Kind.PROJECTION
        }
        self.reset(config)

    # state -------------------------------------------------------------------------

    def reset(self, config: MarkedConfiguration | None = None) -> None:
        """Adopt ``config`` (possibly inconsistent) and schedule every node for a full check."""
        nodes = self.net.nodes
        self.results: dict[int, MarkedSet] = {n.id: {} for n in nodes}
        if config is not None:
            for nid, ms in config.results.items():
                self.results[nid] = dict(ms)
        self.pending: dict[int, set] = {n.id: set() for n in nodes}
        self.pending_keys: dict[int, set] = {n.id: set() for n in nodes}
        self._mirror: dict[int, tuple[defaultdict, ...]] = {}
        self._by_anchor: dict[int, defaultdict] = {}
        self._by_key: dict[int, defaultdict] = {}
        for n in nodes:
            own = self.results[n.id]
            k = n.kind
            if k is Kind.VERTEX_INPUT:
                self.pending[n.id].update(self.pins.pinned)
                self.pending[n.id].update(m.vertices[0][1] for m in own)
            elif k in (Kind.FORWARD, Kind.BACKWARD):
                anchors: defaultdict[str, set] = defaultdict(set)
                anchor_v = n.vertex
                for m in own:
                    anchors[dict(m.vertices)[anchor_v]].add(m)
                self._by_anchor[n.id] = anchors
                self.pending[n.id].update(anchors)
                self.pending[n.id].update(m.vertices[0][1] for m in self.results[n.deps[0]])
            elif k is Kind.JOIN:
                self._mirror[n.id] = (defaultdict(dict), defaultdict(dict))
                by_key: defaultdict[tuple, set] = defaultdict(set)
                for m in own:
                    vm = dict(m.vertices)
                    by_key[tuple(vm[v] for v in n.overlap)].add(m)
                self._by_key[n.id] = by_key
                self.pending_keys[n.id].update(by_key)
                for i, d in enumerate(n.deps):
                    self.pending[n.id].update((i, m) for m in self.results[d])
            elif k is Kind.PROJECTION:
                self._mirror[n.id] = (defaultdict(dict),)
                self.pending_keys[n.id].update(m.vertices[0][1] for m in own)
                self.pending[n.id].update(self.results[n.deps[0]])
            else:
                self.pending[n.id].update(own)
                for d in n.deps:
                    self.pending[n.id].update(self.results[d])
        self.cursor = len(self.host.changelog)

    @property
    def config(self) -> MarkedConfiguration:
        return MarkedConfiguration(self.results)

    @property
    def production(self) -> MarkedSet:
        return self.results[self.net.production]

    def stripped(self) -> set[Match]:
        return set(self.production)

    # driving -----------------------------------------------------------------------

    def _collect_host_changes(self) -> None:
        log = self.host.changelog
        for change in log[self.cursor:]:
            k = change.kind
            if k in (ChangeKind.ADD_EDGE, ChangeKind.REMOVE_EDGE):
                for n in self._nav_by_type.get(change.type, ()):
                    anchor = change.source if n.kind is Kind.FORWARD else change.target
                    self.pending[n.id].add(anchor)
            else:
                for n in self._inputs:
                    self.pending[n.id].add(change.id)
        self.cursor = len(log)

    def run_pass(self) -> MarkedConfiguration:
        """Execute :func:`order` once, skipping nodes with no pending work."""
        self._collect_host_changes()
        for nid in self.sequence:
            if self.pending[nid] or self.pending_keys[nid]:
                self._execute(self.net.nodes[nid])
        return self.config

    def process(self, changes: Iterable[Change]) -> MarkedConfiguration:
        for change in changes:
            apply_change(self.host, self.pins, change)
        return self.run_pass()

    # node execution ------------------------------------------------------------------

    def _set(self, node: LNode, m: Match, phi: Marking | None) -> None:
        own = self.results[node.id]
        old = own.get(m)
        if old == phi:
            return
        if phi is None:
            del own[m]
        else:
            own[m] = phi
        if self.trace is not None:
            self.trace(node.id, m, old, phi)
        for d in self.net.dependents[node.id]:
            dn = self.net.nodes[d]
            if dn.kind in (Kind.FORWARD, Kind.BACKWARD):
                self.pending[d].add(m.vertices[0][1])
            elif dn.kind is Kind.JOIN:
                self.pending[d].add((self._dep_pos[d][node.id], m))
            else:
                self.pending[d].add(m)

    def _execute(self, node: LNode) -> None:
        self.executions += 1
        items = self.pending[node.id]
        self.pending[node.id] = set()
        k = node.kind
        if k is Kind.VERTEX_INPUT:
            for x in items:
                ok = x in self.pins.pinned and self.host.vertices.get(x) == node.vertex_type
                self._set(node, _single(node.vertex, x), INF if ok else None)
        elif k is Kind.UNION:
            for m in items:
                best = None
                for d in node.deps:
                    phi = self.results[d].get(m)
                    if phi is not None and (best is None or phi > best):
                        best = phi
                self._set(node, m, best)
        elif k is Kind.FILTER:
            dep = self.results[node.deps[0]]
            for m in items:
                phi = dep.get(m)
                self._set(node, m, phi if phi is not None and phi > node.value else None)
        elif k is Kind.ASSIGN:
            dep = self.results[node.deps[0]]
            for m in items:
                self._set(node, m, node.value if m in dep else None)
        elif k is Kind.PROJECTION:
            self._execute_projection(node, items)
        elif k is Kind.JOIN:
            self._execute_join(node, items)
        else:
            self._execute_nav(node, items)

    def _execute_projection(self, node: LNode, items: set) -> None:
        (mirror,) = self._mirror[node.id]
        keys = self.pending_keys[node.id]
        self.pending_keys[node.id] = set()
        dep = self.results[node.deps[0]]
        pos = self._proj_pos[node.id]
        for m in items:
            x = m.vertices[pos][1]
            phi = dep.get(m)
            if phi is None:
                mirror[x].pop(m, None)
            else:
                mirror[x][m] = phi
            keys.add(x)
        for x in keys:
            bucket = mirror.get(x)
            if bucket:
                self._set(node, _single(node.vertex, x), max(bucket.values()))
            else:
                mirror.pop(x, None)
                self._set(node, _single(node.vertex, x), None)

    def _execute_join(self, node: LNode, items: set) -> None:
        mirrors = self._mirror[node.id]
        by_key = self._by_key[node.id]
        positions = self._join_pos[node.id]
        keys = self.pending_keys[node.id]
        self.pending_keys[node.id] = set()
        for side, m in items:
            dep = self.results[node.deps[side]]
            key = tuple(m.vertices[i][1] for i in positions[side])
            phi = dep.get(m)
            if phi is None:
                mirrors[side][key].pop(m, None)
            else:
                mirrors[side][key][m] = phi
            keys.add(key)
        left, right = mirrors
        for key in keys:
            lb, rb = left.get(key), right.get(key)
            new: MarkedSet = {}
            if lb and rb:
                for ml, pl in lb.items():
                    for mr, pr in rb.items():
                        new[ml.union(mr)] = pl if pl >= pr else pr
            if not lb:
                left.pop(key, None)
            if not rb:
                right.pop(key, None)
            old = by_key.get(key, set())
            for m in old - new.keys():
                self._set(node, m, None)
            for m, phi in new.items():
                self._set(node, m, phi)
            if new:
                by_key[key] = set(new)
            else:
                by_key.pop(key, None)

    def _execute_nav(self, node: LNode, anchors: set) -> None:
        dep = self.results[node.deps[0]]
        by_anchor = self._by_anchor[node.id]
        host = self.host
        for x in anchors:
            phi = dep.get(_single(node.vertex, x))
            new = navigate_matches(node, host, x) if phi is not None and x in host.vertices else []
            old = by_anchor.get(x, set())
            for m in old.difference(new):
                self._set(node, m, None)
            for m in new:
                self._set(node, m, phi)
            if new:
                by_anchor[x] = set(new)
            else:
                by_anchor.pop(x, None)


def execute_localized(
    net: LocalizedNet,
    host: HostGraph,
    pins: PinSet,
    config: MarkedConfiguration | None = None,
    changes: Iterable[Change] = (),
) -> MarkedConfiguration:
    """Apply ``changes`` and run one pass starting from ``config`` (empty if ``None``)."""
    engine = LocalizedEngine(net, host, pins, config)
    return engine.process(changes)
