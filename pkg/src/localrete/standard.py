"""Classic RETE: edge input nodes and hash joins over a well-formed join tree."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .graph import Change, ChangeKind, HostGraph, Match, PinSet, apply_change
from .query import JoinTreePlan, PlanNode, edge_match


@dataclass
class Configuration:
    """Current result set per plan node index."""

    results: dict[int, set[Match]] = field(default_factory=dict)

    def __getitem__(self, node: int) -> set[Match]:
        return self.results.get(node, set())

    def copy(self) -> Configuration:
        return Configuration({n: set(ms) for n, ms in self.results.items()})


def effective_size(results: Configuration | dict) -> int:
    """Sum of match sizes over all nodes; accepts plain or marked result maps."""
    if isinstance(results, Configuration):
        results = results.results
    return sum(len(m) for ms in results.values() for m in ms)


def config_stats(results: Configuration | dict) -> tuple[int, int, float]:
    """``(total match count, effective size, average match size)``."""
    if isinstance(results, Configuration):
        results = results.results
    total = sum(len(ms) for ms in results.values())
    size = effective_size(results)
    return total, size, (size / total if total else 0.0)


def _key_positions(node: PlanNode, overlap: Iterable[str]) -> tuple[int, ...]:
    order = sorted(node.vertices)
    return tuple(order.index(v) for v in overlap)


def _key(m: Match, positions: tuple[int, ...]) -> tuple[str, ...]:
    vs = m.vertices
    return tuple(vs[i][1] for i in positions)


def target_result_set_std(node: PlanNode, net: StandardNet, host: HostGraph, config: Configuration) -> set[Match]:
    """Recompute a node's result set from scratch against ``config``."""
    query = net.plan.query
    if not node.is_join:
        etype = query.edges[node.edge][0]
        out = set()
        for eid, src, tgt in host.edges_of_type(etype):
            m = edge_match(query, node.edge, host.vertices, eid, src, tgt)
            if m is not None:
                out.add(m)
        return out
    left, right = net.plan.children(node)
    lpos, rpos = net.key_pos[node.index]
    buckets: defaultdict[tuple, list[Match]] = defaultdict(list)
    for m in config[right.index]:
        buckets[_key(m, rpos)].append(m)
    return {ml.union(mr) for ml in config[left.index] for mr in buckets.get(_key(ml, lpos), ())}


class _Delta:
    __slots__ = ("added", "removed")

    def __init__(self) -> None:
        self.added: set[Match] = set()
        self.removed: set[Match] = set()

    def add(self, m: Match) -> None:
        if m in self.removed:
            self.removed.discard(m)
        else:
            self.added.add(m)

    def remove(self, m: Match) -> None:
        if m in self.added:
            self.added.discard(m)
        else:
            self.removed.add(m)

    def __bool__(self) -> bool:
        return bool(self.added or self.removed)


class StandardNet:
    """A standard RETE net bound to one host graph.

    Join nodes keep one hash index per side, keyed by the host vertices the side's
    matches assign to the overlap.  Host changes are read from the graph's
    changelog; :meth:`sync` processes everything logged since the last pass.
    """

    def __init__(self, plan: JoinTreePlan, host: HostGraph) -> None:
        self.plan = plan
        self.host = host
        self.config = Configuration({n.index: set() for n in plan.nodes})
        self.key_pos: dict[int, tuple[tuple[int, ...], tuple[int, ...]]] = {}
        self.indexes: dict[int, tuple[defaultdict, defaultdict]] = {}
        self.parent: dict[int, tuple[int, str]] = {}
        self.leaves_by_type: defaultdict[str, list[PlanNode]] = defaultdict(list)
        self._leaf_edges: dict[int, dict[str, Match]] = {}
        for node in plan.nodes:
            if node.is_join:
                left, right = plan.children(node)
                self.key_pos[node.index] = (
                    _key_positions(left, node.overlap),
                    _key_positions(right, node.overlap),
                )
                self.indexes[node.index] = (defaultdict(set), defaultdict(set))
                self.parent[left.index] = (node.index, "left")
                self.parent[right.index] = (node.index, "right")
            else:
                self.leaves_by_type[plan.query.edges[node.edge][0]].append(node)
                self._leaf_edges[node.index] = {}
        self.cursor = len(host.changelog)
        self.executions = 0
        self._initialized = False

    @property
    def production(self) -> set[Match]:
        return self.config[self.plan.production]

    def execute_initial(self) -> Configuration:
        """Populate every node in reverse topological order (leaves first)."""
        self.cursor = len(self.host.changelog)
        touched = {node.index: set(self.host.edges) for nodes in self.leaves_by_type.values() for node in nodes}
        self._run(touched)
        self._initialized = True
        return self.config

    def sync(self) -> Configuration:
        """Process all host changes logged since the previous pass."""
        if not self._initialized:
            return self.execute_initial()
        log = self.host.changelog
        touched: defaultdict[int, set[str]] = defaultdict(set)
        for change in log[self.cursor:]:
            if change.kind in (ChangeKind.ADD_EDGE, ChangeKind.REMOVE_EDGE):
                for node in self.leaves_by_type.get(change.type, ()):
                    touched[node.index].add(change.id)
        self.cursor = len(log)
        if touched:
            self._run(touched)
        return self.config

    def process_changes(self, changes: Iterable[Change], pins: PinSet | None = None) -> Configuration:
        pins = pins if pins is not None else PinSet()
        for change in changes:
            apply_change(self.host, pins, change)
        return self.sync()

    def _run(self, touched: dict[int, set[str]]) -> None:
        deltas: dict[int, _Delta] = {}
        for node in self.plan.nodes:
            if node.is_join:
                left, right = self.plan.children(node)
                dl, dr = deltas.get(left.index), deltas.get(right.index)
                if not dl and not dr:
                    continue
                deltas[node.index] = self._join(node, dl, dr)
            elif node.index in touched:
                deltas[node.index] = self._edge_input(node, touched[node.index])
            else:
                continue
            self.executions += 1

    def _edge_input(self, node: PlanNode, edge_ids: set[str]) -> _Delta:
        host = self.host
        current = self.config.results[node.index]
        by_edge = self._leaf_edges[node.index]
        delta = _Delta()
        for eid in edge_ids:
            old = by_edge.get(eid)
            new = None
            if eid in host.edges:
                etype, src, tgt = host.edges[eid]
                if etype == self.plan.query.edges[node.edge][0]:
                    new = edge_match(self.plan.query, node.edge, host.vertices, eid, src, tgt)
            if old == new:
                continue
            if old is not None:
                current.discard(old)
                del by_edge[eid]
                delta.remove(old)
            if new is not None:
                current.add(new)
                by_edge[eid] = new
                delta.add(new)
        return delta

    def _join(self, node: PlanNode, dl: _Delta | None, dr: _Delta | None) -> _Delta:
        lpos, rpos = self.key_pos[node.index]
        lidx, ridx = self.indexes[node.index]
        current = self.config.results[node.index]
        delta = _Delta()

        def drop(m: Match) -> None:
            current.discard(m)
            delta.remove(m)

        def put(m: Match) -> None:
            current.add(m)
            delta.add(m)

        # left delta against the old right side, then right delta against the new left
        if dl:
            for ml in dl.removed:
                k = _key(ml, lpos)
                for mr in ridx.get(k, ()):
                    drop(ml.union(mr))
                bucket = lidx[k]
                bucket.discard(ml)
                if not bucket:
                    del lidx[k]
            for ml in dl.added:
                k = _key(ml, lpos)
                for mr in ridx.get(k, ()):
                    put(ml.union(mr))
                lidx[k].add(ml)
        if dr:
            for mr in dr.removed:
                k = _key(mr, rpos)
                for ml in lidx.get(k, ()):
                    drop(ml.union(mr))
                bucket = ridx[k]
                bucket.discard(mr)
                if not bucket:
                    del ridx[k]
            for mr in dr.added:
                k = _key(mr, rpos)
                for ml in lidx.get(k, ()):
                    put(ml.union(mr))
                ridx[k].add(mr)
        return delta


def execute_initial(plan: JoinTreePlan, host: HostGraph) -> tuple[StandardNet, Configuration]:
    net = StandardNet(plan, host)
    return net, net.execute_initial()


def process_changes_std(net: StandardNet, changes: Iterable[Change], pins: PinSet | None = None) -> Configuration:
    return net.process_changes(changes, pins)
