"""Brute-force reference semantics used to check both engines.

Nothing here touches the engines' indexes or the host graph's adjacency
indexes; every result is recomputed from the raw vertex and edge tables.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .graph import HostGraph, Match, PinSet
from .localized import Kind
from .query import JoinTreePlan, QueryGraph

INF = float("inf")


@dataclass
class InconsistentNode:
    node: int
    label: str
    expected: int
    actual: int
    witness: str = ""


@dataclass
class OracleReport:
    missing: set[Match] = field(default_factory=set)
    unsound: set[Match] = field(default_factory=set)
    inconsistent_nodes: list[InconsistentNode] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.missing or self.unsound or self.inconsistent_nodes)

    def __bool__(self) -> bool:
        return self.ok

    def merge(self, other: OracleReport) -> OracleReport:
        return OracleReport(
            self.missing | other.missing,
            self.unsound | other.unsound,
            self.inconsistent_nodes + other.inconsistent_nodes,
        )

    def to_json(self) -> dict:
        """Counts plus the smallest offending match/node as a witness."""
        out: dict = {
            "missing": len(self.missing),
            "unsound": len(self.unsound),
            "inconsistent_nodes": len(self.inconsistent_nodes),
        }
        if self.missing:
            out["missing_witness"] = min(self.missing).to_json()
        if self.unsound:
            out["unsound_witness"] = min(self.unsound).to_json()
        if self.inconsistent_nodes:
            n = self.inconsistent_nodes[0]
            out["inconsistent_witness"] = {
                "node": n.node, "label": n.label, "expected": n.expected, "actual": n.actual,
                "detail": n.witness,
            }
        return out


def _edge_table(host: HostGraph) -> dict[str, list[tuple[str, str, str]]]:
    table: dict[str, list[tuple[str, str, str]]] = defaultdict(list)
    for eid, (etype, s, t) in host.edges.items():
        table[etype].append((eid, s, t))
    return table


def _edge_order(query: QueryGraph) -> list[str]:
    """Query edges ordered so that each one after the first touches an earlier one."""
    remaining = sorted(query.edges)
    out = [remaining.pop(0)]
    seen = set(query.edge_vertices(out[0]))
    while remaining:
        nxt = next((e for e in remaining if seen & set(query.edge_vertices(e))), remaining[0])
        remaining.remove(nxt)
        out.append(nxt)
        seen |= set(query.edge_vertices(nxt))
    return out


def enumerate_matches(query: QueryGraph, host: HostGraph) -> set[Match]:
    """All typed homomorphisms of ``query`` into ``host`` by backtracking over query edges."""
    table = _edge_table(host)
    by_source: dict[tuple[str, str], list] = defaultdict(list)
    by_target: dict[tuple[str, str], list] = defaultdict(list)
    for etype, rows in table.items():
        for row in rows:
            by_source[(etype, row[1])].append(row)
            by_target[(etype, row[2])].append(row)
    types = host.vertices
    edges = _edge_order(query)
    results: set[Match] = set()
    vmap: dict[str, str] = {}
    emap: dict[str, str] = {}

    def bind(v: str, x: str) -> bool | None:
        """True if newly bound, False if already bound to x, None on conflict."""
        if v in vmap:
            return False if vmap[v] == x else None
        if types.get(x) != query.vertices[v]:
            return None
        vmap[v] = x
        return True

    def extend(i: int) -> None:
        if i == len(edges):
            results.add(Match.of(vmap, emap))
            return
        name = edges[i]
        etype, qs, qt = query.edges[name]
        if qs in vmap:
            candidates = by_source.get((etype, vmap[qs]), ())
        elif qt in vmap:
            candidates = by_target.get((etype, vmap[qt]), ())
        else:
            candidates = table.get(etype, ())
        for eid, s, t in candidates:
            new_s = bind(qs, s)
            if new_s is None:
                continue
            new_t = bind(qt, t)
            if new_t is None:
                if new_s:
                    del vmap[qs]
                continue
            emap[name] = eid
            extend(i + 1)
            del emap[name]
            if new_t:
                del vmap[qt]
            if new_s:
                del vmap[qs]

    extend(0)
    return results


def is_match(m: Match, query: QueryGraph, host: HostGraph) -> bool:
    """Check that ``m`` is a total typed morphism of the whole query into ``host``."""
    vm, em = m.vertex_map, m.edge_map
    if set(vm) != set(query.vertices) or set(em) != set(query.edges):
        return False
    for v, x in vm.items():
        if host.vertices.get(x) != query.vertices[v]:
            return False
    for name, eid in em.items():
        etype, qs, qt = query.edges[name]
        if host.edges.get(eid) != (etype, vm[qs], vm[qt]):
            return False
    return True


def check_completeness_under(
    matches: Iterable[Match], query: QueryGraph, host: HostGraph, pins: PinSet | Iterable[str]
) -> OracleReport:
    pinned = pins.pinned if isinstance(pins, PinSet) else set(pins)
    given = set(matches)
    everything = enumerate_matches(query, host)
    missing = {
        m for m in everything
        if m not in given and any(x in pinned for _, x in m.vertices)
    }
    return OracleReport(missing=missing, unsound=given - everything)


# -- consistency ----------------------------------------------------------------------


def _compatible(a: Match, b: Match, overlap: Iterable[str]) -> bool:
    va, vb = a.vertex_map, b.vertex_map
    return all(va[v] == vb[v] for v in overlap)


def _std_targets(plan: JoinTreePlan, host: HostGraph, results: Mapping[int, set[Match]]) -> dict[int, set[Match]]:
    query = plan.query
    out: dict[int, set[Match]] = {}
    for node in plan.nodes:
        if not node.is_join:
            etype, qs, qt = query.edges[node.edge]
            single = QueryGraph({qs: query.vertices[qs], qt: query.vertices[qt]}, {node.edge: (etype, qs, qt)})
            out[node.index] = enumerate_matches(single, host)
        else:
            left, right = plan.children(node)
            out[node.index] = {
                ml.union(mr)
                for ml in results.get(left.index, ())
                for mr in results.get(right.index, ())
                if _compatible(ml, mr, node.overlap)
            }
    return out


def _ms_target(node, net, host: HostGraph, pinned: set[str], results: Mapping[int, dict]) -> dict:
    k = node.kind
    deps = [results.get(d, {}) for d in node.deps]
    if k is Kind.VERTEX_INPUT:
        return {
            Match(((node.vertex, x),)): INF
            for x, t in host.vertices.items()
            if x in pinned and t == node.vertex_type
        }
    if k in (Kind.FORWARD, Kind.BACKWARD):
        v, w = node.ends
        tv, tw = node.end_types
        anchor = v if k is Kind.FORWARD else w
        out = {}
        for eid, (etype, s, t) in host.edges.items():
            if etype != node.edge_type or host.vertices[s] != tv or host.vertices[t] != tw:
                continue
            if v == w and s != t:
                continue
            m = Match.of({v: s, w: t}, {node.edge: eid})
            phi = deps[0].get(Match(((anchor, s if anchor == v else t),)))
            if phi is not None:
                out[m] = phi
        return out
    if k is Kind.UNION:
        out = {}
        for dep in deps:
            for m, phi in dep.items():
                out[m] = max(out.get(m, phi), phi)
        return out
    if k is Kind.PROJECTION:
        out = {}
        for m, phi in deps[0].items():
            r = m.restrict([node.vertex])
            out[r] = max(out.get(r, phi), phi)
        return out
    if k is Kind.FILTER:
        return {m: phi for m, phi in deps[0].items() if phi > node.value}
    if k is Kind.ASSIGN:
        return {m: node.value for m in deps[0]}
    return {
        ml.union(mr): max(pl, pr)
        for ml, pl in deps[0].items()
        for mr, pr in deps[1].items()
        if _compatible(ml, mr, node.overlap)
    }


def _diff_witness(expected, actual) -> str:
    exp = expected if isinstance(expected, dict) else dict.fromkeys(expected)
    act = actual if isinstance(actual, dict) else dict.fromkeys(actual)
    for m in sorted(set(exp) | set(act)):
        if exp.get(m, "absent") != act.get(m, "absent"):
            return f"{m}: expected {exp.get(m, 'absent')}, found {act.get(m, 'absent')}"
    return ""


def check_consistency(net, host: HostGraph, pins: PinSet | Iterable[str] | None, config) -> OracleReport:
    """Recompute every node's target result set from ``config`` and report mismatches.

    ``net`` is a :class:`~localrete.query.JoinTreePlan` (or anything with a
    ``plan`` and no localized nodes) for standard configurations, or a
    :class:`~localrete.localized.LocalizedNet` for marked ones.
    """
    report = OracleReport()
    results = config.results if hasattr(config, "results") else config
    if hasattr(net, "structures"):
        pinned = set() if pins is None else (pins.pinned if isinstance(pins, PinSet) else set(pins))
        for node in net.nodes:
            expected = _ms_target(node, net, host, pinned, results)
            actual = results.get(node.id, {})
            if expected != actual:
                report.inconsistent_nodes.append(
                    InconsistentNode(node.id, node.label, len(expected), len(actual), _diff_witness(expected, actual))
                )
        return report
    plan = net if isinstance(net, JoinTreePlan) else net.plan
    expected_all = _std_targets(plan, host, results)
    for node in plan.nodes:
        expected = expected_all[node.index]
        actual = results.get(node.index, set())
        if expected != actual:
            report.inconsistent_nodes.append(
                InconsistentNode(node.index, node.label, len(expected), len(actual), _diff_witness(expected, actual))
            )
    return report

