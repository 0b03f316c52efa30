from __future__ import annotations

import random
from collections import Counter

import pytest

from localrete import (
    INF,
    Change,
    HostGraph,
    Match,
    PinSet,
    apply_change,
    build_plan,
    check_completeness_under,
    check_consistency,
    enumerate_matches,
    execute_localized,
    is_edge_dominated,
    localize,
    order,
    parse_query,
    plan_join_tree,
)
from localrete.graph import TypeGraph
from localrete.standard import effective_size, execute_initial
from localrete.localized import (
    Kind,
    LNode,
    LocalizedEngine,
    MarkedConfiguration,
    eval_marking_assign,
    eval_marking_filter,
    eval_ms_join,
    eval_ms_projection,
    eval_ms_union,
    eval_ms_vertex_input,
    eval_nav,
    order_length,
    stripped_result_set,
)
from localrete.workloads import random_churn, random_host, random_pins, random_query, synthetic_ast


# -- structure ------------------------------------------------------------------------


def test_containment_structure(containment_query):
    net = localize(plan_join_tree(containment_query))
    assert len(net) == 21
    assert len(net.structures) == 2 and len(net.requests) == 2
    assert Counter(n.kind for n in net.nodes) == {
        Kind.VERTEX_INPUT: 4, Kind.UNION: 6, Kind.FORWARD: 2, Kind.BACKWARD: 2,
        Kind.JOIN: 1, Kind.FILTER: 2, Kind.PROJECTION: 2, Kind.ASSIGN: 2,
    }
    assert net.nodes[net.production].kind is Kind.JOIN
    assert [r.height for r in net.requests] == [1, 1]
    assert {r.vertex for r in net.requests} == {"c"}


def test_containment_order_golden(containment_query):
    net = localize(plan_join_tree(containment_query))
    assert [b.label for b in net.blocks] == [
        "RPS_r(c,2)", "LNS(ce)", "RPS_l(c,2)", "LNS(fe)", "RPS_r(c,2)", "LNS(ce)", "JOIN(2)",
    ]
    seq = order(net)
    assert len(seq) == 31 == order_length(net.plan)
    labels = [net.nodes[i].label for i in seq]
    assert labels[:3] == ["[phi>1]_r2", "[pi_c]_r2", "[phi:=1]_r2"]
    assert labels[3:10] == ["[p]", "[c]", "[U]_p", "[U]_c", "[p->c]", "[c<-p]", "[U]_ce"]
    assert labels[-1] == "[join]_2"


def test_rps_wiring(containment_query):
    net = localize(plan_join_tree(containment_query))
    ce, fe = net.structures
    rps_l = next(r for r in net.requests if r.side == "l")
    rps_r = next(r for r in net.requests if r.side == "r")
    # the left request filters the ce side and feeds the fe structure's c-union
    assert net.nodes[rps_l.filter].deps == [ce.top]
    assert rps_l.extension_point == fe.source_union
    assert rps_l.assign in net.nodes[fe.source_union].deps
    assert net.nodes[rps_r.filter].deps == [fe.top]
    assert rps_r.extension_point == ce.target_union
    assert set(net.extension_points()) == {ce.source_union, ce.target_union, fe.source_union, fe.target_union}


def test_single_edge_structure(single_t_query):
    net = localize(plan_join_tree(single_t_query))
    assert len(net) == 7
    assert net.production == net.structures[0].top
    assert order(net) == list(net.structures[0].node_ids)
    # dependencies always come earlier in the sequence
    pos = {nid: i for i, nid in enumerate(order(net))}
    assert all(pos[d] < pos[n.id] for n in net.nodes for d in n.deps)


def test_three_edge_counts():
    q = parse_query("vertex a X\nvertex b X\nvertex c X\nvertex d X\nedge e1 T a b\nedge e2 T b c\nedge e3 T c d\n")
    net = localize(plan_join_tree(q))
    assert len(net) == 35
    assert len(order(net)) == order_length(net.plan) == 2 * 31 + 7 + 10


def test_path_query_order_length(path_query):
    net = localize(plan_join_tree(path_query))
    assert len(net) == 7 * 7 + 7 * 6
    lengths = [7]
    for _ in range(6):
        lengths.append(2 * lengths[-1] + 7 + 10)
    assert len(order(net)) == order_length(net.plan) == lengths[-1] == 1519


@pytest.mark.parametrize("seed", range(40))
def test_structural_formula(seed):
    rng = random.Random(seed)
    q = random_query(rng, random_host(rng).type_graph, max_edges=6)
    plan = plan_join_tree(q)
    net = localize(plan)
    joins = sum(n.is_join for n in plan.nodes)
    assert len(net) == 7 * (len(q.edges) + joins)
    assert len(order(net)) == order_length(plan)


# -- node semantics on H0 ---------------------------------------------------------------

M = Match.of({"v": "a"})
M2 = Match.of({"v": "b"})
M3 = Match.of({"v": "c"})


def node(kind, deps=(0,), **kw) -> LNode:
    return LNode(99, kind, ("v",), deps=list(deps), **kw)


def nav_nodes(single_t_query):
    net = localize(plan_join_tree(single_t_query))
    s = net.structures[0]
    return net, net.nodes[s.forward], net.nodes[s.backward], s


def test_vertex_input(h0, single_t_query):
    net, _, _, s = nav_nodes(single_t_query)
    w_in = net.nodes[s.target_input]
    assert eval_ms_vertex_input(w_in, h0, PinSet()) == {}
    assert eval_ms_vertex_input(w_in, h0, PinSet({"b"})) == {Match.of({"w": "b"}): INF}
    assert eval_ms_vertex_input(w_in, h0, PinSet({"a"})) == {}


def test_navigation(h0, single_t_query):
    net, fwd, bwd, s = nav_nodes(single_t_query)
    e = lambda src, eid, tgt: Match.of({"v": src, "w": tgt}, {"t": eid})  # noqa: E731
    cfg = {s.source_union: {Match.of({"v": "a"}): 5}}
    assert eval_nav(fwd, h0, cfg, "forward") == {e("a", "e1", "b"): 5, e("a", "e2", "c"): 5}
    cfg = {s.target_union: {Match.of({"w": "b"}): INF}}
    assert eval_nav(bwd, h0, cfg, "backward") == {e("a", "e1", "b"): INF}
    assert eval_nav(fwd, h0, {s.source_union: {}}) == {}
    with pytest.raises(ValueError):
        eval_nav(fwd, h0, cfg, "backward")


def test_union():
    n = node(Kind.UNION, deps=(0, 1))
    assert eval_ms_union(n, {0: {M: 3}, 1: {M: 7}}) == {M: 7}
    assert eval_ms_union(n, {0: {M: 2}, 1: {M2: 4}}) == {M: 2, M2: 4}
    assert eval_ms_union(n, {0: {}, 1: {}}) == {}
    assert eval_ms_union(n, {0: {M: INF}, 1: {M: 7}}) == {M: INF}


def test_projection():
    n = LNode(99, Kind.PROJECTION, ("v",), deps=[0], vertex="v")
    m1 = Match.of({"v": "a", "w": "b"}, {"t": "e1"})
    m2 = Match.of({"v": "a", "w": "c"}, {"t": "e2"})
    assert eval_ms_projection(n, {0: {m1: 2, m2: 5}}) == {M: 5}
    assert eval_ms_projection(n, {0: {m1: 2}}) == {M: 2}
    assert eval_ms_projection(n, {0: {}}) == {}


def test_filter():
    n = node(Kind.FILTER, value=1)
    assert eval_marking_filter(n, {0: {M: 1, M2: 2, M3: INF}}) == {M2: 2, M3: INF}
    assert eval_marking_filter(n, {0: {M: 1, M2: 2}}, threshold=0) == {M: 1, M2: 2}
    assert eval_marking_filter(n, {0: {}}) == {}


def test_assign():
    n = node(Kind.ASSIGN, value=1)
    assert eval_marking_assign(n, {0: {M: INF}}) == {M: 1}
    assert eval_marking_assign(n, {0: {M: 1}}) == {M: 1}
    assert eval_marking_assign(n, {0: {}}) == {}
    assert eval_marking_assign(n, {0: {M: INF}}, value=3) == {M: 3}


def test_join():
    n = LNode(99, Kind.JOIN, ("c", "f", "p"), deps=[0, 1], overlap=("c",))
    ml = Match.of({"p": "p0", "c": "c0"}, {"ce": "x"})
    mr = Match.of({"c": "c0", "f": "f0"}, {"fe": "y"})
    other = Match.of({"c": "c1", "f": "f0"}, {"fe": "z"})
    joined = ml.union(mr)
    assert eval_ms_join(n, {0: {ml: 2}, 1: {mr: INF}}) == {joined: INF}
    assert eval_ms_join(n, {0: {ml: 2}, 1: {other: INF}}) == {}
    assert eval_ms_join(n, {0: {ml: 1}, 1: {mr: 1}}) == {joined: 1}


def test_stripped():
    cfg = MarkedConfiguration({0: {M: 1, M2: INF}})
    assert stripped_result_set(0, cfg) == {M, M2}
    assert stripped_result_set(1, cfg) == set()


# -- execution ------------------------------------------------------------------------


def test_no_pins_gives_empty_configuration(containment_query, ast1):
    host, _ = ast1
    config = execute_localized(localize(plan_join_tree(containment_query)), host, PinSet())
    assert all(not ms for ms in config.results.values())


def test_all_pinned_containment(containment_query, ast1):
    host, _ = ast1
    net = localize(plan_join_tree(containment_query))
    config = execute_localized(net, host, PinSet(set(host.vertices)))
    prod = config[net.production]
    assert set(prod) == enumerate_matches(containment_query, host)
    assert len(prod) == 100 and set(prod.values()) == {INF}


def test_one_class_fields_pinned(containment_query):
    host, pins = synthetic_ast(1, pin_package=None)
    fields = {f"p0.c7.f{k}" for k in range(10)}
    pins.pinned |= fields
    net = localize(plan_join_tree(containment_query))
    config = execute_localized(net, host, pins)
    prod = config[net.production]
    expected = {m for m in enumerate_matches(containment_query, host) if m.vertex_map["f"] in fields}
    assert len(expected) == 10
    assert expected <= set(prod)
    assert all(prod[m] == INF for m in expected)
    assert check_completeness_under(prod, containment_query, host, pins).ok


def test_rerun_is_idempotent(containment_query, ast1):
    host, pins = ast1
    net = localize(plan_join_tree(containment_query))
    config = execute_localized(net, host, pins)
    engine = LocalizedEngine(net, host, pins, config)
    changed = []
    engine.trace = lambda *event: changed.append(event)
    engine.run_pass()
    assert changed == []
    assert engine.config.results == config.results


def test_pass_executes_each_node_at_most_its_order_count(path_query):
    host, pins = synthetic_ast(2, pin_package=1)
    net = localize(plan_join_tree(path_query))
    engine = LocalizedEngine(net, host, pins)
    engine.run_pass()
    assert 0 < engine.executions <= len(order(net))
    before = engine.executions
    engine.run_pass()
    assert engine.executions == before


def _marked_instances(count: int, base: int = 0):
    for seed in range(base, base + count):
        rng = random.Random(seed)
        host = random_host(rng, max_vertices=20, max_edges=45)
        query = random_query(rng, host.type_graph)
        pins = random_pins(rng, host)
        yield seed, host, query, pins


@pytest.mark.parametrize("seed,host,query,pins", list(_marked_instances(40)))
def test_monotone_markings_and_uniqueness(seed, host, query, pins):
    net = localize(plan_join_tree(query))
    engine = LocalizedEngine(net, host, pins)
    events = []
    engine.trace = lambda nid, m, old, new: events.append((nid, m, old, new))
    engine.run_pass()
    for nid, m, old, new in events:
        assert new is not None, (seed, net.nodes[nid].label, m)
        assert old is None or new >= old, (seed, net.nodes[nid].label, m, old, new)
    for nid, ms in engine.config.results.items():
        # a dict keyed by match cannot hold two markings; check shapes instead
        n = net.nodes[nid]
        assert all(tuple(v for v, _ in m.vertices) == n.vertices for m in ms)


def _garbage(net, host, rng) -> MarkedConfiguration:
    """Node-shaped matches with arbitrary markings, many of them invalid for ``host``."""
    vids = sorted(host.vertices) + ["ghost"]
    eids = sorted(host.edges) + ["ghost-edge"]
    results = {}
    for n in net.nodes:
        ms = {}
        for _ in range(rng.randint(0, 4)):
            m = Match.of({v: rng.choice(vids) for v in n.vertices}, {e: rng.choice(eids) for e in n.edges})
            ms[m] = rng.choice([0, 1, 2, 3, INF])
        results[n.id] = ms
    return MarkedConfiguration(results)


@pytest.mark.parametrize("seed,host,query,pins", list(_marked_instances(40, base=500)))
def test_one_pass_from_arbitrary_configuration(seed, host, query, pins):
    net = localize(plan_join_tree(query))
    start = _garbage(net, host, random.Random(seed))
    config = execute_localized(net, host, pins, start)
    assert check_consistency(net, host, pins, config).ok
    report = check_completeness_under(config[net.production], query, host, pins)
    assert report.ok, report.to_json()


@pytest.mark.parametrize("seed,host,query,pins", list(_marked_instances(30, base=900)))
def test_incremental_passes(seed, host, query, pins):
    net = localize(plan_join_tree(query))
    engine = LocalizedEngine(net, host, pins)
    engine.run_pass()
    for batch in random_churn(host, pins, seed=seed, commits=6):
        engine.process(batch)
        assert check_consistency(net, host, pins, engine.config).ok
        prod = engine.production
        assert check_completeness_under(prod, query, host, pins).ok
        for m in enumerate_matches(query, host):
            if any(x in pins for _, x in m.vertices):
                assert prod[m] == INF


def test_pin_then_unpin_shrinks_back(containment_query):
    host, pins = synthetic_ast(1, pin_package=None)
    net = localize(plan_join_tree(containment_query))
    engine = LocalizedEngine(net, host, pins)
    engine.run_pass()
    assert not engine.production
    engine.process([Change.pin("p0.c1")])
    assert len(engine.production) == 10
    engine.process([Change.unpin("p0.c1")])
    assert check_consistency(net, host, pins, engine.config).ok
    assert engine.config.marked_size() == 0


def test_bushy_plan():
    q = parse_query(
        "vertex v1 X\nvertex v2 X\nvertex v3 X\nvertex v4 X\nvertex v5 X\n"
        "edge a T v1 v2\nedge b T v2 v3\nedge c T v3 v4\nedge d T v4 v5\n"
    )
    plan = build_plan(q, (("a", "b"), ("c", "d")))
    net = localize(plan)
    assert len(net) == 7 * 7
    assert len(order(net)) == order_length(plan) == 2 * 31 + 31 + 10 == 103
    rng = random.Random(3)
    host = HostGraph(TypeGraph({"X"}, {"T": ("X", "X")}))
    pins = PinSet()
    for i in range(12):
        apply_change(host, pins, Change.add_vertex(f"x{i}", "X"))
    for i in range(30):
        apply_change(host, pins, Change.add_edge(f"y{i}", "T", f"x{rng.randrange(12)}", f"x{rng.randrange(12)}"))
    pins.pinned |= {"x0", "x5"}
    config = execute_localized(net, host, pins)
    assert check_consistency(net, host, pins, config).ok
    assert check_completeness_under(config[net.production], q, host, pins).ok


# -- size bound -------------------------------------------------------------------------


def _sizes(host, query, pins):
    plan = plan_join_tree(query)
    marked = execute_localized(localize(plan), host, pins).marked_size()
    _, config = execute_initial(plan, host)
    return marked, effective_size(config)


def _loop_free_dominated(count: int):
    found, seed = [], 0
    while len(found) < count:
        rng = random.Random(f"bound:{seed}")
        seed += 1
        host = random_host(rng, max_vertices=15, max_edges=60)
        query = random_query(rng, host.type_graph)
        if is_edge_dominated(host) and all(s != t for _, s, t in query.edges.values()):
            found.append((host, query, random_pins(rng, host)))
    return found


@pytest.mark.parametrize("host,query,pins", _loop_free_dominated(40))
def test_size_bound_on_loop_free_queries(host, query, pins):
    marked, standard = _sizes(host, query, pins)
    assert marked <= 7 * standard


def test_loop_query_breaks_the_size_bound():
    # edge-dominated (one T edge for one vertex) yet the loop query has no match
    host = HostGraph(TypeGraph({"X"}, {"T": ("X", "X")}))
    pins = PinSet()
    apply_change(host, pins, Change.add_vertex("x", "X"))
    apply_change(host, pins, Change.add_vertex("y", "X"))
    apply_change(host, pins, Change.add_edge("e1", "T", "x", "y"))
    apply_change(host, pins, Change.add_edge("e2", "T", "y", "x"))
    pins.pinned |= {"x", "y"}
    assert is_edge_dominated(host)
    query = parse_query("vertex v X\nedge l T v v\n")
    marked, standard = _sizes(host, query, pins)
    assert standard == 0 and marked > 0
