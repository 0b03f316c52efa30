"""Seeded workload generators: synthetic abstract syntax graphs, social graphs,
random typed graphs/queries for property checks, and update scripts."""
from __future__ import annotations

import random
from typing import Sequence

from .formats import format_graph, format_updates
from .graph import Change, HostGraph, PinSet, TypeGraph, apply_change
from .query import QueryGraph

CLASSES_PER_PACKAGE = 10
FIELDS_PER_CLASS = 10


def ast_type_graph() -> TypeGraph:
    tg = TypeGraph()
    for t in ("Pkg", "Class", "Field"):
        tg.add_vertex_type(t)
    tg.add_edge_type("ce", "Pkg", "Class")
    tg.add_edge_type("fe", "Class", "Field")
    tg.add_edge_type("ref", "Field", "Class")
    return tg


def _package_rng(seed: int, package: int) -> random.Random:
    # one stream per package so package k looks the same whatever the total count
    return random.Random(f"ast:{seed}:{package}")


def _class_changes(pkg: str, cls: str, ref_targets: Sequence[str], rng: random.Random, pin: bool) -> list[Change]:
    out = [Change.add_vertex(cls, "Class")]
    if pin:
        out.append(Change.pin(cls))
    out.append(Change.add_edge(f"ce.{cls}", "ce", pkg, cls))
    for k in range(FIELDS_PER_CLASS):
        fld = f"{cls}.f{k}"
        out.append(Change.add_vertex(fld, "Field"))
        if pin:
            out.append(Change.pin(fld))
        out.append(Change.add_edge(f"fe.{fld}", "fe", cls, fld))
    for k in range(FIELDS_PER_CLASS):
        fld = f"{cls}.f{k}"
        out.append(Change.add_edge(f"ref.{fld}", "ref", fld, rng.choice(ref_targets)))
    return out


def synthetic_ast(packages: int, seed: int = 0, pin_package: int | None = 0) -> tuple[HostGraph, PinSet]:
    """Packages of 10 classes with 10 fields each; every field references a class
    of its own package chosen uniformly at random.  ``pin_package`` selects the
    package whose contents form the relevant subgraph (``None`` pins nothing)."""
    if packages < 1:
        raise ValueError("packages must be >= 1")
    graph = HostGraph(ast_type_graph())
    pins = PinSet()
    for i in range(packages):
        rng = _package_rng(seed, i)
        pkg = f"p{i}"
        pin = i == pin_package
        apply_change(graph, pins, Change.add_vertex(pkg, "Pkg"))
        if pin:
            apply_change(graph, pins, Change.pin(pkg))
        classes = [f"{pkg}.c{j}" for j in range(CLASSES_PER_PACKAGE)]
        # classes first so every reference target exists
        for cls in classes:
            apply_change(graph, pins, Change.add_vertex(cls, "Class"))
            if pin:
                apply_change(graph, pins, Change.pin(cls))
        for cls in classes:
            apply_change(graph, pins, Change.add_edge(f"ce.{cls}", "ce", pkg, cls))
            for k in range(FIELDS_PER_CLASS):
                fld = f"{cls}.f{k}"
                apply_change(graph, pins, Change.add_vertex(fld, "Field"))
                if pin:
                    apply_change(graph, pins, Change.pin(fld))
                apply_change(graph, pins, Change.add_edge(f"fe.{fld}", "fe", cls, fld))
                apply_change(graph, pins, Change.add_edge(f"ref.{fld}", "ref", fld, rng.choice(classes)))
    graph.changelog.clear()
    return graph, pins


def generate_synthetic_ast(packages: int, seed: int = 0, pin_package: int | None = 0) -> str:
    graph, pins = synthetic_ast(packages, seed, pin_package)
    return format_graph(graph, pins)


def ast_grow_updates(seed: int = 0, package: int = 0, commits: int = 10, pin: bool = True) -> list[list[Change]]:
    """Each commit adds one class with its fields to ``package``; new fields
    reference classes of that package, including ones added earlier."""
    rng = random.Random(f"ast-grow:{seed}:{package}")
    pkg = f"p{package}"
    classes = [f"{pkg}.c{j}" for j in range(CLASSES_PER_PACKAGE)]
    batches = []
    for n in range(commits):
        cls = f"{pkg}.c{CLASSES_PER_PACKAGE + n}"
        classes.append(cls)
        batches.append(_class_changes(pkg, cls, classes, rng, pin))
    return batches


def social_type_graph() -> TypeGraph:
    tg = TypeGraph()
    for t in ("Person", "Forum", "Post"):
        tg.add_vertex_type(t)
    tg.add_edge_type("knows", "Person", "Person")
    tg.add_edge_type("hasMember", "Forum", "Person")
    tg.add_edge_type("containerOf", "Forum", "Post")
    tg.add_edge_type("hasCreator", "Post", "Person")
    tg.add_edge_type("likes", "Person", "Post")
    return tg


def social_graph(persons: int, seed: int = 0, pinned_persons: int = 1) -> tuple[HostGraph, PinSet]:
    """A random social network: persons know a few others, forums hold members
    and posts, persons create and like posts.  The first ``pinned_persons``
    persons and the posts they created form the relevant subgraph."""
    rng = random.Random(f"social:{seed}")
    graph = HostGraph(social_type_graph())
    pins = PinSet()
    people = [f"u{i}" for i in range(persons)]
    forums = [f"forum{i}" for i in range(max(1, persons // 10))]
    for p in people:
        apply_change(graph, pins, Change.add_vertex(p, "Person"))
    for f in forums:
        apply_change(graph, pins, Change.add_vertex(f, "Forum"))
    n = 0

    def edge(etype: str, s: str, t: str) -> None:
        nonlocal n
        apply_change(graph, pins, Change.add_edge(f"{etype}{n}", etype, s, t))
        n += 1

    for p in people:
        for q in rng.sample(people, min(len(people), 3)):
            if q != p:
                edge("knows", p, q)
        edge("hasMember", rng.choice(forums), p)
    posts = []
    for i in range(2 * persons):
        post = f"post{i}"
        posts.append(post)
        apply_change(graph, pins, Change.add_vertex(post, "Post"))
        creator = rng.choice(people)
        edge("hasCreator", post, creator)
        edge("containerOf", rng.choice(forums), post)
    for p in people:
        for post in rng.sample(posts, min(len(posts), 2)):
            edge("likes", p, post)
    for p in people[:pinned_persons]:
        apply_change(graph, pins, Change.pin(p))
    graph.changelog.clear()
    return graph, pins


# -- random instances for property checks ---------------------------------------------


def random_type_graph(rng: random.Random, max_types: int = 4) -> TypeGraph:
    tg = TypeGraph()
    vtypes = [f"T{i}" for i in range(rng.randint(1, max_types))]
    for t in vtypes:
        tg.add_vertex_type(t)
    for i in range(rng.randint(1, max_types)):
        tg.add_edge_type(f"R{i}", rng.choice(vtypes), rng.choice(vtypes))
    return tg


def random_host(
    rng: random.Random, max_vertices: int = 50, max_edges: int = 150, max_types: int = 4,
    type_graph: TypeGraph | None = None,
) -> HostGraph:
    tg = type_graph or random_type_graph(rng, max_types)
    graph = HostGraph(tg)
    pins = PinSet()
    vtypes = sorted(tg.vertex_types)
    by_type: dict[str, list[str]] = {t: [] for t in vtypes}
    for i in range(rng.randint(1, max_vertices)):
        t = rng.choice(vtypes)
        vid = f"x{i}"
        apply_change(graph, pins, Change.add_vertex(vid, t))
        by_type[t].append(vid)
    etypes = sorted(tg.edge_types)
    # average degree <= 6 keeps homomorphism counts of small queries tractable
    for i in range(rng.randint(0, min(max_edges, 3 * len(graph.vertices)))):
        et = rng.choice(etypes)
        s, t = tg.edge_types[et]
        if by_type[s] and by_type[t]:
            apply_change(graph, pins, Change.add_edge(f"y{i}", et, rng.choice(by_type[s]), rng.choice(by_type[t])))
    graph.changelog.clear()
    return graph


def random_query(rng: random.Random, type_graph: TypeGraph, max_edges: int = 4) -> QueryGraph:
    """A connected query with 1..max_edges edges; may contain loops, cycles and parallel edges."""
    etypes = sorted(type_graph.edge_types)
    q = QueryGraph()
    et = rng.choice(etypes)
    s, t = type_graph.edge_types[et]
    q.vertices["v0"] = s
    if rng.random() < 0.1 and s == t:
        q.edges["e0"] = (et, "v0", "v0")
    else:
        q.vertices["v1"] = t
        q.edges["e0"] = (et, "v0", "v1")
    for i in range(1, rng.randint(1, max_edges)):
        anchor = rng.choice(sorted(q.vertices))
        atype = q.vertices[anchor]
        options = [(e, "out") for e in etypes if type_graph.edge_types[e][0] == atype]
        options += [(e, "in") for e in etypes if type_graph.edge_types[e][1] == atype]
        if not options:
            continue
        et, direction = rng.choice(options)
        s, t = type_graph.edge_types[et]
        other_type = t if direction == "out" else s
        same_type = [v for v in sorted(q.vertices) if q.vertices[v] == other_type]
        if same_type and rng.random() < 0.25:
            other = rng.choice(same_type)
        else:
            other = f"v{len(q.vertices)}"
            q.vertices[other] = other_type
        ends = (anchor, other) if direction == "out" else (other, anchor)
        q.edges[f"e{i}"] = (et, *ends)
    q.validate(type_graph)
    return q


def random_pins(rng: random.Random, graph: HostGraph) -> PinSet:
    """Empty, full, or a random subset of the vertices."""
    roll = rng.random()
    vids = sorted(graph.vertices)
    if roll < 0.15:
        return PinSet()
    if roll < 0.3:
        return PinSet(set(vids))
    k = rng.randint(1, max(1, len(vids) // 4))
    return PinSet(set(rng.sample(vids, min(k, len(vids)))))


def random_churn(
    graph: HostGraph, pins: PinSet, seed: int = 0, commits: int = 10, ops_per_commit: int = 8,
    pin_rate: float = 0.15,
) -> list[list[Change]]:
    """Seeded add/remove batches that stay valid when replayed in order on ``graph``.

    Vertex removals are preceded by removals of their incident edges.  ``graph``
    and ``pins`` are not modified.
    """
    rng = random.Random(f"churn:{seed}")
    sim = graph.copy()
    sim_pins = PinSet(set(pins.pinned))
    tg = sim.type_graph
    vtypes = sorted(tg.vertex_types)
    etypes = sorted(tg.edge_types)
    counter = 0
    batches: list[list[Change]] = []

    def emit(batch: list[Change], change: Change) -> None:
        apply_change(sim, sim_pins, change)
        batch.append(change)

    for _ in range(commits):
        batch: list[Change] = []
        for _ in range(ops_per_commit):
            roll = rng.random()
            if roll < 0.2 or not sim.vertices:
                counter += 1
                vid = f"n{seed}_{counter}"
                emit(batch, Change.add_vertex(vid, rng.choice(vtypes)))
                if rng.random() < pin_rate:
                    emit(batch, Change.pin(vid))
            elif roll < 0.55 and etypes:
                et = rng.choice(etypes)
                s, t = tg.edge_types[et]
                srcs = sorted(v for v, vt in sim.vertices.items() if vt == s)
                tgts = sorted(v for v, vt in sim.vertices.items() if vt == t)
                if srcs and tgts:
                    counter += 1
                    emit(batch, Change.add_edge(f"n{seed}_{counter}", et, rng.choice(srcs), rng.choice(tgts)))
            elif roll < 0.8 and sim.edges:
                emit(batch, Change.remove_edge(rng.choice(sorted(sim.edges))))
            elif roll < 0.9:
                vid = rng.choice(sorted(sim.vertices))
                incident = sorted(e for e, (_, s, t) in sim.edges.items() if vid in (s, t))
                for eid in incident:
                    emit(batch, Change.remove_edge(eid))
                emit(batch, Change.remove_vertex(vid))
            else:
                vid = rng.choice(sorted(sim.vertices))
                emit(batch, Change.unpin(vid) if vid in sim_pins.pinned else Change.pin(vid))
        batches.append(batch)
    return batches


def generate_update_script(kind: str, seed: int = 0, graph: HostGraph | None = None,
                           pins: PinSet | None = None, **params) -> str:
    if kind == "ast-grow":
        return format_updates(ast_grow_updates(seed, **params))
    if kind == "random-churn":
        if graph is None:
            raise ValueError("random-churn needs a graph to operate on")
        return format_updates(random_churn(graph, pins or PinSet(), seed, **params))
    raise ValueError(f"unknown update kind {kind!r}")


# package contains class contains field
CONTAINMENT_QUERY = """\
vertex p Pkg
vertex c Class
vertex f Field
edge ce ce p c
edge fe fe c f
"""

# package plus four classes linked through fields; edge names follow the path so
# the greedy planner joins along it
PATH_QUERY = """\
vertex p Pkg
vertex c1 Class
vertex f1 Field
vertex c2 Class
vertex f2 Field
vertex c3 Class
vertex f3 Field
vertex c4 Class
edge e1 ce p c1
edge e2 fe c1 f1
edge e3 ref f1 c2
edge e4 fe c2 f2
edge e5 ref f2 c3
edge e6 fe c3 f3
edge e7 ref f3 c4
"""
