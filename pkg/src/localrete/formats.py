"""Line-based text formats for host graphs and update scripts.

Graph file::

    # comment
    vt Pkg
    et ce Pkg Class
    v p0 Pkg
    e ce.p0.c0 ce p0 p0.c0
    pin p0

Update file: the same ``v``/``e``/``pin`` records prefixed with ``+`` or ``-``,
grouped into batches by ``commit`` lines.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable

from .graph import Change, ChangeKind, GraphError, HostGraph, PinSet, TypeGraph, apply_change


class FormatError(ValueError):
    def __init__(self, message: str, lineno: int | None = None) -> None:
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno is not None else message)


def _records(text: str) -> Iterable[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _expect(fields: list[str], counts: tuple[int, ...], lineno: int) -> None:
    if len(fields) not in counts:
        raise FormatError(f"{fields[0]!r} takes {' or '.join(str(c - 1) for c in counts)} arguments", lineno)


def parse_graph(text: str) -> tuple[HostGraph, PinSet]:
    graph = HostGraph(TypeGraph())
    pins = PinSet()
    for lineno, fields in _records(text):
        tag = fields[0]
        try:
            if tag == "vt":
                _expect(fields, (2,), lineno)
                graph.type_graph.add_vertex_type(fields[1])
            elif tag == "et":
                _expect(fields, (4,), lineno)
                graph.type_graph.add_edge_type(*fields[1:])
            elif tag == "v":
                _expect(fields, (3,), lineno)
                apply_change(graph, pins, Change.add_vertex(fields[1], fields[2]))
            elif tag == "e":
                _expect(fields, (5,), lineno)
                apply_change(graph, pins, Change.add_edge(*fields[1:]))
            elif tag == "pin":
                _expect(fields, (2,), lineno)
                apply_change(graph, pins, Change.pin(fields[1]))
            else:
                raise FormatError(f"unknown record {tag!r}", lineno)
        except GraphError as exc:
            raise FormatError(str(exc), lineno) from exc
    return graph, pins


def parse_updates(text: str) -> list[list[Change]]:
    batches: list[list[Change]] = []
    current: list[Change] = []
    for lineno, fields in _records(text):
        tag = fields[0]
        if tag == "commit":
            _expect(fields, (1,), lineno)
            batches.append(current)
            current = []
        elif tag == "+v":
            _expect(fields, (3,), lineno)
            current.append(Change.add_vertex(fields[1], fields[2]))
        elif tag == "-v":
            _expect(fields, (2, 3), lineno)
            current.append(Change(ChangeKind.REMOVE_VERTEX, fields[1], *fields[2:]))
        elif tag == "+e":
            _expect(fields, (5,), lineno)
            current.append(Change.add_edge(*fields[1:]))
        elif tag == "-e":
            _expect(fields, (2, 5), lineno)
            current.append(Change(ChangeKind.REMOVE_EDGE, *fields[1:]))
        elif tag == "+pin":
            _expect(fields, (2,), lineno)
            current.append(Change.pin(fields[1]))
        elif tag == "-pin":
            _expect(fields, (2,), lineno)
            current.append(Change.unpin(fields[1]))
        else:
            raise FormatError(f"unknown update record {tag!r}", lineno)
    if current:
        batches.append(current)
    return batches


def format_graph(graph: HostGraph, pins: PinSet | None = None) -> str:
    """Serialize with lexicographic ordering so equal graphs give identical text."""
    tg = graph.type_graph
    lines = [f"vt {t}" for t in sorted(tg.vertex_types)]
    lines += [f"et {name} {s} {t}" for name, (s, t) in sorted(tg.edge_types.items())]
    lines += [f"v {vid} {vtype}" for vid, vtype in sorted(graph.vertices.items())]
    lines += [f"e {eid} {t} {s} {tgt}" for eid, (t, s, tgt) in sorted(graph.edges.items())]
    if pins is not None:
        lines += [f"pin {vid}" for vid in sorted(pins.pinned)]
    return "\n".join(lines) + "\n"


def format_change(change: Change) -> str:
    k = change.kind
    if k is ChangeKind.ADD_VERTEX:
        return f"+v {change.id} {change.type}"
    if k is ChangeKind.REMOVE_VERTEX:
        return f"-v {change.id}" + (f" {change.type}" if change.type else "")
    if k is ChangeKind.ADD_EDGE:
        return f"+e {change.id} {change.type} {change.source} {change.target}"
    if k is ChangeKind.REMOVE_EDGE:
        if change.type:
            return f"-e {change.id} {change.type} {change.source} {change.target}"
        return f"-e {change.id}"
    return f"{k.value} {change.id}"


def format_updates(batches: Iterable[Iterable[Change]]) -> str:
    lines: list[str] = []
    for batch in batches:
        lines.extend(format_change(c) for c in batch)
        lines.append("commit")
    return "\n".join(lines) + "\n"


def load_graph(path: str | Path) -> tuple[HostGraph, PinSet]:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def load_updates(path: str | Path) -> list[list[Change]]:
    return parse_updates(Path(path).read_text(encoding="utf-8"))
