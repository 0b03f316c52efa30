"""Scenario execution across strategies and metrics reporting."""
from __future__ import annotations

import json
import random
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .formats import load_graph, load_updates
from .graph import Change, GraphError, HostGraph, PinSet, apply_change
from .localized import LocalizedEngine, localize
from .oracle import OracleReport, check_completeness_under, check_consistency, enumerate_matches
from .query import QueryGraph, load_query, plan_join_tree
from .standard import StandardNet, effective_size

SCHEMA_VERSION = 1
STRATEGIES = ("standard", "localized", "oracle")


class InputError(Exception):
    pass


class VerificationFailed(Exception):
    def __init__(self, report: MetricsReport) -> None:
        self.report = report
        super().__init__("verification failed")


@dataclass
class ScenarioConfig:
    graph_path: str
    query_path: str
    updates_path: str | None = None
    strategy: str = "localized"
    pins_source: str = "graph"  # graph | all | none | sample:N | path to a vertex-id list
    seed: int = 0
    output_path: str | None = None
    verify: bool = False


@dataclass
class PassMetrics:
    wall_time: float
    production_count: int
    effective_size: int
    index: int | None = None
    node_count: int | None = None


@dataclass
class MetricsReport:
    strategy: str
    initial: PassMetrics
    commits: list[PassMetrics] = field(default_factory=list)
    checks: dict[str, bool] | None = None
    failures: list[dict[str, Any]] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        initial = {k: v for k, v in asdict(self.initial).items() if k != "index"}
        commits = [{k: v for k, v in asdict(c).items() if k != "node_count"} for c in self.commits]
        out: dict[str, Any] = {
            "schema": SCHEMA_VERSION,
            "strategy": self.strategy,
            "initial": initial,
            "commits": commits,
            "checks": self.checks,
        }
        if self.failures:
            out["failures"] = self.failures
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


class _Runner:
    node_count = 0

    def __init__(self, query: QueryGraph, host: HostGraph, pins: PinSet) -> None:
        self.query = query
        self.host = host
        self.pins = pins

    def initial(self) -> None:
        raise NotImplementedError

    def commit(self, batch: list[Change]) -> None:
        for change in batch:
            apply_change(self.host, self.pins, change)
        self.refresh()

    def refresh(self) -> None:
        raise NotImplementedError

    def production(self) -> set:
        raise NotImplementedError

    def effective_size(self) -> int:
        raise NotImplementedError

    def consistency(self) -> OracleReport:
        return OracleReport()


class _StandardRunner(_Runner):
    def initial(self) -> None:
        self.plan = plan_join_tree(self.query)
        self.net = StandardNet(self.plan, self.host)
        self.node_count = len(self.plan.nodes)
        self.net.execute_initial()

    def refresh(self) -> None:
        self.net.sync()

    def production(self) -> set:
        return self.net.production

    def effective_size(self) -> int:
        return effective_size(self.net.config)

    def consistency(self) -> OracleReport:
        return check_consistency(self.plan, self.host, self.pins, self.net.config)


class _LocalizedRunner(_Runner):
    def initial(self) -> None:
        self.net = localize(plan_join_tree(self.query))
        self.node_count = len(self.net)
        self.engine = LocalizedEngine(self.net, self.host, self.pins)
        self.engine.run_pass()

    def refresh(self) -> None:
        self.engine.run_pass()

    def production(self) -> set:
        return set(self.engine.production)

    def effective_size(self) -> int:
        return self.engine.config.marked_size()

    def consistency(self) -> OracleReport:
        return check_consistency(self.net, self.host, self.pins, self.engine.config)


class _OracleRunner(_Runner):
    node_count = 1

    def initial(self) -> None:
        self.refresh()

    def refresh(self) -> None:
        self.matches = enumerate_matches(self.query, self.host)

    def production(self) -> set:
        return self.matches

    def effective_size(self) -> int:
        return sum(len(m) for m in self.matches)


_RUNNERS = {"standard": _StandardRunner, "localized": _LocalizedRunner, "oracle": _OracleRunner}


def resolve_pins(source: str, host: HostGraph, graph_pins: PinSet, seed: int) -> PinSet:
    if source == "graph":
        return graph_pins
    if source == "all":
        return PinSet(set(host.vertices))
    if source == "none":
        return PinSet()
    if source.startswith("sample:"):
        n = int(source.split(":", 1)[1])
        vids = sorted(host.vertices)
        return PinSet(set(random.Random(seed).sample(vids, min(n, len(vids)))))
    path = Path(source)
    if not path.exists():
        raise InputError(f"pin source {source!r} is neither a keyword nor a file")
    ids = {line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()}
    unknown = sorted(ids - host.vertices.keys())
    if unknown:
        raise InputError(f"pin file names unknown vertices: {', '.join(unknown[:5])}")
    return PinSet(ids)


def _verify(runner: _Runner, stage: str) -> tuple[dict[str, bool], dict[str, Any] | None]:
    completeness = check_completeness_under(runner.production(), runner.query, runner.host, runner.pins)
    consistency = runner.consistency()
    checks = {
        "consistent": not consistency.inconsistent_nodes,
        "complete_under_pins": not completeness.missing,
        "sound": not completeness.unsound,
    }
    if all(checks.values()):
        return checks, None
    return checks, {"stage": stage, **completeness.merge(consistency).to_json()}


def run_scenario(config: ScenarioConfig) -> MetricsReport:
    """Load inputs, run the initial pass and every committed batch, collect metrics.

    Raises :class:`InputError` for unreadable inputs and :class:`VerificationFailed`
    (carrying the full report) when ``config.verify`` finds a violation.
    """
    if config.strategy not in STRATEGIES:
        raise InputError(f"unknown strategy {config.strategy!r}")
    try:
        host, graph_pins = load_graph(config.graph_path)
        query = load_query(config.query_path, host.type_graph)
        batches = load_updates(config.updates_path) if config.updates_path else []
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    pins = resolve_pins(config.pins_source, host, graph_pins, config.seed)
    host.changelog.clear()

    runner = _RUNNERS[config.strategy](query, host, pins)
    t0 = time.perf_counter()
    runner.initial()
    elapsed = time.perf_counter() - t0
    report = MetricsReport(
        config.strategy,
        PassMetrics(elapsed, len(runner.production()), runner.effective_size(), node_count=runner.node_count),
    )
    checks = {"consistent": True, "complete_under_pins": True, "sound": True}
    if config.verify:
        stage_checks, failure = _verify(runner, "initial")
        checks = {k: checks[k] and v for k, v in stage_checks.items()}
        if failure:
            report.failures.append(failure)

    for i, batch in enumerate(batches):
        t0 = time.perf_counter()
        try:
            runner.commit(batch)
        except GraphError as exc:
            raise InputError(f"commit {i}: {exc}") from exc
        elapsed = time.perf_counter() - t0
        report.commits.append(PassMetrics(elapsed, len(runner.production()), runner.effective_size(), index=i))
        if config.verify:
            stage_checks, failure = _verify(runner, f"commit {i}")
            checks = {k: checks[k] and v for k, v in stage_checks.items()}
            if failure:
                report.failures.append(failure)

    if config.verify:
        report.checks = checks
    if config.output_path:
        Path(config.output_path).write_text(report.dumps() + "\n", encoding="utf-8")
    if report.failures:
        raise VerificationFailed(report)
    return report
