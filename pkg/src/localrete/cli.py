"""Command line entry point: ``localrete run`` and ``localrete gen``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .formats import format_graph, load_graph
from .harness import STRATEGIES, InputError, ScenarioConfig, VerificationFailed, run_scenario
from .workloads import CONTAINMENT_QUERY, PATH_QUERY, generate_synthetic_ast, generate_update_script, social_graph

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_VERIFY = 3

log = logging.getLogger("localrete")

QUERIES = {"containment": CONTAINMENT_QUERY, "path": PATH_QUERY}


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="localrete", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a query scenario and emit metrics JSON")
    run.add_argument("--graph", required=True)
    run.add_argument("--query", required=True)
    run.add_argument("--updates")
    run.add_argument("--strategy", choices=STRATEGIES, default="localized")
    run.add_argument("--pins", default="graph",
                     help="graph (pin records in the graph file), all, none, sample:N, or a file of vertex ids")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--verify", action="store_true", help="check every pass against the oracle")
    run.add_argument("--out")

    gen = sub.add_parser("gen", help="generate workloads")
    gsub = gen.add_subparsers(dest="what", required=True)

    ast = gsub.add_parser("ast", help="synthetic abstract syntax graph")
    ast.add_argument("--packages", type=int, required=True)
    ast.add_argument("--seed", type=int, default=0)
    ast.add_argument("--pin-package", type=int, default=0, help="package whose contents are pinned")
    ast.add_argument("--no-pin", action="store_true")
    ast.add_argument("--out")

    upd = gsub.add_parser("updates", help="update script")
    upd.add_argument("--kind", choices=("ast-grow", "random-churn"), required=True)
    upd.add_argument("--seed", type=int, default=0)
    upd.add_argument("--commits", type=int, default=10)
    upd.add_argument("--package", type=int, default=0, help="ast-grow: package receiving new classes")
    upd.add_argument("--graph", help="random-churn: graph file the script is replayed on")
    upd.add_argument("--out")

    soc = gsub.add_parser("social", help="random social network graph")
    soc.add_argument("--persons", type=int, required=True)
    soc.add_argument("--seed", type=int, default=0)
    soc.add_argument("--pinned", type=int, default=1, help="number of pinned persons")
    soc.add_argument("--out")

    qry = gsub.add_parser("query", help="bundled query files")
    qry.add_argument("name", choices=sorted(QUERIES))
    qry.add_argument("--out")
    return parser


def _gen(args: argparse.Namespace) -> int:
    if args.what == "ast":
        if args.packages < 1:
            raise InputError("--packages must be >= 1")
        pin = None if args.no_pin else args.pin_package
        _write(generate_synthetic_ast(args.packages, args.seed, pin), args.out)
    elif args.what == "updates":
        if args.kind == "ast-grow":
            text = generate_update_script("ast-grow", args.seed, package=args.package, commits=args.commits)
        else:
            if not args.graph:
                raise InputError("random-churn needs --graph")
            try:
                graph, pins = load_graph(args.graph)
            except (OSError, ValueError) as exc:
                raise InputError(str(exc)) from exc
            text = generate_update_script("random-churn", args.seed, graph, pins, commits=args.commits)
        _write(text, args.out)
    elif args.what == "social":
        graph, pins = social_graph(args.persons, args.seed, args.pinned)
        _write(format_graph(graph, pins), args.out)
    else:
        _write(QUERIES[args.name], args.out)
    return EXIT_OK


def _run(args: argparse.Namespace) -> int:
    config = ScenarioConfig(
        graph_path=args.graph,
        query_path=args.query,
        updates_path=args.updates,
        strategy=args.strategy,
        pins_source=args.pins,
        seed=args.seed,
        output_path=args.out,
        verify=args.verify,
    )
    try:
        report = run_scenario(config)
    except VerificationFailed as exc:
        if not args.out:
            print(exc.report.dumps())
        log.error("verification failed: %s", exc.report.failures[0])
        return EXIT_VERIFY
    if not args.out:
        print(report.dumps())
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args) if args.command == "run" else _gen(args)
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
