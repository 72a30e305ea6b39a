"""Command-line front end: analyze, quantum, verify-paper, search, vertices, graph.

Exit codes: 0 ok, 1 fixture failure, 2 input error, 3 cap exceeded, 4 solver failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from app.core.config import settings
from app.hybrid.errors import HybridGraphError, InputError, SolverError
from app.hybrid.fixtures import BUILTIN_STRATEGIES, format_fixture_table, named_inequality, run_fixtures
from app.hybrid.invariants import WeightedInequality
from app.hybrid.io import dump_strategy, load_inequality, load_scenario, load_strategy
from app.hybrid.polytope import VERTEX_BUILDERS
from app.hybrid.quantum import optimize_violation, strategy_to_behavior
from app.hybrid.reports import analyze, evaluate
from app.hybrid.scenario import HybridScenario
from app.hybrid.search import SearchConfig, scan_for_genuine
from app.hybrid.types import to_fraction

logger = logging.getLogger("app.cli")

EXIT_OK, EXIT_FIXTURES = 0, 1


# --- Inputs ---


def _load(args) -> tuple[WeightedInequality, HybridScenario | None]:
    scenario = load_scenario(args.scenario) if args.scenario else None
    if args.inequality:
        return load_inequality(args.inequality, scenario)
    if not args.generate:
        raise InputError("give an inequality file or --generate")
    return named_inequality(args.generate, scenario)


def _print_json(model) -> None:
    sys.stdout.write(model.model_dump_json(indent=2) + "\n")


# --- Commands ---


def cmd_analyze(args) -> int:
    ineq, scenario = _load(args)
    if scenario is None:
        raise InputError("analyze needs a scenario-built inequality")
    envelope = analyze(ineq, scenario, timings=args.timings)
    _print_json(envelope)
    if args.dot:
        sys.stdout.write(ineq.graph.to_dot(ineq.name or "H"))
    if not envelope.report.theta.converged:
        logger.error("❌ theta SDP did not converge; bounds above are certified but loose")
        return SolverError.exit_code
    return EXIT_OK


def cmd_quantum(args) -> int:
    ineq, scenario = _load(args)
    if scenario is None:
        raise InputError("quantum evaluation needs a scenario-built inequality")
    if args.optimize:
        result = optimize_violation(ineq, scenario, seed=args.seed, restarts=args.restarts, workers=args.workers)
        state, measurements = result.state, result.measurements
    elif args.builtin:
        state, measurements = BUILTIN_STRATEGIES[args.builtin]()
    elif args.strategy:
        state, measurements = load_strategy(args.strategy)
    else:
        raise InputError("give --strategy FILE, --builtin NAME or --optimize")

    evaluation = evaluate(strategy_to_behavior(state, measurements), ineq, scenario)
    out = evaluation.model_dump()
    if args.optimize:
        out["strategy"] = json.loads(dump_strategy(state, measurements, name=f"optimized_seed_{args.seed}"))
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_verify_paper(args) -> int:
    weights = [args.h1_weight] if args.h1_weight else None
    outcomes = run_fixtures(only=args.only, h1_weights=weights)
    sys.stdout.write(format_fixture_table(outcomes))
    return EXIT_OK if outcomes and all(o.passed for o in outcomes) else EXIT_FIXTURES


def cmd_search(args) -> int:
    scenario = load_scenario(args.scenario) if args.scenario else HybridScenario.broadcasting(3, 3, 3)
    try:
        config = SearchConfig(
            scenario=scenario,
            max_subgraph_size=args.max_size,
            weight_palette=tuple(to_fraction(w) for w in args.palette.split(",")),
            seed=args.seed,
            time_budget=args.budget_secs,
            max_candidates=args.max_candidates,
            workers=args.workers,
        )
    except ValueError as e:
        raise InputError(f"invalid search configuration: {e}") from e
    outcome = scan_for_genuine(config)
    for record in outcome.results:
        sys.stdout.write(record.model_dump_json() + "\n")
    logger.info(
        f"examined={outcome.examined} prefiltered={outcome.prefiltered} "
        f"genuine={outcome.genuine_count} exhausted={outcome.exhausted}"
    )
    if outcome.genuine_count == 0:
        logger.warning("⚠️ no candidate with alpha < alpha_hat found within the budget")
    return EXIT_OK


def cmd_vertices(args) -> int:
    ineq, _ = _load(args)
    sys.stdout.write(VERTEX_BUILDERS[args.kind](ineq.graph).to_text())
    return EXIT_OK


def cmd_graph(args) -> int:
    ineq, _ = _load(args)
    sys.stdout.write(ineq.graph.to_dot(ineq.name or "H"))
    if args.png:
        from app.utils.figures import render_graph_figure

        render_graph_figure(ineq.graph, args.png, title=ineq.name or None)
        logger.info(f"✅ Figure written to {args.png}")
    return EXIT_OK


# --- Parser ---


def _add_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("inequality", nargs="?", type=Path, help="inequality file")
    p.add_argument("--scenario", type=Path, help="scenario JSON (overrides the file's directive)")
    p.add_argument("--generate", help="named construction instead of a file, e.g. mobius:4 or cycle:5")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybrid-exclusivity", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="bound chain alpha <= alpha_hat <= theta, alpha_star")
    _add_source(p)
    p.add_argument("--dot", action="store_true", help="append the graph in DOT")
    p.add_argument("--timings", action="store_true", help="include per-stage timings")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("quantum", help="evaluate or optimize a qubit strategy")
    _add_source(p)
    p.add_argument("--strategy", type=Path)
    p.add_argument("--builtin", choices=sorted(BUILTIN_STRATEGIES))
    p.add_argument("--optimize", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(handler=cmd_quantum)

    p = sub.add_parser("verify-paper", help="run the built-in reference fixtures")
    p.add_argument("--only", help="fixture group (alpha, alpha_hat, alpha_star, theta, quantum, polytope) or id")
    p.add_argument("--h1-weight", help="override every weight of the 7-event inequality, e.g. 11/10")
    p.set_defaults(handler=cmd_verify_paper)

    p = sub.add_parser("search", help="randomized scan for genuine inequalities")
    p.add_argument("--scenario", type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-size", type=int, default=12)
    p.add_argument("--budget-secs", type=float, default=None)
    p.add_argument("--palette", default="1,2")
    p.add_argument("--max-candidates", type=int, default=None, help="default: run until the budget ends")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(handler=cmd_search)

    p = sub.add_parser("vertices", help="exact vertex list of STAB, QSTAB or HSTAB")
    _add_source(p)
    p.add_argument("--kind", choices=sorted(VERTEX_BUILDERS), default="hstab")
    p.set_defaults(handler=cmd_vertices)

    p = sub.add_parser("graph", help="DOT export, optionally a PNG figure")
    _add_source(p)
    p.add_argument("--png", type=Path)
    p.set_defaults(handler=cmd_graph)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except HybridGraphError as e:
        logger.error(f"❌ {e}")
        return e.exit_code
    except ValidationError as e:
        logger.error(f"❌ {e}")
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
