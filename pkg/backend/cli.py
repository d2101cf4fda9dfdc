#!/usr/bin/env python3
"""
Command-line interface.

Subcommands: test, simulate, check-class, majorize, network, curves,
covariance. Results go to stdout (a readable block followed by key=value
lines, or CSV); logs go to stderr.

Exit codes: 0 success (a rejected null is a result, not a failure),
2 usage, 3 data, 4 capability or capacity.

Usage:
    python cli.py test --data data/pareto_sample.txt --theta 0.5,0.5 --eta 1 --method bootstrap
    python cli.py simulate --table loglogistic-means --scale 0.5 --out results/table2.csv
    python cli.py majorize 0.5,0.5 1
"""

import argparse
import logging
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from config import settings
from data_store import format_curves, load_sample, load_scenario_config, write_power_table, write_text
from errors import DominanceError, ParameterDomainError, UnknownTableError
from models import (
    CovarianceSpec,
    EvaluatorMode,
    FamilySpec,
    GridSpec,
    ShapeProperty,
    TestConfig,
    TestMethod,
    WeightVector,
)
from services.asymptotics import DIAGONAL_FORMS, covariance_omega, empirical_process_covariance, total_covariance
from services.combine import combination_curves
from services.distributions import parse_family
from services.empirical import Sample
from services.majorization import (
    FIGURE_EDGES,
    H_SPLIT_MAX_DIMENSION,
    dominance_network,
    is_h_split_majorized,
    relation,
    t_transform_chain,
)
from services.sdtest import run_test
from services.shapeclass import run_checks
from services.simharness import FIGURE_PRESETS, reproduce_table, run_power_study, table_ids

logger = logging.getLogger("cli")


def _weights(text: str) -> WeightVector:
    try:
        return WeightVector.model_validate(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(f"invalid weights '{text}': {exc.errors()[0]['msg']}")


def _family(text: str) -> FamilySpec:
    try:
        return parse_family(text)
    except ParameterDomainError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _pairs(text: str) -> List[Tuple[int, int]]:
    pairs = []
    for item in text.split(","):
        try:
            larger, smaller = (int(part) for part in item.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"base relations look like 2:1,3:2, got '{item}'")
        pairs.append((larger, smaller))
    return pairs


def _sizes(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _options(text: str) -> Dict[str, int]:
    options = {}
    for item in text.split(","):
        key, _, value = item.partition("=")
        try:
            options[key.strip()] = int(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected key=value pairs like n=2000,reps=5000, got '{item}'")
    return options


def _emit(lines: Sequence[str]) -> None:
    sys.stdout.write("\n".join(lines) + "\n")


# ============================================================================
# SUBCOMMANDS
# ============================================================================

def cmd_test(args: argparse.Namespace) -> int:
    sample = Sample.from_values(load_sample(args.data))
    cfg = TestConfig(
        alpha=args.alpha,
        method=args.method,
        reps=args.reps,
        seed=args.seed,
        grid=GridSpec(points=args.grid_points),
        budget=settings.enumeration_budget,
        mode=args.mode,
        workers=settings.resolved_workers(args.workers),
    )
    result = run_test(sample, args.theta, args.eta, cfg)
    decision = "reject" if result.reject else "do not reject"
    _emit([
        f"H0: {args.theta} combination >=st {args.eta} combination",
        f"n={sample.n}, method={result.method.value}, evaluator={result.mode.value}",
        f"sqrt(n)T = {result.scaled_statistic:.4f}, critical value = {result.critical_value:.4f}, p = {result.p_value:.4f}",
        f"decision at alpha={result.alpha:g}: {decision}",
        "",
        *result.to_kv(),
    ])
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.config:
        cfg = load_scenario_config(args.config)
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
        if args.grid_points:
            cfg = cfg.model_copy(update={"grid": GridSpec(points=args.grid_points)})
        table = run_power_study(cfg, workers=args.workers)
        scale = None
    else:
        cfg = None
        scale = args.scale
        table = reproduce_table(
            args.table, args.scale, seed=args.seed or 0, workers=args.workers, grid_points=args.grid_points
        )

    if args.out:
        write_power_table(table, args.out)
    else:
        sys.stdout.write(table.to_csv())

    if args.store:
        from db import SessionLocal, init_db
        from db.repository import PowerTableRepository
        from services.simharness import table_config

        init_db()
        with SessionLocal() as session:
            stored_cfg = cfg or table_config(args.table, args.scale, seed=args.seed or 0, grid_points=args.grid_points)
            run = PowerTableRepository(session).save_table(table, stored_cfg, scale)
            logger.info(f"Stored power table as run {run.id}")
    return 0


def cmd_check_class(args: argparse.Namespace) -> int:
    reports = run_checks(args.family, args.property, args.tol)
    lines = [f"family={args.family.label}"]
    for prop, report in reports.items():
        witness = ",".join(f"{value:.6g}" for value in report.witness)
        lines.append(
            f"{prop.value}: holds={str(report.holds).lower()} "
            f"max_violation={report.max_violation:.3e} witness=({witness}) evaluations={report.evaluations}"
        )
    _emit(lines)
    return 0


def cmd_majorize(args: argparse.Namespace) -> int:
    theta, eta = args.theta, args.eta
    order = relation(theta, eta)
    symbols = {"≺": "θ ≺ η", "≻": "θ ≻ η", "=": "θ = η (up to permutation)", "incomparable": "θ and η are incomparable"}
    lines = [f"θ={theta} η={eta}", symbols[order]]
    chain = t_transform_chain(theta, eta)
    if chain is not None:
        lines.append(f"T-transforms taking η to θ: {len(chain)}")
        lines.extend(f"  {step.describe()}" for step in chain)
    if max(theta.dimension, eta.dimension) <= H_SPLIT_MAX_DIMENSION:
        lines.append(f"h_split={str(is_h_split_majorized(theta, eta)).lower()}")
    lines.append(f"relation={order}")
    _emit(lines)
    return 0


def cmd_network(args: argparse.Namespace) -> int:
    edges = dominance_network(args.base, args.max)
    lines = [str(edge) for edge in edges]
    if args.figure:
        found = {(edge.larger, edge.smaller) for edge in edges}
        missing = [f"{a} -> {b}" for a, b in FIGURE_EDGES if (a, b) not in found]
        lines.append(f"figure_edges_missing={len(missing)}" + (f" ({', '.join(missing)})" if missing else ""))
    lines.append(f"edges={len(edges)}")
    _emit(lines)
    return 0


def cmd_curves(args: argparse.Namespace) -> int:
    if args.figure:
        if args.figure not in FIGURE_PRESETS:
            raise UnknownTableError(f"unknown figure '{args.figure}'; valid ids: {', '.join(FIGURE_PRESETS)}")
        source, thetas = FIGURE_PRESETS[args.figure]
    else:
        if args.data:
            source = Sample.from_values(load_sample(args.data))
        elif args.family:
            source = args.family
        else:
            raise ParameterDomainError("curves needs --family, --data or --figure")
        thetas = list(args.theta or [])
        thetas.extend(WeightVector.sample_mean(s) for s in (args.means or []))
        if not thetas:
            raise ParameterDomainError("curves needs at least one --theta or --means")

    points, values = combination_curves(source, thetas, GridSpec(points=args.grid_points))
    columns = {str(theta): column for theta, column in zip(thetas, values)}
    text = format_curves(points, columns)
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_covariance(args: argparse.Namespace) -> int:
    spec = CovarianceSpec(family=args.family, theta=args.theta)
    lines = [f"family={spec.family.label} theta={spec.theta} x={args.x:g} y={args.y:g}"]
    if args.j is not None:
        k = args.k if args.k is not None else args.j
        value = covariance_omega(spec, args.j, k, args.x, args.y, diagonal=args.diagonal)
        lines.append(f"omega_{args.j}{k}={value:.10g}")
    total = total_covariance(spec, args.x, args.y, diagonal=args.diagonal)
    lines.append(f"covariance={total:.10g}")
    if args.oracle is not None:
        options = {"n": 2000, "reps": 5000, **args.oracle}
        estimate, se = empirical_process_covariance(
            spec.family, spec.theta, args.x, args.y,
            n=options["n"], reps=options["reps"], seed=args.seed, workers=args.workers,
        )
        lines.append(f"oracle_estimate={estimate:.10g}")
        lines.append(f"oracle_se={se:.10g}")
        lines.append(f"oracle_z={(total - estimate) / se if se > 0 else 0.0:.4f}")
    _emit(lines)
    return 0


# ============================================================================
# PARSER
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdtest",
        description="Stochastic dominance between linear combinations of i.i.d. variables",
    )
    parser.add_argument("--log-level", default=settings.log_level, help="Logging level (default from SDTEST_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    def workers(p: argparse.ArgumentParser) -> None:
        p.add_argument("--workers", type=int, default=settings.workers, help="Parallel workers, 0 for all cores")

    p = sub.add_parser("test", help="Test H0: theta combination >=st eta combination")
    p.add_argument("--data", required=True, help="Observation file, one value per line")
    p.add_argument("--theta", type=_weights, required=True, help="Weights, e.g. 0.5,0.5")
    p.add_argument("--eta", type=_weights, required=True, help="Weights, e.g. 1")
    p.add_argument("--method", type=TestMethod, choices=list(TestMethod), default=TestMethod.BOOTSTRAP)
    p.add_argument("--alpha", type=float, default=settings.default_alpha)
    p.add_argument("--reps", type=int, default=settings.default_reps, help="Bootstrap or Monte Carlo draws")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", type=EvaluatorMode, choices=list(EvaluatorMode), default=EvaluatorMode.AUTO)
    p.add_argument("--grid-points", type=int, default=settings.grid_points)
    workers(p)
    p.set_defaults(handler=cmd_test)

    p = sub.add_parser("simulate", help="Run a power study")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="ScenarioConfig JSON file")
    source.add_argument("--table", choices=table_ids(), help="Preset table id")
    p.add_argument("--scale", type=float, default=0.5, help="Fraction of the full 1000 x 1000 design")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--grid-points", type=int, default=None)
    p.add_argument("--out", help="Write the CSV table here instead of stdout")
    p.add_argument("--store", action="store_true", help="Also store the table in the results database")
    workers(p)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("check-class", help="Grid check of shape-class membership")
    p.add_argument("--family", type=_family, required=True, help="e.g. pareto-zero(alpha=1)")
    p.add_argument("--property", type=ShapeProperty, choices=list(ShapeProperty), default=None, help="Default: all four")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(handler=cmd_check_class)

    p = sub.add_parser("majorize", help="Majorization relation, T-transform chain and h-split check")
    p.add_argument("theta", type=_weights)
    p.add_argument("eta", type=_weights)
    p.set_defaults(handler=cmd_majorize)

    p = sub.add_parser("network", help="Dominance relations between sample means")
    p.add_argument("--base", type=_pairs, default=[(2, 1), (3, 2)], help="Base relations a:b meaning mean of a >=st mean of b")
    p.add_argument("--max", type=int, default=24, help="Largest sample size")
    p.add_argument("--figure", action="store_true", help="Also report reference arrows (FIGURE_EDGES) that are missing")
    p.set_defaults(handler=cmd_network)

    p = sub.add_parser("curves", help="CDF curves of combinations as CSV")
    p.add_argument("--family", type=_family)
    p.add_argument("--data", help="Observation file (plug-in curves)")
    p.add_argument("--theta", type=_weights, action="append", help="Weights; repeat for several curves")
    p.add_argument("--means", type=_sizes, help="Sample-mean sizes, e.g. 1,2,3,4")
    p.add_argument("--figure", help=f"Preset: {', '.join(FIGURE_PRESETS)}")
    p.add_argument("--grid-points", type=int, default=settings.grid_points)
    p.add_argument("--out", help="Write the CSV here instead of stdout")
    p.set_defaults(handler=cmd_curves)

    p = sub.add_parser("covariance", help="Limit covariance of the plug-in CDF")
    p.add_argument("--family", type=_family, required=True)
    p.add_argument("--theta", type=_weights, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--j", type=int, default=None, help="Also print the single term omega_jk (0-based)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--diagonal", choices=DIAGONAL_FORMS, default="projection")
    p.add_argument("--oracle", type=_options, nargs="?", const={}, default=None, help="Monte Carlo check, e.g. n=2000,reps=5000")
    p.add_argument("--seed", type=int, default=0)
    workers(p)
    p.set_defaults(handler=cmd_covariance)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except DominanceError as exc:
        logger.error(str(exc))
        return exc.exit_code
    except ValidationError as exc:
        logger.error(f"invalid input: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
