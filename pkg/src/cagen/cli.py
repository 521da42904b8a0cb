"""Command-line entry point: ``cagen {solve,verify,analyze,oracle,greedy}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .baselines import exact_can_oracle, greedy_construct
from .colgen import CGConfig, CGEvent, run_column_generation
from .errors import CAError
from .formats import parse_instance, parse_suite, suite_to_csv, suite_to_json
from .model import interaction_from_index, verify_covering_array
from .report import analyze

log = logging.getLogger("cagen")

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load_instance(args):
    return parse_instance(_read(args.instance), strength=args.strength)


def _emit(args, text: str):
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _write_suite(args, instance, tests, stats=None):
    verdict = verify_covering_array(instance, tests)
    if not verdict:
        raise CAError(f"internal error: emitted suite leaves {len(verdict.uncovered)} interactions uncovered")
    if args.format == "csv":
        _emit(args, suite_to_csv(instance, tests))
    else:
        _emit(args, suite_to_json(instance, tests, analyze(instance, tests).to_dict(), stats))


def _describe(instance, index: int) -> str:
    inter = interaction_from_index(instance, index)
    return ", ".join(
        f"{instance.param_label(p)}={instance.value_label(p, v)}"
        for p, v in zip(inter.combination, inter.values)
    )


def cmd_solve(args) -> int:
    instance = _load_instance(args)
    config = CGConfig(
        time_limit_seconds=args.time_limit,
        columns_per_iteration=args.columns_per_iter,
        warm_start="none" if args.no_warm_start else "greedy",
        seed=args.seed,
        enrich_pool=args.enrich,
    )

    def progress(ev: CGEvent):
        log.info("iter %4d  lp %.6f  pricing %.6f  pool %d  %.2fs",
                 ev.iteration, ev.lp_objective, ev.pricing_objective, ev.pool_size, ev.elapsed)

    result = run_column_generation(instance, config, on_event=progress)
    log.info("suite size %d, LP bound %.6f, %s, %.2fs", result.ip_objective, result.lp_bound,
             "optimal" if result.optimal else "not proven optimal", result.wall_time)
    # no timings here: identical inputs must give a byte-identical file
    stats = {
        "ip_objective": result.ip_objective,
        "lp_bound": round(result.lp_bound, 9),
        "lp_optimal": result.lp_optimal,
        "optimal": result.optimal,
        "lower_bound": result.lower_bound,
        "iterations": result.iterations,
        "columns_generated": result.columns_generated,
        "greedy_size": result.greedy_size,
    }
    _write_suite(args, instance, result.tests, stats)
    return EXIT_OK


def cmd_greedy(args) -> int:
    instance = _load_instance(args)
    result = greedy_construct(instance, args.seed)
    _write_suite(args, instance, result.tests, {"per_test_new_coverage": result.per_test_new_coverage})
    return EXIT_OK


def cmd_oracle(args) -> int:
    instance = _load_instance(args)
    result = exact_can_oracle(instance, cap=args.cap)
    if not result.solved:
        print(f"CAN unknown: no cover with at most {args.cap} rows (lower bound {result.lower_bound})")
        return EXIT_INVALID
    print(f"CAN = {result.can}")
    _write_suite(args, instance, result.witness, {"can": result.can, "nodes": result.nodes})
    return EXIT_OK


def cmd_verify(args) -> int:
    instance = _load_instance(args)
    tests = parse_suite(_read(args.suite), instance)
    verdict = verify_covering_array(instance, tests)
    if verdict:
        print(f"OK: {len(tests)} tests cover all required {instance.strength}-wise interactions")
        return EXIT_OK
    print(f"FAIL: {len(verdict.uncovered)} interactions uncovered")
    for p in verdict.uncovered:
        print(f"  [{p}] {_describe(instance, p)}")
    return EXIT_INVALID


def cmd_analyze(args) -> int:
    instance = _load_instance(args)
    tests = parse_suite(_read(args.suite), instance)
    report = analyze(instance, tests)
    if not report.covering:
        log.warning("suite is not a covering array; cumulative coverage stops at %.2f%%",
                    report.cumulative_pct[-1] if report.cumulative_pct else 0.0)
    if report.redundant_tests:
        log.warning("tests adding no coverage: %s", report.redundant_tests)
    _emit(args, json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cagen", description="Covering arrays by column generation.")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output=True):
        p.add_argument("instance", help="instance JSON file ('-' for stdin)")
        p.add_argument("--strength", type=int, default=None, help="override the document's strength")
        if output:
            p.add_argument("--format", choices=("json", "csv"), default="json")
            p.add_argument("--output", default=None, help="write here instead of stdout")

    p = sub.add_parser("solve", help="column generation + integer finalization")
    common(p)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-warm-start", action="store_true")
    p.add_argument("--columns-per-iter", type=int, default=1)
    p.add_argument("--enrich", action="store_true",
                   help="add every column that could enter a smaller cover before the IP")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("greedy", help="greedy baseline only")
    common(p)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_greedy)

    p = sub.add_parser("oracle", help="exact CAN for tiny instances")
    common(p)
    p.add_argument("--cap", type=int, default=16)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="check a suite file")
    common(p, output=False)
    p.add_argument("suite", help="suite file (JSON or CSV)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="coverage contribution report")
    common(p, output=False)
    p.add_argument("suite", help="suite file (JSON or CSV)")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_analyze)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cagen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CAError as exc:
        print(f"cagen: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run_cli())
