"""Command line entry point.

Exit codes: 0 success, 1 invalid invocation or input, 2 failure while
running (including benchmark cells that raised).
"""

from __future__ import annotations

import argparse
import csv
import logging
import secrets
import sys
from pathlib import Path

from recgraph.bench import (
    DESK_SCALE,
    builtin_suites,
    export,
    load_scenario,
    run_scenario,
)
from recgraph.datamodel import RatingDataModel
from recgraph.generator import GeneratorParams, generate
from recgraph.graphio import read_graph, write_graph
from recgraph.recommenders import AlgorithmKind, RecommenderConfig, build
from recgraph.similarity import SimilarityKind
from recgraph.stats import STATS_COLUMNS, stats_row, write_stats_csv

log = logging.getLogger("recgraph")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
DEFAULT_SEED = 42


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for runtime failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def seed_value(text: str) -> int:
    if text == "random":
        return secrets.randbits(63)
    try:
        seed = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'random', got {text!r}") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return seed


def _add_generator_flags(p):
    d = GeneratorParams()
    g = p.add_argument_group("generator")
    g.add_argument("--m", type=int, default=d.m, help="initial loose edges")
    g.add_argument("--T", type=int, default=d.T, help="growth iterations")
    g.add_argument("--p", type=float, default=d.p, help="probability that a new node is a user")
    g.add_argument("--u", type=int, default=d.u, help="edges per new user")
    g.add_argument("--v", type=int, default=d.v, help="edges per new item")
    g.add_argument("--alpha", type=float, default=d.alpha, help="preferential share of user edges")
    g.add_argument("--beta", type=float, default=d.beta, help="preferential share of item edges")
    g.add_argument("--b", type=float, default=d.b, help="bounced share of preferential edges")
    g.add_argument("--holdout-steps", type=int, default=d.holdout_steps, help="extra iterations for the update set")


def _add_recommender_flags(p):
    d = RecommenderConfig()
    g = p.add_argument_group("recommender")
    g.add_argument("--algo", choices=[k.value for k in AlgorithmKind], default=d.algorithm.value, help="algorithm")
    g.add_argument(
        "--similarity", choices=[k.value for k in SimilarityKind], default=d.similarity.value,
        help="similarity for the neighborhood algorithms",
    )
    g.add_argument("--neighborhood", type=int, default=d.neighborhood_size, help="UserBased neighborhood size")
    g.add_argument("--threshold", type=float, default=None, help="similarity cutoff, required by userthreshold")
    g.add_argument("--knn-k", type=int, default=d.k, help="neighbors used by knnitem")
    g.add_argument("--factors", type=int, default=d.factors, help="SVD latent factors")
    g.add_argument("--iterations", type=int, default=d.training_iterations, help="SVD training epochs")
    g.add_argument("--top-n", type=int, default=d.top_n, help="length of the recommendation list")


def _seed_flag(p):
    p.add_argument(
        "--seed", type=seed_value, default=DEFAULT_SEED,
        help="RNG seed, or 'random' for a fresh one (printed to stderr)",
    )


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="recgraph", description="Random rating bigraphs and recommender benchmarks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="generate a graph file", formatter_class=fmt)
    _add_generator_flags(p)
    _seed_flag(p)
    p.add_argument("--out", type=Path, default=Path("graph.tsv"), help="graph file to write")

    p = sub.add_parser("stats", help="structural summary of graph files", formatter_class=fmt)
    p.add_argument("graphs", nargs="+", type=Path)
    p.add_argument("--out", type=Path, help="also write the CSV here")

    p = sub.add_parser("recommend", help="top-N list for one user", formatter_class=fmt)
    p.add_argument("graph", type=Path)
    p.add_argument("--user", type=int, required=True)
    _add_recommender_flags(p)
    _seed_flag(p)

    p = sub.add_parser("bench", help="run benchmark scenarios", formatter_class=fmt)
    bench_sub = p.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    suite = bench_sub.add_parser("suite", help="a built-in suite", formatter_class=fmt)
    suite.add_argument("name", choices=sorted(builtin_suites()))
    scale = suite.add_mutually_exclusive_group()
    scale.add_argument("--scale", type=float, default=DESK_SCALE, help="T = 10000 * scale")
    scale.add_argument("--paper-scale", action="store_true", help="same as --scale 1")
    _seed_flag(suite)
    custom = bench_sub.add_parser("custom", help="a scenario file (TOML)", formatter_class=fmt)
    custom.add_argument("file", type=Path)
    for q in (suite, custom):
        q.add_argument("--out", type=Path, default=Path("bench-out"))
        q.add_argument("--sequential", action="store_true", help="run cells one at a time")
        q.add_argument("--workers", type=int, default=None, help="thread pool size")
        q.add_argument("--reps", type=int, default=None, help="override repetitions")
        q.add_argument("--latency-sample", type=int, default=None, help="override users timed per cell")
        q.add_argument("--warmup", type=int, default=None, help="untimed recommend calls per cell")
        q.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
    return parser


def cmd_generate(args) -> int:
    params = GeneratorParams(
        m=args.m, T=args.T, p=args.p, u=args.u, v=args.v, alpha=args.alpha, beta=args.beta,
        b=args.b, seed=args.seed, holdout_steps=args.holdout_steps,
    )
    graph = generate(params)
    write_graph(graph, args.out)
    _print_rows([stats_row(str(args.out), graph)])
    return EXIT_OK


def _print_rows(rows):
    writer = csv.DictWriter(sys.stdout, fieldnames=STATS_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def _load(path: Path):
    if not path.is_file():
        raise UsageError(f"no such graph file: {path}")
    return read_graph(path)


def cmd_stats(args) -> int:
    rows = [stats_row(str(path), _load(path)) for path in args.graphs]
    _print_rows(rows)
    if args.out:
        write_stats_csv(rows, args.out)
    return EXIT_OK


def cmd_recommend(args) -> int:
    config = RecommenderConfig(
        algorithm=args.algo, similarity=args.similarity, neighborhood_size=args.neighborhood,
        threshold=args.threshold, k=args.knn_k, factors=args.factors,
        training_iterations=args.iterations, top_n=args.top_n, seed=args.seed,
    )
    graph = _load(args.graph)
    model = build(config, RatingDataModel.from_graph(graph))
    result = model.recommend(args.user)
    if not result.known_user:
        log.warning("user %d has no ratings; empty recommendation", args.user)
    for item, score in result.items:
        print(f"{item}\t{score!r}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.mode == "suite":
        scale = 1.0 if args.paper_scale else args.scale
        if scale <= 0:
            raise UsageError("--scale must be positive")
        scenario = builtin_suites(scale=scale, seed=args.seed)[args.name]
    else:
        if not args.file.is_file():
            raise UsageError(f"no such scenario file: {args.file}")
        scenario = load_scenario(args.file)
    if args.reps is not None:
        scenario.repetitions = args.reps
    if args.latency_sample is not None:
        scenario.latency_sample_size = args.latency_sample
    if args.warmup is not None:
        scenario.warmup = args.warmup
    if args.workers is not None and args.workers < 1:
        raise UsageError("--workers must be >= 1")
    scenario.validate()
    records = run_scenario(scenario, args.out, sequential=args.sequential, workers=args.workers)
    paths = export(records, args.out, scenario, figures=not args.no_figures)
    failed = sum(1 for r in records if r.error)
    print(f"{len(records)} records -> {paths['records']}")
    print(f"aggregate -> {paths['aggregate']}")
    if failed:
        log.error("%d of %d cells failed, see %s", failed, len(records), paths["failures"])
        return EXIT_RUNTIME
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "stats": cmd_stats,
    "recommend": cmd_recommend,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error
        return exc.code
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
        force=True,
    )
    if getattr(args, "seed", DEFAULT_SEED) != DEFAULT_SEED:
        print(f"seed: {args.seed}", file=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        # parameter, config, scenario and graph-format errors are ValueErrors
        print(f"recgraph: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"recgraph: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
