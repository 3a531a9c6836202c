"""Command-line front end: select, diagnose, partition.

Exit codes: 0 success, 1 validation errors, 2 I/O or format errors.
The SAS_LOG environment variable (error, info, debug) sets log verbosity;
logs go to stderr, result summaries to stdout.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from . import io as sio
from .diagnostics import diagnose_document
from .partition import DEFAULT_KMEANS_ITERS, DEFAULT_KMEANS_TOL, kmeans_partition, partition_from_labels
from .submodular import select_all
from .types import FormatError, SelectionConfig, ValidationError

__all__ = ["main", "entry"]

log = logging.getLogger(__name__)

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    # usage problems are argument validation, exit code 1
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sase", description="Per-class subset selection over embedding dumps.")
    sub = parser.add_subparsers(dest="command", required=True)

    sel = sub.add_parser("select", help="select a subset and write a report")
    sel.add_argument("--embeddings", required=True, help="SASE embedding file")
    sel.add_argument("--labels", help="label file, one integer per line")
    sel.add_argument("--kmeans", type=int, metavar="K", help="cluster into K latent classes")
    sel.add_argument("--budget-fraction", type=float, help="fraction of examples to keep, in (0, 1]")
    sel.add_argument("--budget-total", type=int, help="absolute number of examples to keep")
    sel.add_argument("--tau", type=float, default=0.0, help="similarity threshold (default 0.0)")
    sel.add_argument(
        "--refine",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="double-greedy refinement (default on)",
    )
    sel.add_argument(
        "--normalize",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="L2-normalize view vectors first (default on)",
    )
    sel.add_argument("--seed", type=int, default=0, help="seed for clustering and baselines")
    sel.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    sel.add_argument("--baseline-count", type=int, default=20, help="random baselines per class")
    sel.add_argument("--out", required=True, help="report path")

    diag = sub.add_parser("diagnose", help="recompute diagnostics for an existing report")
    diag.add_argument("--report", required=True, help="report produced by select")
    diag.add_argument("--embeddings", required=True, help="the same SASE file the report used")
    diag.add_argument("--labels", help="label file, required when the report used one")
    diag.add_argument("--baseline-count", type=int, default=None, help="override the report's count")
    diag.add_argument("--out", required=True, help="diagnostics path")

    part = sub.add_parser("partition", help="cluster embeddings and write a label file")
    part.add_argument("--embeddings", required=True, help="SASE embedding file")
    part.add_argument("--kmeans", type=int, required=True, metavar="K", help="number of clusters")
    part.add_argument("--seed", type=int, default=0)
    part.add_argument("--iters", type=int, default=DEFAULT_KMEANS_ITERS)
    part.add_argument("--tol", type=float, default=DEFAULT_KMEANS_TOL)
    part.add_argument(
        "--normalize",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="L2-normalize view vectors first (default on)",
    )
    part.add_argument("--out", required=True, help="label file path")
    return parser


def cmd_select(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    if args.labels is None and args.kmeans is None:
        raise ValidationError("partition source required: pass --labels or --kmeans")
    if args.labels is not None and args.kmeans is not None:
        raise ValidationError("pass only one of --labels / --kmeans")

    embeddings = sio.read_embeddings(args.embeddings)
    config = SelectionConfig(
        budget_fraction=args.budget_fraction,
        budget_total=args.budget_total,
        tau=args.tau,
        refine=args.refine,
        normalize=args.normalize,
        seed=args.seed,
        kmeans_K=args.kmeans,
        baseline_count=args.baseline_count,
        threads=args.threads,
    )
    if args.labels is not None:
        labels = sio.read_labels(args.labels)
        partition = partition_from_labels(labels, expected_n=embeddings.n)
        source = "labels"
    else:
        base = embeddings.normalize() if config.normalize else embeddings
        partition = kmeans_partition(base, args.kmeans, seed=config.seed)
        source = "kmeans"
    log.info("partition: %d classes over %d examples (%s)", partition.K, embeddings.n, source)

    result = select_all(embeddings, partition, config, partition_source=source)
    sio.write_report(result, args.out)
    wall = time.perf_counter() - started
    print(f"selected {result.total_selected}/{embeddings.n} examples in {wall:.2f}s")
    return 0


def cmd_diagnose(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    report = sio.read_report(args.report)
    embeddings = sio.read_embeddings(args.embeddings)
    labels = sio.read_labels(args.labels) if args.labels is not None else None
    document = diagnose_document(
        embeddings, report, labels=labels, baseline_count=args.baseline_count
    )
    Path(args.out).write_text(sio.canonical_json(document), encoding="utf-8")
    wall = time.perf_counter() - started
    print(f"diagnosed {len(document['classes'])} classes in {wall:.2f}s")
    return 0


def cmd_partition(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    embeddings = sio.read_embeddings(args.embeddings)
    base = embeddings.normalize() if args.normalize else embeddings
    partition = kmeans_partition(base, args.kmeans, seed=args.seed, iters=args.iters, tol=args.tol)
    sio.write_labels(partition.assignments, args.out)
    wall = time.perf_counter() - started
    print(f"partitioned {embeddings.n} examples into {partition.K} classes in {wall:.2f}s")
    return 0


def _configure_logging() -> None:
    raw = os.environ.get("SAS_LOG", "error").strip().lower()
    if raw not in _LOG_LEVELS:
        raise ValidationError(f"SAS_LOG must be one of {sorted(_LOG_LEVELS)}, got {raw!r}")
    logging.basicConfig(
        stream=sys.stderr,
        level=_LOG_LEVELS[raw],
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv: list[str] | None = None) -> int:
    try:
        _configure_logging()
        args = _build_parser().parse_args(argv)
        handler = {"select": cmd_select, "diagnose": cmd_diagnose, "partition": cmd_partition}
        return handler[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
