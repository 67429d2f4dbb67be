"""Command-line entry point: ``anchortree <command> [options]``.

Exit codes: 0 success, 1 usage or I/O error, 2 regular/fast mismatch.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import datagen
from .experiments import (
    BUILDER_NAMES,
    ExperimentConfig,
    MismatchError,
    compare_builders,
    compare_inits,
    format_json,
    format_tsv,
    run_experiment,
)
from .metricspace import CSVFormatError, Dataset, read_csv
from .tree import BuildConfig, build_tree, tree_stats_rows

log = logging.getLogger("anchortree")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit 2, which means mismatch here
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, needs_input: bool = True) -> None:
    if needs_input:
        p.add_argument("--input", required=True, help="CSV of points (optional header row)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--builder", choices=sorted(BUILDER_NAMES), default="anchors")
    p.add_argument("--rmin", type=int, default=30, help="leaf size threshold")
    p.add_argument("--bound-radius", action="store_true",
                   help="keep merge-node radii as upper bounds instead of exact")
    p.add_argument("--report", choices=["tsv", "json"], default="tsv")
    p.add_argument("--fold-build-cost", action="store_true",
                   help="add tree construction distances to the fast count")
    p.add_argument("--threads", type=int, default=1)


def _kmeans_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("-K", "--K", type=int, default=3)
    p.add_argument("--init", choices=["random", "anchors"], default="random")
    p.add_argument("--max-iters", type=int, default=50)


def _anomaly_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--range", type=float, required=True, dest="range_")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--threshold", type=int)
    g.add_argument("--calibrate", type=float, metavar="FRACTION",
                   help="pick the threshold so about FRACTION of sampled points are anomalous")
    p.add_argument("--queries", help="CSV of query points (default: every dataset point)")
    p.add_argument("--verdicts", help="write per-query verdict TSV here")


def _allpairs_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho-min", type=float, default=0.5)
    p.add_argument("--pairs", help="write (i, j, rho) TSV here, by descending rho")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="anchortree", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--kind", required=True,
                   choices=["squiggles", "filaments", "sparse_mixture", "two_class_binary"])
    p.add_argument("-R", "--R", type=int, required=True)
    p.add_argument("-M", "--M", type=int, default=2)
    p.add_argument("-k", "--k", type=int, default=1)
    p.add_argument("--sparsity", type=float, default=0.1)
    p.add_argument("--flip", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="CSV path; labels go to <output>.labels")

    p = sub.add_parser("build", help="build a tree and dump per-node statistics as TSV")
    _common(p)
    p.add_argument("--output", help="TSV path (default stdout)")

    p = sub.add_parser("kmeans", help="regular vs fast K-means")
    _common(p)
    _kmeans_args(p)

    p = sub.add_parser("anomaly", help="regular vs fast range-count anomaly detection")
    _common(p)
    _anomaly_args(p)

    p = sub.add_parser("allpairs", help="regular vs fast correlated attribute pairs")
    _common(p)
    _allpairs_args(p)

    p = sub.add_parser("compare-builders", help="anchors-built vs top-down-built tree")
    _common(p)
    p.add_argument("--algorithm", choices=["kmeans", "anomaly", "allpairs"], default="kmeans")
    _kmeans_args(p)
    p.add_argument("--range", type=float, dest="range_")
    p.add_argument("--threshold", type=int)
    p.add_argument("--calibrate", type=float, metavar="FRACTION")
    p.add_argument("--rho-min", type=float, default=0.5)

    p = sub.add_parser("compare-inits", help="random vs anchors K-means initialisation")
    _common(p)
    p.add_argument("-K", "--K", type=int, default=3)
    p.add_argument("--iters", type=int, default=50)
    return parser


def _load(path: str) -> Dataset:
    return Dataset(read_csv(path))


def _config(args, algorithm: str) -> ExperimentConfig:
    data = _load(args.input)
    cfg = ExperimentConfig(
        algorithm=algorithm,
        data=data,
        dataset=Path(args.input).stem,
        builder=args.builder,
        r_min=args.rmin,
        seed=args.seed,
        exact_radius=not args.bound_radius,
        fold_build_cost=args.fold_build_cost,
        threads=args.threads,
    )
    if hasattr(args, "K"):
        cfg.K = args.K
    if hasattr(args, "init"):
        cfg.init = args.init
        cfg.max_iters = args.max_iters
    if getattr(args, "range_", None) is not None:
        cfg.range = args.range_
    if getattr(args, "threshold", None) is not None:
        cfg.threshold = args.threshold
    if getattr(args, "calibrate", None) is not None:
        cfg.calibrate_fraction = args.calibrate
    if getattr(args, "queries", None):
        cfg.queries = read_csv(args.queries)
    if hasattr(args, "rho_min"):
        cfg.rho_min = args.rho_min
    return cfg


def _emit(args, rows: list[dict]) -> None:
    out = format_json(rows) if args.report == "json" else format_tsv(rows)
    sys.stdout.write(out)


def _cmd_gen(args) -> None:
    spec = datagen.GenSpec(kind=args.kind, R=args.R, M=args.M, k=args.k, seed=args.seed,
                           sparsity=args.sparsity, flip=args.flip)
    g = datagen.generate(spec)
    g.data.to_csv(args.output)
    np.savetxt(args.output + ".labels", g.labels, fmt="%d")
    log.info("wrote %d x %d points to %s", g.data.R, g.data.M, args.output)


def _cmd_build(args) -> None:
    data = _load(args.input)
    cfg = BuildConfig(r_min=args.rmin, builder=BUILDER_NAMES[args.builder], seed=args.seed,
                      exact_radius=not args.bound_radius)
    tree = build_tree(data, cfg)
    lines = ["node_id\tdepth\tcount\tradius\tleaf"]
    lines += [f"{i}\t{d}\t{c}\t{r!r}\t{int(leaf)}" for i, d, c, r, leaf in tree_stats_rows(tree.root)]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"build_distance_count\t{tree.build_distance_count}", file=sys.stderr)


def _cmd_experiment(args, algorithm: str) -> None:
    cfg = _config(args, algorithm)
    res = run_experiment(cfg)
    if algorithm == "kmeans":
        for i, d in enumerate(res.fast.distortions):
            print(f"iteration\t{i}\tdistortion\t{d!r}", file=sys.stderr)
    elif algorithm == "anomaly" and args.verdicts:
        with open(args.verdicts, "w") as fh:
            fh.write("query\tanomaly\n")
            for i, v in enumerate(res.fast.tolist()):
                fh.write(f"{i}\t{int(v)}\n")
    elif algorithm == "allpairs" and args.pairs:
        with open(args.pairs, "w") as fh:
            fh.write("i\tj\trho\n")
            for i, j, r in res.fast.sorted_rows():
                fh.write(f"{i}\t{j}\t{r!r}\n")
    _emit(args, [res.report.as_dict() if args.report == "json" else res.report.flat()])


def _cmd_compare_builders(args) -> None:
    cfg = _config(args, args.algorithm)
    cmp = compare_builders(cfg)
    if args.report == "json":
        _emit(args, [{"anchors": cmp.anchors.as_dict(), "topdown": cmp.topdown.as_dict(),
                      "ratio_topdown_over_anchors": cmp.ratio}])
    else:
        _emit(args, cmp.rows())


def _cmd_compare_inits(args) -> None:
    data = _load(args.input)
    build = BuildConfig(r_min=args.rmin, builder=BUILDER_NAMES[args.builder], seed=args.seed,
                        exact_radius=not args.bound_radius)
    res = compare_inits(data, args.K, seed=args.seed, iters=args.iters,
                        dataset=Path(args.input).stem, build=build)
    _emit(args, [res.row()])


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("anchortree: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        if args.command == "gen":
            _cmd_gen(args)
        elif args.command == "build":
            _cmd_build(args)
        elif args.command in ("kmeans", "anomaly", "allpairs"):
            _cmd_experiment(args, args.command)
        elif args.command == "compare-builders":
            _cmd_compare_builders(args)
        elif args.command == "compare-inits":
            _cmd_compare_inits(args)
    except MismatchError as exc:
        print(f"anchortree: regular/fast mismatch: {exc}", file=sys.stderr)
        return 2
    except (OSError, CSVFormatError, ValueError) as exc:
        print(f"anchortree: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
