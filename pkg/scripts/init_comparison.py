"""Distortion before and after K-means from random vs anchors starting centroids.

    python scripts/init_comparison.py --R 20000 --ks 3 20
"""

import argparse
import statistics
import sys

from anchortree.datagen import gen_sparse_mixture, gen_squiggles
from anchortree.experiments import compare_inits, format_tsv


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--R", type=int, default=20_000)
    p.add_argument("--ks", type=int, nargs="+", default=[3, 20])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--iters", type=int, default=50)
    args = p.parse_args()

    makers = {
        "squiggles": lambda s: gen_squiggles(args.R, s).data,
        "mix-M100-k20": lambda s: gen_sparse_mixture(args.R, 100, 20, s).data,
    }
    rows = []
    for name, make in makers.items():
        for K in args.ks:
            runs = [compare_inits(make(s), K, seed=s, iters=args.iters, dataset=name) for s in range(args.seeds)]
            med = {k: statistics.median(r.row()[k] for r in runs)
                   for k in ("random_start", "anchors_start", "random_end", "anchors_end")}
            rows.append({"dataset": name, "K": K, **med,
                         "start_benefit": med["random_start"] / med["anchors_start"],
                         "end_benefit": med["random_end"] / med["anchors_end"]})
    sys.stdout.write(format_tsv(rows))


if __name__ == "__main__":
    main()
