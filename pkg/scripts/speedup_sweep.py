"""Distance counts for regular vs tree-accelerated runs across datasets and K.

    python scripts/speedup_sweep.py --R 20000 --ks 3 20 100
"""

import argparse
import sys

from anchortree.datagen import gen_filaments, gen_sparse_mixture, gen_squiggles
from anchortree.experiments import ExperimentConfig, format_tsv, run_experiment


def datasets(R: int, seed: int):
    yield "squiggles", gen_squiggles(R, seed).data
    yield "filaments", gen_filaments(R, seed).data
    yield "mix-M100-k20", gen_sparse_mixture(R, 100, 20, seed).data


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--R", type=int, default=20_000)
    p.add_argument("--ks", type=int, nargs="+", default=[3, 20, 100])
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--builder", choices=["anchors", "topdown"], default="anchors")
    p.add_argument("--anomaly-fraction", type=float, default=0.1,
                   help="calibrate anomaly thresholds to flag about this fraction of points")
    args = p.parse_args()

    rows = []
    for name, data in datasets(args.R, args.seed):
        for K in args.ks:
            cfg = ExperimentConfig("kmeans", data, dataset=name, builder=args.builder,
                                   seed=args.seed, K=K, max_iters=args.iters)
            rows.append(run_experiment(cfg).report.flat())
            print(f"{name} K={K}: speedup {rows[-1]['speedup']:.1f}", file=sys.stderr)
        # range: a tenth of the typical spread per coordinate
        spread = float(data.points.std(axis=0).mean())
        cfg = ExperimentConfig("anomaly", data, dataset=name, builder=args.builder, seed=args.seed,
                               range=0.1 * spread, calibrate_fraction=args.anomaly_fraction)
        rows.append(run_experiment(cfg).report.flat())
        print(f"{name} anomaly: speedup {rows[-1]['speedup']:.1f}", file=sys.stderr)
    sys.stdout.write(format_tsv(rows))


if __name__ == "__main__":
    main()
