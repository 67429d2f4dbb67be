"""Fast K-means distance counts on anchors-built vs top-down-built trees.

Prints one row per seed and the median ratio (top-down count / anchors count).

    python scripts/builder_comparison.py --R 20000 --M 100 --components 20 --K 20
"""

import argparse
import statistics

from anchortree.datagen import gen_sparse_mixture
from anchortree.experiments import ExperimentConfig, compare_builders


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--R", type=int, default=20_000)
    p.add_argument("--M", type=int, default=100)
    p.add_argument("--components", type=int, default=20)
    p.add_argument("--K", type=int, default=20)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--bound-radius", action="store_true", help="skip the exact-radius pass")
    args = p.parse_args()

    ratios = []
    print("seed\tanchors_fast\ttopdown_fast\tratio")
    for seed in range(args.seeds):
        data = gen_sparse_mixture(args.R, args.M, args.components, seed).data
        cfg = ExperimentConfig("kmeans", data, seed=seed, K=args.K, exact_radius=not args.bound_radius)
        cmp = compare_builders(cfg)
        ratios.append(cmp.ratio)
        print(f"{seed}\t{cmp.anchors.fast_distance_count}\t{cmp.topdown.fast_distance_count}\t{cmp.ratio:.3f}")
    print(f"median\t\t\t{statistics.median(ratios):.3f}")


if __name__ == "__main__":
    main()
