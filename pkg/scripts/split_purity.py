"""How cleanly the top-down root split separates the two-class binary data.

For each dimension M the root of a top-down tree is split once and the
fraction of each class landing in its own child is reported. With half-prob
noise columns outnumbering the informative ones four to one, the split
direction picks up a lot of noise, so purity stays well below 1.

    python scripts/split_purity.py --R 20000 --Ms 100 1000 --seeds 5
"""

import argparse
import statistics

import numpy as np

from anchortree.datagen import gen_two_class_binary
from anchortree.metricspace import DistanceCounter
from anchortree.tree import BuildConfig, build_top_down


def purity(R: int, M: int, seed: int) -> float:
    g = gen_two_class_binary(R, M, seed)
    root = build_top_down(g.data, np.arange(R), BuildConfig(r_min=R - 1, builder="top_down"), DistanceCounter())
    left = np.zeros(R, dtype=bool)
    left[root.left.indices] = True
    a, b = left[g.labels == 0].mean(), left[g.labels == 1].mean()
    return max(min(a, 1 - b), min(1 - a, b))


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--R", type=int, default=20_000)
    p.add_argument("--Ms", type=int, nargs="+", default=[100, 1000])
    p.add_argument("--seeds", type=int, default=5)
    args = p.parse_args()
    print("M\tmedian_purity\tper_seed")
    for M in args.Ms:
        vals = [purity(args.R, M, s) for s in range(args.seeds)]
        print(f"{M}\t{statistics.median(vals):.3f}\t{','.join(f'{v:.3f}' for v in vals)}")


if __name__ == "__main__":
    main()
