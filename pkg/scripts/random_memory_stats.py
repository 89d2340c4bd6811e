"""Memory saved by the reduction passes over the per-node baseline on random networks."""
import argparse

import numpy as np

from sgnc.memplace import algorithm2, wzy_baseline
from sgnc.randnet import random_valid_network


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--max-nodes", type=int, default=10)
    ap.add_argument("--fixed-point", action="store_true")
    args = ap.parse_args()

    saved, ratio = [], []
    for seed in range(args.count):
        net = random_valid_network(seed, args.max_nodes)
        base = wzy_baseline(net).total_memory
        ours = algorithm2(net, fixed_point=args.fixed_point).total_memory
        saved.append(base - ours)
        if base:
            ratio.append(ours / base)
    saved = np.array(saved)
    print(f"{args.count} networks: mean saving {saved.mean():.2f}, max {saved.max()}, "
          f"strictly better in {np.count_nonzero(saved > 0)}, mean ratio {np.mean(ratio):.3f}")


if __name__ == "__main__":
    main()
