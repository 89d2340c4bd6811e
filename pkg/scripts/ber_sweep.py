"""BER sweep on the modified butterfly for C1-C3, both placement modes.

    python3 scripts/ber_sweep.py --steps 1000000 --seed 2024 --out ber.csv

Thread count follows NETGEN_THREADS (default: all cores).
"""
import argparse
import time

import numpy as np

from sgnc import data_path
from sgnc.cnecc import load_code
from sgnc.errsim import run_sweep, write_csv
from sgnc.netmodel import load_network


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--net", default=str(data_path("butterfly.net")))
    ap.add_argument("--codes", default="C1,C2,C3")
    ap.add_argument("--p-list", default="0.02,0.05,0.1")
    ap.add_argument("--steps", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", default="ber.csv")
    args = ap.parse_args()

    net = load_network(args.net)
    codes = [load_code(data_path(f"{c}.code")) for c in args.codes.split(",")]
    p_list = [float(p) for p in args.p_list.split(",")]
    t0 = time.perf_counter()
    recs = run_sweep(net, codes, p_list, time_steps=args.steps, seed=args.seed)
    write_csv(recs, args.out)
    print(f"{len(recs)} cells in {time.perf_counter() - t0:.1f} s -> {args.out}")

    by_key = {(r.sink, r.code, r.p, r.mode): r for r in recs}
    print(f"{'sink':<5}{'code':<5}{'p':>6}  {'nomem':>10}  {'mem':>10}  {'diff/sigma':>10}")
    for t in net.sinks:
        for c in codes:
            for p in p_list:
                a, b = by_key[(t, c.name, p, "nomem")], by_key[(t, c.name, p, "mem")]
                sig = float(np.hypot(a.sigma, b.sigma))
                z = (b.ber - a.ber) / sig if sig else 0.0
                print(f"{t:<5}{c.name:<5}{p:>6g}  {a.ber:>10.3e}  {b.ber:>10.3e}  {z:>+10.2f}")


if __name__ == "__main__":
    main()
