"""Heater association benchmark over several seeds."""
import argparse
import time

from loadsig import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    args = ap.parse_args()
    for seed in args.seeds:
        t0 = time.perf_counter()
        res = bench.run_heater_bench(seed)
        print(f"seed {seed}")
        print(bench.format_bench(res))
        print(f"{'PASS' if res.passed else 'FAIL'} in {time.perf_counter() - t0:.2f} s\n")


if __name__ == "__main__":
    main()
