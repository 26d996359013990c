"""Final regret of tuned CUCB-SW as the switching number grows.

Prints the mean regret per switching number, the log-log slope, and the
ratio against a window spanning the whole horizon.
"""

import argparse
import json

from nscmab.experiments import cucb_sw_scaling


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--S", type=int, nargs="+", default=[2, 8, 32], help="switching numbers")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--T", type=int, default=20000)
    ap.add_argument("--m", type=int, default=6)
    args = ap.parse_args()
    res = cucb_sw_scaling(tuple(args.S), args.seeds, args.T, args.m)
    print(json.dumps(res, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
