"""Compare CUCB-BoB with every fixed power-of-two window it can choose from."""

import argparse
import json

from nscmab.experiments import bob_vs_fixed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--S", type=int, default=8)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--T", type=int, default=20000)
    ap.add_argument("--m", type=int, default=6)
    args = ap.parse_args()
    res = bob_vs_fixed(args.S, args.seeds, args.T, args.m)
    print(json.dumps(res, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
