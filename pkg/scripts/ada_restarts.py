"""Ada-LCMAB restart rates on a single mean flip and on its stationary twin.

Threshold coefficients can be overridden to see how far they sit from the
detection regime, e.g. ``--replay-coef 1 --block-coef 1``.
"""

import argparse
import json

from nscmab.experiments import ada_restarts


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--T", type=int, default=8192)
    ap.add_argument("--L-max", type=int, default=64)
    ap.add_argument("--replay-coef", type=float)
    ap.add_argument("--block-coef", type=float)
    args = ap.parse_args()
    over = {k: v for k, v in (("replay_coef", args.replay_coef), ("block_coef", args.block_coef)) if v is not None}
    res = ada_restarts(args.seeds, args.T, args.L_max, over or None)
    print(json.dumps(res, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
