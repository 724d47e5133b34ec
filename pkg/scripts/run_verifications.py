#!/usr/bin/env python3
"""Run every statistical verification suite and print a summary.

Exits nonzero if any suite fails; pass --output to keep the JSON report.
"""

import argparse
import sys

from dpquantiles import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--trials", type=int, default=20000)
    parser.add_argument("--output")
    args = parser.parse_args()
    argv = ["verify", "all", "--seed", str(args.seed), "--trials", str(args.trials)]
    if args.output:
        argv += ["--output", args.output]
    return cli.main(argv)


if __name__ == "__main__":
    sys.exit(main())
