#!/usr/bin/env python3
"""Run the default benchmark protocol and write per-distribution CSVs.

Equivalent to `dpq bench --config configs/benchmark_default.cfg`; rerunning
with the same config is byte-identical on the CSV outputs.
"""

import argparse
import sys
from pathlib import Path

from dpquantiles import cli

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--config", default=str(ROOT / "configs" / "benchmark_default.cfg")
    )
    parser.add_argument("--output", default=str(ROOT / "results"))
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    return cli.main(
        ["bench", "--config", args.config, "--output", args.output,
         "--workers", str(args.workers)]
    )


if __name__ == "__main__":
    sys.exit(main())
