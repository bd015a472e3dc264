#!/usr/bin/env python3
"""Full-scale synthetic recovery study (not part of the test suite).

Completes a 20x20x20x20 ring tensor of bond dimension 8 over a range of
observation ratios, several repeats each, and writes the usual sweep outputs
(record.json, runs.csv, sweep.png). Expect minutes to hours depending on
repeats; the desk-scale equivalent gates the test suite instead.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

from trcomplete.cli import main as cli_main


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--ratios", default="0.1,0.15,0.2,0.3,0.4,0.5",
                   help="comma-separated observation ratios")
    p.add_argument("--rank", type=int, default=8)
    p.add_argument("--dims", default="20,20,20,20")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="full_scale_out")
    return p.parse_args()


def main():
    args = parse_args()
    spec = {
        "source": {"synthetic": {
            "dims": [int(d) for d in args.dims.split(",")],
            "rank": args.rank,
            "seed": args.seed,
        }},
        "rank": args.rank,
        "sweep": {"ratio": [float(r) for r in args.ratios.split(",")]},
        "repeats": args.repeats,
        "seed": args.seed,
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
        json.dump(spec, f)
        spec_path = f.name
    try:
        return cli_main(["sweep", "--spec", spec_path, "--out", args.out])
    finally:
        Path(spec_path).unlink(missing_ok=True)


if __name__ == "__main__":
    sys.exit(main())
