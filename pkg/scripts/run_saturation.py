#!/usr/bin/env python3
"""Desk-scale threshold-saturation sweep for the (3,6) ensemble over the BSC.

Runs coupled chains from the all-useless start over a (N, w, h) grid and
writes one sweep CSV.  With the defaults the w=1 column dies just above the
uncoupled BP threshold (~0.416) while w >= 2 columns decode well beyond it,
up to the potential threshold (~0.469).
"""

import argparse
import pathlib
import subprocess
import sys

HERE = pathlib.Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--bins", type=int, default=1024)
    ap.add_argument("--Ns", default="16")
    ap.add_argument("--ws", default="1,2,3,4")
    ap.add_argument("--h-grid", default="0.40,0.42,0.44,0.46,0.48")
    ap.add_argument("--out", default="out/saturation_sweep.csv")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    cmd = [
        sys.executable, "-m", "delab.cli", "sweep",
        "--ensemble", str(HERE / "configs" / "ldpc36.json"),
        "--channel", "bsc", "--bins", str(args.bins),
        "--Ns", args.Ns, "--ws", args.ws, "--h-grid", args.h_grid,
        "--output", str(out),
    ]
    print("->", out)
    subprocess.run(cmd, check=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
