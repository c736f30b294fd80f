#!/usr/bin/env python3
"""Emit the potential-landscape cross-sections for the two reference ensembles.

Writes one CSV per channel entropy under out/landscape/: the single-system
potential of a BAWGN probe density (entropy h_tilde on the x axis) against a
fixed BSC channel.  The LDPC (3,6) family shows the single-minimum to
negative-dip progression across its BP/potential thresholds; the LDGM family
shows the two-minimum structure whose gap changes sign near h = 0.59.
"""

import argparse
import pathlib
import subprocess
import sys

HERE = pathlib.Path(__file__).resolve().parent.parent

RUNS = [
    ("ldpc36", HERE / "configs" / "ldpc36.json", [0.40, 0.416, 0.44, 0.469, 0.48]),
    ("ldgm_fig4", HERE / "configs" / "ldgm_fig4.json", [0.37, 0.4529, 0.56, 0.5902, 0.62, 0.66]),
]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--bins", type=int, default=1024)
    ap.add_argument("--points", type=int, default=65)
    ap.add_argument("--outdir", default="out/landscape")
    args = ap.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, cfg, hs in RUNS:
        for h in hs:
            out = outdir / f"{name}_h{h:g}.csv"
            cmd = [
                sys.executable, "-m", "delab.cli", "potential-curve",
                "--ensemble", str(cfg), "--channel", "bsc", "--h", str(h),
                "--bins", str(args.bins), "--probe-points", str(args.points),
                "--output", str(out),
            ]
            print("->", out)
            subprocess.run(cmd, check=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
