"""Render every figure whose inputs are present in the input directory.

Usage: python3 plots/make_all.py --in <dir> --out-dir <dir> [--format svg]
"""

import argparse
import os
import subprocess
import sys

FIGURES = {
    "suspectation.py": ("suspectation.csv",),
    "jump_rates.py": ("conditioned_rate.csv",),
    "theta_pdf.py": ("theta_pdf.csv",),
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--in", dest="in_dir", required=True)
    ap.add_argument("--out-dir", dest="out_dir", required=True)
    ap.add_argument("--format", default="svg")
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    here = os.path.dirname(os.path.abspath(__file__))
    rendered = 0
    for script, needs in FIGURES.items():
        if not all(os.path.exists(os.path.join(args.in_dir, n)) for n in needs):
            print(f"skipping {script}: missing {', '.join(needs)}")
            continue
        out = os.path.join(args.out_dir,
                           script.replace(".py", f".{args.format}"))
        subprocess.run([sys.executable, os.path.join(here, script),
                        "--in", args.in_dir, "--out", out], check=True)
        print(f"wrote {out}")
        rendered += 1
    if rendered == 0:
        sys.exit("error: no figure inputs found")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
