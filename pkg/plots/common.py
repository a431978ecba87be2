"""Shared plumbing for the figure scripts.

Each script is a pure renderer: it reads the CSV outputs of the `cfq` CLI
from `--in <dir>` and writes one vector image to `--out <file>`.  Rendering
is deterministic: identical input files produce byte-identical images.
"""

import argparse
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

# fixed hash salt + no embedded date -> byte-identical SVGs for equal inputs
plt.rcParams["svg.hashsalt"] = "cfq-plots"


def build_parser(description: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--in", dest="in_dir", required=True,
                    help="directory holding the CLI's CSV outputs")
    ap.add_argument("--out", dest="out_file", required=True,
                    help="output image path (vector format, e.g. .svg)")
    return ap


def read_csv(in_dir: str, name: str, required: tuple, optional: bool = False):
    """Load named columns; fail with a descriptive message if any is absent."""
    path = os.path.join(in_dir, name)
    if not os.path.exists(path):
        if optional:
            return None
        sys.exit(f"error: missing input file {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    missing = [c for c in required if c not in header]
    if missing:
        sys.exit(f"error: {path} lacks column(s) {', '.join(missing)}; "
                 f"found {', '.join(header)}")
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    data = np.atleast_2d(data)
    return {c: data[:, header.index(c)] for c in header}


def save(fig, out_file: str) -> None:
    fig.savefig(out_file, metadata={"Date": None})
    plt.close(fig)
