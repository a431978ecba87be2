"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs each kernel-heavy workload in a subprocess with CFQ_NUMBA=1 and
CFQ_NUMBA=0 and reports wall times.  Usage:

    python3 benchmarks/bench_kernels.py [--paths 2000] [--t-final 5.0]
"""

import argparse
import os
import subprocess
import sys

WORKLOAD = """
import time
import numpy as np
from cfq import fpe, kernels, smoothing, trajectories
from cfq.qubit import SimParams

p = SimParams(t_final={t_final}, seed=0)
print("backend:", kernels.backend_name())

t0 = time.monotonic()
trajectories.jump_ensemble(p, {paths})
print("jump_ensemble      %7.2f s" % (time.monotonic() - t0))

t0 = time.monotonic()
trajectories.homodyne_ensemble(p, {paths})
print("homodyne_ensemble  %7.2f s" % (time.monotonic() - t0))

t0 = time.monotonic()
fpe.mc_theta_samples(p, {paths}, trajectories.substream(0, 103), tau=1.54)
print("theta_samples      %7.2f s" % (time.monotonic() - t0))

t0 = time.monotonic()
recs = smoothing.resampled_records(p, {t_final} / 2.0, 500, 200)
smoothing.suspectation_curve(recs, p)
print("suspectation       %7.2f s" % (time.monotonic() - t0))
"""


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--t-final", type=float, default=5.0, dest="t_final")
    args = ap.parse_args()
    code = WORKLOAD.format(paths=args.paths, t_final=args.t_final)
    for flag in ("1", "0"):
        env = dict(os.environ, CFQ_NUMBA=flag)
        print(f"--- CFQ_NUMBA={flag} ---", flush=True)
        subprocess.run([sys.executable, "-c", code], env=env, check=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
