"""Render the suspectation figure: unconditioned, filtered, and suspected
<sigma_y>(t) overlaid, with the suspectation's standard-error band."""

import matplotlib.pyplot as plt
import numpy as np

import common


def main() -> int:
    args = common.build_parser(__doc__).parse_args()
    unc = common.read_csv(args.in_dir, "unconditioned_sy.csv", ("t", "sy"))
    fil = common.read_csv(args.in_dir, "filtered_sy.csv", ("t", "sy"))
    sus = common.read_csv(args.in_dir, "suspectation.csv", ("t", "value"))

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(unc["t"], unc["sy"], color="0.5", lw=1.0, label="unconditioned")
    ax.plot(fil["t"], fil["sy"], color="tab:blue", lw=1.0, label="filtered")
    ax.plot(sus["t"], sus["value"], color="tab:red", lw=1.5,
            label="suspectation")
    stderr = sus.get("stderr")
    if stderr is not None and np.any(np.isfinite(stderr)):
        ax.fill_between(sus["t"], sus["value"] - stderr,
                        sus["value"] + stderr, color="tab:red", alpha=0.2,
                        lw=0)
    ax.set_xlabel(r"$t$ $[\gamma^{-1}]$")
    ax.set_ylabel(r"$\langle\sigma_y\rangle$ estimate")
    ax.legend(loc="lower left")
    ax.set_xlim(unc["t"][0], unc["t"][-1])
    fig.tight_layout()
    common.save(fig, args.out_file)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
