"""Render the Bloch-angle figure: the filled solver density with the
fraction of mass at sin(theta) > 0 annotated, sin(theta) on a twin axis,
and the Monte Carlo histogram overlaid when present."""

import matplotlib.pyplot as plt
import numpy as np

import common


def main() -> int:
    args = common.build_parser(__doc__).parse_args()
    pdf = common.read_csv(args.in_dir, "theta_pdf.csv", ("theta", "density"))
    mc = common.read_csv(args.in_dir, "theta_mc.csv", ("theta", "density"),
                         optional=True)

    theta, dens = pdf["theta"], pdf["density"]
    sel = theta <= np.pi
    positive = np.trapezoid(dens[sel], theta[sel]) / np.trapezoid(dens, theta)

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.fill_between(theta, dens, color="tab:blue", alpha=0.35, lw=0)
    ax.plot(theta, dens, color="tab:blue", lw=1.2, label="solver density")
    if mc is not None:
        ax.plot(mc["theta"], mc["density"], color="tab:orange", lw=0.8,
                alpha=0.8, label="Monte Carlo")
    ax.annotate(rf"$\theta\in(0,\pi)$ mass $\approx$ {100.0 * positive:.0f}%",
                xy=(0.03, 0.92), xycoords="axes fraction")
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel("probability density")
    ax.set_xlim(0.0, 2.0 * np.pi)
    ax2 = ax.twinx()
    ax2.plot(theta, np.sin(theta), color="0.4", lw=0.8, ls="--",
             label=r"$\sin\theta$")
    ax2.set_ylabel(r"$\sin\theta = \langle\sigma_y\rangle$")
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines + lines2, labels + labels2, loc="upper right")
    fig.tight_layout()
    common.save(fig, args.out_file)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
