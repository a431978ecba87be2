"""Render the jump-rate figure: the ostensible sampling rate and the
record-conditioned rate of the unpublished detector, stacked panels."""

import matplotlib.pyplot as plt

import common


def main() -> int:
    args = common.build_parser(__doc__).parse_args()
    ost = common.read_csv(args.in_dir, "ostensible_rate.csv", ("t", "rate"))
    con = common.read_csv(args.in_dir, "conditioned_rate.csv", ("t", "rate"))

    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7.0, 5.0))
    ax1.plot(ost["t"], ost["rate"], color="tab:blue", lw=1.0)
    ax1.set_ylabel(r"ostensible rate $[\gamma]$")
    ax2.plot(con["t"], con["rate"], color="tab:red", lw=1.0,
             drawstyle="steps-mid")
    ax2.set_ylabel(r"conditioned rate $[\gamma]$")
    ax2.set_xlabel(r"$t$ $[\gamma^{-1}]$")
    ax2.set_xlim(ost["t"][0], ost["t"][-1])
    fig.tight_layout()
    common.save(fig, args.out_file)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
