"""Command-line entry point.

Subcommands cover the discrete engine (``chsh``, ``supposability``) and the
continuous-monitoring pipeline (``lindblad``, ``filter``, ``jumprate``,
``suspect``, ``fpe``).  Every run writes CSV/JSON-lines outputs plus a
manifest JSON recording the full parameter set, seed, package version, and
wall time, under ``--out-dir``.  Outputs are deterministic given the seed
and independent of ``CFQ_THREADS``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, discrete, fpe, kernels, qubit, smoothing, trajectories
from .errors import CfqError

FMT = "%.12g"


def _write_csv(path: Path, header: list, columns: list) -> None:
    rows = np.column_stack(columns)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(FMT % x for x in row) + "\n")


def _write_jsonl(path: Path, records: list, logw: np.ndarray | None = None) -> None:
    with open(path, "w") as fh:
        for k, rec in enumerate(records):
            doc = {"idx": k, "clicks": [float(FMT % c) for c in rec]}
            if logw is not None:
                doc["logw"] = float(logw[k])
            fh.write(json.dumps(doc) + "\n")


def _write_manifest(out_dir: Path, name: str, params: dict, outputs: list,
                    t_start: float, extra: dict | None = None) -> None:
    doc = {
        "command": name,
        "version": __version__,
        "backend": kernels.backend_name(),
        "parameters": params,
        "outputs": outputs,
        "wall_time_s": round(time.monotonic() - t_start, 3),
    }
    if extra:
        doc.update(extra)
    with open(out_dir / f"{name}.manifest.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sim_params(args) -> qubit.SimParams:
    return qubit.SimParams(gamma=args.gamma, omega=args.omega, eta_a=args.eta_a,
                           t_final=args.t_final, dt=args.dt, seed=args.seed)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_chsh(args) -> int:
    scenario, query = discrete.chsh_scenario(args.alice_angle, args.bob_angle,
                                             args.alice_cf_angle)
    value = discrete.supposability(scenario, query)
    print("supposability = %.12f" % value)
    if args.verbose:
        print("fixture          posterior        conditional      product")
        for fixture, post, cond in discrete.supposability_terms(scenario, query):
            label = ",".join(f"{k}={v}" for k, v in fixture.items())
            print("%-16s %.12f   %.12f   %.12f" % (label, post, cond, post * cond))
    return 0


def cmd_supposability(args) -> int:
    with open(args.scenario) as fh:
        doc = json.load(fh)
    scenario, query = discrete.scenario_from_json(doc)
    value = discrete.supposability(scenario, query)
    print("supposability = %.12f" % value)
    if args.verbose:
        for fixture, post, cond in discrete.supposability_terms(scenario, query):
            print("  fixture %s: posterior %.12f x conditional %.12f"
                  % (fixture, post, cond))
    return 0


def cmd_lindblad(args) -> int:
    t0 = time.monotonic()
    p = _sim_params(args)
    out = _out_dir(args)
    t, states = qubit.lindblad_curve(p)
    obs = np.array([qubit.bloch_expectations(s) for s in states])
    _write_csv(out / "lindblad.csv", ["t", "sx", "sy", "sz"],
               [t, obs[:, 0], obs[:, 1], obs[:, 2]])
    _write_manifest(out, "lindblad", _param_dict(args), ["lindblad.csv"], t0)
    return 0


def cmd_filter(args) -> int:
    t0 = time.monotonic()
    p = _sim_params(args)
    out = _out_dir(args)
    t, states, _ = qubit.jump_filter_curve([args.t_click], p)
    obs = np.array([qubit.bloch_expectations(s) for s in states])
    _write_csv(out / "filter.csv", ["t", "sx", "sy", "sz"],
               [t, obs[:, 0], obs[:, 1], obs[:, 2]])
    _write_manifest(out, "filter", _param_dict(args), ["filter.csv"], t0)
    return 0


def cmd_jumprate(args) -> int:
    t0 = time.monotonic()
    p = _sim_params(args)
    out = _out_dir(args)
    n_ost = args.n_ostensible or (20000 if args.paper_scale else 2000)
    n_res = args.n_resample or (40000 if args.paper_scale else 2000)
    rate = smoothing.ostensible_rate(p, args.t_click)
    _write_csv(out / "ostensible_rate.csv", ["t", "rate"], [rate.t, rate.lam])
    pre, post = smoothing.build_ostensible_ensemble(p, args.t_click, n_ost, rate=rate)
    _write_jsonl(out / "ostensible_pre.jsonl", pre.records, pre.logw)
    _write_jsonl(out / "ostensible_post.jsonl", post.records, post.logw)
    rng = trajectories.substream(p.seed, trajectories.TAG_RESAMPLE)
    records = [a + b for a, b in zip(smoothing.resample(pre, n_res, rng),
                                     smoothing.resample(post, n_res, rng))]
    centers, jr = smoothing.conditioned_jump_rate(records, p,
                                                  bin_width=args.bin_width)
    _write_csv(out / "conditioned_rate.csv", ["t", "rate"], [centers, jr])
    _write_manifest(out, "jumprate", _param_dict(args),
                    ["ostensible_rate.csv", "ostensible_pre.jsonl",
                     "ostensible_post.jsonl", "conditioned_rate.csv"], t0,
                    extra={"n_ostensible": n_ost, "n_resample": n_res})
    return 0


def cmd_suspect(args) -> int:
    t0 = time.monotonic()
    p = _sim_params(args)
    out = _out_dir(args)
    n_ost = args.n_ostensible or (20000 if args.paper_scale else 2000)
    n_sus = args.n_suspect or 1000
    records = smoothing.resampled_records(p, args.t_click, n_ost, n_sus)
    curve = smoothing.suspectation_curve(records, p)
    _write_csv(out / "suspectation.csv", ["t", "value", "stderr"],
               [curve.t, curve.mean, curve.stderr])
    t, states = qubit.lindblad_curve(p)
    sy = np.array([qubit.bloch_expectations(s)[1] for s in states])
    _write_csv(out / "unconditioned_sy.csv", ["t", "sy"], [t, sy])
    tf, fstates, _ = qubit.jump_filter_curve([args.t_click], p)
    fsy = np.array([qubit.bloch_expectations(s)[1] for s in fstates])
    _write_csv(out / "filtered_sy.csv", ["t", "sy"], [tf, fsy])
    _write_manifest(out, "suspect", _param_dict(args),
                    ["suspectation.csv", "unconditioned_sy.csv",
                     "filtered_sy.csv"], t0,
                    extra={"n_ostensible": n_ost, "n_suspect": n_sus,
                           "n_excluded": curve.n_excluded})
    return 0


def cmd_fpe(args) -> int:
    t0 = time.monotonic()
    out = _out_dir(args)
    pdf = fpe.characteristic_record_protocol(
        _sim_params(args), t_click=args.t_click, tau=args.tau,
        n_grid=args.n_grid, sigma0=args.sigma0)
    norm = fpe.normalize_pdf(pdf)
    _write_csv(out / "theta_pdf.csv", ["theta", "density"],
               [norm.theta, norm.values])
    pos = fpe.positive_mass(norm)
    extra = {"positive_mass": pos}
    if args.mc_paths:
        rng = trajectories.substream(args.seed, trajectories.TAG_THETA)
        mc = fpe.monte_carlo_theta_distribution(_sim_params(args), args.mc_paths,
                                                rng, tau=args.tau,
                                                n_grid=args.n_grid)
        _write_csv(out / "theta_mc.csv", ["theta", "density"],
                   [mc.theta, mc.values])
        extra["mc_paths"] = args.mc_paths
    _write_manifest(out, "fpe", _param_dict(args),
                    ["theta_pdf.csv"] + (["theta_mc.csv"] if args.mc_paths else []),
                    t0, extra=extra)
    return 0


def _param_dict(args) -> dict:
    keep = ("gamma", "omega", "eta_a", "t_final", "t_click", "dt", "seed",
            "paper_scale", "n_grid", "sigma0", "tau", "bin_width",
            "n_ostensible", "n_resample", "n_suspect", "mc_paths")
    return {k: getattr(args, k) for k in keep if hasattr(args, k)}


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--gamma", type=float, default=1.0, help="decay rate")
    sp.add_argument("--omega", type=float, default=2.0, help="Rabi frequency")
    sp.add_argument("--eta-a", type=float, default=0.2, dest="eta_a",
                    help="efficiency of the published arm")
    sp.add_argument("--t-final", type=float, default=10.0, dest="t_final")
    sp.add_argument("--t-click", type=float, default=6.25, dest="t_click",
                    help="time of the single published click")
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-dir", default="out", dest="out_dir")
    sp.add_argument("--paper-scale", action="store_true", dest="paper_scale",
                    help="use publication-size ensembles (slow)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cfq",
        description="Counterfactual measurement toolkit: supposabilities and "
                    "suspectation curves.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("chsh", help="CHSH supposability worked example")
    sp.add_argument("--alice-angle", type=float, default=0.0)
    sp.add_argument("--bob-angle", type=float, default=np.pi / 4)
    sp.add_argument("--alice-cf-angle", type=float, default=np.pi / 2)
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_chsh)

    sp = sub.add_parser("supposability",
                        help="evaluate a supposability query from a scenario JSON")
    sp.add_argument("scenario", help="path to scenario JSON")
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_supposability)

    sp = sub.add_parser("lindblad", help="unconditioned master-equation curve")
    _add_common(sp)
    sp.set_defaults(func=cmd_lindblad)

    sp = sub.add_parser("filter",
                        help="state filtered on the published click record")
    _add_common(sp)
    sp.set_defaults(func=cmd_filter)

    sp = sub.add_parser("jumprate",
                        help="ostensible ensemble and conditioned jump rate")
    _add_common(sp)
    sp.add_argument("--n-ostensible", type=int, default=None, dest="n_ostensible")
    sp.add_argument("--n-resample", type=int, default=None, dest="n_resample")
    sp.add_argument("--bin-width", type=float, default=0.01, dest="bin_width")
    sp.set_defaults(func=cmd_jumprate)

    sp = sub.add_parser("suspect", help="suspectation (smoothed weak-value) curve")
    _add_common(sp)
    sp.add_argument("--n-ostensible", type=int, default=None, dest="n_ostensible")
    sp.add_argument("--n-suspect", type=int, default=None, dest="n_suspect")
    sp.set_defaults(func=cmd_suspect)

    sp = sub.add_parser("fpe",
                        help="Bloch-angle distribution for the characteristic record")
    _add_common(sp)
    sp.add_argument("--n-grid", type=int, default=2048, dest="n_grid")
    sp.add_argument("--sigma0", type=float, default=0.01)
    sp.add_argument("--tau", type=float, default=1.54,
                    help="evolution time since the last unpublished click")
    sp.add_argument("--mc-paths", type=int, default=0, dest="mc_paths",
                    help="also write a Monte Carlo histogram with this many paths")
    sp.set_defaults(func=cmd_fpe)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CfqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
