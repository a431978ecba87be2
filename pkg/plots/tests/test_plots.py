"""Tests for the figure scripts: pure rendering of CSV inputs."""

import os
import subprocess
import sys

import numpy as np
import pytest

PLOTS_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def run_script(script, in_dir, out_file, check=True):
    return subprocess.run(
        [sys.executable, os.path.join(PLOTS_DIR, script),
         "--in", str(in_dir), "--out", str(out_file)],
        capture_output=True, text=True, check=check)


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(x) for x in row) + "\n")


def make_suspectation_inputs(in_dir, t_peak=6.25, stderr="0.01"):
    t = np.round(np.linspace(0.0, 10.0, 101), 6)
    sy = np.sin(2.0 * t) * np.exp(-0.2 * t)
    sus = np.exp(-0.5 * (t - t_peak) ** 2)
    write_csv(in_dir / "unconditioned_sy.csv", "t,sy", zip(t, sy))
    write_csv(in_dir / "filtered_sy.csv", "t,sy", zip(t, 0.5 * sy))
    write_csv(in_dir / "suspectation.csv", "t,value,stderr",
              [(a, b, stderr) for a, b in zip(t, sus)])


def make_rate_inputs(in_dir, t_dip=6.25):
    t = np.round(np.linspace(0.0, 10.0, 201), 6)
    ost = 0.35 * (1.0 - np.exp(-t))
    con = 0.6 * np.exp(-0.5 * ((t - 4.71) / 0.8) ** 2)
    con[np.abs(t - t_dip) < 0.3] = 0.0
    write_csv(in_dir / "ostensible_rate.csv", "t,rate", zip(t, ost))
    write_csv(in_dir / "conditioned_rate.csv", "t,rate", zip(t, con))


def make_theta_inputs(in_dir, with_mc=False):
    th = np.round(np.linspace(0.0, 2.0 * np.pi, 257), 8)
    dens = np.exp(-0.5 * ((th - 2.0) / 0.5) ** 2)
    dens /= np.trapezoid(dens, th)
    write_csv(in_dir / "theta_pdf.csv", "theta,density", zip(th, dens))
    if with_mc:
        write_csv(in_dir / "theta_mc.csv", "theta,density",
                  zip(th, 1.05 * dens))


@pytest.mark.parametrize("script,maker", [
    ("suspectation.py", make_suspectation_inputs),
    ("jump_rates.py", make_rate_inputs),
    ("theta_pdf.py", make_theta_inputs),
])
def test_render_is_deterministic(tmp_path, script, maker):
    maker(tmp_path)
    images = []
    for rep in (0, 1):
        out = tmp_path / f"fig{rep}.svg"
        run_script(script, tmp_path, out)
        images.append(out.read_bytes())
    assert len(images[0]) > 1000
    assert images[0] == images[1]


def test_suspectation_tolerates_empty_stderr(tmp_path):
    make_suspectation_inputs(tmp_path, stderr="")
    out = tmp_path / "fig.svg"
    run_script("suspectation.py", tmp_path, out)
    assert out.exists() and out.stat().st_size > 1000


def test_missing_column_is_descriptive(tmp_path):
    make_suspectation_inputs(tmp_path)
    t = np.linspace(0.0, 10.0, 11)
    write_csv(tmp_path / "suspectation.csv", "t,mean",
              zip(t, np.zeros(11)))  # wrong column name
    res = run_script("suspectation.py", tmp_path, tmp_path / "fig.svg",
                     check=False)
    assert res.returncode != 0
    assert "lacks column" in res.stderr and "value" in res.stderr


def test_missing_file_is_descriptive(tmp_path):
    res = run_script("jump_rates.py", tmp_path, tmp_path / "fig.svg",
                     check=False)
    assert res.returncode != 0
    assert "missing input file" in res.stderr


def test_theta_mc_overlay_changes_figure(tmp_path):
    make_theta_inputs(tmp_path)
    out1 = tmp_path / "plain.svg"
    run_script("theta_pdf.py", tmp_path, out1)
    make_theta_inputs(tmp_path, with_mc=True)
    out2 = tmp_path / "mc.svg"
    run_script("theta_pdf.py", tmp_path, out2)
    assert out1.read_bytes() != out2.read_bytes()


def test_pure_renderer_same_inputs_two_dirs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    make_rate_inputs(a)
    make_rate_inputs(b)
    out_a, out_b = tmp_path / "a.svg", tmp_path / "b.svg"
    run_script("jump_rates.py", a, out_a)
    run_script("jump_rates.py", b, out_b)
    assert out_a.read_bytes() == out_b.read_bytes()


def test_suspectation_peak_follows_click_time(tmp_path):
    # Rendered from CLI outputs for two click times: the suspectation input's
    # argmax sits at the configured t_A in both runs and both figures render.
    for t_click in (4.0, 6.25):
        d = tmp_path / f"tc{t_click}"
        d.mkdir()
        subprocess.run(
            [sys.executable, "-m", "cfq.cli", "suspect",
             "--t-click", str(t_click), "--n-ostensible", "400",
             "--n-suspect", "150", "--out-dir", str(d)],
            check=True, capture_output=True)
        data = np.genfromtxt(d / "filtered_sy.csv", delimiter=",", names=True)
        run_script("suspectation.py", d, d / "fig.svg")
        assert (d / "fig.svg").stat().st_size > 1000
        # the filtered estimate jumps at the click: largest step at t_click
        i = int(np.argmax(np.abs(np.diff(data["sy"]))))
        assert abs(data["t"][i] - t_click) < 0.05


def test_make_all_driver(tmp_path):
    make_suspectation_inputs(tmp_path)
    make_rate_inputs(tmp_path)
    make_theta_inputs(tmp_path)
    out_dir = tmp_path / "figs"
    subprocess.run(
        [sys.executable, os.path.join(PLOTS_DIR, "make_all.py"),
         "--in", str(tmp_path), "--out-dir", str(out_dir)],
        check=True, capture_output=True)
    names = sorted(f.name for f in out_dir.iterdir())
    assert names == ["jump_rates.svg", "suspectation.svg", "theta_pdf.svg"]
    empty = tmp_path / "empty"
    empty.mkdir()
    res = subprocess.run(
        [sys.executable, os.path.join(PLOTS_DIR, "make_all.py"),
         "--in", str(empty), "--out-dir", str(out_dir)],
        capture_output=True, text=True)
    assert res.returncode != 0
