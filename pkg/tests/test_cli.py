import csv
import os
import subprocess
import sys

import numpy as np
import pytest

from c2model import io as c2io
from c2model.cli import main
from c2model.synthetic import circle_track, default_geometry, synthetic_drive

VEHICLE = """\
wheelbase = 2.63
tire_radius = 0.316
track_width = 1.54

[steering]
coefficients = [0.0, 859.0, 0.0, 0.0]
range = [-0.6, 0.6]
"""


def read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=object)


def column(path, name):
    header, rows = read(path)
    idx = [c2io.base_name(h) for h in header].index(name)
    return rows[:, idx].astype(float)


@pytest.fixture
def files(tmp_path):
    vehicle = tmp_path / "vehicle.toml"
    vehicle.write_text(VEHICLE)
    track, can = synthetic_drive(default_geometry(), duration=30.0, shift=0.2)
    track_path = tmp_path / "track.csv"
    c2io.write_track(track_path, track)
    can_path = tmp_path / "can.csv"
    c2io.write_csv(can_path, {"t[s]": can.t, **can.channels})
    return {"vehicle": str(vehicle), "track": str(track_path), "can": str(can_path), "dir": tmp_path}


def test_compare_identical_files(tmp_path, capsys):
    path = tmp_path / "s.csv"
    c2io.write_csv(path, {"t": np.arange(10.0), "v_FL": np.linspace(1, 5, 10)})
    assert main(["compare", "--reference", str(path), "--estimate", str(path), "--channel", "v_FL"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "channel,mu,sigma,m,n"
    assert out[1] == "v_FL,0,0,1,10"


def test_forward_zero_steering(tmp_path):
    ctl = tmp_path / "ctl.csv"
    t = np.linspace(0, 10, 11)
    c2io.write_csv(ctl, {"t[s]": t, "delta_swa[deg]": 0 * t, "v_lon[m/s]": 0 * t + 10})
    out = tmp_path / "fwd.csv"
    # heading 0 faces north
    assert main(["forward", "--controls", str(ctl), "--init", "1,2,0", "--out", str(out)]) == 0
    np.testing.assert_allclose(column(out, "x"), 1.0, atol=1e-9)
    np.testing.assert_allclose(column(out, "y"), 2 + 10 * t, atol=1e-6)


def test_analyze_then_forward(files, tmp_path):
    track = circle_track(radius=20.0, speed=10.0, duration=10.0, rate=100.0)
    c2io.write_track(tmp_path / "circle.csv", track)
    prof = tmp_path / "profile.csv"
    assert main(["analyze", "--track", str(tmp_path / "circle.csv"), "--vehicle", files["vehicle"],
                 "--out", str(prof)]) == 0
    heading = column(prof, "heading_front")[0]
    out = tmp_path / "fwd.csv"
    assert main(["forward", "--controls", str(prof), "--vehicle", files["vehicle"],
                 "--init", f"20,0,{float(heading)!r}", "--out", str(out)]) == 0
    x, y = column(out, "x"), column(out, "y")
    assert np.hypot(x[-1] - track.x[-1], y[-1] - track.y[-1]) < 0.1


def test_calibrate_steering(tmp_path, capsys):
    delta = np.linspace(-0.5, 0.5, 11)
    pairs = tmp_path / "pairs.csv"
    c2io.write_csv(pairs, {"delta_wheel[rad]": delta, "delta_swa[deg]": 830 * delta + 50 * delta**3})
    assert main(["calibrate-steering", "--pairs", str(pairs)]) == 0
    text = capsys.readouterr().out
    poly = c2io.parse_vehicle("wheelbase = 2.5\ntire_radius = 0.3\ntrack_width = 1.5\n" + text).steering
    np.testing.assert_allclose(poly.coefficients, [0, 830, 0, 50], atol=1e-6)


def test_evaluate_outputs(files):
    out_dir = files["dir"] / "report"
    argv = ["evaluate", "--track", files["track"], "--can", files["can"], "--vehicle", files["vehicle"],
            "--out-dir", str(out_dir), "--max", "20"]
    assert main(argv) == 0
    names = set(os.listdir(out_dir))
    assert {"profile.csv", "summary.csv", "segments.csv", "comparisons.csv", "scatter_v_lon.csv"} <= names
    assert "map_underestimation_RL_curvature_speed.csv" in names
    assert column(out_dir / "summary.csv", "value")[2] == pytest.approx(-0.2)


def test_evaluate_without_can(files):
    out_dir = files["dir"] / "gps_only"
    assert main(["evaluate", "--track", files["track"], "--vehicle", files["vehicle"],
                 "--out-dir", str(out_dir), "--max", "10"]) == 0
    names = set(os.listdir(out_dir))
    assert "profile.csv" in names and "comparisons.csv" not in names
    assert not any(n.startswith("scatter_") for n in names)
    header, _ = read(out_dir / "profile.csv")
    assert not any(h.startswith("ref_") for h in header)


def test_segment_command(files, capsys):
    assert main(["segment", "--track", files["track"], "--vehicle", files["vehicle"],
                 "--min", "10", "--max", "20", "--stride", "10"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("t_start[s],t_end[s],arc_length[m]")
    assert len(lines) > 10


@pytest.mark.parametrize("argv, code", [
    (["frobnicate"], 1),
    (["forward", "--controls", "x.csv"], 1),
    (["analyze", "--track", "/nonexistent/track.csv"], 2),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code
    assert len(capsys.readouterr().err.strip().splitlines()) == 1


def test_parse_and_numeric_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,x,y\n0,0,0\n1,oops,0\n")
    assert main(["analyze", "--track", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err
    ctl = tmp_path / "ctl.csv"
    c2io.write_csv(ctl, {"t": [0.0, 1.0], "delta_swa": [0.0, 5000.0], "v_lon": [1.0, 1.0]})
    assert main(["forward", "--controls", str(ctl), "--init", "0,0,0"]) == 3
    assert main(["forward", "--controls", str(ctl), "--init", "0,0,0", "--step", "0"]) == 1


def test_no_partial_outputs(files, tmp_path):
    ctl = tmp_path / "ctl.csv"
    c2io.write_csv(ctl, {"t": [0.0, 1.0], "delta_swa": [0.0, 5000.0], "v_lon": [1.0, 1.0]})
    out = tmp_path / "never.csv"
    assert main(["forward", "--controls", str(ctl), "--init", "0,0,0", "--out", str(out)]) == 3
    assert not out.exists()
    out_dir = tmp_path / "report"
    bad_vehicle = tmp_path / "bad.toml"
    bad_vehicle.write_text("wheelbase = 1.0\ntire_radius = 0.3\ntrack_width = 1.5\n"
                           "[steering]\ncoefficients = [0, 1, 0, 0]\nrange = [-0.001, 0.001]\n")
    assert main(["evaluate", "--track", files["track"], "--vehicle", str(bad_vehicle),
                 "--out-dir", str(out_dir)]) != 0
    assert not out_dir.exists() or os.listdir(out_dir) == []


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "c2model", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "evaluate" in proc.stdout
