"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import filecmp
import os
import time

import numpy as np
import pytest
import sympy as sp

from c2model import core
from c2model.calibration import compare_channels, fit_steering, invert_steering
from c2model.cli import main
from c2model import io as c2io
from c2model.core import Pose2Derivs, WheelMount
from c2model.evaluation import KAPPA_EDGES, bin_index, underestimated, wheel_underestimation_map
from c2model.forward import ControlProfile, PoseState, integrate_poses, roundtrip
from c2model.synthetic import (
    circle_track,
    cusp_track,
    default_geometry,
    line_track,
    s_curve_track,
    synthetic_drive,
)
from c2model.trajectory import eval_derivs, extract_profile, fit_c2
from c2model.vehicle import VehicleGeometry

acceptance = pytest.mark.acceptance


# ---- 1 ---------------------------------------------------------------------

def symbolic_curve(x_expr, y_expr, t):
    """Exact derivatives, dT/dt and curvature of a plane curve, as numpy callables."""
    vx, vy = sp.diff(x_expr, t), sp.diff(y_expr, t)
    ax, ay = sp.diff(vx, t), sp.diff(vy, t)
    speed = sp.sqrt(vx**2 + vy**2)
    tdot = [sp.diff(vx / speed, t), sp.diff(vy / speed, t)]
    kappa = (vx * ay - vy * ax) / speed**3
    f = sp.lambdify(t, [x_expr, y_expr, vx, vy, ax, ay, tdot[0], tdot[1], kappa], "numpy")

    def evaluate(tt):
        out = [np.broadcast_to(np.asarray(v, dtype=float), tt.shape) for v in f(tt)]
        pos, vel, acc, td = (np.stack(out[i:i + 2], axis=-1) for i in (0, 2, 4, 6))
        return Pose2Derivs(pos, vel, acc, np.zeros(tt.shape, bool)), td, out[8]

    return evaluate


@acceptance(1, "curvature triple-form agreement (circle, line, S-curve), 1000 points, < 1 s")
def test_criterion_1_curvature_forms():
    t = sp.Symbol("t", real=True)
    curves = {
        "circle": symbolic_curve(20 * sp.cos(t / 2), 20 * sp.sin(t / 2), t),
        "line": symbolic_curve(3 * t, 4 * t - 1, t),
        "s_curve": symbolic_curve(10 * t, sp.Rational(1, 20) * t**3 - sp.Rational(3, 8) * t**2, t),
    }
    tt = np.linspace(0.0, 5.0, 1000)
    oracles = {name: curve(tt) for name, curve in curves.items()}

    start = time.perf_counter()
    forms = {name: (core.curvature_forms(p), core.tangent_rate(p)) for name, (p, _, _) in oracles.items()}
    elapsed = time.perf_counter() - start

    for name, ((k1, k2, k3), tdot) in forms.items():
        _, tdot_exact, kappa_exact = oracles[name]
        scale = np.maximum(np.abs(kappa_exact), 1.0)  # the line has kappa = 0; compare absolutely there
        for k in (k1, k2, k3):
            np.testing.assert_array_less(np.abs(k - kappa_exact), 1e-10 * scale, err_msg=name)
        np.testing.assert_allclose(tdot, tdot_exact, atol=1e-12, err_msg=name)
    assert elapsed < 1.0


# ---- 2 ---------------------------------------------------------------------

@acceptance(2, "circle oracle: exact derivatives and 100 Hz spline fit")
def test_criterion_2_circle_oracle():
    tt = np.linspace(0.0, 2 * np.pi * 4, 100)
    w = 0.5  # 10 m/s on R = 20 m
    p = Pose2Derivs(
        np.stack([20 * np.cos(w * tt), 20 * np.sin(w * tt)], axis=1),
        np.stack([-10 * np.sin(w * tt), 10 * np.cos(w * tt)], axis=1),
        np.stack([-5 * np.cos(w * tt), -5 * np.sin(w * tt)], axis=1),
        np.zeros(tt.size, bool),
    )
    np.testing.assert_allclose(core.curvature(p), 0.05, rtol=0, atol=1e-12)
    np.testing.assert_allclose(core.accelerations(p)[1], 5.0, rtol=0, atol=1e-9)
    np.testing.assert_allclose(core.yaw_rate(p), 0.5, rtol=0, atol=1e-9)

    track = circle_track(radius=20.0, speed=10.0, duration=10.0, rate=100.0)
    traj = fit_c2(track, smoothing=0.0)
    mid = np.linspace(1.0, 9.0, 2001)  # middle 80 % of the 10 s span
    np.testing.assert_allclose(core.curvature(eval_derivs(traj, mid)), 0.05, rtol=1e-3)


# ---- 3 ---------------------------------------------------------------------

@acceptance(3, "Ackermann: inner wheel steers more; continuity through kappa = 0")
def test_criterion_3_ackermann():
    rng = np.random.default_rng(20240601)
    n = 1000
    kappa = rng.uniform(0.0, 0.2, n)
    kappa[kappa == 0] = 0.2
    kappa *= rng.choice([-1.0, 1.0], n)
    wheelbase = rng.uniform(1.5, 4.0, n)
    half = 0.5 * rng.uniform(1.0, 2.2, n)
    for k, l, h in zip(kappa, wheelbase, half):
        left = core.wheel_steer_angle(k, WheelMount(l, -h, 0.3))
        right = core.wheel_steer_angle(k, WheelMount(l, h, 0.3))
        inner, outer = (left, right) if k > 0 else (right, left)
        assert abs(inner) > abs(outer)
    mount = WheelMount(2.63, -0.77, 0.3)
    for k in (1e-9, -1e-9):
        assert abs(core.wheel_steer_angle(k, mount)) < 1e-8


# ---- 4 ---------------------------------------------------------------------

def circle_closure(step):
    geo = VehicleGeometry.four_wheel(2.5, 1.5, 0.3)  # identity steering: f(delta_swa) = delta_swa
    t = np.array([0.0, 4 * np.pi])
    ctl = ControlProfile(t, np.full(2, np.arctan(0.25)), np.full(2, 5.0))
    _, pos, _ = integrate_poses(ctl, geo, PoseState([0.0, 0.0], [1.0, 0.0]), step)
    return float(np.linalg.norm(pos[-1] - pos[0]))


@acceptance(4, "forward circle closure < 1e-6 m at 1 ms; 4th-order convergence")
def test_criterion_4_circle_closure():
    assert circle_closure(1e-3) < 1e-6
    steps = [0.2, 0.1, 0.05, 0.025, 0.0125]
    errors = [circle_closure(h) for h in steps]
    checked = 0
    for coarse, fine in zip(errors, errors[1:]):
        if fine > 1e-12:
            assert coarse / fine >= 8.0
            checked += 1
    assert checked >= 3


# ---- 5 ---------------------------------------------------------------------

@acceptance(5, "analyze-forward roundtrip on 100 m tracks, E < 0.1 m (straight < 1e-6 m), < 5 s")
def test_criterion_5_roundtrip():
    geo = default_geometry()
    start = time.perf_counter()
    errors = {
        "straight": roundtrip(fit_c2(line_track(speed=10.0, duration=10.0, rate=10.0)), geo)[0],
        "circle": roundtrip(fit_c2(circle_track(radius=20.0, speed=10.0, duration=10.0, rate=10.0)), geo)[0],
        "s_curve": roundtrip(fit_c2(s_curve_track(geo, speed=10.0, length=100.0, rate=10.0)), geo)[0],
    }
    elapsed = time.perf_counter() - start
    assert errors["straight"] < 1e-6
    assert errors["circle"] < 0.1
    assert errors["s_curve"] < 0.1
    assert elapsed < 5.0


# ---- 6 ---------------------------------------------------------------------

@acceptance(6, "channel metrics closed form")
def test_criterion_6_metrics():
    ref = np.array([0.3, -1.2, 2.5, 4.0, 0.7])
    same = compare_channels(ref, ref)
    assert (same.mu, same.sigma, same.m) == (0.0, 0.0, 1.0)
    assert compare_channels(ref, 2 * ref).m == pytest.approx(2.0, abs=1e-12)
    hand = compare_channels([1, 2, 3], [1.5, 2.5, 3.5])
    assert hand.mu == pytest.approx(0.5, abs=1e-12)
    assert hand.sigma == pytest.approx(0.0, abs=1e-12)
    assert hand.m == pytest.approx(17 / 14, abs=1e-12)


# ---- 7 ---------------------------------------------------------------------

@acceptance(7, "steering fit exact recovery and inverse identity")
@pytest.mark.parametrize("coef", [(0, 859, 0, 0), (0, 830, 0, 0), (0, 830, 0, 50), (1.5, 845, -12, 80)])
def test_criterion_7_steering_fit(coef):
    delta = np.linspace(-0.6, 0.6, 25)
    swa = np.polynomial.polynomial.polyval(delta, coef)
    poly = fit_steering(np.column_stack([delta, swa]))
    np.testing.assert_allclose(poly.coefficients, coef, rtol=0, atol=1e-9)
    dense = np.linspace(poly.delta_min, poly.delta_max, 10001)
    np.testing.assert_allclose(invert_steering(poly, poly(dense)), dense, rtol=0, atol=1e-10)


# ---- 8 ---------------------------------------------------------------------

@acceptance(8, "cusp: continuous T, R = 0 then 1, v_lon changes sign once")
def test_criterion_8_cusp():
    traj = fit_c2(cusp_track())
    tt = np.linspace(traj.t_start, traj.t_end, 10001)
    T = traj.tangent(tt)
    jump = np.degrees(np.arccos(np.clip(np.sum(T[1:] * T[:-1], axis=1), -1.0, 1.0)))
    assert jump.max() < 5.0

    gear = traj.reverse(tt)
    changes = np.flatnonzero(np.diff(gear.astype(int)))
    assert not gear[0] and gear[-1] and changes.size == 1

    prof = extract_profile(traj, default_geometry(), tt)
    signs = np.sign(prof.v_lon[prof.v_lon != 0])
    assert signs[0] > 0 and np.count_nonzero(np.diff(signs)) == 1


# ---- 9 ---------------------------------------------------------------------

@acceptance(9, "underestimation map: 100 % inside the kappa band, 0 % outside, mass conservation")
def test_criterion_9_underestimation_map():
    geo = default_geometry()
    track, _ = synthetic_drive(geo, duration=120.0)
    traj = fit_c2(track)
    prof = extract_profile(traj, geo, np.arange(0.0, 120.0, 0.02))
    # band of whole kappa cells: |kappa| in [0.02, 0.03)
    lo, hi = KAPPA_EDGES[4], KAPPA_EDGES[6]
    abs_kappa = np.abs(prof.kappa)
    band = (abs_kappa >= lo) & (abs_kappa < hi)
    assert band.any() and (~band).any()
    estimate = prof.v["RL"]
    reference = np.where(band, estimate / 0.95, estimate)

    bmap = wheel_underestimation_map(prof, reference, "RL", threshold=0.03)
    filled = bmap.counts > 0
    cols = np.arange(bmap.values.shape[1])[None, :].repeat(bmap.values.shape[0], axis=0)
    in_band = (cols >= 4) & (cols < 6)
    assert np.all(bmap.values[filled & in_band] == 100.0)
    assert np.all(bmap.values[filled & ~in_band] == 0.0)
    assert (filled & in_band).any() and (filled & ~in_band).any()

    binned = (bin_index(abs_kappa, bmap.x_edges) >= 0) & (bin_index(np.abs(prof.v_lon) * 3.6, bmap.y_edges) >= 0)
    unbinned = 100.0 * np.mean(underestimated(estimate[binned], reference[binned], 0.03))
    assert abs(bmap.global_value() - unbinned) <= 1e-12


# ---- 10 --------------------------------------------------------------------

@acceptance(10, "evaluate is byte-for-byte deterministic")
def test_criterion_10_determinism(tmp_path):
    geo = default_geometry()
    track, can = synthetic_drive(geo, duration=40.0, shift=0.2, gps_noise=0.01, slip=0.05, seed=7)
    c2io.write_track(tmp_path / "track.csv", track)
    c2io.write_csv(tmp_path / "can.csv", {"t[s]": can.t, **can.channels})
    (tmp_path / "vehicle.toml").write_text(c2io.format_vehicle(geo))
    runs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        argv = ["evaluate", "--track", str(tmp_path / "track.csv"), "--can", str(tmp_path / "can.csv"),
                "--vehicle", str(tmp_path / "vehicle.toml"), "--out-dir", str(out), "--lambda", "0.5",
                "--max", "40"]
        assert main(argv) == 0
        runs.append(out)
    names = sorted(os.listdir(runs[0]))
    assert names == sorted(os.listdir(runs[1])) and len(names) > 10
    match, mismatch, errors = filecmp.cmpfiles(runs[0], runs[1], names, shallow=False)
    assert mismatch == [] and errors == []
