import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from c2model.calibration import SteeringPolynomial
from c2model.errors import NonMonotoneTime, NonPositiveStep, OutOfRange, SteeringOutOfRange
from c2model.forward import ControlProfile, PoseState, control_curvature, integrate, integrate_poses, roundtrip
from c2model.synthetic import circle_track, default_geometry, line_track, s_curve_track
from c2model.trajectory import fit_c2
from c2model.vehicle import VehicleGeometry

GEO = VehicleGeometry.four_wheel(2.5, 1.5, 0.3)  # identity steering on +-0.7 rad
EAST = PoseState([0.0, 0.0], [1.0, 0.0])


def constant_controls(duration, swa, v, n=2):
    t = np.linspace(0.0, duration, n)
    return ControlProfile(t, np.full(n, swa), np.full(n, v))


def circle_closure(step):
    ctl = constant_controls(4 * np.pi, np.arctan(0.25), 5.0)
    _, pos, _ = integrate_poses(ctl, GEO, EAST, step)
    return float(np.linalg.norm(pos[-1] - pos[0]))


def test_straight_line():
    ctl = constant_controls(10.0, 0.0, 10.0, n=101)
    track = integrate(ctl, GEO, EAST, 1e-3)
    assert track.x[-1] == pytest.approx(100.0, abs=1e-9)
    assert np.max(np.abs(track.y)) < 1e-9
    np.testing.assert_array_equal(track.t, ctl.t)


def test_circle_closure_and_radius():
    assert circle_closure(1e-3) < 1e-6
    ctl = constant_controls(4 * np.pi, np.arctan(0.25), 5.0, n=401)
    _, pos, _ = integrate_poses(ctl, GEO, EAST, 1e-3)
    center = np.array([0.0, 10.0])
    np.testing.assert_allclose(np.linalg.norm(pos - center, axis=1), 10.0, atol=1e-9)


def test_fourth_order_convergence():
    errors = [circle_closure(h) for h in (0.2, 0.1, 0.05)]
    assert errors[-1] > 1e-12
    assert errors[0] / errors[1] >= 8 and errors[1] / errors[2] >= 8


def test_zero_speed_stays_put():
    ctl = constant_controls(5.0, 0.3, 0.0, n=11)
    _, pos, tan = integrate_poses(ctl, GEO, PoseState([1.0, 2.0], [0.0, 1.0]), 1e-2)
    np.testing.assert_array_equal(pos, np.tile([1.0, 2.0], (11, 1)))
    np.testing.assert_array_equal(tan, np.tile([0.0, 1.0], (11, 1)))


def test_unit_tangent_and_speed_consistency():
    t = np.linspace(0, 20, 201)
    ctl = ControlProfile(t, 0.3 * np.sin(t / 3), 8 + 2 * np.cos(t / 5))
    _, pos, tan = integrate_poses(ctl, GEO, EAST, 1e-3)
    np.testing.assert_allclose(np.linalg.norm(tan, axis=1), 1.0, atol=1e-12)
    fine = ControlProfile(np.linspace(0, 20, 20001), 0.3 * np.sin(np.linspace(0, 20, 20001) / 3),
                          8 + 2 * np.cos(np.linspace(0, 20, 20001) / 5))
    _, pos_f, _ = integrate_poses(fine, GEO, EAST, 1e-3)
    length = np.sum(np.linalg.norm(np.diff(pos_f, axis=0), axis=1))
    # exact integral of |v_lon| = 160 + 10 sin(4)
    assert length == pytest.approx(160 + 10 * np.sin(4.0), rel=1e-6)


@settings(max_examples=20, deadline=None)
@given(angle=st.floats(-np.pi, np.pi), dx=st.floats(-100, 100), dy=st.floats(-100, 100))
def test_rigid_equivariance(angle, dx, dy):
    t = np.linspace(0, 5, 26)
    ctl = ControlProfile(t, 0.2 * np.sin(t), 5 + t)
    _, base, _ = integrate_poses(ctl, GEO, EAST, 1e-2)
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    _, moved, _ = integrate_poses(ctl, GEO, PoseState([dx, dy], rot @ [1.0, 0.0]), 1e-2)
    np.testing.assert_allclose(moved, base @ rot.T + [dx, dy], atol=1e-9)


def test_reverse_controls_trace_backward():
    t = np.linspace(0, 6, 61)
    swa = 0.2 * np.sin(t)
    _, fwd, fwd_T = integrate_poses(ControlProfile(t, swa, np.full(t.size, 4.0)), GEO, EAST, 1e-3)
    _, back, back_T = integrate_poses(ControlProfile(t, swa, np.full(t.size, -4.0)), GEO, EAST, 1e-3)
    # mirrored about the initial lateral axis, vehicle still facing +x at the start
    np.testing.assert_allclose(back[:, 0], -fwd[:, 0], atol=1e-9)
    np.testing.assert_allclose(back[:, 1], fwd[:, 1], atol=1e-9)
    assert np.all(back_T[:, 0] > 0)


def test_hold_mode_uses_left_value():
    t = np.array([0.0, 1.0, 2.0])
    ctl = ControlProfile(t, [0.0, 0.0, 0.0], [1.0, 3.0, 100.0], mode="hold")
    _, pos, _ = integrate_poses(ctl, GEO, EAST, 0.1)
    np.testing.assert_allclose(pos[:, 0], [0.0, 1.0, 4.0], atol=1e-12)


def test_output_at_irregular_control_times():
    t = np.array([0.0, 0.0137, 0.5, 1.25])
    ctl = ControlProfile(t, np.zeros(4), np.full(4, 2.0))
    _, pos, _ = integrate_poses(ctl, GEO, EAST, 0.1)
    np.testing.assert_allclose(pos[:, 0], 2 * t, atol=1e-12)


def test_errors():
    ctl = constant_controls(1.0, 0.0, 1.0)
    with pytest.raises(NonPositiveStep):
        integrate(ctl, GEO, EAST, 0.0)
    with pytest.raises(OutOfRange):
        integrate(constant_controls(1.0, 5.0, 1.0), GEO, EAST, 0.1)
    wide = VehicleGeometry.four_wheel(2.5, 1.5, 0.3, SteeringPolynomial.linear(1.0, -2.0, 2.0))
    with pytest.raises(SteeringOutOfRange):
        control_curvature(1.8, wide)
    with pytest.raises(NonMonotoneTime):
        ControlProfile([0, 1, 1], [0, 0, 0], [1, 1, 1])


def test_control_curvature_closed_form():
    assert control_curvature(np.arctan(0.25), GEO) == pytest.approx(0.1, rel=1e-12)


# ---- roundtrip -------------------------------------------------------------

def test_roundtrip_straight():
    traj = fit_c2(line_track(speed=10.0, duration=10.0, rate=10.0, direction=(3, 4)))
    error, _ = roundtrip(traj, default_geometry())
    assert error < 1e-6


def test_roundtrip_circle_100m():
    traj = fit_c2(circle_track(radius=20.0, speed=10.0, duration=10.0, rate=100.0))
    error, track = roundtrip(traj, default_geometry())
    assert error < 0.1
    assert len(track) == traj.knots.size


def test_roundtrip_s_curve_100m():
    geo = default_geometry()
    traj = fit_c2(s_curve_track(geo, speed=10.0, length=100.0))
    error, _ = roundtrip(traj, geo)
    assert error < 0.1
