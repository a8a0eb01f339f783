"""Synthetic tracks and recordings with known ground truth."""

import numpy as np

from .calibration import SteeringPolynomial
from .core import heading_to_direction, wheel_speed_factor
from .forward import ControlProfile, PoseState, integrate_poses
from .sync import TimeSeriesSet
from .trajectory import SampledTrack
from .vehicle import VehicleGeometry


def _times(duration, rate):
    return np.arange(int(round(duration * rate)) + 1) / rate


def circle_track(radius=20.0, speed=10.0, duration=10.0, rate=100.0, ccw=True):
    """Counterclockwise (or clockwise) circle about the origin starting at ``(radius, 0)``."""
    t = _times(duration, rate)
    phase = (1 if ccw else -1) * speed / radius * t
    return SampledTrack(t, radius * np.cos(phase), radius * np.sin(phase))


def line_track(speed=10.0, duration=10.0, rate=100.0, direction=(1.0, 0.0), origin=(0.0, 0.0)):
    t = _times(duration, rate)
    d = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
    return SampledTrack(t, origin[0] + speed * t * d[0], origin[1] + speed * t * d[1])


def cusp_track(rate=10.0, half_duration=5.0, depth=10.0, rise=2.5):
    """Forward approach, stop at a cusp, reverse away along a different branch.

    Semicubical parabola ``(-a*tau**2, b*tau**3)`` with ``tau = t - half_duration``:
    the vehicle drives forward toward +x, stops at the origin and backs away
    while still facing +x.
    """
    t = _times(2 * half_duration, rate)
    tau = t - half_duration
    a = depth / half_duration**2
    b = rise / half_duration**3
    return SampledTrack(t, -a * tau**2, b * tau**3)


def stop_and_go_track(rate=10.0, duration=12.0, heading=(1.0, 1.0), pause=(5.0, 7.0), speed=5.0):
    """Straight drive that comes to rest during ``pause`` and resumes in the same direction."""
    t = _times(duration, rate)
    t0, t1 = pause
    # smoothstep speed profile: speed -> 0 on [t0-1, t0], 0 -> speed on [t1, t1+1]
    tt = _times(duration, 1000.0)
    v = np.full(tt.shape, float(speed))
    down = (tt > t0 - 1) & (tt < t0)
    up = (tt > t1) & (tt < t1 + 1)
    ramp = lambda u: u * u * (3 - 2 * u)  # noqa: E731
    v[down] = speed * ramp(t0 - tt[down])
    v[(tt >= t0) & (tt <= t1)] = 0.0
    v[up] = speed * ramp(tt[up] - t1)
    s = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(tt))])
    s = np.interp(t, tt, s)
    d = np.asarray(heading, dtype=float) / np.linalg.norm(heading)
    return SampledTrack(t, s * d[0], s * d[1])


def turn_at_rest_track(rate=10.0):
    """East, full stop, then north: directions disagree across the stop."""
    t = _times(10.0, rate)
    s1 = np.clip(t, None, 5.0)
    s1 = 5.0 * s1 - 0.5 * s1**2  # decelerate to rest at t=5
    u = np.clip(t - 5.0, 0.0, None)
    s2 = 0.5 * u**2
    return SampledTrack(t, s1, s2)


def kappa_controls(geometry: VehicleGeometry, t, kappa, v_lon):
    """Control profile whose steering commands the given path curvature."""
    delta = np.arctan(geometry.wheelbase * np.asarray(kappa, dtype=float))
    return ControlProfile(t, geometry.steering(delta), v_lon)


def s_curve_track(geometry: VehicleGeometry, speed=10.0, length=100.0, peak_kappa=0.02, rate=100.0):
    """Two opposing turns of smoothly varying curvature, ``length`` metres long."""
    duration = length / speed
    t = _times(duration, rate)
    kappa = peak_kappa * np.sin(2 * np.pi * t / duration)
    controls = kappa_controls(geometry, t, kappa, np.full(t.shape, speed))
    _, pos, _ = integrate_poses(controls, geometry, PoseState([0.0, 0.0], [1.0, 0.0]), 1e-3)
    return SampledTrack(t, pos[:, 0], pos[:, 1])


def drive_truth(t):
    """Curvature (1/m) and speed (m/s) of the reference drive at times ``t``."""
    t = np.asarray(t, dtype=float)
    kappa = 0.045 * np.sin(2 * np.pi * t / 30.0) * np.sin(2 * np.pi * t / 70.0 + 0.4)
    v_lon = 11.0 + 3.0 * np.sin(2 * np.pi * t / 45.0)
    return kappa, v_lon


def synthetic_drive(geometry: VehicleGeometry, duration=120.0, gps_rate=10.0, can_rate=50.0, shift=0.0,
                    gps_noise=0.0, slip_wheel="RL", slip_kappa=0.03, slip=0.0, seed=0):
    """GPS track and CAN recording of one drive with known kinematics.

    CAN channels are exact model values except that ``slip_wheel`` spins
    ``(1 + slip)`` times faster whenever ``|kappa| > slip_kappa``. CAN
    timestamps are delayed by ``shift`` seconds relative to GPS.
    """
    rng = np.random.default_rng(seed)
    t_fine = _times(duration, 200.0)
    kappa, v_lon = drive_truth(t_fine)
    controls = kappa_controls(geometry, t_fine, kappa, v_lon)
    init = PoseState([0.0, 0.0], heading_to_direction(0.3, geometry.north))
    _, pos, _ = integrate_poses(controls, geometry, init, 1e-3)

    t_gps = _times(duration, gps_rate)
    x = np.interp(t_gps, t_fine, pos[:, 0]) + gps_noise * rng.standard_normal(t_gps.size)
    y = np.interp(t_gps, t_fine, pos[:, 1]) + gps_noise * rng.standard_normal(t_gps.size)
    track = SampledTrack(t_gps, x, y)

    t_can = _times(duration, can_rate)
    k, v = drive_truth(t_can)
    channels = {
        "delta_swa": geometry.steering(np.arctan(geometry.wheelbase * k)),
        "v_lon": v,
        "a_lat": k * v**2,
    }
    for name, mount in geometry.mounts.items():
        wheel = np.abs(v) * wheel_speed_factor(k, mount)
        if name == slip_wheel:
            wheel = np.where(np.abs(k) > slip_kappa, wheel * (1.0 + slip), wheel)
        channels[f"v_{name}"] = wheel
    return track, TimeSeriesSet(t_can + shift, channels)


def default_geometry():
    """Compact-car layout with an 859 deg/rad linear steering ratio."""
    return VehicleGeometry.four_wheel(2.63, 1.54, 0.316, SteeringPolynomial.linear(859.0, -0.6, 0.6))

