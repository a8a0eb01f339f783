"""Trajectories from steering wheel angle and longitudinal speed.

State is the rear-axle position and the unit front tangent ``T``::

    dT/dt  = kappa * v_lon * N,   N = rot90(T)
    dxi/dt = v_lon * T

with ``kappa = tan(delta) / wheelbase`` and ``delta`` the center wheel angle
obtained by inverting the vehicle's steering polynomial. Integration is
classical fixed-step RK4; ``T`` is projected back onto the unit circle after
every step.
"""

import math
from dataclasses import dataclass

import numpy as np

from .calibration import invert_steering
from .core import heading_to_direction
from .errors import InputError, NonMonotoneTime, NonPositiveStep, SteeringOutOfRange
from .trajectory import SampledTrack, SmoothTrajectory, eval_derivs, extract_profile
from .vehicle import VehicleGeometry

LINEAR = "linear"
HOLD = "hold"


@dataclass(frozen=True)
class ControlProfile:
    """Steering wheel angle (deg) and signed longitudinal speed (m/s) over time."""

    t: np.ndarray
    delta_swa: np.ndarray
    v_lon: np.ndarray
    mode: str = LINEAR

    def __post_init__(self):
        for name in ("t", "delta_swa", "v_lon"):
            arr = np.asarray(getattr(self, name), dtype=float).ravel()
            if not np.all(np.isfinite(arr)):
                raise InputError(f"control channel {name} has non-finite values")
            object.__setattr__(self, name, arr)
        if not (self.t.size == self.delta_swa.size == self.v_lon.size):
            raise InputError("control channels must have equal length")
        if self.t.size < 1:
            raise InputError("control profile is empty")
        bad = np.flatnonzero(np.diff(self.t) <= 0)
        if bad.size:
            raise NonMonotoneTime(f"control timestamp {int(bad[0]) + 1} is not increasing", index=int(bad[0]) + 1)
        if self.mode not in (LINEAR, HOLD):
            raise InputError(f"unknown interpolation mode {self.mode!r}")


@dataclass(frozen=True)
class PoseState:
    position: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(2)
        T = np.asarray(self.T, dtype=float).reshape(2)
        norm = np.linalg.norm(T)
        if not (np.all(np.isfinite(pos)) and np.isfinite(norm) and norm > 0):
            raise InputError("pose needs a finite position and a nonzero tangent")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "T", T / norm)

    @classmethod
    def from_heading(cls, x, y, heading, north=(0.0, 1.0)):
        """Pose facing ``heading`` rad counterclockwise from ``north``."""
        return cls(np.array([x, y], dtype=float), heading_to_direction(heading, north))


def control_curvature(delta_swa, geometry: VehicleGeometry):
    """Path curvature commanded by steering wheel angles (deg)."""
    delta = invert_steering(geometry.steering, delta_swa)
    if np.any(np.abs(delta) >= np.pi / 2):
        raise SteeringOutOfRange("center wheel angle must lie in (-pi/2, pi/2)")
    return np.tan(delta) / geometry.wheelbase


def _stage_controls(controls, geometry, step):
    """Curvature and speed at every RK4 stage time.

    Each control interval is split into an integer number of equal substeps,
    so output lands exactly on the control timestamps. Returns the substep
    sizes, per-substep ``(kappa, v)`` at the start/middle/end stages, and the
    substep index at which every control timestamp is reached.
    """
    t = controls.t
    counts = np.maximum(np.ceil(np.diff(t) / step - 1e-9).astype(int), 1)
    h = np.repeat(np.diff(t) / counts, counts)
    interval = np.repeat(np.arange(t.size - 1), counts)
    offsets = np.concatenate([np.arange(c) for c in counts]) if counts.size else np.zeros(0)
    t0 = t[interval] + offsets * h
    kappa_knots = control_curvature(controls.delta_swa, geometry)

    if controls.mode == HOLD:
        k = kappa_knots[interval]
        v = controls.v_lon[interval]
        stages = [(k, v)] * 3
    else:
        stages = []
        for frac in (0.0, 0.5, 1.0):
            ts = t0 + frac * h
            # curvature follows the interpolated steering wheel angle, not interpolated curvature
            swa = np.interp(ts, t, controls.delta_swa)
            stages.append((control_curvature(swa, geometry), np.interp(ts, t, controls.v_lon)))
    marks = np.concatenate([[0], np.cumsum(counts)])
    return h, stages, marks


def integrate_poses(controls: ControlProfile, geometry: VehicleGeometry, init: PoseState, step: float = 1e-3):
    """Integrate the forward model; returns ``(t, positions, tangents)`` at the control timestamps."""
    if not (np.isfinite(step) and step > 0):
        raise NonPositiveStep("integration step must be positive")
    h, stages, marks = _stage_controls(controls, geometry, step)
    (k0, v0), (k1, v1), (k2, v2) = [(a.tolist(), b.tolist()) for a, b in stages]
    h = h.tolist()

    x, y = float(init.position[0]), float(init.position[1])
    tx, ty = float(init.T[0]), float(init.T[1])
    n_out = controls.t.size
    pos = np.empty((n_out, 2))
    tan = np.empty((n_out, 2))
    pos[0], tan[0] = (x, y), (tx, ty)
    out = 1
    for i in range(len(h)):
        hi = h[i]
        # stage derivatives of (x, y, tx, ty); w = kappa * v is the yaw rate
        va, wa = v0[i], k0[i] * v0[i]
        vb, wb = v1[i], k1[i] * v1[i]
        vc, wc = v2[i], k2[i] * v2[i]

        d1 = (va * tx, va * ty, -wa * ty, wa * tx)
        s = 0.5 * hi
        x2, y2, tx2, ty2 = x + s * d1[0], y + s * d1[1], tx + s * d1[2], ty + s * d1[3]
        d2 = (vb * tx2, vb * ty2, -wb * ty2, wb * tx2)
        x3, y3, tx3, ty3 = x + s * d2[0], y + s * d2[1], tx + s * d2[2], ty + s * d2[3]
        d3 = (vb * tx3, vb * ty3, -wb * ty3, wb * tx3)
        x4, y4, tx4, ty4 = x + hi * d3[0], y + hi * d3[1], tx + hi * d3[2], ty + hi * d3[3]
        d4 = (vc * tx4, vc * ty4, -wc * ty4, wc * tx4)

        w6 = hi / 6.0
        x += w6 * (d1[0] + 2 * d2[0] + 2 * d3[0] + d4[0])
        y += w6 * (d1[1] + 2 * d2[1] + 2 * d3[1] + d4[1])
        tx += w6 * (d1[2] + 2 * d2[2] + 2 * d3[2] + d4[2])
        ty += w6 * (d1[3] + 2 * d2[3] + 2 * d3[3] + d4[3])
        norm = math.hypot(tx, ty)
        tx, ty = tx / norm, ty / norm

        if i + 1 == marks[out]:
            pos[out], tan[out] = (x, y), (tx, ty)
            out += 1
    return controls.t.copy(), pos, tan


def integrate(controls: ControlProfile, geometry: VehicleGeometry, init: PoseState, step: float = 1e-3) -> SampledTrack:
    """Open-loop trajectory for ``controls``, sampled at the control timestamps."""
    t, pos, _ = integrate_poses(controls, geometry, init, step)
    return SampledTrack(t, pos[:, 0], pos[:, 1])


def controls_from_trajectory(traj: SmoothTrajectory, geometry: VehicleGeometry, times=None, mode=LINEAR) -> ControlProfile:
    """Steering wheel angle and speed extracted from ``traj`` (defaults to its knot times)."""
    times = traj.knots if times is None else np.asarray(times, dtype=float)
    profile = extract_profile(traj, geometry, times)
    return ControlProfile(profile.t, profile.delta_swa, profile.v_lon, mode)


def initial_pose(traj: SmoothTrajectory, t=None) -> PoseState:
    t = traj.t_start if t is None else t
    return PoseState(eval_derivs(traj, t).position, traj.tangent(t))


def roundtrip(traj: SmoothTrajectory, geometry: VehicleGeometry, step: float = 1e-3, times=None):
    """Extract controls from ``traj``, re-integrate them, and return ``(E, integrated_track)``.

    ``E`` is the distance between the integrated and the trajectory's final positions.
    """
    controls = controls_from_trajectory(traj, geometry, times)
    track = integrate(controls, geometry, initial_pose(traj, controls.t[0]), step)
    target = eval_derivs(traj, controls.t[-1]).position
    error = float(np.hypot(track.x[-1] - target[0], track.y[-1] - target[1]))
    return error, track


def roundtrip_check(traj: SmoothTrajectory, geometry: VehicleGeometry, step: float = 1e-3, times=None) -> float:
    """Endpoint error of the analyze-then-integrate loop (m)."""
    return roundtrip(traj, geometry, step, times)[0]
