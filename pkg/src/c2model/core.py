"""Closed-form kinematic quantities of the C2 model at single time instants.

All functions accept either one instant (vectors of shape ``(2,)``) or a
batch (arrays of shape ``(n, 2)``, reverse flags of shape ``(n,)``); the
results have the matching scalar or ``(n,)`` shape.

Sign conventions:

* ``T`` points toward the vehicle front, ``N`` is ``T`` rotated by +90 deg.
* Curvature is positive for left turns when driving forward.
* Lateral wheel offsets ``d_lat`` are positive to the RIGHT of the vehicle
  (along ``-N``); longitudinal offsets ``d_lon`` are measured forward from
  the rear-axle center.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, WheelAtRotationCenter, ZeroVelocity

#: Speeds below this are treated as standstill by the pointwise formulas.
ZERO_SPEED = 1e-9
ROTATION_CENTER_TOL = 1e-12


@dataclass(frozen=True)
class Pose2Derivs:
    """Position, velocity, acceleration and reverse flag at one or many instants."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    reverse: np.ndarray = field(default=False)

    def __post_init__(self):
        for name in ("position", "velocity", "acceleration"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape[-1:] != (2,):
                raise InputError(f"{name} must have a trailing axis of length 2")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{name} has non-finite components")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "reverse", np.asarray(self.reverse, dtype=bool))


@dataclass(frozen=True)
class TangentFrame:
    T: np.ndarray
    N: np.ndarray


@dataclass(frozen=True)
class WheelMount:
    """Wheel position relative to the rear-axle center, plus tire radius."""

    d_lon: float
    d_lat: float
    tire_radius: float

    def __post_init__(self):
        if not (np.isfinite(self.d_lon) and np.isfinite(self.d_lat)):
            raise InputError("wheel offsets must be finite")
        if not self.tire_radius > 0:
            raise InputError("tire_radius must be positive")


@dataclass(frozen=True)
class KinematicSample:
    """Model quantities at one or many instants.

    Per-wheel entries are keyed by wheel name (e.g. ``"FL"``).
    """

    t: np.ndarray
    v_lon: np.ndarray
    v_lat: np.ndarray
    a_lon: np.ndarray
    a_lat: np.ndarray
    kappa: np.ndarray
    heading_psi: np.ndarray
    yaw_rate: np.ndarray
    delta: dict
    v: dict
    rho_dot: dict


def _sign(reverse):
    return np.where(reverse, -1.0, 1.0)


def det2(a, b):
    """``det[a, b]`` for (batches of) 2-vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def rot90(v):
    """Rotate (batches of) 2-vectors by +90 degrees."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _speed(p, check=True):
    speed = np.linalg.norm(p.velocity, axis=-1)
    if check and np.any(speed < ZERO_SPEED):
        raise ZeroVelocity("velocity vanishes; tangent undefined (use the stop fill rule)")
    return speed


def tangent_frame(p: Pose2Derivs) -> TangentFrame:
    speed = _speed(p)
    T = _sign(p.reverse)[..., None] * p.velocity / speed[..., None]
    return TangentFrame(T=T, N=rot90(T))


def longitudinal_speed(p: Pose2Derivs):
    """Signed speed along the vehicle's front direction; negative when reversing."""
    return _sign(p.reverse) * _speed(p, check=False)


def accelerations(p: Pose2Derivs):
    """Return ``(a_lon, a_lat)`` in the vehicle frame."""
    speed = _speed(p)
    s = _sign(p.reverse)
    a_lon = s * np.sum(p.velocity * p.acceleration, axis=-1) / speed
    a_lat = s * det2(p.velocity, p.acceleration) / speed
    return a_lon, a_lat


def curvature(p: Pose2Derivs):
    speed = _speed(p)
    return _sign(p.reverse) * det2(p.velocity, p.acceleration) / speed**3


def tangent_rate(p: Pose2Derivs):
    """Time derivative of the unit tangent, ``dT/dt``."""
    speed = _speed(p)
    v, a = p.velocity, p.acceleration
    along = np.sum(v * a, axis=-1) / speed**3
    return _sign(p.reverse)[..., None] * (a / speed[..., None] - v * along[..., None])


def curvature_forms(p: Pose2Derivs):
    """The three equivalent curvature expressions.

    Returns ``(N . dT/ds, det[T, dT/dt] / v_lon, (-1)^R det[v, a] / |v|^3)``.
    Arc length ``s`` is measured along the vehicle front, ``ds/dt = v_lon``;
    with that orientation the three agree in reverse gear too.
    """
    frame = tangent_frame(p)
    v_lon = longitudinal_speed(p)
    t_dot = tangent_rate(p)
    dT_ds = t_dot / v_lon[..., None]
    along_normal = np.sum(frame.N * dT_ds, axis=-1)
    via_det = det2(frame.T, t_dot) / v_lon
    return along_normal, via_det, curvature(p)


def wheel_steer_angle(kappa, mount: WheelMount):
    """Steering angle that aligns a wheel at ``mount`` with its motion.

    Written as ``atan2(kappa*d_lon, 1 + kappa*d_lat)`` so straight driving
    (``kappa = 0``) is a regular point.
    """
    kappa = np.asarray(kappa, dtype=float)
    denom = 1.0 + kappa * mount.d_lat
    if np.any(np.abs(denom) < ROTATION_CENTER_TOL):
        raise WheelAtRotationCenter("wheel lies on the instantaneous center of rotation")
    return np.arctan2(kappa * mount.d_lon, denom)


def wheel_speed(p: Pose2Derivs, kappa, mount: WheelMount):
    """Ground speed of the wheel at ``mount`` (unsigned)."""
    return _speed(p, check=False) * wheel_speed_factor(kappa, mount)


def wheel_speed_factor(kappa, mount: WheelMount):
    """Ratio of wheel ground speed to rear-axle-center speed."""
    kappa = np.asarray(kappa, dtype=float)
    return np.hypot(kappa * mount.d_lon, 1.0 + kappa * mount.d_lat)


def wheel_angular_rate(v_wheel, mount: WheelMount):
    return np.asarray(v_wheel, dtype=float) / mount.tire_radius


def _wrap_heading(psi):
    # atan2 yields -pi for (-0.0, negative); fold onto the half-open (-pi, pi]
    return np.where(psi <= -np.pi, np.pi, psi)


def heading(p: Pose2Derivs, north=(0.0, 1.0)):
    """Heading of the motion direction relative to ``north`` (CCW positive), in (-pi, pi].

    This follows the velocity, so a reversing vehicle reports the direction it
    moves in; see :func:`front_heading` for the direction the vehicle faces.
    """
    _speed(p)
    return direction_heading(p.velocity, north)


def front_heading(p: Pose2Derivs, north=(0.0, 1.0)):
    """Heading of the vehicle front ``T`` relative to ``north``, in (-pi, pi]."""
    return direction_heading(tangent_frame(p).T, north)


def direction_heading(vec, north=(0.0, 1.0)):
    n = np.asarray(north, dtype=float)
    vec = np.asarray(vec, dtype=float)
    return _wrap_heading(np.arctan2(det2(n, vec), np.sum(n * vec, axis=-1)))


def heading_to_direction(psi, north=(0.0, 1.0)):
    """Unit vector at heading ``psi`` (inverse of :func:`direction_heading`)."""
    n = np.asarray(north, dtype=float)
    n = n / np.linalg.norm(n)
    c, s = np.cos(psi), np.sin(psi)
    return np.stack([c * n[0] - s * n[1], s * n[0] + c * n[1]], axis=-1)


def yaw_rate(p: Pose2Derivs):
    speed = _speed(p)
    return _sign(p.reverse) * det2(p.velocity, p.acceleration) / speed**2


def kinematic_sample(p: Pose2Derivs, mounts: dict, north=(0.0, 1.0), t=np.nan) -> KinematicSample:
    """Evaluate every pointwise model quantity for the wheels in ``mounts``."""
    kappa = curvature(p)
    a_lon, a_lat = accelerations(p)
    v_lon = longitudinal_speed(p)
    delta, v, rho = {}, {}, {}
    for name, mount in mounts.items():
        delta[name] = wheel_steer_angle(kappa, mount)
        v[name] = wheel_speed(p, kappa, mount)
        rho[name] = wheel_angular_rate(v[name], mount)
    return KinematicSample(
        t=np.asarray(t, dtype=float),
        v_lon=v_lon,
        v_lat=np.zeros_like(v_lon),
        a_lon=a_lon,
        a_lat=a_lat,
        kappa=kappa,
        heading_psi=heading(p, north),
        yaw_rate=yaw_rate(p),
        delta=delta,
        v=v,
        rho_dot=rho,
    )
