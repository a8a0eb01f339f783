"""C2 trajectories from sampled tracks, and kinematic profiles extracted from them.

A :class:`SampledTrack` (e.g. RTK GPS at ~10 Hz) is turned into a
:class:`SmoothTrajectory` by fitting a cubic smoothing spline per coordinate.
Derivatives are always taken analytically from the spline. Stops (speed
below ``v_eps``) are detected on the spline and bridged by a constant fill
tangent when the tangent limits on both sides agree; reverse-gear segments
are inferred from direction flips across stops.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline, PPoly, make_smoothing_spline
from scipy.optimize import brentq

from . import core
from .core import Pose2Derivs
from .errors import (
    InputError,
    NonMonotoneTime,
    OutOfDomain,
    TooFewSamples,
    UnresolvableInterval,
)
from .vehicle import VehicleGeometry

log = logging.getLogger(__name__)

DEFAULT_V_EPS = 0.05
DEFAULT_THETA_FILL = np.deg2rad(5.0)
MIN_SAMPLES = 4


@dataclass(frozen=True)
class SampledTrack:
    """Time-stamped planar positions with optional quality and reverse flags."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    quality: np.ndarray = None
    reverse: np.ndarray = None

    def __post_init__(self):
        for name in ("t", "x", "y"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        n = self.t.size
        if self.x.size != n or self.y.size != n:
            raise InputError("t, x and y must have equal length")
        for name in ("quality", "reverse"):
            flags = getattr(self, name)
            if flags is not None:
                flags = np.asarray(flags).ravel().astype(bool)
                if flags.size != n:
                    raise InputError(f"{name} flags must have one entry per sample")
                object.__setattr__(self, name, flags)
        if not (np.all(np.isfinite(self.t)) and np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise InputError("track samples must be finite")
        bad = np.flatnonzero(np.diff(self.t) <= 0)
        if bad.size:
            i = int(bad[0]) + 1
            raise NonMonotoneTime(f"timestamp of sample {i} ({self.t[i]!r}) is not increasing", index=i)

    def __len__(self):
        return self.t.size

    @property
    def xy(self):
        return np.column_stack([self.x, self.y])

    def subset(self, index):
        pick = lambda a: None if a is None else a[index]  # noqa: E731
        return SampledTrack(self.t[index], self.x[index], self.y[index], pick(self.quality), pick(self.reverse))


@dataclass(frozen=True)
class ReverseGear:
    """Piecewise-constant reverse flag R(t); ``values[i]`` holds from ``times[i]`` on."""

    times: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1
        return self.values[np.clip(idx, 0, None)]

    @classmethod
    def constant(cls, t_start, value=False):
        return cls(np.array([float(t_start)]), np.array([bool(value)]))

    @classmethod
    def from_flags(cls, t, flags):
        flags = np.asarray(flags, dtype=bool)
        change = np.flatnonzero(np.diff(flags.astype(int))) + 1
        idx = np.concatenate([[0], change])
        return cls(np.asarray(t, dtype=float)[idx], flags[idx])


@dataclass(frozen=True)
class StopInterval:
    """Maximal interval with speed below ``v_eps``.

    ``before``/``after`` are the unit motion directions at the interval ends
    (``None`` at the data boundary). ``t_fill`` is the constant front tangent
    used inside the interval, or ``None`` when the interval is unresolvable.
    """

    t0: float
    t1: float
    before: np.ndarray = None
    after: np.ndarray = None
    t_fill: np.ndarray = None

    @property
    def resolvable(self):
        return self.t_fill is not None

    def contains(self, t):
        t = np.asarray(t, dtype=float)
        return (t >= self.t0) & (t <= self.t1)


@dataclass(frozen=True)
class SmoothTrajectory:
    knots: np.ndarray
    spline: PPoly
    reverse: ReverseGear
    stops: tuple = ()
    explicit_reverse: bool = False
    v_eps: float = DEFAULT_V_EPS
    theta_fill: float = DEFAULT_THETA_FILL
    _d1: PPoly = field(init=False, repr=False, compare=False)
    _d2: PPoly = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_d1", self.spline.derivative(1))
        object.__setattr__(self, "_d2", self.spline.derivative(2))

    @property
    def t_start(self):
        return float(self.knots[0])

    @property
    def t_end(self):
        return float(self.knots[-1])

    def _check_domain(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(~np.isfinite(t)) or np.any(t < self.t_start) or np.any(t > self.t_end):
            raise OutOfDomain(f"time outside trajectory domain [{self.t_start}, {self.t_end}]")
        return t

    def position(self, t):
        return self.spline(self._check_domain(t))

    def velocity(self, t):
        return self._d1(self._check_domain(t))

    def acceleration(self, t):
        return self._d2(self._check_domain(t))

    def speed(self, t):
        return np.linalg.norm(self.velocity(t), axis=-1)

    def stop_index(self, t):
        """Index into ``stops`` for each time, -1 where the vehicle moves."""
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, -1, dtype=int)
        for i, stop in enumerate(self.stops):
            out[stop.contains(t) & (out < 0)] = i
        return out

    def tangent(self, t):
        """Front-pointing unit tangent, using the fill tangent inside stops."""
        t = self._check_domain(t)
        idx = self.stop_index(t)
        vel = self._d1(t)
        speed = np.linalg.norm(vel, axis=-1)
        sign = np.where(self.reverse(t), -1.0, 1.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            T = sign[..., None] * vel / speed[..., None]
        for i in np.unique(idx[idx >= 0]):
            stop = self.stops[i]
            if not stop.resolvable:
                raise UnresolvableInterval(f"tangent undefined on stop [{stop.t0:.6g}, {stop.t1:.6g}] s")
            T[idx == i] = stop.t_fill
        return T

    def arc_length(self, oversample=10):
        """Cumulative arc length on a refined grid; returns ``(times, s)``."""
        grid = refine_grid(self.knots, oversample)
        speed = np.linalg.norm(self._d1(grid), axis=-1)
        ds = 0.5 * (speed[1:] + speed[:-1]) * np.diff(grid)
        return grid, np.concatenate([[0.0], np.cumsum(ds)])


def refine_grid(knots, oversample):
    """Knots plus ``oversample - 1`` evenly spaced points inside every interval."""
    knots = np.asarray(knots, dtype=float)
    frac = np.arange(oversample) / oversample
    fine = (knots[:-1, None] + np.diff(knots)[:, None] * frac).ravel()
    return np.concatenate([fine, knots[-1:]])


def _spline(track: SampledTrack, smoothing: float) -> PPoly:
    xy = track.xy
    if smoothing == 0:
        return CubicSpline(track.t, xy, axis=0, bc_type="natural")
    parts = [PPoly.from_spline(make_smoothing_spline(track.t, xy[:, k], lam=smoothing)) for k in range(2)]
    # both coordinates share knots; stack into one vector-valued piecewise polynomial
    c = np.stack([parts[0].c, parts[1].c], axis=-1)
    return PPoly(c, parts[0].x)


def fit_c2(track: SampledTrack, smoothing: float = 0.0, v_eps: float = DEFAULT_V_EPS,
           theta_fill: float = DEFAULT_THETA_FILL) -> SmoothTrajectory:
    """Fit a C2 trajectory through ``track``.

    ``smoothing`` is the roughness penalty weight of the cubic smoothing
    spline; 0 gives the natural cubic interpolant. Stops and the reverse-gear
    function are resolved before returning.
    """
    if len(track) < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples, got {len(track)}")
    if not (smoothing >= 0 and np.isfinite(smoothing)):
        raise InputError("smoothing must be a finite non-negative number")
    if not v_eps > 0:
        raise InputError("v_eps must be positive")
    spline = _spline(track, smoothing)
    explicit = track.reverse is not None
    gear = ReverseGear.from_flags(track.t, track.reverse) if explicit else ReverseGear.constant(track.t[0])
    traj = SmoothTrajectory(track.t.copy(), spline, gear, (), explicit, v_eps, theta_fill)
    traj = replace(traj, stops=tuple(detect_stops(traj, v_eps, theta_fill)))
    traj = replace(traj, reverse=infer_reverse(traj))
    return replace(traj, stops=tuple(detect_stops(traj, v_eps, theta_fill)))


def eval_derivs(traj: SmoothTrajectory, t) -> Pose2Derivs:
    t = traj._check_domain(t)
    return Pose2Derivs(traj.spline(t), traj._d1(t), traj._d2(t), traj.reverse(t))


def _low_speed_intervals(traj, v_eps, oversample=8):
    grid = refine_grid(traj.knots, oversample)
    excess = lambda t: float(np.sum(traj._d1(t) ** 2) - v_eps**2)  # noqa: E731
    below = np.sum(traj._d1(grid) ** 2, axis=-1) < v_eps**2
    if not below.any():
        return []
    edges = np.diff(np.concatenate([[0], below.astype(int), [0]]))
    starts, ends = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1) - 1
    out = []
    for i0, i1 in zip(starts, ends):
        t0 = grid[0] if i0 == 0 else brentq(excess, grid[i0 - 1], grid[i0], xtol=1e-12)
        t1 = grid[-1] if i1 == grid.size - 1 else brentq(excess, grid[i1], grid[i1 + 1], xtol=1e-12)
        out.append((float(t0), float(t1), i0 == 0, i1 == grid.size - 1))
    return out


def _angle(u, w):
    return float(np.arctan2(abs(core.det2(u, w)), np.dot(u, w)))


def detect_stops(traj: SmoothTrajectory, v_eps: float = DEFAULT_V_EPS,
                 theta_fill: float = DEFAULT_THETA_FILL) -> list:
    """Maximal low-speed intervals with their fill tangents.

    The front tangent just before and just after each interval is compared
    using the trajectory's current reverse function; if they agree within
    ``theta_fill`` the interval gets their normalized mean as fill tangent,
    otherwise it is unresolvable. Intervals touching the data boundary take
    the single available side.
    """
    if not v_eps > 0:
        raise InputError("v_eps must be positive")
    stops = []
    for t0, t1, at_start, at_end in _low_speed_intervals(traj, v_eps):
        before = None if at_start else _unit(traj._d1(t0))
        after = None if at_end else _unit(traj._d1(t1))
        fronts = []
        if before is not None:
            fronts.append(before * (-1.0 if traj.reverse(t0) else 1.0))
        if after is not None:
            fronts.append(after * (-1.0 if traj.reverse(t1) else 1.0))
        t_fill = None
        if len(fronts) == 1:
            t_fill = fronts[0]
        elif len(fronts) == 2 and _angle(*fronts) <= theta_fill:
            t_fill = _unit(fronts[0] + fronts[1])
        stops.append(StopInterval(t0, t1, before, after, t_fill))
    return stops


def _unit(v):
    return np.asarray(v, dtype=float) / np.linalg.norm(v)


def infer_reverse(traj: SmoothTrajectory) -> ReverseGear:
    """Reverse-gear function from direction changes across stops.

    R flips across a stop iff the motion directions on its two sides differ
    by more than 90 degrees, which keeps the front tangent continuous through
    cusps. Changes within ``theta_fill`` of 90 degrees are ambiguous and keep
    the previous R. The first moving segment is taken as forward. Explicit flags from
    the input track are returned unchanged.
    """
    if traj.explicit_reverse:
        return traj.reverse
    times, values = [traj.t_start], [False]
    for stop in traj.stops:
        if stop.before is None or stop.after is None:
            continue
        cos = float(np.dot(stop.before, stop.after))
        if abs(cos) < np.sin(traj.theta_fill):
            log.warning("ambiguous direction change across stop at %.3f-%.3f s; keeping R=%d",
                        stop.t0, stop.t1, values[-1])
        elif cos < 0:
            times.append(stop.t1)
            values.append(not values[-1])
    return ReverseGear(np.array(times), np.array(values))


@dataclass(frozen=True)
class KinematicProfile:
    """Model quantities sampled at ``t``; per-wheel arrays keyed by wheel name."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    reverse: np.ndarray
    in_stop: np.ndarray
    v_lon: np.ndarray
    v_lat: np.ndarray
    a_lon: np.ndarray
    a_lat: np.ndarray
    kappa: np.ndarray
    heading: np.ndarray
    heading_front: np.ndarray
    yaw_rate: np.ndarray
    delta_center: np.ndarray
    delta_swa: np.ndarray
    delta: dict
    v: dict
    rho_dot: dict

    def __len__(self):
        return self.t.size

    def columns(self):
        """Ordered ``{header: values}`` with units in the headers."""
        cols = {
            "t[s]": self.t,
            "x[m]": self.x,
            "y[m]": self.y,
            "reverse[-]": self.reverse.astype(float),
            "stop[-]": self.in_stop.astype(float),
            "v_lon[m/s]": self.v_lon,
            "v_lat[m/s]": self.v_lat,
            "a_lon[m/s2]": self.a_lon,
            "a_lat[m/s2]": self.a_lat,
            "kappa[1/m]": self.kappa,
            "heading[rad]": self.heading,
            "heading_front[rad]": self.heading_front,
            "yaw_rate[rad/s]": self.yaw_rate,
            "delta_center[rad]": self.delta_center,
            "delta_swa[deg]": self.delta_swa,
        }
        for name in self.delta:
            cols[f"delta_{name}[rad]"] = self.delta[name]
            cols[f"v_{name}[m/s]"] = self.v[name]
            cols[f"rho_dot_{name}[rad/s]"] = self.rho_dot[name]
        return cols

    def channel(self, name):
        """Look up a column by its unit-less name, e.g. ``"v_FL"`` or ``"delta_swa"``."""
        for header, values in self.columns().items():
            if header.split("[")[0] == name:
                return values
        raise KeyError(name)

    def select(self, mask):
        sub = lambda d: {k: v[mask] for k, v in d.items()}  # noqa: E731
        plain = {f: getattr(self, f)[mask] for f in self.__dataclass_fields__ if f not in ("delta", "v", "rho_dot")}
        return KinematicProfile(**plain, delta=sub(self.delta), v=sub(self.v), rho_dot=sub(self.rho_dot))


def extract_profile(traj: SmoothTrajectory, geometry: VehicleGeometry, sample_times,
                    skip_unresolvable: bool = False) -> KinematicProfile:
    """Evaluate every model quantity of ``traj`` at ``sample_times``.

    Inside resolved stops the fill tangent replaces the velocity direction:
    speeds and accelerations are projections onto it, and curvature is
    interpolated linearly between its values at the stop boundaries.
    Samples in unresolvable stops raise, or are dropped with
    ``skip_unresolvable=True``.
    """
    t = traj._check_domain(np.atleast_1d(np.asarray(sample_times, dtype=float)))
    stop_idx = traj.stop_index(t)
    bad = np.zeros(t.shape, dtype=bool)
    for i, stop in enumerate(traj.stops):
        if not stop.resolvable:
            bad |= stop_idx == i
    if bad.any():
        if not skip_unresolvable:
            k = int(np.flatnonzero(bad)[0])
            raise UnresolvableInterval(f"sample at t={t[k]:.6g} s lies in an unresolvable stop")
        t, stop_idx = t[~bad], stop_idx[~bad]

    p = eval_derivs(traj, t)
    n = t.size
    moving = stop_idx < 0
    T = np.empty((n, 2))
    v_lon, a_lon, a_lat, kappa = (np.empty(n) for _ in range(4))
    speed = np.linalg.norm(p.velocity, axis=-1)

    if moving.any():
        pm = Pose2Derivs(p.position[moving], p.velocity[moving], p.acceleration[moving], p.reverse[moving])
        T[moving] = core.tangent_frame(pm).T
        v_lon[moving] = core.longitudinal_speed(pm)
        a_lon[moving], a_lat[moving] = core.accelerations(pm)
        kappa[moving] = core.curvature(pm)

    for i in np.unique(stop_idx[~moving]):
        stop = traj.stops[i]
        sel = stop_idx == i
        T[sel] = stop.t_fill
        v_lon[sel] = p.velocity[sel] @ stop.t_fill
        a_lon[sel] = p.acceleration[sel] @ stop.t_fill
        kappa[sel] = _stop_curvature(traj, stop, t[sel])
        a_lat[sel] = kappa[sel] * v_lon[sel] ** 2
        speed[sel] = np.abs(v_lon[sel])

    motion_dir = np.where((v_lon < 0)[:, None], -T, T)
    heading = np.where(moving, core.direction_heading(p.velocity, geometry.north),
                       core.direction_heading(motion_dir, geometry.north))
    delta, v, rho = {}, {}, {}
    for name, mount in geometry.mounts.items():
        delta[name] = core.wheel_steer_angle(kappa, mount)
        v[name] = speed * core.wheel_speed_factor(kappa, mount)
        rho[name] = core.wheel_angular_rate(v[name], mount)
    delta_center = core.wheel_steer_angle(kappa, geometry.center_mount)
    return KinematicProfile(
        t=t,
        x=p.position[:, 0],
        y=p.position[:, 1],
        reverse=np.asarray(traj.reverse(t), dtype=bool),
        in_stop=~moving,
        v_lon=v_lon,
        v_lat=np.zeros(n),
        a_lon=a_lon,
        a_lat=a_lat,
        kappa=kappa,
        heading=heading,
        heading_front=core.direction_heading(T, geometry.north),
        yaw_rate=kappa * speed,
        delta_center=delta_center,
        delta_swa=geometry.steering(delta_center),
        delta=delta,
        v=v,
        rho_dot=rho,
    )


def _stop_curvature(traj, stop, t):
    ends = []
    if stop.before is not None:
        ends.append(stop.t0)
    if stop.after is not None:
        ends.append(stop.t1)
    if not ends:
        return np.zeros(t.shape)
    k = core.curvature(eval_derivs(traj, np.array(ends)))
    if len(ends) == 1:
        return np.full(t.shape, k[0])
    return np.interp(t, ends, k)
