"""Accuracy analysis of tracks: quality splitting, overlapping segments and binned maps."""

import logging
from dataclasses import dataclass

import numpy as np

from .forward import ControlProfile, PoseState, integrate_poses
from .trajectory import SampledTrack, SmoothTrajectory, eval_derivs, extract_profile
from .vehicle import VehicleGeometry

log = logging.getLogger(__name__)

MS_TO_KMH = 3.6

# bin edges matching the usual figure axes
A_LAT_EDGES = np.linspace(0.0, 6.0, 13)
A_LON_EDGES = np.linspace(0.0, 3.0, 13)
SPEED_ERROR_EDGES = np.linspace(0.0, 3.0, 13)  # km/h
KAPPA_EDGES = np.linspace(0.0, 1.0 / 20.0, 11)
SPEED_EDGES = np.linspace(20.0, 60.0, 11)  # km/h
LOCATION_CELL = 10.0  # m


def filter_quality(track: SampledTrack, gap_threshold: float = 1.0, quality_min: bool = True,
                   min_samples: int = 1) -> list:
    """Split ``track`` into connected runs of good samples.

    A sample is dropped when its quality flag is below ``quality_min``; runs
    are also broken wherever consecutive timestamps are more than
    ``gap_threshold`` apart. Runs shorter than ``min_samples`` are discarded.
    Without quality flags only the gap rule applies.
    """
    good = np.ones(len(track), dtype=bool)
    if track.quality is not None:
        good = track.quality >= quality_min
    # a new run starts after every bad sample and after every gap
    breaks = np.zeros(len(track), dtype=bool)
    breaks[1:] = np.diff(track.t) > gap_threshold
    out = []
    start = None
    for i in range(len(track) + 1):
        end_run = i == len(track) or not good[i] or breaks[i]
        if end_run and start is not None:
            if i - start >= min_samples:
                out.append(track.subset(slice(start, i)))
            start = None
        if i < len(track) and good[i] and start is None:
            start = i
    return out


@dataclass(frozen=True)
class Segment:
    t_start: float
    t_end: float
    s_start: float
    length: float


def segment_overlapping(traj: SmoothTrajectory, min_len: float = 5.0, max_len: float = 150.0,
                        stride: float = 5.0) -> list:
    """Overlapping arc-length windows of ``traj``.

    Window starts advance by ``stride`` from zero; for each start, lengths
    run from ``min_len`` to ``max_len`` in ``stride`` increments. Windows that
    would run past the end of the trajectory are dropped.
    """
    if not (0 < min_len <= max_len) or not stride > 0:
        raise ValueError("need 0 < min_len <= max_len and stride > 0")
    grid, s = traj.arc_length()
    total = s[-1]
    lengths = np.arange(min_len, max_len + 1e-9 * max_len, stride)
    starts = np.arange(0.0, total - min_len + 1e-9, stride) if total >= min_len - 1e-9 else np.zeros(0)
    segments = []
    for s0 in starts:
        ends = s0 + lengths[s0 + lengths <= total + 1e-9]
        if ends.size == 0:
            continue
        t0 = float(np.interp(s0, s, grid))
        for s1, t1 in zip(ends, np.interp(ends, s, grid)):
            segments.append(Segment(t0, float(t1), float(s0), float(s1 - s0)))
    return segments


@dataclass(frozen=True)
class SegmentStats:
    t_start: float
    t_end: float
    arc_length: float
    max_abs_a_lon: float
    max_abs_a_lat: float
    max_speed_error: float  # km/h, NaN without reference speed
    endpoint_error: float
    mean_abs_a_lon: float
    mean_abs_a_lat: float


def segment_stats(traj: SmoothTrajectory, geometry: VehicleGeometry, segments, reference_speed=None,
                  grid_dt: float = 0.02, step: float = 0.01) -> list:
    """Statistics and open-loop endpoint error ``E`` for every segment.

    Controls are extracted on a uniform ``grid_dt`` grid (plus the exact
    segment bounds) and integrated from the trajectory pose at each segment
    start. Segments sharing a start share one integration. Segments that
    touch an unresolvable stop are skipped. ``reference_speed`` is an optional
    ``(t, v_lon)`` pair used for the speed-error column.
    """
    blocked = [(s.t0, s.t1) for s in traj.stops if not s.resolvable]
    usable = [seg for seg in segments if not any(seg.t_start <= b1 and seg.t_end >= b0 for b0, b1 in blocked)]
    if len(usable) < len(segments):
        log.info("skipped %d segments crossing unresolvable stops", len(segments) - len(usable))
    if not usable:
        return []

    n_grid = int(np.floor((traj.t_end - traj.t_start) / grid_dt + 1e-9)) + 1
    grid = traj.t_start + grid_dt * np.arange(n_grid)
    bounds = [s.t_start for s in usable] + [s.t_end for s in usable]
    times = np.unique(np.clip(np.concatenate([grid, bounds, [traj.t_end]]), traj.t_start, traj.t_end))
    profile = extract_profile(traj, geometry, times, skip_unresolvable=True)
    t = profile.t
    speed_err = np.full(t.size, np.nan)
    if reference_speed is not None:
        ref_t, ref_v = (np.asarray(a, dtype=float) for a in reference_speed)
        ref = np.interp(t, ref_t, ref_v, left=np.nan, right=np.nan)
        speed_err = np.abs(profile.v_lon - ref) * MS_TO_KMH

    stats = []
    by_start = {}
    for seg in usable:
        by_start.setdefault(seg.t_start, []).append(seg)
    for t0, group in by_start.items():
        a = int(np.searchsorted(t, t0))
        b = int(np.searchsorted(t, max(s.t_end for s in group)))
        controls = ControlProfile(t[a:b + 1], profile.delta_swa[a:b + 1], profile.v_lon[a:b + 1])
        init = PoseState(eval_derivs(traj, t0).position, traj.tangent(t0))
        _, pos, _ = integrate_poses(controls, geometry, init, step)
        targets = eval_derivs(traj, np.array([s.t_end for s in group])).position
        for seg, target in zip(group, targets):
            k = int(np.searchsorted(t, seg.t_end))
            win = slice(a, k + 1)
            err = speed_err[win]
            stats.append(SegmentStats(
                t_start=seg.t_start,
                t_end=seg.t_end,
                arc_length=seg.length,
                max_abs_a_lon=float(np.max(np.abs(profile.a_lon[win]))),
                max_abs_a_lat=float(np.max(np.abs(profile.a_lat[win]))),
                max_speed_error=float(np.max(err)) if np.all(np.isfinite(err)) else float("nan"),
                endpoint_error=float(np.linalg.norm(pos[k - a] - target)),
                mean_abs_a_lon=float(np.mean(np.abs(profile.a_lon[win]))),
                mean_abs_a_lat=float(np.mean(np.abs(profile.a_lat[win]))),
            ))
    return stats


@dataclass(frozen=True)
class BinnedMap:
    """Per-cell aggregate over a 2-D grid of bins.

    ``values[j, i]`` belongs to ``y`` bin ``j`` and ``x`` bin ``i``; empty
    cells hold NaN and count 0. Samples outside the edges are not binned and
    are tallied in ``n_outside``.
    """

    x_name: str
    x_edges: np.ndarray
    y_name: str
    y_edges: np.ndarray
    values: np.ndarray
    counts: np.ndarray
    statistic: str = "mean"
    n_outside: int = 0

    def global_value(self):
        """Count-weighted average of all nonempty cells."""
        total = self.counts.sum()
        if total == 0:
            return float("nan")
        filled = self.counts > 0
        return float(np.sum(self.values[filled] * self.counts[filled]) / total)

    def cell(self, x, y):
        i, j = bin_index(x, self.x_edges), bin_index(y, self.y_edges)
        return self.values[j, i], int(self.counts[j, i])


def bin_index(values, edges):
    """Bin of each value; the last bin is closed on the right, -1 outside."""
    values = np.asarray(values, dtype=float)
    edges = np.asarray(edges, dtype=float)
    idx = np.searchsorted(edges, values, side="right") - 1
    idx = np.where(values == edges[-1], edges.size - 2, idx)
    return np.where((values < edges[0]) | (values > edges[-1]) | ~np.isfinite(values), -1, idx)


def binned_mean(x, y, values, x_edges, y_edges, x_name="x", y_name="y", statistic="mean") -> BinnedMap:
    x_edges = np.asarray(x_edges, dtype=float)
    y_edges = np.asarray(y_edges, dtype=float)
    values = np.asarray(values, dtype=float)
    ix, iy = bin_index(x, x_edges), bin_index(y, y_edges)
    inside = (ix >= 0) & (iy >= 0) & np.isfinite(values)
    shape = (y_edges.size - 1, x_edges.size - 1)
    flat = iy[inside] * shape[1] + ix[inside]
    counts = np.bincount(flat, minlength=shape[0] * shape[1]).reshape(shape)
    sums = np.bincount(flat, weights=values[inside], minlength=shape[0] * shape[1]).reshape(shape)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(counts > 0, sums / counts, np.nan)
    return BinnedMap(x_name, x_edges, y_name, y_edges, mean, counts, statistic, int(np.count_nonzero(~inside)))


def endpoint_error_map(stats, x: str = "max_abs_a_lat", y: str = "max_abs_a_lon",
                       x_edges=A_LAT_EDGES, y_edges=A_LON_EDGES) -> BinnedMap:
    """Mean endpoint error of the segments falling in each cell.

    ``x`` and ``y`` name :class:`SegmentStats` fields, e.g. ``max_abs_a_lat``
    against ``max_abs_a_lon`` or ``max_speed_error``.
    """
    xs = np.array([getattr(s, x) for s in stats], dtype=float)
    ys = np.array([getattr(s, y) for s in stats], dtype=float)
    err = np.array([s.endpoint_error for s in stats], dtype=float)
    return binned_mean(xs, ys, err, x_edges, y_edges, x, y, "mean endpoint error [m]")


def underestimated(estimate, reference, threshold: float = 0.03):
    """True where ``estimate`` falls below ``(1 - threshold) * reference``."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    return np.asarray(estimate, dtype=float) < (1.0 - threshold) * np.asarray(reference, dtype=float)


def underestimation_map(estimate, reference, x, y, x_edges, y_edges, threshold: float = 0.03,
                        x_name="x", y_name="y") -> BinnedMap:
    """Percentage of samples per cell where the estimate underestimates the reference."""
    estimate = np.asarray(estimate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    valid = np.isfinite(estimate) & np.isfinite(reference)
    pct = np.where(valid, 100.0 * underestimated(np.where(valid, estimate, 0), np.where(valid, reference, 0),
                                                 threshold), np.nan)
    return binned_mean(x, y, pct, x_edges, y_edges, x_name, y_name, f"% underestimated by > {threshold:.0%}")


def location_edges(values, cell: float = LOCATION_CELL):
    lo = np.floor(np.nanmin(values) / cell) * cell
    hi = np.ceil(np.nanmax(values) / cell) * cell
    if hi <= lo:
        hi = lo + cell
    return np.arange(lo, hi + 0.5 * cell, cell)


def wheel_underestimation_map(profile, reference, wheel: str, axes: str = "curvature_speed",
                              threshold: float = 0.03, x_edges=None, y_edges=None) -> BinnedMap:
    """Underestimation map of one wheel-speed channel of ``profile``.

    ``axes="curvature_speed"`` bins over ``|kappa|`` (1/m) and ``|v_lon|``
    (km/h); ``axes="location"`` bins over the ``x``/``y`` position.
    """
    estimate = profile.v[wheel]
    if axes == "curvature_speed":
        x, y = np.abs(profile.kappa), np.abs(profile.v_lon) * MS_TO_KMH
        names = ("abs_kappa[1/m]", "abs_v_lon[km/h]")
        x_edges = KAPPA_EDGES if x_edges is None else x_edges
        y_edges = SPEED_EDGES if y_edges is None else y_edges
    elif axes == "location":
        x, y = profile.x, profile.y
        names = ("x[m]", "y[m]")
        x_edges = location_edges(x) if x_edges is None else x_edges
        y_edges = location_edges(y) if y_edges is None else y_edges
    else:
        raise ValueError(f"unknown axes {axes!r}")
    return underestimation_map(estimate, reference, x, y, x_edges, y_edges, threshold, *names)
