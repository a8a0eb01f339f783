"""Resampling of GPS-derived estimates and recorded reference channels onto a common grid."""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NonMonotoneTime, NoOverlap
from .trajectory import SmoothTrajectory, extract_profile
from .vehicle import VehicleGeometry

log = logging.getLogger(__name__)

DEFAULT_RATE = 50.0
DEFAULT_SEARCH = 1.0
DEFAULT_MAX_GAP = 0.5


@dataclass(frozen=True)
class TimeSeriesSet:
    """Channels sampled on one shared, strictly increasing time base."""

    t: np.ndarray
    channels: dict

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).ravel()
        if not np.all(np.isfinite(t)):
            raise InputError("timestamps must be finite")
        bad = np.flatnonzero(np.diff(t) <= 0)
        if bad.size:
            raise NonMonotoneTime(f"timestamp {int(bad[0]) + 1} is not increasing", index=int(bad[0]) + 1)
        chans = {}
        for name, values in self.channels.items():
            values = np.asarray(values, dtype=float).ravel()
            if values.size != t.size:
                raise InputError(f"channel {name} length differs from the time base")
            chans[name] = values
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "channels", chans)


@dataclass(frozen=True)
class SyncedRecording:
    """Estimated and reference channels on one common grid.

    Reference values are NaN wherever the source recording has a gap wider
    than the allowed maximum, so nothing is interpolated across dropouts.
    """

    t: np.ndarray
    estimate: dict
    reference: dict
    offset: float

    def pairs(self):
        """Channel names present on both sides."""
        return [name for name in self.reference if name in self.estimate]


def interp_with_gaps(t_src, values, t_dst, max_gap=DEFAULT_MAX_GAP):
    """Linear interpolation returning NaN outside the source range and inside gaps."""
    t_src = np.asarray(t_src, dtype=float)
    values = np.asarray(values, dtype=float)
    t_dst = np.asarray(t_dst, dtype=float)
    out = np.interp(t_dst, t_src, values)
    hi = np.clip(np.searchsorted(t_src, t_dst, side="left"), 1, t_src.size - 1)
    span = t_src[hi] - t_src[hi - 1]
    exact = np.isin(t_dst, t_src)
    bad = (t_dst < t_src[0]) | (t_dst > t_src[-1]) | ((span > max_gap) & ~exact)
    out[bad] = np.nan
    return out


def _grid(start, end, rate):
    n = int(np.floor((end - start) * rate + 1e-9)) + 1
    return start + np.arange(n) / rate


def estimate_offset(traj: SmoothTrajectory, geometry: VehicleGeometry, can: TimeSeriesSet,
                    rate=DEFAULT_RATE, search=DEFAULT_SEARCH, channel="v_lon", max_gap=DEFAULT_MAX_GAP):
    """Shift (s) to add to CAN timestamps that best aligns the two ``channel`` signals.

    Candidate shifts are multiples of ``1/rate`` within ``+-search``; the one
    with the largest Pearson correlation over the common samples wins.
    """
    if channel not in can.channels:
        log.warning("no %s channel for offset estimation; using offset 0", channel)
        return 0.0
    start, end = max(traj.t_start, can.t[0]), min(traj.t_end, can.t[-1])
    if end <= start:
        raise NoOverlap("GPS and CAN recordings do not overlap")
    grid = _grid(start, end, rate)
    est = extract_profile(traj, geometry, grid, skip_unresolvable=True)
    grid, ref_est = est.t, est.channel(channel)
    k_max = int(round(search * rate))
    best, best_shift = -np.inf, 0.0
    for k in range(-k_max, k_max + 1):
        shift = k / rate
        sig = interp_with_gaps(can.t + shift, can.channels[channel], grid, max_gap)
        ok = np.isfinite(sig)
        if ok.sum() < 3 or np.std(sig[ok]) == 0 or np.std(ref_est[ok]) == 0:
            continue
        r = np.corrcoef(sig[ok], ref_est[ok])[0, 1]
        if r > best:
            best, best_shift = r, shift
    if not np.isfinite(best):
        log.warning("offset search found no informative overlap; using offset 0")
    return best_shift


def synchronize(traj: SmoothTrajectory, geometry: VehicleGeometry, can: TimeSeriesSet, grid_rate=DEFAULT_RATE,
                offset=None, search=DEFAULT_SEARCH, max_gap=DEFAULT_MAX_GAP) -> SyncedRecording:
    """Put GPS-derived estimates and CAN channels on a uniform ``grid_rate`` grid.

    CAN timestamps are shifted by ``offset`` first (estimated by
    :func:`estimate_offset` when ``None``). Estimates are evaluated directly
    from the trajectory spline; CAN channels are linearly interpolated.
    Grid points in unresolvable stops are dropped.
    """
    if offset is None:
        offset = estimate_offset(traj, geometry, can, grid_rate, search, max_gap=max_gap)
    t_can = can.t + offset
    start, end = max(traj.t_start, t_can[0]), min(traj.t_end, t_can[-1])
    if end < start:
        raise NoOverlap("GPS and CAN recordings do not overlap")
    profile = extract_profile(traj, geometry, _grid(start, end, grid_rate), skip_unresolvable=True)
    estimate = {header.split("[")[0]: values for header, values in profile.columns().items()}
    reference = {name: interp_with_gaps(t_can, values, profile.t, max_gap) for name, values in can.channels.items()}
    return SyncedRecording(profile.t, estimate, reference, float(offset))
