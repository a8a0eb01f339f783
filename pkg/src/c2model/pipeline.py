"""End-to-end accuracy evaluation of a GPS track against optional CAN reference channels."""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import evaluation as ev
from .calibration import compare_channels
from .errors import NoOverlap, TooFewSamples, ZeroReferenceEnergy
from .sync import DEFAULT_MAX_GAP, DEFAULT_RATE, TimeSeriesSet, estimate_offset, synchronize
from .trajectory import DEFAULT_THETA_FILL, DEFAULT_V_EPS, MIN_SAMPLES, SampledTrack, extract_profile, fit_c2
from .vehicle import VehicleGeometry

log = logging.getLogger(__name__)

#: reference channels compared against their model estimates, in report order
COMPARED = ("delta_swa", "v_lon", "v_FL", "v_FR", "v_RL", "v_RR", "a_lat")
WHEELS = ("FL", "FR", "RL", "RR")


@dataclass
class EvaluationConfig:
    smoothing: float = 0.0
    v_eps: float = DEFAULT_V_EPS
    theta_fill: float = DEFAULT_THETA_FILL
    gap_threshold: float = 1.0
    grid_rate: float = DEFAULT_RATE
    offset: float = None  # None: estimate from v_lon cross-correlation
    max_gap: float = DEFAULT_MAX_GAP
    step: float = 0.01
    min_len: float = 5.0
    max_len: float = 150.0
    stride: float = 5.0
    threshold: float = 0.03


@dataclass
class AccuracyReport:
    """Everything ``evaluate`` produces.

    ``columns`` holds the stacked per-sample table (estimates, and reference
    channels prefixed ``ref_`` when a CAN recording was given).
    """

    columns: dict
    comparisons: dict = field(default_factory=dict)
    segments: list = field(default_factory=list)
    maps: dict = field(default_factory=dict)
    offset: float = None
    has_reference: bool = False


def _stack(blocks):
    keys = list(blocks[0])
    return {k: np.concatenate([b[k] for b in blocks]) for k in keys}


def run_evaluation(track: SampledTrack, geometry: VehicleGeometry, can: TimeSeriesSet = None,
                   config: EvaluationConfig = None) -> AccuracyReport:
    config = config or EvaluationConfig()
    pieces = ev.filter_quality(track, config.gap_threshold, min_samples=MIN_SAMPLES)
    if not pieces:
        raise TooFewSamples("no connected sub-track with enough good samples")
    trajs = [fit_c2(p, config.smoothing, config.v_eps, config.theta_fill) for p in pieces]

    offset = config.offset
    if can is not None and offset is None:
        longest = max(trajs, key=lambda tr: tr.t_end - tr.t_start)
        offset = estimate_offset(longest, geometry, can, config.grid_rate, max_gap=config.max_gap)

    blocks, segments = [], []
    for k, traj in enumerate(trajs):
        reference_speed = None
        if can is not None:
            try:
                synced = synchronize(traj, geometry, can, config.grid_rate, offset, max_gap=config.max_gap)
            except NoOverlap:
                log.warning("sub-track %d has no CAN overlap; skipped", k)
                continue
            block = dict(synced.estimate)
            for name, values in synced.reference.items():
                block[f"ref_{name}"] = values
            if "v_lon" in synced.reference:
                reference_speed = (synced.t, synced.reference["v_lon"])
        else:
            n = int(np.floor((traj.t_end - traj.t_start) * config.grid_rate + 1e-9)) + 1
            grid = traj.t_start + np.arange(n) / config.grid_rate
            profile = extract_profile(traj, geometry, grid, skip_unresolvable=True)
            block = {h.split("[")[0]: v for h, v in profile.columns().items()}
        block = {"track": np.full(block["t"].size, float(k)), **block}
        blocks.append(block)
        windows = ev.segment_overlapping(traj, config.min_len, config.max_len, config.stride)
        segments.extend(ev.segment_stats(traj, geometry, windows, reference_speed,
                                         1.0 / config.grid_rate, config.step))
    if not blocks:
        raise NoOverlap("no sub-track overlaps the CAN recording")

    columns = _stack(blocks)
    report = AccuracyReport(columns, segments=segments, offset=offset, has_reference=can is not None)

    if can is not None:
        for name in COMPARED:
            if name not in can.channels:
                continue
            ref, est = columns[f"ref_{name}"], columns[name]
            ok = np.isfinite(ref) & np.isfinite(est)
            if ok.sum() < 2:
                continue
            try:
                report.comparisons[name] = compare_channels(ref[ok], est[ok])
            except ZeroReferenceEnergy as exc:
                report.comparisons[name] = exc.comparison

    if segments:
        report.maps["endpoint_alat_alon"] = ev.endpoint_error_map(segments)
        if can is not None and "v_lon" in can.channels:
            report.maps["endpoint_alat_speed_error"] = ev.endpoint_error_map(
                segments, "max_abs_a_lat", "max_speed_error", ev.A_LAT_EDGES, ev.SPEED_ERROR_EDGES)

    if can is not None:
        axes = {
            "curvature_speed": (np.abs(columns["kappa"]), np.abs(columns["v_lon"]) * ev.MS_TO_KMH,
                                ev.KAPPA_EDGES, ev.SPEED_EDGES, "abs_kappa[1/m]", "abs_v_lon[km/h]"),
            "location": (columns["x"], columns["y"], ev.location_edges(columns["x"]),
                         ev.location_edges(columns["y"]), "x[m]", "y[m]"),
        }
        for wheel in WHEELS:
            name = f"v_{wheel}"
            if name not in can.channels or name not in columns:
                continue
            for label, (x, y, xe, ye, xn, yn) in axes.items():
                report.maps[f"underestimation_{wheel}_{label}"] = ev.underestimation_map(
                    columns[name], columns[f"ref_{name}"], x, y, xe, ye, config.threshold, xn, yn)
    return report
