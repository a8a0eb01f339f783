"""Batch command line interface.

Exit codes: 0 success, 1 usage error, 2 parse error, 3 numeric failure.
Outputs are rendered completely in memory and then written atomically, so a
failing command never leaves partial files behind.
"""

import argparse
import logging
import os
import sys
import tempfile

import numpy as np

from . import io as c2io
from .calibration import compare_channels, fit_steering
from .core import direction_heading
from .errors import (
    C2Error,
    InputError,
    NonPositiveStep,
    NumericError,
    OutOfDomain,
    ParseError,
    ZeroReferenceEnergy,
)
from .evaluation import segment_overlapping, segment_stats
from .forward import PoseState, integrate_poses
from .pipeline import EvaluationConfig, run_evaluation
from .sync import interp_with_gaps
from .trajectory import DEFAULT_THETA_FILL, DEFAULT_V_EPS, extract_profile, fit_c2
from .vehicle import VehicleGeometry

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("c2model")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _commit(outputs: dict):
    """Write ``{path: text}`` atomically; ``None`` as path means stdout."""
    staged = []
    try:
        for path, text in outputs.items():
            if path is None:
                continue
            directory = os.path.dirname(os.path.abspath(path))
            os.makedirs(directory, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=directory, prefix=".c2model-", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, path))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, path in staged:
        os.replace(tmp, path)
    if None in outputs:
        sys.stdout.write(outputs[None])


def _track_fit_args(p):
    p.add_argument("--lambda", dest="smoothing", type=float, default=0.0,
                   help="smoothing spline roughness weight (0 = interpolate)")
    p.add_argument("--v-eps", type=float, default=DEFAULT_V_EPS, help="stop speed threshold [m/s]")
    p.add_argument("--theta-fill", type=float, default=np.rad2deg(DEFAULT_THETA_FILL),
                   help="fill tangent angle tolerance [deg]")


def _vehicle(path):
    if path is None:
        return VehicleGeometry.four_wheel(2.63, 1.54, 0.316)
    return c2io.load_vehicle(path)


def cmd_analyze(args):
    geometry = _vehicle(args.vehicle)
    track = c2io.load_track(args.track)
    traj = fit_c2(track, args.smoothing, args.v_eps, np.deg2rad(args.theta_fill))
    n_bad = sum(1 for s in traj.stops if not s.resolvable)
    if n_bad:
        log.warning("%d unresolvable stop interval(s); their samples are omitted", n_bad)
    profile = extract_profile(traj, geometry, track.t, skip_unresolvable=True)
    return {args.out: c2io.format_csv(profile.columns())}


def _parse_init(text):
    try:
        x, y, heading = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError("--init expects x,y,heading (m, m, rad)") from None
    return x, y, heading


def cmd_forward(args):
    geometry = _vehicle(args.vehicle)
    x, y, heading = _parse_init(args.init)
    controls = c2io.load_controls(args.controls, args.mode)
    init = PoseState.from_heading(x, y, heading, geometry.north)
    t, pos, tan = integrate_poses(controls, geometry, init, args.step)
    cols = {"t[s]": t, "x[m]": pos[:, 0], "y[m]": pos[:, 1],
            "heading_front[rad]": direction_heading(tan, geometry.north)}
    return {args.out: c2io.format_csv(cols)}


def cmd_calibrate(args):
    left, right = c2io.load_pairs(args.pairs)
    poly = fit_steering(left, right if len(right) else None)
    return {args.out: c2io.format_steering(poly)}


def cmd_compare(args):
    ref = c2io.load_series(args.reference)
    est = c2io.load_series(args.estimate)
    name = args.channel
    for label, series in (("reference", ref), ("estimate", est)):
        if name not in series.channels:
            raise ParseError(f"{label} file has no column '{name}'")
    values = interp_with_gaps(est.t, est.channels[name], ref.t, max_gap=np.inf)
    ok = np.isfinite(values) & np.isfinite(ref.channels[name])
    try:
        result = compare_channels(ref.channels[name][ok], values[ok])
    except ZeroReferenceEnergy as exc:
        log.warning("%s", exc)
        result = exc.comparison
    return {args.out: c2io.format_comparisons({name: result})}


def cmd_evaluate(args):
    geometry = _vehicle(args.vehicle)
    track = c2io.load_track(args.track)
    can = c2io.load_series(args.can) if args.can else None
    offset = None if args.offset == "auto" else float(args.offset)
    config = EvaluationConfig(
        smoothing=args.smoothing, v_eps=args.v_eps, theta_fill=np.deg2rad(args.theta_fill),
        gap_threshold=args.gap, grid_rate=args.rate, offset=offset, step=args.step,
        min_len=args.min, max_len=args.max, stride=args.stride, threshold=args.threshold,
    )
    report = run_evaluation(track, geometry, can, config)
    return {os.path.join(args.out_dir, name): text for name, text in c2io.render_report(report).items()}


def cmd_segment(args):
    geometry = _vehicle(args.vehicle)
    track = c2io.load_track(args.track)
    traj = fit_c2(track, args.smoothing, args.v_eps, np.deg2rad(args.theta_fill))
    windows = segment_overlapping(traj, args.min, args.max, args.stride)
    stats = segment_stats(traj, geometry, windows, grid_dt=1.0 / args.rate, step=args.step)
    return {args.out: c2io.format_segments(stats, with_speed_error=False)}


def build_parser():
    parser = _Parser(prog="c2model", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="kinematic profile of a track")
    p.add_argument("--track", required=True)
    p.add_argument("--vehicle")
    p.add_argument("--out")
    _track_fit_args(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("forward", help="integrate a control profile")
    p.add_argument("--controls", required=True)
    p.add_argument("--vehicle")
    p.add_argument("--init", required=True, help="x,y,heading (heading in rad, CCW from north)")
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--mode", choices=["linear", "hold"], default="linear")
    p.add_argument("--out")
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("calibrate-steering", help="fit the cubic steering polynomial")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("compare", help="mean error, std and slope of one channel")
    p.add_argument("--reference", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--channel", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("evaluate", help="full accuracy report")
    p.add_argument("--track", required=True)
    p.add_argument("--can")
    p.add_argument("--vehicle")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--rate", type=float, default=50.0, help="common grid rate [Hz]")
    p.add_argument("--offset", default="auto", help="CAN time offset [s] or 'auto'")
    p.add_argument("--gap", type=float, default=1.0, help="split track at gaps longer than this [s]")
    p.add_argument("--step", type=float, default=0.01, help="integration step [s]")
    p.add_argument("--min", type=float, default=5.0)
    p.add_argument("--max", type=float, default=150.0)
    p.add_argument("--stride", type=float, default=5.0)
    p.add_argument("--threshold", type=float, default=0.03)
    _track_fit_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("segment", help="overlapping segment statistics")
    p.add_argument("--track", required=True)
    p.add_argument("--vehicle")
    p.add_argument("--min", type=float, default=5.0)
    p.add_argument("--max", type=float, default=150.0)
    p.add_argument("--stride", type=float, default=5.0)
    p.add_argument("--rate", type=float, default=50.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--out")
    _track_fit_args(p)
    p.set_defaults(func=cmd_segment)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        _commit(args.func(args))
    except (UsageError, NonPositiveStep) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NumericError, OutOfDomain) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, C2Error) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
