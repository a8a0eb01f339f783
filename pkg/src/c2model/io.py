"""CSV tables, vehicle configuration files and report rendering.

CSV files are comma separated, UTF-8, with a mandatory header row. Headers
may carry a unit suffix in brackets (``v_lon[m/s]``); columns are matched by
the name before the bracket. Numbers are written with 9 significant digits.

The vehicle configuration is a TOML file::

    wheelbase = 2.63
    tire_radius = 0.316
    track_width = 1.54          # fills FL/FR/RL/RR unless [wheel.*] is given
    north = [0.0, 1.0]

    [steering]
    coefficients = [0.0, 859.0, 0.0, 0.0]   # deg = c0 + c1*rad + c2*rad^2 + c3*rad^3
    range = [-0.6, 0.6]                     # declared center wheel angle range, rad

    [wheel.FL]
    d_lon = 2.63
    d_lat = -0.77                           # negative: left of the vehicle
"""

import csv
import io
import math

import numpy as np

from .calibration import SteeringPolynomial
from .core import WheelMount
from .errors import ConfigError, InputError, NonMonotoneTime, ParseError
from .forward import HOLD, LINEAR, ControlProfile
from .sync import TimeSeriesSet
from .trajectory import SampledTrack
from .vehicle import WHEELS, VehicleGeometry

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

DIGITS = 9


def base_name(header):
    return header.split("[", 1)[0].strip()


def fmt(value):
    value = float(value)
    if math.isnan(value):
        return "nan"
    out = f"{value:.{DIGITS}g}"
    return "0" if out == "-0" else out


def read_table(path):
    """Read a CSV file into ``{name: list of str}`` keeping header order.

    Returns ``(columns, first_data_line)``; the latter is the 1-based line of
    the first data row, for error messages.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc.reason})") from None
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise ParseError(f"{path}: missing header row", line=1)
    names = [base_name(h) for h in rows[0]]
    if len(set(names)) != len(names):
        raise ParseError(f"{path}: duplicate column names", line=1)
    cols = {n: [] for n in names}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(names):
            raise ParseError(f"{path}: expected {len(names)} fields, got {len(row)}", line=lineno)
        for n, cell in zip(names, row):
            cols[n].append((cell.strip(), lineno))
    return cols


def _floats(cols, name, path, required=True):
    if name not in cols:
        if required:
            raise ParseError(f"{path}: missing required column '{name}'", line=1)
        return None
    out = np.empty(len(cols[name]))
    for i, (cell, lineno) in enumerate(cols[name]):
        try:
            out[i] = float(cell)
        except ValueError:
            raise ParseError(f"{path}: column '{name}': cannot parse {cell!r} as a number", line=lineno) from None
    return out


def _flags(cols, name, path):
    values = _floats(cols, name, path, required=False)
    if values is None:
        return None
    bad = np.flatnonzero((values != 0) & (values != 1))
    if bad.size:
        raise ParseError(f"{path}: column '{name}' must be 0 or 1", line=cols[name][bad[0]][1])
    return values.astype(bool)


def _check_time(cols, t, path):
    bad = np.flatnonzero(np.diff(t) <= 0)
    if bad.size:
        i = int(bad[0]) + 1
        raise NonMonotoneTime(f"{path}: line {cols['t'][i][1]}: timestamp {t[i]!r} is not increasing", index=i)


def load_track(path) -> SampledTrack:
    """Track with columns ``t, x, y`` and optional 0/1 ``quality`` and ``reverse``."""
    cols = read_table(path)
    t, x, y = (_floats(cols, n, path) for n in ("t", "x", "y"))
    for name, arr in (("t", t), ("x", x), ("y", y)):
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise ParseError(f"{path}: non-finite value in column '{name}'", line=cols[name][bad[0]][1])
    _check_time(cols, t, path)
    return SampledTrack(t, x, y, _flags(cols, "quality", path), _flags(cols, "reverse", path))


def track_columns(track: SampledTrack):
    cols = {"t[s]": track.t, "x[m]": track.x, "y[m]": track.y}
    if track.quality is not None:
        cols["quality[-]"] = track.quality.astype(float)
    if track.reverse is not None:
        cols["reverse[-]"] = track.reverse.astype(float)
    return cols


def format_csv(columns: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(columns))
    arrays = [np.asarray(v) for v in columns.values()]
    n = arrays[0].shape[0] if arrays else 0
    for i in range(n):
        writer.writerow([a[i] if a.dtype.kind in "OUS" else fmt(a[i]) for a in arrays])
    return buf.getvalue()


def write_csv(path, columns: dict):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(columns))


def write_track(path, track: SampledTrack):
    write_csv(path, track_columns(track))


def load_controls(path, mode=LINEAR) -> ControlProfile:
    """Control profile with columns ``t``, ``delta_swa`` (deg) and ``v_lon`` (m/s)."""
    if mode not in (LINEAR, HOLD):
        raise InputError(f"unknown interpolation mode {mode!r}")
    cols = read_table(path)
    t, swa, v = (_floats(cols, n, path) for n in ("t", "delta_swa", "v_lon"))
    _check_time(cols, t, path)
    return ControlProfile(t, swa, v, mode)


def load_series(path) -> TimeSeriesSet:
    """All numeric columns of a CSV file with a ``t`` column."""
    cols = read_table(path)
    t = _floats(cols, "t", path)
    _check_time(cols, t, path)
    channels = {name: _floats(cols, name, path) for name in cols if name != "t"}
    return TimeSeriesSet(t, channels)


def load_pairs(path):
    """Steering calibration pairs ``(delta_wheel [rad], delta_swa [deg])``.

    An optional ``wheel`` column marks rows as ``FL`` (default) or ``FR``;
    returns ``(left_pairs, right_pairs)`` as ``(n, 2)`` arrays.
    """
    cols = read_table(path)
    delta, swa = _floats(cols, "delta_wheel", path), _floats(cols, "delta_swa", path)
    wheel = [c.upper() for c, _ in cols["wheel"]] if "wheel" in cols else ["FL"] * delta.size
    for (cell, lineno), w in zip(cols.get("wheel", []), wheel):
        if w not in ("FL", "FR"):
            raise ParseError(f"{path}: wheel must be FL or FR, got {cell!r}", line=lineno)
    right = np.array([w == "FR" for w in wheel], dtype=bool)
    pairs = np.column_stack([delta, swa])
    return pairs[~right], pairs[right]


def _number(table, key, where, default=None):
    value = table.get(key, default)
    if value is None:
        raise ConfigError(f"{where}: missing '{key}'")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: '{key}' must be a number")
    return float(value)


def parse_vehicle(text, where="vehicle config") -> VehicleGeometry:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(f"{where}: {exc}", line=line) from None
    wheelbase = _number(data, "wheelbase", where)
    tire_radius = data.get("tire_radius")
    steering = data.get("steering", {})
    try:
        poly = SteeringPolynomial(tuple(steering.get("coefficients", (0.0, 1.0, 0.0, 0.0))),
                                  *steering.get("range", (-0.7, 0.7)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: steering: {exc}") from None

    wheels = data.get("wheel", {})
    mounts = {}
    for name in WHEELS:
        spec = wheels.get(name, {})
        if not spec and "track_width" not in data:
            raise ConfigError(f"{where}: wheel {name} undefined and no track_width given")
        half = 0.5 * _number(data, "track_width", where) if "track_width" in data else None
        default_lat = None if half is None else (-half if name[1] == "L" else half)
        try:
            mounts[name] = WheelMount(
                _number(spec, "d_lon", f"{where} wheel.{name}", wheelbase if name[0] == "F" else 0.0),
                _number(spec, "d_lat", f"{where} wheel.{name}", default_lat),
                _number(spec, "tire_radius", f"{where} wheel.{name}", tire_radius),
            )
        except InputError as exc:
            raise ConfigError(f"{where}: wheel {name}: {exc}") from None
    unknown = set(wheels) - set(WHEELS)
    if unknown:
        raise ConfigError(f"{where}: unknown wheels {sorted(unknown)}")
    geometry = VehicleGeometry(wheelbase, mounts, poly, tuple(data.get("north", (0.0, 1.0))))
    geometry.validate_four_wheel()
    return geometry


def load_vehicle(path) -> VehicleGeometry:
    with open(path, encoding="utf-8") as fh:
        return parse_vehicle(fh.read(), str(path))


def format_vehicle(geometry: VehicleGeometry) -> str:
    lines = [f"wheelbase = {fmt(geometry.wheelbase)}",
             f"north = [{fmt(geometry.north[0])}, {fmt(geometry.north[1])}]", "", "[steering]",
             format_steering_body(geometry.steering)]
    for name, m in geometry.mounts.items():
        lines += ["", f"[wheel.{name}]", f"d_lon = {fmt(m.d_lon)}", f"d_lat = {fmt(m.d_lat)}",
                  f"tire_radius = {fmt(m.tire_radius)}"]
    return "\n".join(lines) + "\n"


def _toml_float(value):
    # TOML needs a decimal point or exponent for floats
    out = fmt(value)
    return out if any(c in out for c in ".enai") else out + ".0"


def format_steering_body(poly: SteeringPolynomial) -> str:
    coef = ", ".join(_toml_float(c) for c in poly.coefficients)
    return f"coefficients = [{coef}]\nrange = [{_toml_float(poly.delta_min)}, {_toml_float(poly.delta_max)}]"


def format_steering(poly: SteeringPolynomial) -> str:
    """Steering section ready to paste into a vehicle config."""
    return "[steering]\n" + format_steering_body(poly) + "\n"


def format_comparisons(comparisons: dict) -> str:
    cols = {
        "channel": np.array(list(comparisons), dtype=object),
        "mu": np.array([c.mu for c in comparisons.values()]),
        "sigma": np.array([c.sigma for c in comparisons.values()]),
        "m": np.array([c.m for c in comparisons.values()]),
        "n": np.array([c.n for c in comparisons.values()], dtype=float),
    }
    return format_csv(cols)


SEGMENT_HEADERS = {
    "t_start": "t_start[s]",
    "t_end": "t_end[s]",
    "arc_length": "arc_length[m]",
    "max_abs_a_lon": "max_abs_a_lon[m/s2]",
    "max_abs_a_lat": "max_abs_a_lat[m/s2]",
    "max_speed_error": "max_speed_error[km/h]",
    "endpoint_error": "endpoint_error[m]",
    "mean_abs_a_lon": "mean_abs_a_lon[m/s2]",
    "mean_abs_a_lat": "mean_abs_a_lat[m/s2]",
}


def format_segments(stats, with_speed_error=True) -> str:
    cols = {}
    for field_name, header in SEGMENT_HEADERS.items():
        if field_name == "max_speed_error" and not with_speed_error:
            continue
        cols[header] = np.array([getattr(s, field_name) for s in stats], dtype=float)
    return format_csv(cols)


def format_map(bmap, counts=False) -> str:
    """Binned map as a CSV matrix: one row per y bin, one column per x bin; empty cells blank."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    label = lambda e, i: f"{fmt(e[i])}:{fmt(e[i + 1])}"  # noqa: E731
    writer.writerow([f"{bmap.y_name}\\{bmap.x_name}"] + [label(bmap.x_edges, i) for i in range(bmap.x_edges.size - 1)])
    for j in range(bmap.y_edges.size - 1):
        if counts:
            cells = [str(int(c)) for c in bmap.counts[j]]
        else:
            cells = ["" if c == 0 else fmt(v) for v, c in zip(bmap.values[j], bmap.counts[j])]
        writer.writerow([label(bmap.y_edges, j)] + cells)
    return buf.getvalue()


def render_report(report) -> dict:
    """All output files of an accuracy report as ``{filename: text}``."""
    files = {"profile.csv": format_csv(report.columns)}
    summary = {"key": np.array(["samples", "segments", "offset[s]"], dtype=object),
               "value": np.array([len(report.columns["t"]), len(report.segments),
                                  np.nan if report.offset is None else report.offset], dtype=float)}
    files["summary.csv"] = format_csv(summary)
    files["segments.csv"] = format_segments(report.segments, with_speed_error=report.has_reference)
    if report.has_reference:
        files["comparisons.csv"] = format_comparisons(report.comparisons)
        for name in report.comparisons:
            ref, est = report.columns[f"ref_{name}"], report.columns[name]
            ok = np.isfinite(ref) & np.isfinite(est)
            files[f"scatter_{name}.csv"] = format_csv(
                {"t[s]": report.columns["t"][ok], "reference": ref[ok], "estimate": est[ok]})
    for name, bmap in report.maps.items():
        files[f"map_{name}.csv"] = format_map(bmap)
        files[f"map_{name}_counts.csv"] = format_map(bmap, counts=True)
    return files
