"""Endpoint error of the analyze-then-integrate loop on synthetic 100 m tracks.

Shows how GPS rate and smoothing affect the error E for the straight, circle
and S-curve cases.
"""

import argparse

from c2model.forward import roundtrip
from c2model.synthetic import circle_track, default_geometry, line_track, s_curve_track
from c2model.trajectory import fit_c2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rates", type=float, nargs="+", default=[5.0, 10.0, 20.0, 100.0])
    ap.add_argument("--step", type=float, default=1e-3)
    args = ap.parse_args()

    geo = default_geometry()
    print("rate[Hz],straight[m],circle[m],s_curve[m]")
    for rate in args.rates:
        tracks = (line_track(speed=10.0, duration=10.0, rate=rate),
                  circle_track(radius=20.0, speed=10.0, duration=10.0, rate=rate),
                  s_curve_track(geo, speed=10.0, length=100.0, rate=rate))
        errors = [roundtrip(fit_c2(tr), geo, args.step)[0] for tr in tracks]
        print(f"{rate:g}," + ",".join(f"{e:.3e}" for e in errors))


if __name__ == "__main__":
    main()
