"""Closure error of the forward model on a constant-steering circle versus step size.

Prints one row per step: step, closure error and the ratio to the next finer
step (about 16 for a 4th-order method until round-off takes over).
"""

import argparse

import numpy as np

from c2model.forward import ControlProfile, PoseState, integrate_poses
from c2model.vehicle import VehicleGeometry


def closure(step, radius, speed, wheelbase):
    geo = VehicleGeometry.four_wheel(wheelbase, 1.5, 0.3)
    period = 2 * np.pi * radius / speed
    t = np.array([0.0, period])
    ctl = ControlProfile(t, np.full(2, np.arctan(wheelbase / radius)), np.full(2, speed))
    _, pos, _ = integrate_poses(ctl, geo, PoseState([0.0, 0.0], [1.0, 0.0]), step)
    return float(np.linalg.norm(pos[-1] - pos[0]))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radius", type=float, default=10.0)
    ap.add_argument("--speed", type=float, default=5.0)
    ap.add_argument("--wheelbase", type=float, default=2.5)
    ap.add_argument("--coarsest", type=float, default=0.4)
    ap.add_argument("--levels", type=int, default=9)
    args = ap.parse_args()

    steps = args.coarsest / 2.0 ** np.arange(args.levels)
    errors = [closure(h, args.radius, args.speed, args.wheelbase) for h in steps]
    print("step[s],closure[m],ratio")
    for i, (h, e) in enumerate(zip(steps, errors)):
        ratio = e / errors[i + 1] if i + 1 < len(errors) and errors[i + 1] > 0 else float("nan")
        print(f"{h:.6g},{e:.3e},{ratio:.2f}")


if __name__ == "__main__":
    main()
