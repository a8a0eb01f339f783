from dataclasses import dataclass, field

import numpy as np

from .calibration import SteeringPolynomial
from .core import WheelMount
from .errors import ConfigError

WHEELS = ("FL", "FR", "RL", "RR")


@dataclass(frozen=True)
class VehicleGeometry:
    """Wheelbase, wheel mounts, steering polynomial and map north direction.

    ``steering`` maps the virtual center front-wheel angle (rad, mounted at
    ``(wheelbase, 0)``) to the steering wheel angle (deg).
    """

    wheelbase: float
    mounts: dict
    steering: SteeringPolynomial = field(default_factory=lambda: SteeringPolynomial.linear(1.0))
    north: tuple = (0.0, 1.0)

    def __post_init__(self):
        if not (np.isfinite(self.wheelbase) and self.wheelbase > 0):
            raise ConfigError("wheelbase must be positive")
        n = np.asarray(self.north, dtype=float)
        norm = np.linalg.norm(n)
        if n.shape != (2,) or not np.isfinite(norm) or norm == 0:
            raise ConfigError("north must be a nonzero 2-vector")
        object.__setattr__(self, "north", tuple(n / norm))
        object.__setattr__(self, "mounts", dict(self.mounts))

    @property
    def center_mount(self):
        """Virtual center front wheel, used for the steering function."""
        return WheelMount(self.wheelbase, 0.0, 1.0)

    @classmethod
    def four_wheel(cls, wheelbase, track_width, tire_radius, steering=None, north=(0.0, 1.0)):
        """Standard two-axle layout: rear axle at the origin, left wheels at negative d_lat."""
        half = 0.5 * track_width
        mounts = {
            "FL": WheelMount(wheelbase, -half, tire_radius),
            "FR": WheelMount(wheelbase, half, tire_radius),
            "RL": WheelMount(0.0, -half, tire_radius),
            "RR": WheelMount(0.0, half, tire_radius),
        }
        if steering is None:
            steering = SteeringPolynomial.linear(1.0)
        return cls(wheelbase, mounts, steering, north)

    def validate_four_wheel(self):
        """Check the FL/FR/RL/RR layout invariants required of config files."""
        missing = [w for w in WHEELS if w not in self.mounts]
        if missing:
            raise ConfigError(f"missing wheel mounts: {', '.join(missing)}")
        for name in WHEELS:
            m = self.mounts[name]
            expected_lon = self.wheelbase if name[0] == "F" else 0.0
            if not np.isclose(m.d_lon, expected_lon, rtol=0, atol=1e-9):
                raise ConfigError(f"wheel {name}: d_lon must be {expected_lon}")
            if name[1] == "L" and not m.d_lat < 0:
                raise ConfigError(f"wheel {name}: left wheels need d_lat < 0")
            if name[1] == "R" and not m.d_lat > 0:
                raise ConfigError(f"wheel {name}: right wheels need d_lat > 0")
