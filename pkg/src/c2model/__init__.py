"""Analytic C2 kinematic vehicle model.

Extracts dynamic parameters (speeds, accelerations, curvature, wheel angles
and speeds, heading, yaw rate) from twice-differentiable trajectories,
integrates trajectories from steering and speed controls, and provides the
calibration and accuracy-evaluation tooling around both.
"""

from .calibration import ChannelComparison, SteeringPolynomial, compare_channels, fit_steering, invert_steering
from .core import KinematicSample, Pose2Derivs, TangentFrame, WheelMount
from .forward import ControlProfile, PoseState, integrate, roundtrip, roundtrip_check
from .pipeline import EvaluationConfig, run_evaluation
from .trajectory import KinematicProfile, SampledTrack, SmoothTrajectory, eval_derivs, extract_profile, fit_c2
from .vehicle import VehicleGeometry

__all__ = [
    "ChannelComparison",
    "ControlProfile",
    "EvaluationConfig",
    "KinematicProfile",
    "KinematicSample",
    "Pose2Derivs",
    "PoseState",
    "SampledTrack",
    "SmoothTrajectory",
    "SteeringPolynomial",
    "TangentFrame",
    "VehicleGeometry",
    "WheelMount",
    "compare_channels",
    "eval_derivs",
    "extract_profile",
    "fit_c2",
    "fit_steering",
    "integrate",
    "invert_steering",
    "roundtrip",
    "roundtrip_check",
    "run_evaluation",
]
