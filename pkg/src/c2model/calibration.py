"""Steering-function fitting and channel comparison metrics.

The steering polynomial maps a (virtual) wheel angle in radians to the
steering wheel angle in degrees::

    delta_swa = c0 + c1*delta + c2*delta**2 + c3*delta**3

Its inverse on the declared wheel-angle range is the steering function used
by the forward model.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    DegenerateDesign,
    InputError,
    NonMonotoneSteering,
    OutOfRange,
    ZeroReferenceEnergy,
)


@dataclass(frozen=True)
class SteeringPolynomial:
    coefficients: tuple
    delta_min: float = -0.7
    delta_max: float = 0.7

    def __post_init__(self):
        coef = tuple(float(c) for c in self.coefficients)
        if len(coef) != 4:
            raise InputError("steering polynomial needs exactly 4 coefficients c0..c3")
        if not all(np.isfinite(coef)):
            raise InputError("steering coefficients must be finite")
        if not self.delta_min < self.delta_max:
            raise InputError("declared wheel-angle range is empty")
        object.__setattr__(self, "coefficients", coef)
        if self.min_slope() <= 0:
            raise NonMonotoneSteering(
                f"steering polynomial not increasing on [{self.delta_min}, {self.delta_max}]"
            )

    def __call__(self, delta):
        return P.polyval(np.asarray(delta, dtype=float), self.coefficients)

    def derivative(self, delta):
        return P.polyval(np.asarray(delta, dtype=float), P.polyder(self.coefficients))

    def min_slope(self):
        """Smallest derivative over the declared range (derivative is quadratic)."""
        candidates = [self.delta_min, self.delta_max]
        c3 = self.coefficients[3]
        if c3 != 0.0:
            vertex = -self.coefficients[2] / (3.0 * c3)
            if self.delta_min < vertex < self.delta_max:
                candidates.append(vertex)
        return float(np.min(self.derivative(np.array(candidates))))

    @property
    def swa_range(self):
        return float(self(self.delta_min)), float(self(self.delta_max))

    @classmethod
    def linear(cls, slope, delta_min=-0.7, delta_max=0.7):
        return cls((0.0, slope, 0.0, 0.0), delta_min, delta_max)


def fit_steering(pairs, right_pairs=None, delta_range=None) -> SteeringPolynomial:
    """Least-squares cubic of steering wheel angle over wheel angle.

    ``pairs`` holds ``(delta_wheel [rad], delta_swa [deg])`` rows, typically
    from the front-left wheel. Rows in ``right_pairs`` (front-right wheel) are
    mirrored to ``(-delta, -delta_swa)`` and pooled with ``pairs``.
    The declared range defaults to the span of the pooled wheel angles.
    """
    data = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if right_pairs is not None:
        right = np.asarray(right_pairs, dtype=float).reshape(-1, 2)
        data = np.vstack([data, -right])
    if not np.all(np.isfinite(data)):
        raise InputError("steering pairs must be finite")
    delta, swa = data[:, 0], data[:, 1]
    design = np.vander(delta, 4, increasing=True)
    if len(np.unique(delta)) < 4:
        raise DegenerateDesign("cubic fit needs at least 4 distinct wheel angles")
    coef, _, rank, _ = np.linalg.lstsq(design, swa, rcond=None)
    if rank < 4:
        raise DegenerateDesign("Vandermonde system is rank deficient")
    if delta_range is None:
        delta_range = (float(delta.min()), float(delta.max()))
    return SteeringPolynomial(tuple(coef), *delta_range)


def invert_steering(poly: SteeringPolynomial, delta_swa, tol=1e-12, max_iter=100):
    """Wheel angle ``delta`` in the declared range with ``poly(delta) == delta_swa``.

    Safeguarded Newton iteration: a Newton step that leaves the current
    bracket is replaced by bisection. Works elementwise on arrays.
    """
    target = np.asarray(delta_swa, dtype=float)
    lo_val, hi_val = poly.swa_range
    # allow round-off at the range ends
    slack = 1e-12 * max(abs(lo_val), abs(hi_val), 1.0)
    if np.any(~np.isfinite(target)) or np.any(target < lo_val - slack) or np.any(target > hi_val + slack):
        raise OutOfRange(f"steering wheel angle outside [{lo_val:.6g}, {hi_val:.6g}] deg")

    lo = np.full(target.shape, poly.delta_min)
    hi = np.full(target.shape, poly.delta_max)
    # start from the secant through the range ends
    x = lo + (target - lo_val) * (hi - lo) / (hi_val - lo_val)
    for _ in range(max_iter):
        f = poly(x) - target
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        step = f / poly.derivative(x)
        x_new = x - step
        outside = (x_new < lo) | (x_new > hi) | ~np.isfinite(x_new)
        x_new = np.where(outside, 0.5 * (lo + hi), x_new)
        x_new = np.where(f == 0, x, x_new)
        done = np.abs(x_new - x) <= tol
        x = x_new
        if np.all(done | (f == 0)):
            break
    return np.clip(x, poly.delta_min, poly.delta_max)


@dataclass(frozen=True)
class ChannelComparison:
    """Mean error, population standard deviation of the error, and slope.

    The slope ``m`` minimizes ``sum((m*reference - estimate)**2)``.
    """

    mu: float
    sigma: float
    m: float
    n: int = 0


def compare_channels(reference, estimate) -> ChannelComparison:
    ref = np.asarray(reference, dtype=float).ravel()
    est = np.asarray(estimate, dtype=float).ravel()
    if ref.shape != est.shape:
        raise InputError("reference and estimate must have the same length")
    if ref.size < 2:
        raise InputError("need at least 2 samples to compare channels")
    if not (np.all(np.isfinite(ref)) and np.all(np.isfinite(est))):
        raise InputError("channels must be finite")
    err = est - ref
    mu = float(np.mean(err))
    sigma = float(np.sqrt(np.mean((err - mu) ** 2)))
    energy = float(np.dot(ref, ref))
    if energy == 0.0:
        raise ZeroReferenceEnergy(
            "reference channel is identically zero; slope undefined",
            ChannelComparison(mu, sigma, float("nan"), int(ref.size)),
        )
    m = float(np.dot(ref, est) / energy)
    return ChannelComparison(mu, sigma, m, int(ref.size))
