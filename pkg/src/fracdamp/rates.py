"""Decay-rate predictions and fits of measured exponents."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "RatePrediction",
    "RateFit",
    "BoundCheck",
    "predicted_decay",
    "fit_power_law",
    "fit_exponential",
    "envelope_points",
    "check_upper_bound",
]

MIN_TAIL_POINTS = 8


@dataclass(frozen=True)
class RatePrediction:
    """Exponents implied by the fractional order s.

    For 0 < s < 2 the Helmholtz resolvent grows like <k>^(4/s-3), the
    generator resolvent like <k>^(4/s-2) =: <k>^alpha, and smooth data
    decay like t^(-1/alpha) = t^(-s/(4-2s)).  For s >= 2 the generator
    resolvent is bounded and the decay is exponential.
    """

    s: float
    regime: str
    poly_exponent: Optional[float]
    resolvent_exponent_L2: float
    resolvent_exponent_energy: float
    bt_alpha: Optional[float]


def predicted_decay(s: float) -> RatePrediction:
    if not s > 0:
        raise ValueError(f"s must be positive, got {s!r}")
    if s < 2:
        alpha = 4.0 / s - 2.0
        return RatePrediction(s, "polynomial", s / (4.0 - 2.0 * s), 4.0 / s - 3.0, alpha, alpha)
    return RatePrediction(s, "exponential", None, 2.0 / s - 2.0, 2.0 / s - 1.0, None)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    tail_fraction: float
    n_points: int
    sup_ratio: Optional[float] = None

    @property
    def rate(self) -> float:
        """Decay rate of an exponential fit (minus the slope)."""
        return -self.slope


def _tail(xs, ys, tail_fraction):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-D arrays of equal length")
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    n_tail = int(np.ceil(tail_fraction * len(xs)))
    return xs[len(xs) - n_tail:], ys[len(ys) - n_tail:]


def _linear_fit(x, y, tail_fraction):
    if len(x) < MIN_TAIL_POINTS:
        raise ValueError(f"need at least {MIN_TAIL_POINTS} tail points, got {len(x)}")
    if np.ptp(x) == 0:
        raise ValueError("degenerate abscissa: all x equal")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    ss_res = np.sum(resid ** 2)
    # constant data is fitted exactly; call that r^2 = 1
    r2 = 1.0 if ss_tot <= 1e-30 * max(1.0, np.sum(y ** 2)) else max(0.0, 1.0 - ss_res / ss_tot)
    return RateFit(float(slope), float(intercept), float(r2), tail_fraction, len(x))


def fit_power_law(xs, ys, tail_fraction: float = 0.5) -> RateFit:
    """Least squares of log y against log x on the last ``tail_fraction`` of points."""
    x, y = _tail(xs, ys, tail_fraction)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive data")
    return _linear_fit(np.log(x), np.log(y), tail_fraction)


def envelope_points(times, values) -> np.ndarray:
    """Indices of the upper envelope of an oscillating decaying trace.

    The trace is detrended by a straight line in (t, log value) and the
    local maxima of the residual are returned, i.e. the crests of the
    oscillation riding on the exponential trend.  For a monotone trace
    with stair-step structure these are the stair corners.
    """
    t = np.asarray(times, dtype=float)
    r = np.log(np.asarray(values, dtype=float))
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, r, rcond=None)
    d = r - A @ coef
    inner = (d[1:-1] >= d[:-2]) & (d[1:-1] > d[2:])
    return np.flatnonzero(inner) + 1


def fit_exponential(times, values, tail_fraction: float = 0.5, envelope: bool = True) -> RateFit:
    """Fit log value = intercept - rate * t on the tail.

    With ``envelope`` the fit runs through the crests returned by
    :func:`envelope_points` when there are at least eight of them; a
    smooth exponential has none and is fitted point by point.
    """
    t, v = _tail(times, values, tail_fraction)
    if np.any(v <= 0):
        raise ValueError("exponential fit needs positive values")
    if envelope and len(t) >= 3:
        pk = envelope_points(t, v)
        if len(pk) >= MIN_TAIL_POINTS:
            t, v = t[pk], v[pk]
    return _linear_fit(t, np.log(v), tail_fraction)


@dataclass(frozen=True)
class BoundCheck:
    sup_ratio: float
    head_sup: float
    tail_sup: float
    stabilized: bool
    ratios: np.ndarray

    @property
    def growth(self) -> float:
        """Tail sup over head sup; at most ``tolerance`` when stabilized."""
        return self.tail_sup / self.head_sup


def check_upper_bound(xs, ys, exponent: float, kind: str = "growth",
                      tolerance: float = 1.1) -> BoundCheck:
    """Test ys = O(xs^exponent) (``growth``) or ys = O(xs^-exponent) (``decay``).

    The normalized ratios are split into the first two thirds and the last
    third of the points.  The bound is called stabilized when the sup over
    the last third exceeds the sup over the first two thirds by at most
    the factor ``tolerance``.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(xs <= 0) or np.any(ys < 0):
        raise ValueError("need positive abscissae and nonnegative values")
    if kind == "growth":
        ratios = ys / xs ** exponent
    elif kind == "decay":
        ratios = ys * xs ** exponent
    else:
        raise ValueError(f"kind must be 'growth' or 'decay', got {kind!r}")
    n = len(ratios)
    if n < 3:
        raise ValueError("need at least three points")
    cut = n - n // 3
    head = float(np.max(ratios[:cut]))
    tail = float(np.max(ratios[cut:]))
    return BoundCheck(float(np.max(ratios)), head, tail, bool(tail <= tolerance * head), ratios)
