"""
Periodic Fourier representation on [-L, L].

A field is carried as point values on the uniform collocation grid
``x_n = -L + n * 2L/N`` and as coefficients ``c_j`` of the expansion

    f(x) = sum_j c_j exp(i xi_j x),    xi_j = pi j / L,

with the integer indices ``j`` stored in FFT order (0, 1, ..., N/2-1,
-N/2, ..., -1).  With this normalization the trapezoidal L2 norm of the
values equals ``2L * sum_j |c_j|**2`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "DampingProfile",
    "make_grid",
    "frac_laplacian_apply",
    "sobolev_norm",
    "multiply_pointwise",
    "sample_damping",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n_modes`` points on [-L, L)."""

    n_modes: int
    half_period: float

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 4 or self.n_modes % 2:
            raise ValueError(f"n_modes must be an even integer >= 4, got {self.n_modes!r}")
        if not self.half_period > 0 or not np.isfinite(self.half_period):
            raise ValueError(f"half_period must be positive, got {self.half_period!r}")

    @property
    def period(self) -> float:
        return 2.0 * self.half_period

    @property
    def spacing(self) -> float:
        return self.period / self.n_modes

    @property
    def weight(self) -> float:
        """Quadrature weight turning coefficient l2 sums into L2 norms."""
        return self.period

    @property
    def frequency_spacing(self) -> float:
        return np.pi / self.half_period

    @cached_property
    def indices(self) -> np.ndarray:
        idx = np.fft.fftfreq(self.n_modes, 1.0 / self.n_modes).round().astype(np.int64)
        idx.setflags(write=False)
        return idx

    @cached_property
    def frequencies(self) -> np.ndarray:
        xi = np.pi * self.indices / self.half_period
        xi.setflags(write=False)
        return xi

    @cached_property
    def points(self) -> np.ndarray:
        x = -self.half_period + self.spacing * np.arange(self.n_modes)
        x.setflags(write=False)
        return x

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(i xi_j L) = (-1)^j accounts for the grid starting at -L
        ph = np.where(self.indices % 2 == 0, 1.0, -1.0)
        ph.setflags(write=False)
        return ph

    @property
    def xi_max(self) -> float:
        return np.pi * (self.n_modes // 2) / self.half_period

    def to_coeffs(self, values) -> np.ndarray:
        return self._phase * np.fft.fft(values) / self.n_modes

    def to_values(self, coeffs) -> np.ndarray:
        return np.fft.ifft(self._phase * np.asarray(coeffs)) * self.n_modes

    def position(self, j) -> np.ndarray:
        """Array position of integer frequency index ``j``."""
        return np.mod(j, self.n_modes)


def make_grid(n_modes: int, half_period: float = 1.0) -> Grid:
    return Grid(int(n_modes) if float(n_modes).is_integer() else n_modes, float(half_period))


class SpectralField:
    """Complex field known through values, coefficients, or both.

    Whichever representation is missing is computed on first access and
    cached; ``fresh`` reports which ones are currently held.  Arrays are
    read-only, so a field is never mutated after construction.
    """

    __slots__ = ("grid", "_values", "_coeffs")

    def __init__(self, grid: Grid, values=None, coeffs=None):
        if values is None and coeffs is None:
            raise ValueError("need values or coeffs")
        self.grid = grid
        self._values = self._freeze(values, grid)
        self._coeffs = self._freeze(coeffs, grid)

    @staticmethod
    def _freeze(a, grid):
        if a is None:
            return None
        a = np.array(a, dtype=complex)
        if a.shape != (grid.n_modes,):
            raise ValueError(f"expected shape ({grid.n_modes},), got {a.shape}")
        a.setflags(write=False)
        return a

    @classmethod
    def from_values(cls, grid: Grid, values) -> "SpectralField":
        return cls(grid, values=values)

    @classmethod
    def from_coeffs(cls, grid: Grid, coeffs) -> "SpectralField":
        return cls(grid, coeffs=coeffs)

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[[np.ndarray], np.ndarray]) -> "SpectralField":
        return cls(grid, values=func(np.asarray(grid.points)))

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        z = np.zeros(grid.n_modes)
        return cls(grid, values=z, coeffs=z)

    @classmethod
    def mode(cls, grid: Grid, j: int, amplitude: complex = 1.0) -> "SpectralField":
        """Single exponential ``amplitude * exp(i pi j x / L)``."""
        c = np.zeros(grid.n_modes, dtype=complex)
        c[grid.position(j)] = amplitude
        return cls(grid, coeffs=c)

    @classmethod
    def random_bandlimited(cls, grid: Grid, j_max: int, rng: np.random.Generator,
                           real: bool = True) -> "SpectralField":
        """Gaussian random coefficients on ``|j| <= j_max``."""
        if not 0 <= j_max < grid.n_modes // 2:
            raise ValueError("j_max outside the grid band")
        c = np.zeros(grid.n_modes, dtype=complex)
        band = np.abs(grid.indices) <= j_max
        c[band] = rng.standard_normal(band.sum()) + 1j * rng.standard_normal(band.sum())
        if real:
            c = 0.5 * (c + np.conj(c[grid.position(-grid.indices)]))
        return cls(grid, coeffs=c)

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = self._freeze(self.grid.to_values(self._coeffs), self.grid)
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = self._freeze(self.grid.to_coeffs(self._values), self.grid)
        return self._coeffs

    @property
    def fresh(self) -> tuple[bool, bool]:
        """(values held, coeffs held)."""
        return self._values is not None, self._coeffs is not None

    def l2_norm(self) -> float:
        """Trapezoidal L2 norm of the values."""
        return float(np.sqrt(self.grid.spacing * np.sum(np.abs(self.values) ** 2)))

    def inner(self, other: "SpectralField") -> complex:
        """L2 inner product, linear in the first slot: <self, other> = int self * conj(other)."""
        _check_same_grid(self, other)
        return complex(self.grid.weight * np.vdot(other.coeffs, self.coeffs))

    def with_coeffs(self, coeffs) -> "SpectralField":
        return SpectralField(self.grid, coeffs=coeffs)

    def _combine(self, other, op):
        if isinstance(other, SpectralField):
            _check_same_grid(self, other)
            return SpectralField(self.grid, coeffs=op(self.coeffs, other.coeffs))
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            fresh_v, fresh_c = self.fresh
            return SpectralField(
                self.grid,
                values=self._values * scalar if fresh_v else None,
                coeffs=self._coeffs * scalar if fresh_c else None,
            )
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"SpectralField(N={self.grid.n_modes}, L={self.grid.half_period}, fresh={self.fresh})"


def _check_same_grid(f: SpectralField, g: SpectralField):
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def frac_laplacian_apply(f: SpectralField, s: float) -> SpectralField:
    """Apply ``(-d_xx)^(s/2)``: multiply coefficient j by ``|xi_j|**s``."""
    if not s > 0:
        raise ValueError(f"fractional order must be positive, got {s!r}")
    return f.with_coeffs(np.abs(f.grid.frequencies) ** s * f.coeffs)


def sobolev_weights(grid: Grid, order: float) -> np.ndarray:
    return (1.0 + grid.frequencies ** 2) ** order


def sobolev_norm(f: SpectralField, order: float) -> float:
    """Discrete H^order norm with weight ``(1 + xi**2)**order``; order 0 is the L2 norm."""
    if not np.isfinite(order):
        raise ValueError("Sobolev order must be finite")
    w = sobolev_weights(f.grid, order)
    return float(np.sqrt(f.grid.weight * np.sum(w * np.abs(f.coeffs) ** 2)))


@dataclass(frozen=True)
class DampingProfile:
    """Nonnegative periodic damping coefficient.

    ``kind`` is one of ``constant``, ``indicator`` or ``smoothed_indicator``.
    The positivity set is ``|x - center| <= half_width`` modulo ``period``;
    the smoothed variant ramps from ``amplitude`` down to zero over
    ``smoothing_width`` *outside* that set with a raised cosine, so the
    lower bound ``epsilon`` holds on the whole positivity set.  A
    ``smoothing_width`` of None means four grid cells of whatever grid
    the profile is sampled on.
    """

    kind: str
    amplitude: float
    half_width: float = 0.0
    center: float = 0.0
    smoothing_width: Optional[float] = None
    epsilon: Optional[float] = None
    period: float = 2.0

    def __post_init__(self):
        if self.kind not in ("constant", "indicator", "smoothed_indicator"):
            raise ValueError(f"unknown damping kind {self.kind!r}")
        if not self.amplitude > 0:
            raise ValueError("damping amplitude must be positive")
        if not self.period > 0:
            raise ValueError("damping period must be positive")
        if self.kind != "constant":
            if not 0 < self.half_width < self.period / 2:
                raise ValueError("half_width must lie in (0, period/2)")
        if self.smoothing_width is not None and self.smoothing_width < 0:
            raise ValueError("smoothing_width must be >= 0")
        eps = self.amplitude if self.epsilon is None else self.epsilon
        if not 0 < eps <= self.amplitude:
            raise ValueError("epsilon must lie in (0, amplitude]")
        object.__setattr__(self, "epsilon", float(eps))

    @classmethod
    def constant(cls, amplitude: float, period: float = 2.0) -> "DampingProfile":
        return cls("constant", amplitude, period=period)

    @classmethod
    def indicator(cls, amplitude: float, half_width: float, center: float = 0.0,
                  period: float = 2.0) -> "DampingProfile":
        return cls("indicator", amplitude, half_width, center, 0.0, period=period)

    @classmethod
    def smoothed_indicator(cls, amplitude: float, half_width: float, smoothing_width=None,
                           center: float = 0.0, period: float = 2.0) -> "DampingProfile":
        return cls("smoothed_indicator", amplitude, half_width, center, smoothing_width,
                   period=period)

    def distance(self, x) -> np.ndarray:
        """Periodic distance from ``x`` to the window center."""
        d = np.mod(np.asarray(x, dtype=float) - self.center + self.period / 2, self.period)
        return np.abs(d - self.period / 2)

    def evaluate(self, x, smoothing_width: Optional[float] = None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a = self.amplitude
        if self.kind == "constant":
            return np.full(x.shape, a)
        d = self.distance(x)
        width = self.smoothing_width if self.smoothing_width is not None else smoothing_width
        if self.kind == "indicator" or not width:
            return np.where(d <= self.half_width, a, 0.0)
        r = np.clip((d - self.half_width) / width, 0.0, 1.0)
        return a * 0.5 * (1.0 + np.cos(np.pi * r))

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)

    def in_support(self, x) -> np.ndarray:
        if self.kind == "constant":
            return np.ones(np.shape(x), dtype=bool)
        return self.distance(x) <= self.half_width

    def check_grid(self, grid: Grid):
        ratio = grid.period / self.period
        if abs(ratio - round(ratio)) > 1e-12 * ratio or round(ratio) < 1:
            raise ValueError(
                f"damping period {self.period} does not divide grid period {grid.period}")

    def sample(self, grid: Grid) -> np.ndarray:
        self.check_grid(grid)
        return self.evaluate(grid.points, smoothing_width=4 * grid.spacing)


def sample_damping(gamma: Optional[DampingProfile], grid: Grid) -> np.ndarray:
    """Sampled damping; ``None`` stands for no damping at all."""
    if gamma is None:
        return np.zeros(grid.n_modes)
    return gamma.sample(grid)


def multiply_pointwise(f: SpectralField, gamma) -> SpectralField:
    """Multiply by a damping profile (or a raw array of samples) in physical space."""
    g = gamma.sample(f.grid) if isinstance(gamma, DampingProfile) else np.asarray(gamma)
    if g.shape != (f.grid.n_modes,):
        raise ValueError("damping samples do not match the grid")
    values = g * f.values
    return SpectralField(f.grid, values=values, coeffs=f.grid.to_coeffs(values))
