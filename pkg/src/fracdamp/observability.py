"""Observability constants, shifted operators and periodization.

The observability constant of a query (s, lambda, delta) is the best C in

    ||u||^2 <= C^2 ( <lambda>^(2/s-2) ||f||^2 + ||u||^2_{L2[-delta, delta]} ),
    f = (H_alpha^s - lambda) u,

over the truncated Fourier space, H_alpha^s the multiplier |xi - alpha|^s.
The right side is the quadratic form u* Q u; with the exact Gram matrix
of the window, C^2 = 2L / lambda_min(Q).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import NumericalGuardError, SingularOperatorError, UnderResolvedError
from .spectral import Grid, SpectralField, frac_laplacian_apply, make_grid

__all__ = [
    "elementary_constants",
    "elementary_ratio",
    "lemma_violations",
    "ObservabilityQuery",
    "window_gram",
    "observability_form",
    "observability_constant",
    "scan_observability",
    "observability_lambda_grid",
    "alpha_uniformity",
    "no_control_constant",
    "ShiftedOperator",
    "shifted_apply",
    "shifted_group",
    "shifted_group_residual",
    "modulate",
    "periodize",
    "PeriodizationResult",
    "check_periodization_identity",
    "calibration_constant",
]

DENSE_LIMIT = 512
WINDOW_MODES = 258


# --- elementary two-sided bound -------------------------------------------------

def elementary_ratio(s: float, z) -> np.ndarray:
    """f_s(z) = (1 - z^s) / (1 - z) on [0, 1], with f_s(1) = s.

    Written as expm1(s log z) / expm1(log z) so that it stays accurate as
    z approaches 1.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    one = z == 1.0
    zero = z == 0.0
    mid = ~(one | zero)
    lz = np.log(z[mid])
    out[mid] = np.expm1(s * lz) / np.expm1(lz)
    out[one] = s
    out[zero] = 1.0
    return out


def elementary_constants(s: float, grid_points: int = 10_001) -> tuple[float, float]:
    """(min, max) of f_s over a uniform grid of [0, 1] that includes z = 1."""
    if not s > 0:
        raise ValueError(f"s must be positive, got {s!r}")
    if grid_points < 1000:
        raise ValueError("grid_points must be at least 1000")
    vals = elementary_ratio(s, np.linspace(0.0, 1.0, int(grid_points)))
    return float(vals.min()), float(vals.max())


def lemma_violations(s: float, d_s: float, D_s: float, x, y, rtol: float = 1e-12) -> int:
    """Count pairs breaking d max^(s-1) |x-y| <= |x^s - y^s| <= D max^(s-1) |x-y|."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    hi = np.maximum(x, y)
    mid = hi ** (s - 1) * np.abs(x - y)
    diff = np.abs(x ** s - y ** s)
    slack = rtol * np.maximum(diff, mid)
    low_bad = d_s * mid > diff + slack
    high_bad = diff > D_s * mid + slack
    return int(np.count_nonzero(low_bad | high_bad))


# --- observability constant ----------------------------------------------------

def japanese_bracket(x):
    return np.sqrt(1.0 + np.square(x))


@dataclass
class ObservabilityQuery:
    """Parameters of one observability constant.

    ``n_modes`` None picks the smallest power of two with
    |xi_max - |alpha||^s >= 4 |lambda|.
    """

    s: float
    lam: float
    delta: float
    n_modes: Optional[int] = None
    half_period: float = 1.0
    alpha: float = 0.0
    bracket_weight: float = field(init=False)

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("s must be positive")
        if not 0 < self.delta <= self.half_period:
            raise ValueError("delta must lie in (0, L]")
        self.bracket_weight = float(japanese_bracket(self.lam) ** (1.0 / self.s - 1.0))
        if self.n_modes is None:
            xi_needed = (4.0 * abs(self.lam)) ** (1.0 / self.s) + abs(self.alpha)
            n = 2.0 * xi_needed * self.half_period / np.pi
            self.n_modes = max(16, 1 << int(np.ceil(np.log2(max(n, 2.0)))))

    @property
    def grid(self) -> Grid:
        return make_grid(self.n_modes, self.half_period)

    def check_truncation(self):
        g = self.grid
        if (g.xi_max - abs(self.alpha)) ** self.s < 4.0 * abs(self.lam) * (1 - 1e-12):
            raise UnderResolvedError(
                f"n_modes={self.n_modes} too small for lambda={self.lam} at s={self.s}")


def window_gram(xi: np.ndarray, delta: float) -> np.ndarray:
    """Exact Gram matrix int_{-delta}^{delta} exp(i (xi_b - xi_a) x) dx."""
    d = xi[None, :] - xi[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        G = np.where(d == 0, 2.0 * delta, 2.0 * np.sin(d * delta) / np.where(d == 0, 1.0, d))
    return G


def _observability_modes(q: ObservabilityQuery, window):
    g = q.grid
    if window is None and g.n_modes <= DENSE_LIMIT:
        return np.arange(g.n_modes)
    n_keep = WINDOW_MODES if window is None else int(window)
    sym = np.abs(np.abs(g.frequencies - q.alpha) ** q.s - q.lam)
    return np.sort(np.argsort(sym, kind="stable")[:min(n_keep, g.n_modes)])


def observability_form(q: ObservabilityQuery, window=None):
    """(Q, modes): the quadratic form of the right side on coefficients."""
    q.check_truncation()
    g = q.grid
    modes = _observability_modes(q, window)
    xi = g.frequencies[modes]
    sym = np.abs(xi - q.alpha) ** q.s - q.lam
    Q = window_gram(xi, q.delta)
    Q[np.diag_indices_from(Q)] += q.bracket_weight ** 2 * g.weight * sym ** 2
    return Q, modes


def observability_constant(q: ObservabilityQuery, window=None) -> float:
    """Best constant of the quadratic-form observability inequality.

    ``window`` None uses the full truncation up to 512 modes and the
    modes closest to the shell |xi - alpha|^s = lambda beyond that; an int
    selects that many shell modes.
    """
    Q, _ = observability_form(q, window)
    mu = sla.eigvalsh(Q, subset_by_index=[0, 0])[0]
    if not mu > 1e-14 * np.max(np.abs(np.diag(Q))):
        raise SingularOperatorError(
            f"observability form singular (lambda_min = {mu:.3g}) for s={q.s}, lambda={q.lam}", np.inf)
    return float(np.sqrt(q.grid.weight / mu))


def scan_observability(s: float, delta: float, lam_grid: Sequence[float], n_modes: Optional[int] = None,
                       half_period: float = 1.0, alpha: float = 0.0) -> list[tuple[float, float]]:
    """Constants along ``lam_grid``; each point gets its own truncation when ``n_modes`` is None."""
    out = []
    for lam in lam_grid:
        q = ObservabilityQuery(s, float(lam), delta, n_modes, half_period, alpha)
        out.append((float(lam), observability_constant(q)))
    return out


def observability_lambda_grid(s: float, n_points: int = 40, lam_min: float = 1.0, lam_max: float = 1e4,
                              eigen_indices: Sequence[int] = (1, 2, 4, 8, 16),
                              half_period: float = 1.0) -> np.ndarray:
    """Geometric grid on [lam_min, lam_max] completed by exact eigenvalues (pi k / L)^s."""
    eig = np.array([(np.pi * k / half_period) ** s for k in eigen_indices])
    eig = eig[(eig >= lam_min) & (eig <= lam_max)]
    n_geo = n_points - len(eig)
    if n_geo < 2:
        raise ValueError("too few points for the geometric part")
    grid = np.concatenate([np.geomspace(lam_min, lam_max, n_geo), eig])
    return np.unique(grid)


def alpha_uniformity(s: float, lam: float, delta: float, alphas: Sequence[float],
                     n_modes: Optional[int] = None) -> tuple[np.ndarray, float]:
    """Constants over a finite alpha grid and their maximum."""
    cs = np.array([observability_constant(ObservabilityQuery(s, lam, delta, n_modes, alpha=a))
                   for a in alphas])
    return cs, float(cs.max())


def no_control_constant(s: float, lam: float, grid: Grid) -> float:
    """sup ||u|| / ||(A_s - lambda) u|| = 1 / dist(lambda, spectrum) on the grid."""
    dist = np.min(np.abs(np.abs(grid.frequencies) ** s - lam))
    if dist == 0:
        return np.inf
    return float(1.0 / dist)


# --- shifted operators -----------------------------------------------------------

@dataclass(frozen=True)
class ShiftedOperator:
    """The multiplier |xi - alpha|^s on a grid."""

    alpha: float
    s: float
    grid: Grid

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("s must be positive")

    @property
    def symbol(self) -> np.ndarray:
        return np.abs(self.grid.frequencies - self.alpha) ** self.s

    @property
    def shift_index(self) -> int:
        """alpha in units of the frequency spacing; raises when not an integer."""
        p = self.alpha / self.grid.frequency_spacing
        if abs(p - round(p)) > 1e-12 * max(1.0, abs(p)):
            raise ValueError(f"alpha={self.alpha} is not a multiple of the frequency spacing")
        return int(round(p))


def _check_grid(op: ShiftedOperator, f: SpectralField):
    if f.grid != op.grid:
        raise ValueError("field and operator live on different grids")


def shifted_apply(op: ShiftedOperator, f: SpectralField) -> SpectralField:
    _check_grid(op, f)
    return f.with_coeffs(op.symbol * f.coeffs)


def shifted_group(op: ShiftedOperator, t: float, f: SpectralField) -> SpectralField:
    """exp(i t H_alpha^s) f, coefficient-wise."""
    _check_grid(op, f)
    return f.with_coeffs(np.exp(1j * t * op.symbol) * f.coeffs)


def modulate(f: SpectralField, p: int) -> SpectralField:
    """Multiply by exp(i p pi x / L): an exact index shift of the coefficients.

    The field must vanish on the p modes that would wrap around.
    """
    g = f.grid
    c = f.coeffs
    src = g.position(g.indices - p)
    wraps = np.abs(g.indices[src] + p - g.indices) > 0
    if np.any(np.abs(c[src[wraps]]) > 0):
        raise ValueError("modulation would alias: field not band-limited enough")
    out = np.where(wraps, 0.0, c[src])
    return f.with_coeffs(out)


def shifted_group_residual(op: ShiftedOperator, t: float, f: SpectralField,
                           unitarity_tol: float = 1e-10) -> float:
    """Relative L2 gap between exp(itH_alpha) f and e^{i alpha x} exp(itH_0) e^{-i alpha x} f.

    Also certifies that exp(itH_alpha) preserves the norm; a defect above
    ``unitarity_tol`` raises NumericalGuardError.
    """
    p = op.shift_index
    lhs = shifted_group(op, t, f)
    base = ShiftedOperator(0.0, op.s, op.grid)
    rhs = modulate(shifted_group(base, t, modulate(f, -p)), p)
    nf = np.linalg.norm(f.coeffs)
    if nf == 0:
        return 0.0
    if abs(np.linalg.norm(lhs.coeffs) - nf) > unitarity_tol * nf:
        raise NumericalGuardError("shifted group is not unitary to tolerance")
    return float(np.linalg.norm(lhs.coeffs - rhs.coeffs) / nf)


# --- periodization -----------------------------------------------------------------

def periodize(g: Callable[[np.ndarray], np.ndarray], alpha: float, grid: Grid,
              tol: float = 1e-12, max_shifts: int = 10_000) -> SpectralField:
    """Sum_n exp(i alpha (x + P n)) g(x + P n) sampled on the grid, P its period.

    Shifts are added symmetrically until a new pair contributes less than
    ``tol`` relative to the running maximum.
    """
    x = np.asarray(grid.points)
    P = grid.period

    def term(n):
        y = x + P * n
        return np.exp(1j * alpha * y) * np.asarray(g(y), dtype=complex)

    total = term(0)
    scale = np.max(np.abs(total))
    for n in range(1, max_shifts + 1):
        add = term(n) + term(-n)
        total = total + add
        scale = max(scale, np.max(np.abs(total)))
        if np.max(np.abs(add)) <= tol * max(scale, np.finfo(float).tiny):
            # a compactly supported g may have a gap before its next shift is nonzero
            ahead = max(np.max(np.abs(term(n + 1))), np.max(np.abs(term(-n - 1))))
            if ahead <= tol * max(scale, np.finfo(float).tiny):
                return SpectralField.from_values(grid, total)
    raise ValueError(f"periodization did not converge within {max_shifts} shifts: support too wide")


def torus_norm_sq(field: SpectralField) -> float:
    """Trapezoidal integral of |field|^2 over one period."""
    return float(field.grid.spacing * np.sum(np.abs(field.values) ** 2))


def alpha_sweep(g, grid: Grid, n_alpha: int) -> tuple[np.ndarray, np.ndarray]:
    """Torus norms of Pi_alpha g on the uniform grid alpha_i = i * (2 pi / P) / n_alpha."""
    width = 2 * np.pi / grid.period
    alphas = width * np.arange(n_alpha) / n_alpha
    return alphas, np.array([torus_norm_sq(periodize(g, a, grid)) for a in alphas])


def _alpha_integral(g, grid, n_alpha):
    alphas, norms = alpha_sweep(g, grid, n_alpha)
    # periodic, smooth integrand in alpha: the rectangle rule is spectrally accurate
    return alphas, norms, float(norms.mean() * 2 * np.pi / grid.period)


def calibration_constant(grid: Grid, width: float = 0.3, n_alpha: int = 64) -> float:
    """Normalization c with ||g||^2 = c * int ||Pi_alpha g||^2 d alpha, fitted on a Gaussian.

    The reference g = exp(-x^2 / (2 w^2)) has ||g||^2 = w sqrt(pi).
    """
    ref = lambda x: np.exp(-0.5 * (x / width) ** 2)
    exact = width * np.sqrt(np.pi)
    _, _, integral = _alpha_integral(ref, grid, n_alpha)
    return exact / integral


@dataclass
class PeriodizationResult:
    line_norm_sq: float
    torus_integral: float
    residual: float
    calibration: float
    alphas: np.ndarray = field(repr=False, default=None)
    torus_norms: np.ndarray = field(repr=False, default=None)
    zero_input: bool = False


def check_periodization_identity(g: Callable[[np.ndarray], np.ndarray], n_alpha: int = 64,
                                 grid: Optional[Grid] = None, line_norm_sq: Optional[float] = None,
                                 calibration: Optional[float] = None,
                                 doubling_tol: float = 1e-8) -> PeriodizationResult:
    """Compare ||g||^2 on the line with the calibrated alpha-integral of torus norms.

    ``line_norm_sq`` defaults to adaptive quadrature of |g|^2.  The alpha
    integral is recomputed with 2 n_alpha points; a relative change above
    ``doubling_tol`` raises ValueError (alpha grid too coarse).
    """
    from scipy.integrate import quad

    grid = grid if grid is not None else make_grid(256, 1.0)
    c = calibration if calibration is not None else calibration_constant(grid)
    if line_norm_sq is None:
        line_norm_sq = 0.0
        P = grid.period
        # integrate period by period outward until the contribution is negligible
        for n in range(0, 10_000):
            chunk = 0.0
            for a in ({n, -n - 1} if n else {0, -1}):
                chunk += quad(lambda x: abs(g(np.array([x]))[0]) ** 2, a * P, (a + 1) * P,
                              limit=200, epsabs=0, epsrel=1e-13)[0]
            line_norm_sq += chunk
            if n > 0 and chunk <= 1e-16 * max(line_norm_sq, 1e-300):
                break
    alphas, norms, integral = _alpha_integral(g, grid, n_alpha)
    if line_norm_sq == 0 and np.all(norms == 0):
        return PeriodizationResult(0.0, 0.0, float("nan"), c, alphas, norms, zero_input=True)
    _, _, fine = _alpha_integral(g, grid, 2 * n_alpha)
    if abs(fine - integral) > doubling_tol * abs(fine):
        raise ValueError(f"alpha resolution insufficient: doubling n_alpha moved the integral by "
                         f"{abs(fine - integral) / abs(fine):.2e}")
    torus = c * integral
    return PeriodizationResult(line_norm_sq, torus, abs(line_norm_sq - torus) / line_norm_sq, c,
                               alphas, norms)
