"""Damped Helmholtz resolvent and the resolvent of the wave generator.

The scalar operator is

    H(k) = (-d_xx)^(s/2) + m + i k gamma(x) - k^2,

assembled densely in the Fourier basis: a diagonal symbol plus ``i k``
times the convolution matrix of the sampled damping.  The generator of
the first-order system U' = A U, U = (u, u_t), is

    A = [[0, I], [-(-d_xx)^(s/2) - m, -gamma]],

and (ik - A)^(-1) is obtained from H(k)^(-1) by the block formula
u1 = R((ik + gamma) f1 + f2), u2 = ik u1 - f1.

On large grids the matrices are restricted to a window of Fourier modes
around the resonant shell |xi|^s = k^2 - m; modes far from the shell
have a large diagonal and decouple.  ``resonance_window`` picks it and
the tests check convergence in its width.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import SingularOperatorError, UnderResolvedError
from .rates import BoundCheck, check_upper_bound, fit_power_law, predicted_decay
from .spectral import DampingProfile, Grid, SpectralField, make_grid, multiply_pointwise

__all__ = [
    "SPACE_PAIRS",
    "HelmholtzOperator",
    "ResolventScan",
    "assemble_helmholtz",
    "solve_resolvent",
    "resolvent_norm",
    "power_iteration_norm",
    "generator_matrix",
    "full_resolvent_apply",
    "full_resolvent_solve_monolithic",
    "full_resolvent_norm",
    "scan_resolvent",
    "geometric_k_grid",
    "resonance_window",
    "required_modes",
]

SPACE_PAIRS = ("L2->L2", "L2->Hs2", "Hneg->L2", "energy")
DENSE_LIMIT = 2048
WINDOW_HALF_WIDTH = 64
CONDITION_LIMIT = 1e14


def required_modes(s: float, k_max: float, half_period: float = 1.0, minimum: int = 16) -> int:
    """Smallest power-of-two grid with |xi_max|^s >= 4 k_max^2."""
    xi_needed = (4.0 * k_max ** 2) ** (1.0 / s)
    n = 2.0 * xi_needed * half_period / np.pi
    return max(minimum, 1 << int(np.ceil(np.log2(max(n, 2.0)))))


def check_resolution(grid: Grid, s: float, k: float):
    if grid.xi_max ** s < 4.0 * k * k * (1 - 1e-12):
        raise UnderResolvedError(
            f"|xi_max|^s = {grid.xi_max ** s:.4g} < 4 k^2 = {4 * k * k:.4g}; "
            f"need at least {required_modes(s, abs(k), grid.half_period)} modes")


def shell_index(grid: Grid, s: float, m: float, k: float) -> int:
    """Integer frequency index closest to the resonant shell |xi|^s = k^2 - m."""
    lam = k * k - m
    if lam <= 0:
        return 0
    return int(round(lam ** (1.0 / s) * grid.half_period / np.pi))


def resonance_window(grid: Grid, s: float, m: float, k: float,
                     half_width: int = WINDOW_HALF_WIDTH) -> np.ndarray:
    """Array positions of the modes within ``half_width`` indices of +-shell."""
    j0 = shell_index(grid, s, m, k)
    js = np.concatenate([np.arange(j0 - half_width, j0 + half_width + 1),
                         np.arange(-j0 - half_width, -j0 + half_width + 1)])
    js = np.unique(js)
    js = js[(js >= -(grid.n_modes // 2)) & (js < grid.n_modes // 2)]
    return np.sort(grid.position(js))


def _select_modes(grid, s, m, k, window):
    if window is None:
        if grid.n_modes <= DENSE_LIMIT:
            return np.arange(grid.n_modes)
        window = WINDOW_HALF_WIDTH
    if isinstance(window, (int, np.integer)):
        return resonance_window(grid, s, m, k, int(window))
    return np.asarray(window)


@lru_cache(maxsize=16)
def _damping_coeffs(gamma: Optional[DampingProfile], grid: Grid) -> np.ndarray:
    if gamma is None:
        c = np.zeros(grid.n_modes, dtype=complex)
    else:
        c = grid.to_coeffs(gamma.sample(grid))
    c.setflags(write=False)
    return c


def damping_matrix(gamma: Optional[DampingProfile], grid: Grid, modes=None) -> np.ndarray:
    """Matrix of multiplication by the sampled damping, in Fourier coefficients."""
    modes = np.arange(grid.n_modes) if modes is None else np.asarray(modes)
    ghat = _damping_coeffs(gamma, grid)
    idx = grid.indices[modes]
    return ghat[np.mod(idx[:, None] - idx[None, :], grid.n_modes)]


@dataclass(eq=False)
class HelmholtzOperator:
    s: float
    m: float
    k: float
    gamma: Optional[DampingProfile]
    grid: Grid
    modes: np.ndarray
    matrix: np.ndarray = field(repr=False)

    @property
    def windowed(self) -> bool:
        return len(self.modes) < self.grid.n_modes

    @property
    def xi(self) -> np.ndarray:
        return self.grid.frequencies[self.modes]

    @property
    def symbol(self) -> np.ndarray:
        """Diagonal part |xi|^s + m - k^2."""
        return np.abs(self.xi) ** self.s + self.m - self.k ** 2

    @cached_property
    def lu(self):
        with warnings.catch_warnings():
            # singularity is reported through the condition estimate below
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(self.matrix, check_finite=True)
        anorm = np.linalg.norm(self.matrix, 1)
        rcond, info = lapack.zgecon(lu, anorm, norm="1")
        cond = np.inf if rcond == 0 else 1.0 / rcond
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise SingularOperatorError(
                f"Helmholtz operator ill-conditioned (condition ~ {cond:.3g}) at k={self.k}", cond)
        return lu, piv

    @property
    def condition(self) -> float:
        lu, _ = self.lu
        rcond, _ = lapack.zgecon(lu, np.linalg.norm(self.matrix, 1), norm="1")
        return 1.0 / rcond

    def restrict(self, f: SpectralField) -> np.ndarray:
        if f.grid != self.grid:
            raise ValueError("field and operator live on different grids")
        c = f.coeffs
        if self.windowed:
            outside = np.delete(c, self.modes)
            if np.linalg.norm(outside) > 1e-12 * max(np.linalg.norm(c), 1e-300):
                raise ValueError("field has content outside the operator's mode window")
        return c[self.modes]

    def extend(self, c: np.ndarray) -> SpectralField:
        full = np.zeros(self.grid.n_modes, dtype=complex)
        full[self.modes] = c
        return SpectralField.from_coeffs(self.grid, full)

    def apply(self, f: SpectralField) -> SpectralField:
        return self.extend(self.matrix @ self.restrict(f))


def assemble_helmholtz(s: float, m: float, k: float, gamma: Optional[DampingProfile], grid: Grid,
                       window=None) -> HelmholtzOperator:
    """Dense Fourier-basis matrix of (-d_xx)^(s/2) + m + i k gamma - k^2.

    ``window`` is None (all modes up to the dense limit, else a resonance
    window of default width), an int half width, or explicit positions.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    if not m > 0:
        raise ValueError("mass m must be positive")
    check_resolution(grid, s, k)
    if gamma is not None:
        gamma.check_grid(grid)
    modes = _select_modes(grid, s, m, k, window)
    H = 1j * k * damping_matrix(gamma, grid, modes)
    H[np.diag_indices_from(H)] += np.abs(grid.frequencies[modes]) ** s + m - k * k
    return HelmholtzOperator(s, m, k, gamma, grid, modes, H)


def solve_resolvent(op: HelmholtzOperator, f: SpectralField) -> SpectralField:
    """u = H(k)^(-1) f; raises SingularOperatorError past the condition guard."""
    rhs = op.restrict(f)
    if not np.any(rhs):
        return SpectralField.zeros(op.grid)
    u = sla.lu_solve(op.lu, rhs)
    return op.extend(u)


def _weights(xi, s, m, kind, weights):
    if kind == "L2":
        return np.ones_like(xi)
    if weights == "sobolev":
        w = (1.0 + xi ** 2) ** (s / 4)
    elif weights == "energy":
        w = np.sqrt(m + np.abs(xi) ** s)
    else:
        raise ValueError(f"unknown weights {weights!r}")
    return w if kind == "Hs2" else 1.0 / w


def _pair_weights(op, pair, weights):
    try:
        src, dst = pair.split("->")
    except ValueError:
        raise ValueError(f"unknown space pair {pair!r}") from None
    if pair not in SPACE_PAIRS[:3]:
        raise ValueError(f"unknown space pair {pair!r}")
    w_in = _weights(op.xi, op.s, op.m, src, weights)
    w_out = _weights(op.xi, op.s, op.m, dst, weights)
    return w_in, w_out


def _smallest_singular_value(M: np.ndarray) -> float:
    sv = sla.svdvals(M, check_finite=True)
    return float(sv[-1])


def resolvent_norm(op: HelmholtzOperator, pair: str = "L2->L2", weights: str = "sobolev") -> float:
    """Operator norm of H(k)^(-1) between the requested spaces.

    ||W_out H^-1 W_in^-1|| = 1 / sigma_min(W_in H W_out^-1) with diagonal
    Sobolev weights; the L2 normalization constant cancels.
    """
    w_in, w_out = _pair_weights(op, pair, weights)
    M = (w_in[:, None] * op.matrix) / w_out[None, :]
    smin = _smallest_singular_value(M)
    if smin <= 0 or 1.0 / smin > CONDITION_LIMIT * np.max(np.abs(M)):
        raise SingularOperatorError(f"singular Helmholtz operator at k={op.k}")
    return 1.0 / smin


def power_iteration_norm(op: HelmholtzOperator, pair: str = "L2->L2", weights: str = "sobolev",
                         tol: float = 1e-13, max_iter: int = 20000, seed: int = 0) -> float:
    """Cross-check of :func:`resolvent_norm` by power iteration on R* R."""
    w_in, w_out = _pair_weights(op, pair, weights)
    lu, piv = op.lu
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(len(op.modes)) + 1j * rng.standard_normal(len(op.modes))
    x /= np.linalg.norm(x)
    prev = 0.0
    for _ in range(max_iter):
        y = w_out * sla.lu_solve((lu, piv), x / w_in)          # R x
        z = sla.lu_solve((lu, piv), w_out * y, trans=2) / w_in  # R* y
        est = np.sqrt(np.linalg.norm(z))
        x = z / np.linalg.norm(z)
        if abs(est - prev) <= tol * est:
            break
        prev = est
    return float(est)


def generator_matrix(s: float, m: float, k: float, gamma: Optional[DampingProfile], grid: Grid,
                     modes=None) -> np.ndarray:
    """Matrix of ik - A acting on stacked coefficients (u1, u2)."""
    modes = np.arange(grid.n_modes) if modes is None else np.asarray(modes)
    n = len(modes)
    xi = grid.frequencies[modes]
    M = np.zeros((2 * n, 2 * n), dtype=complex)
    ii = np.arange(n)
    M[ii, ii] = 1j * k
    M[ii, n + ii] = -1.0
    M[n + ii, ii] = np.abs(xi) ** s + m
    M[n:, n:] = damping_matrix(gamma, grid, modes)
    M[n + ii, n + ii] += 1j * k
    return M


def full_resolvent_apply(s: float, m: float, k: float, gamma: Optional[DampingProfile], grid: Grid,
                         f1: SpectralField, f2: SpectralField, op: Optional[HelmholtzOperator] = None):
    """(u1, u2) = (ik - A)^(-1) (f1, f2) through the scalar resolvent."""
    if op is None:
        op = assemble_helmholtz(s, m, k, gamma, grid, window=np.arange(grid.n_modes))
    g_f1 = multiply_pointwise(f1, gamma) if gamma is not None else SpectralField.zeros(grid)
    rhs = f1 * (1j * k) + g_f1 + f2
    u1 = solve_resolvent(op, rhs)
    u2 = u1 * (1j * k) - f1
    return u1, u2


def full_resolvent_solve_monolithic(s, m, k, gamma, grid, f1: SpectralField, f2: SpectralField):
    """Oracle: solve the assembled 2N x 2N system (ik - A) U = F directly."""
    M = generator_matrix(s, m, k, gamma, grid)
    n = grid.n_modes
    U = np.linalg.solve(M, np.concatenate([f1.coeffs, f2.coeffs]))
    return SpectralField.from_coeffs(grid, U[:n]), SpectralField.from_coeffs(grid, U[n:])


def energy_space_weights(grid: Grid, s: float, m: float, weights: str = "sobolev", modes=None):
    modes = np.arange(grid.n_modes) if modes is None else np.asarray(modes)
    xi = grid.frequencies[modes]
    w1 = _weights(xi, s, m, "Hs2", weights)
    return np.concatenate([w1, np.ones_like(w1)])


def full_resolvent_norm(s: float, m: float, k: float, gamma: Optional[DampingProfile], grid: Grid,
                        weights: str = "sobolev", window=None) -> float:
    """||(ik - A)^(-1)|| on H^(s/2) x L2 (largest singular value of the weighted inverse)."""
    if not m > 0:
        raise ValueError("mass m must be positive")
    check_resolution(grid, s, k)
    modes = _select_modes(grid, s, m, k, window)
    M = generator_matrix(s, m, k, gamma, grid, modes)
    W = energy_space_weights(grid, s, m, weights, modes)
    smin = _smallest_singular_value((W[:, None] * M) / W[None, :])
    if smin <= 0:
        raise SingularOperatorError(f"ik - A singular at k={k}")
    return 1.0 / smin


def geometric_k_grid(k_min: float = 1.0, k_max: float = 256.0, per_decade: int = 16,
                     s: Optional[float] = None, m: Optional[float] = None,
                     grid: Optional[Grid] = None, tol: float = 1e-6) -> np.ndarray:
    """Geometric grid with ``per_decade`` points per decade, endpoints included.

    With (s, m, grid) given, points within relative ``tol`` of an undamped
    resonance |xi_j|^s = k^2 - m are moved to the midpoint between the two
    neighbouring resonant k values, clipped to the half-gaps of the grid.
    """
    if not 0 < k_min < k_max:
        raise ValueError("need 0 < k_min < k_max")
    n = int(round(per_decade * np.log10(k_max / k_min))) + 1
    ks = np.geomspace(k_min, k_max, n)
    if s is None or grid is None or m is None:
        return ks
    res = np.sqrt(np.unique(np.abs(grid.frequencies)) ** s + m)
    ratio = (k_max / k_min) ** (1.0 / (n - 1))
    out = []
    for k in ks:
        i = np.searchsorted(res, k)
        near = [r for r in res[max(i - 1, 0):i + 1] if abs(r - k) <= tol * k]
        if near:
            j = int(np.searchsorted(res, near[0]))
            lo = res[j - 1] if j > 0 else 0.0
            hi = res[j + 1] if j + 1 < len(res) else res[j] + (res[j] - lo)
            mid = 0.5 * (near[0] + (hi if k >= near[0] else lo))
            # stay inside the geometric half-gaps so the grid remains increasing
            k = float(np.clip(mid, k / np.sqrt(ratio), k * np.sqrt(ratio)))
        out.append(k)
    return np.array(out)


@dataclass
class ResolventScan:
    s: float
    m: float
    k_grid: np.ndarray
    norms: np.ndarray
    space_pair: str
    bound_exponent: float
    fitted_slope: float
    bound: BoundCheck

    def rows(self):
        bracket = np.sqrt(1.0 + self.k_grid ** 2)
        for k, nrm, b in zip(self.k_grid, self.norms, bracket):
            yield {
                "s": self.s, "m": self.m, "k": float(k), "pair": self.space_pair,
                "norm": float(nrm), "paper_exponent": self.bound_exponent,
                "normalized_ratio": float(nrm / b ** self.bound_exponent),
            }


def bound_exponent_for(s: float, pair: str) -> float:
    pred = predicted_decay(s)
    if pair == "L2->L2":
        return pred.resolvent_exponent_L2
    return pred.resolvent_exponent_energy


def scan_resolvent(s: float, m: float, gamma: Optional[DampingProfile], grid: Optional[Grid],
                   k_grid, pair: str = "L2->L2", weights: str = "sobolev", window=None,
                   tail_fraction: float = 0.5) -> ResolventScan:
    """Norms along ``k_grid`` with the log-log tail slope and the bound check.

    ``grid`` None picks the smallest grid resolving max(k_grid).
    """
    k_grid = np.asarray(k_grid, dtype=float)
    if k_grid.ndim != 1 or len(k_grid) == 0:
        raise ValueError("k_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(k_grid) <= 0):
        raise ValueError("k_grid must be strictly increasing")
    if pair not in SPACE_PAIRS:
        raise ValueError(f"unknown space pair {pair!r}")
    if grid is None:
        grid = make_grid(required_modes(s, float(np.max(np.abs(k_grid)))), 1.0)
    norms = []
    for k in k_grid:
        if pair == "energy":
            norms.append(full_resolvent_norm(s, m, k, gamma, grid, weights, window))
        else:
            op = assemble_helmholtz(s, m, k, gamma, grid, window)
            norms.append(resolvent_norm(op, pair, weights))
    norms = np.array(norms)
    bracket = np.sqrt(1.0 + k_grid ** 2)
    beta = bound_exponent_for(s, pair)
    try:
        slope = fit_power_law(bracket, norms, tail_fraction).slope
    except ValueError:
        slope = float("nan")
    bound = check_upper_bound(bracket, norms, beta) if len(k_grid) >= 3 else None
    return ResolventScan(s, m, k_grid, norms, pair, beta, slope, bound)
