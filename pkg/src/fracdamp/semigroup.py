"""Time evolution of u_tt + gamma(x) u_t + (-d_xx)^(s/2) u + m u = 0.

Strang splitting with two exact sub-flows: the undamped equation is a
rotation of each Fourier mode at frequency sqrt(|xi|^s + m), and the
damping v_t = -gamma v is solved pointwise by an exponential.  The
rotation is an isometry of the energy norm with weight (m + |xi|^s), the
damping a contraction, so the composition never increases that energy.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import NumericalGuardError
from .spectral import DampingProfile, Grid, SpectralField, sample_damping

__all__ = [
    "State",
    "SimConfig",
    "EnergyTrace",
    "NumericalGuardError",
    "initial_state",
    "step_strang",
    "simulate",
    "simulate_ensemble",
    "propagator_matrix",
    "energy",
    "energy_weights",
    "dissipation_residual",
]


@dataclass(frozen=True)
class State:
    u: SpectralField
    v: SpectralField
    t: float = 0.0

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise ValueError("u and v must share a grid")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def scaled(self, c: complex) -> "State":
        return State(self.u * c, self.v * c, self.t)


@dataclass
class SimConfig:
    s: float
    m: float
    grid: Grid
    gamma: Optional[DampingProfile] = None
    dt: Optional[float] = None
    t_final: float = 400.0
    record_stride: int = 1
    initial_data: str = "random"
    data_params: dict = field(default_factory=dict)
    max_phase: float = 0.5
    weights: str = "sobolev"

    def __post_init__(self):
        if not self.s > 0 or not self.m > 0:
            raise ValueError("s and m must be positive")
        if self.gamma is not None:
            self.gamma.check_grid(self.grid)
        if self.dt is None:
            self.dt = 0.01 / self.omega_max
        if not self.dt > 0 or not self.t_final > 0:
            raise ValueError("dt and t_final must be positive")
        if self.dt * self.omega_max > self.max_phase * (1 + 1e-12):
            raise ValueError(
                f"dt * omega_max = {self.dt * self.omega_max:.3g} exceeds the accuracy guard "
                f"{self.max_phase}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")
        if self.initial_data not in ("modal", "gaussian", "random"):
            raise ValueError(f"unknown initial data {self.initial_data!r}")

    @property
    def omega_max(self) -> float:
        return float(np.sqrt(self.grid.xi_max ** self.s + self.m))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def describe(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("grid", "gamma")}
        d["n_modes"] = self.grid.n_modes
        d["half_period"] = self.grid.half_period
        d["gamma"] = None if self.gamma is None else asdict(self.gamma)
        return d


@dataclass
class EnergyTrace:
    times: np.ndarray
    energy_norm: np.ndarray
    l2_u: np.ndarray
    l2_v: np.ndarray
    data_norm: float
    states: Optional[list] = None


def initial_state(grid: Grid, kind: str = "random", **params) -> State:
    """Initial data from one of the fixed classes.

    ``modal``: u = cos(pi j x / L) with ``j`` (default 1), v = 0.
    ``gaussian``: u = exp(-(x - x0)^2 / (2 w^2)), v = 0 (``width``, ``x0``).
    ``random``: real band-limited u and v on ``|j| <= j_max`` from ``seed``.
    """
    x = grid.points
    if kind == "modal":
        j = params.get("j", 1)
        u = SpectralField.from_values(grid, np.cos(np.pi * j * x / grid.half_period))
        v = SpectralField.zeros(grid)
    elif kind == "gaussian":
        w = params.get("width", 0.1)
        x0 = params.get("x0", 0.5)
        d = np.mod(x - x0 + grid.half_period, grid.period) - grid.half_period
        u = SpectralField.from_values(grid, np.exp(-0.5 * (d / w) ** 2))
        v = SpectralField.zeros(grid)
    elif kind == "random":
        rng = np.random.default_rng(params.get("seed", 0))
        j_max = params.get("j_max", 8)
        u = SpectralField.random_bandlimited(grid, j_max, rng)
        v = SpectralField.random_bandlimited(grid, j_max, rng)
    else:
        raise ValueError(f"unknown initial data {kind!r}")
    scale = params.get("scale", 1.0)
    return State(u * scale, v * scale, 0.0)


def energy_weights(grid: Grid, s: float, m: float, weights: str = "sobolev") -> np.ndarray:
    """Squared weight on the displacement component of the energy norm."""
    xi = grid.frequencies
    if weights == "sobolev":
        return (1.0 + xi ** 2) ** (s / 2)
    if weights == "energy":
        return m + np.abs(xi) ** s
    raise ValueError(f"unknown weights {weights!r}")


def energy(state: State, s: float, m: float, weights: str = "sobolev") -> float:
    """Norm of (u, v) in H^(s/2) x L2."""
    g = state.grid
    w = energy_weights(g, s, m, weights)
    e2 = g.weight * (np.sum(w * np.abs(state.u.coeffs) ** 2) + np.sum(np.abs(state.v.coeffs) ** 2))
    return float(np.sqrt(e2))


def data_norm(state: State, s: float) -> float:
    """Norm of (u, v) in H^s x H^(s/2), the data norm of the polynomial bound."""
    g = state.grid
    xi2 = 1.0 + g.frequencies ** 2
    e2 = g.weight * (np.sum(xi2 ** s * np.abs(state.u.coeffs) ** 2)
                     + np.sum(xi2 ** (s / 2) * np.abs(state.v.coeffs) ** 2))
    return float(np.sqrt(e2))


class _Stepper:
    """Precomputed rotation and damping factors for a fixed (config, dt)."""

    def __init__(self, grid: Grid, s: float, m: float, gamma, dt: float):
        self.grid = grid
        self.dt = dt
        self.omega = np.sqrt(np.abs(grid.frequencies) ** s + m)
        self.damp = np.exp(-sample_damping(gamma, grid) * dt)
        self.undamped = gamma is None
        self._half = self._rotation(dt / 2)
        self._full = self._rotation(dt)

    def _rotation(self, tau):
        c = np.cos(self.omega * tau)
        sn = np.sin(self.omega * tau)
        return c, sn / self.omega, -self.omega * sn

    def rotate(self, uh, vh, rot):
        c, s_over_w, mw_s = rot
        return c * uh + s_over_w * vh, mw_s * uh + c * vh

    def damp_v(self, vh):
        if self.undamped:
            return vh
        g = self.grid
        return g.to_coeffs(self.damp * g.to_values(vh))

    def run(self, uh, vh, n):
        """Advance ``n`` steps; consecutive half rotations are merged."""
        if n == 0:
            return uh, vh
        uh, vh = self.rotate(uh, vh, self._half)
        for i in range(n):
            vh = self.damp_v(vh)
            uh, vh = self.rotate(uh, vh, self._full if i < n - 1 else self._half)
        return uh, vh


def rotation_flow(state: State, s: float, m: float, tau: float) -> State:
    """Exact undamped flow over time ``tau`` (any sign)."""
    st = _Stepper(state.grid, s, m, None, abs(tau) or 1.0)
    uh, vh = st.rotate(state.u.coeffs, state.v.coeffs, st._rotation(tau))
    return State(state.u.with_coeffs(uh), state.v.with_coeffs(vh), state.t + tau)


def step_strang(state: State, cfg: SimConfig) -> State:
    """One step A(dt/2) B(dt) A(dt/2)."""
    st = _Stepper(cfg.grid, cfg.s, cfg.m, cfg.gamma, cfg.dt)
    uh, vh = st.run(state.u.coeffs, state.v.coeffs, 1)
    return State(state.u.with_coeffs(uh), state.v.with_coeffs(vh), state.t + cfg.dt)


MATRIX_LIMIT = 512


def propagator_matrix(cfg: SimConfig, n_steps: int = 1) -> np.ndarray:
    """Matrix of ``n_steps`` Strang steps on stacked coefficients (u, v).

    Built by stepping the unit vectors once and raising the result to the
    power ``n_steps`` by repeated squaring.
    """
    n = cfg.grid.n_modes
    st = _Stepper(cfg.grid, cfg.s, cfg.m, cfg.gamma, cfg.dt)
    eye = np.eye(2 * n, dtype=complex)
    uh, vh = st.run(eye[:, :n], eye[:, n:], 1)
    P = np.concatenate([uh, vh], axis=1).T
    return np.linalg.matrix_power(P, int(n_steps))


def _use_matrix(cfg: SimConfig, method: str) -> bool:
    if method not in ("auto", "fft", "matrix"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        # squaring costs ~ log2(stride) dense products; stepping costs n_steps FFT pairs
        return cfg.grid.n_modes <= MATRIX_LIMIT and cfg.n_steps > 50 * cfg.grid.n_modes
    return method == "matrix"


def simulate(cfg: SimConfig, state: Optional[State] = None, keep_states: bool = False,
             method: str = "auto") -> EnergyTrace:
    """Run to ``t_final`` and record the energy norm every ``record_stride`` steps.

    ``method`` ``fft`` steps with transforms; ``matrix`` advances each
    record interval with a precomputed power of the one-step matrix (the
    same scheme, cheaper for long runs on small grids).  ``auto`` picks.
    """
    if state is None:
        state = initial_state(cfg.grid, cfg.initial_data, **cfg.data_params)
    if _use_matrix(cfg, method):
        return simulate_ensemble(cfg, [state], keep_states)[0]
    st = _Stepper(cfg.grid, cfg.s, cfg.m, cfg.gamma, cfg.dt)
    n_total = cfg.n_steps
    stride = int(cfg.record_stride)
    uh = np.array(state.u.coeffs)
    vh = np.array(state.v.coeffs)
    t0 = state.t
    times, norms, l2u, l2v, states = [], [], [], [], []

    def record(step, uh, vh):
        snap = State(SpectralField.from_coeffs(cfg.grid, uh), SpectralField.from_coeffs(cfg.grid, vh),
                     t0 + step * cfg.dt)
        times.append(snap.t)
        norms.append(energy(snap, cfg.s, cfg.m, cfg.weights))
        l2u.append(float(np.sqrt(cfg.grid.weight * np.sum(np.abs(uh) ** 2))))
        l2v.append(float(np.sqrt(cfg.grid.weight * np.sum(np.abs(vh) ** 2))))
        if keep_states:
            states.append(snap)

    record(0, uh, vh)
    step = 0
    while step < n_total:
        n = min(stride, n_total - step)
        uh, vh = st.run(uh, vh, n)
        step += n
        if not (np.all(np.isfinite(uh)) and np.all(np.isfinite(vh))):
            raise NumericalGuardError(f"non-finite state after step {step}")
        record(step, uh, vh)

    return EnergyTrace(
        times=np.array(times),
        energy_norm=np.array(norms),
        l2_u=np.array(l2u),
        l2_v=np.array(l2v),
        data_norm=data_norm(state, cfg.s),
        states=states if keep_states else None,
    )


def simulate_ensemble(cfg: SimConfig, states: list, keep_states: bool = False) -> list:
    """Matrix-propagator runs of several initial states sharing one configuration."""
    grid = cfg.grid
    n = grid.n_modes
    n_total = cfg.n_steps
    stride = int(cfg.record_stride)
    P = propagator_matrix(cfg, min(stride, n_total))
    U = np.array([np.concatenate([st.u.coeffs, st.v.coeffs]) for st in states]).T
    w = energy_weights(grid, cfg.s, cfg.m, cfg.weights)
    t0 = np.array([st.t for st in states])
    snaps = [U]
    steps = [0]
    step = 0
    while step < n_total:
        k = min(stride, n_total - step)
        Pk = P if k == stride else propagator_matrix(cfg, k)
        U = Pk @ U
        step += k
        if not np.all(np.isfinite(U)):
            raise NumericalGuardError(f"non-finite state after step {step}")
        snaps.append(U)
        steps.append(step)
    S = np.array(snaps)  # (records, 2n, batch)
    uh, vh = S[:, :n, :], S[:, n:, :]
    norm_u2 = grid.weight * np.sum(np.abs(uh) ** 2, axis=1)
    norm_v2 = grid.weight * np.sum(np.abs(vh) ** 2, axis=1)
    en = np.sqrt(grid.weight * np.sum(w[None, :, None] * np.abs(uh) ** 2, axis=1) + norm_v2)
    traces = []
    for b, st in enumerate(states):
        times = t0[b] + np.array(steps) * cfg.dt
        kept = None
        if keep_states:
            kept = [State(SpectralField.from_coeffs(grid, uh[r, :, b]),
                          SpectralField.from_coeffs(grid, vh[r, :, b]), times[r])
                    for r in range(len(steps))]
        traces.append(EnergyTrace(times, en[:, b], np.sqrt(norm_u2[:, b]), np.sqrt(norm_v2[:, b]),
                                  data_norm(st, cfg.s), kept))
    return traces


def dissipation_residual(states: list, s: float, m: float, gamma: Optional[DampingProfile]) -> float:
    """Max relative defect of dE/dt = -int gamma |v|^2 along recorded states.

    E is half the squared energy norm with weight (m + |xi|^s); the rate is
    a forward difference and the dissipation a trapezoidal average, so the
    defect is O(dt^2) for a second-order trajectory.
    """
    if len(states) < 2:
        raise ValueError("need at least two recorded states")
    grid = states[0].grid
    g = sample_damping(gamma, grid)
    E = np.array([0.5 * energy(st, s, m, "energy") ** 2 for st in states])
    diss = np.array([grid.spacing * np.sum(g * np.abs(st.v.values) ** 2) for st in states])
    t = np.array([st.t for st in states])
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise ValueError("recorded times must increase")
    scale = np.maximum(0.5 * (E[1:] + E[:-1]), np.finfo(float).tiny)
    rate = np.diff(E) / dt
    avg = 0.5 * (diss[1:] + diss[:-1])
    # a stride spanning many oscillations makes the difference quotient meaningless
    omega_max = np.sqrt(grid.xi_max ** s + m)
    if np.max(dt) * omega_max > 2 * np.pi:
        raise ValueError("record stride too coarse for a difference quotient")
    return float(np.max(np.abs(rate + avg) / scale))
