"""Fast module invariants, run by ``verify --suite invariants``."""

from __future__ import annotations

import numpy as np

from .acceptance import Check, standard_damping
from .observability import (ObservabilityQuery, elementary_constants, no_control_constant,
                            observability_constant)
from .rates import fit_exponential, fit_power_law, predicted_decay
from .resolvent import assemble_helmholtz, resolvent_norm, solve_resolvent
from .semigroup import SimConfig, energy, initial_state, rotation_flow, simulate
from .spectral import SpectralField, frac_laplacian_apply, make_grid, multiply_pointwise

__all__ = ["run_invariants"]


def _check(name, label, measured, tol, ok=None, expected=None):
    ok = bool(measured <= tol) if ok is None else bool(ok)
    return Check(name, label, expected or f"<= {tol:g}", float(measured), float(tol), ok)


def spectral_invariants(rng):
    g = make_grid(128)
    f = SpectralField.from_values(g, rng.standard_normal(128))
    h = SpectralField.from_values(g, rng.standard_normal(128))
    back = g.to_values(g.to_coeffs(f.values))
    out = [_check("round trip", "transform", np.linalg.norm(back - f.values) / np.linalg.norm(f.values), 1e-12)]
    parseval = abs(f.l2_norm() - np.sqrt(g.weight * np.sum(np.abs(f.coeffs) ** 2))) / f.l2_norm()
    out.append(_check("discrete Parseval", "transform", parseval, 1e-12))
    fb = SpectralField.random_bandlimited(g, 30, rng)
    hb = SpectralField.random_bandlimited(g, 30, rng)
    a = frac_laplacian_apply(fb, 1.3).inner(hb)
    b = fb.inner(frac_laplacian_apply(hb, 1.3))
    out.append(_check("fractional Laplacian self-adjoint", "multiplier", abs(a - b) / abs(a), 1e-10))
    nonneg = min(frac_laplacian_apply(x, s).inner(x).real for x in (f, h) for s in (0.5, 1.0, 2.5))
    out.append(_check("fractional Laplacian nonnegative", "multiplier", -nonneg, 1e-12))
    lhs = frac_laplacian_apply(frac_laplacian_apply(fb, 0.7), 1.1).coeffs
    rhs = frac_laplacian_apply(fb, 1.8).coeffs
    out.append(_check("multiplier semigroup", "multiplier", np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs), 1e-10))
    d2 = -(1j * g.frequencies) ** 2 * fb.coeffs
    err = np.linalg.norm(frac_laplacian_apply(fb, 2.0).coeffs - d2) / np.linalg.norm(d2)
    out.append(_check("s=2 is minus second derivative", "multiplier", err, 1e-14))
    gam = standard_damping()
    a = multiply_pointwise(f, gam).inner(h)
    b = f.inner(multiply_pointwise(h, gam))
    out.append(_check("damping multiplication symmetric", "pointwise product", abs(a - b) / abs(a), 1e-12))
    return out


def observability_invariants(rng):
    out = []
    worst = 0.0
    for s in (0.5, 1.0, 1.5, 2.0, 3.0):
        d, D = elementary_constants(s)
        worst = max(worst, max(d - s, s - D, 0.0))
    out.append(_check("d_s <= s <= D_s", "elementary constants", worst, 0.0))
    cs = [observability_constant(ObservabilityQuery(1.5, 40.0, d)) for d in (0.1, 0.2, 0.4, 0.8)]
    incr = max(np.diff(cs).max(), 0.0) / cs[0]
    out.append(_check("C_q non-increasing in delta", "observability", incr, 1e-12))
    full = max(observability_constant(ObservabilityQuery(s, lam, 1.0)) for s in (1.0, 2.0) for lam in (3.0, 50.0))
    out.append(_check("C_q <= 1 at delta = 1", "observability", full, 1.0 + 1e-12))
    g = make_grid(256)
    excess = max(no_control_constant(s, lam, g) * abs(lam) for s in (0.7, 2.0) for lam in (-1.0, -10.0, -300.0))
    out.append(_check("no-control bound for negative lambda", "observability", excess, 1.0 + 1e-12))
    return out


def resolvent_invariants(rng):
    out = []
    gam = standard_damping()
    g = make_grid(256)
    res = adj = imag = ident = 0.0
    for _ in range(50):
        s = float(rng.choice([0.8, 1.0, 1.5, 2.0]))
        k = float(rng.uniform(-1, 1) * min(10.0, np.sqrt(g.xi_max ** s / 4)))
        f = SpectralField.random_bandlimited(g, 40, rng, real=False)
        h = SpectralField.random_bandlimited(g, 40, rng, real=False)
        op = assemble_helmholtz(s, 1.0, k, gam, g)
        u = solve_resolvent(op, f)
        res = max(res, np.linalg.norm((op.apply(u) - f).coeffs) / np.linalg.norm(f.coeffs))
        w = solve_resolvent(assemble_helmholtz(s, 1.0, -k, gam, g), h)
        adj = max(adj, abs(u.inner(h) - f.inner(w)) / abs(u.inner(h)))
        dis = k * g.spacing * np.sum(gam.sample(g) * np.abs(u.values) ** 2)
        imag = max(imag, abs(f.inner(u).imag - dis) / max(abs(dis), 1e-300))
        gf = multiply_pointwise(f, gam) + f * (1j * k)
        lhs = solve_resolvent(op, gf * (1j * k)) - f
        rhs = solve_resolvent(op, frac_laplacian_apply(f, s) + f * 1.0) * -1.0
        ident = max(ident, np.linalg.norm((lhs - rhs).coeffs) / np.linalg.norm(rhs.coeffs))
    out.append(_check("resolvent identity (50 draws)", "Helmholtz solve", res, 1e-9))
    out.append(_check("adjoint symmetry", "R(ik)* = R(-ik)", adj, 1e-9))
    out.append(_check("imaginary-part identity", "Im<f,u> = k ||sqrt(gamma) u||^2", imag, 1e-8))
    out.append(_check("ik R (gamma + ik) - I = -R (A_s + m)", "resolvent algebra", ident, 1e-9))
    m = 1.0
    small = max(resolvent_norm(assemble_helmholtz(s, m, k, gam, g), "L2->Hs2", weights="energy")
                for s in (0.8, 2.0) for k in np.linspace(0, np.sqrt(m) / 2, 6))
    out.append(_check("small-k coercivity", "|k| <= sqrt(m)/2", small * 3 * np.sqrt(m) / 4, 1.0 + 1e-12,
                      expected="norm <= 4 / (3 sqrt(m))"))
    return out


def semigroup_invariants(rng):
    out = []
    g = make_grid(64)
    st = initial_state(g, "random", seed=1)
    cfg = SimConfig(1.5, 1.0, g, standard_damping(), t_final=3.0, record_stride=1, weights="energy")
    tr = simulate(cfg, st, method="fft")
    rise = np.max(tr.energy_norm[1:] / tr.energy_norm[:-1]) - 1.0
    out.append(_check("energy monotone", "contraction", rise, 1e-12))
    back = rotation_flow(rotation_flow(st, 1.5, 1.0, 0.37), 1.5, 1.0, -0.37)
    rev = energy(type(st)(back.u - st.u, back.v - st.v), 1.5, 1.0) / energy(st, 1.5, 1.0)
    out.append(_check("rotation time-reversible", "exact sub-flow", rev, 1e-13))
    cfg2 = SimConfig(1.5, 1.0, g, standard_damping(), t_final=1.0, record_stride=10 ** 9)
    a = simulate(cfg2, st, keep_states=True, method="fft").states[-1]
    b = simulate(cfg2, st.scaled(2.5 - 1j), keep_states=True, method="fft").states[-1]
    lin = np.linalg.norm(b.u.coeffs - (2.5 - 1j) * a.u.coeffs) / np.linalg.norm(b.u.coeffs)
    out.append(_check("linearity", "linear scheme", lin, 1e-10))
    return out


def rate_invariants(rng):
    out = []
    ps = [predicted_decay(2 - 10.0 ** -j) for j in range(2, 7)]
    grows = all(b.poly_exponent > a.poly_exponent for a, b in zip(ps, ps[1:]))
    out.append(_check("poly exponent diverges as s -> 2-", "rate map", ps[-1].poly_exponent, 1e5,
                      ok=grows and ps[-1].poly_exponent > 1e5, expected="increasing, > 1e5 at s = 2 - 1e-6"))
    out.append(_check("alpha -> 0+ as s -> 2-", "rate map", ps[-1].bt_alpha, 1e-5,
                      ok=all(p.bt_alpha > 0 for p in ps) and ps[-1].bt_alpha < 1e-5))
    gap = max(abs(p.resolvent_exponent_energy - p.resolvent_exponent_L2 - 1)
              for p in map(predicted_decay, (0.3, 1.0, 1.9, 2.0, 3.5)))
    out.append(_check("energy minus L2 exponent = 1", "rate map", gap, 1e-14))
    inv = max(abs(p.poly_exponent * p.bt_alpha - 1) for p in map(predicted_decay, (0.3, 1.0, 4 / 3, 1.9)))
    out.append(_check("poly exponent = 1/alpha", "rate map", inv, 1e-14))
    x = np.linspace(1, 50, 64)
    y = x ** -0.7 * (1 + 0.1 * np.sin(x))
    f1, f2 = fit_power_law(x, y), fit_power_law(x, 7.3 * y)
    t = np.linspace(0, 20, 200)
    z = np.exp(-0.4 * t) * (1.2 + np.cos(3 * t))
    e1, e2 = fit_exponential(t, z), fit_exponential(t, 7.3 * z)
    out.append(_check("fits scale-equivariant", "fitting", max(abs(f1.slope - f2.slope), abs(e1.slope - e2.slope)), 1e-12))
    return out


def run_invariants(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for fn in (spectral_invariants, observability_invariants, resolvent_invariants,
               semigroup_invariants, rate_invariants):
        out.extend(fn(rng))
    return out
