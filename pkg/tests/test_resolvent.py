import numpy as np
import pytest

from fracdamp.errors import SingularOperatorError, UnderResolvedError
from fracdamp.resolvent import (assemble_helmholtz, full_resolvent_apply, full_resolvent_norm,
                                full_resolvent_solve_monolithic, generator_matrix, geometric_k_grid,
                                power_iteration_norm, required_modes, resolvent_norm, scan_resolvent,
                                solve_resolvent)
from fracdamp.spectral import (DampingProfile, SpectralField, frac_laplacian_apply, make_grid,
                               multiply_pointwise)

GAMMA = DampingProfile.smoothed_indicator(1.0, 0.5, smoothing_width=0.25)


@pytest.fixture(scope="module")
def grid():
    return make_grid(128)


def rand(grid, rng, j=30):
    return SpectralField.random_bandlimited(grid, j, rng, real=False)


class TestAssembly:
    def test_undamped_k0_diagonal(self, grid):
        op = assemble_helmholtz(1.3, 2.0, 0.0, None, grid)
        np.testing.assert_array_equal(op.matrix, np.diag(np.abs(grid.frequencies) ** 1.3 + 2.0))

    def test_undamped_is_diagonal(self, grid):
        op = assemble_helmholtz(1.0, 1.0, 3.3, None, grid)
        off = op.matrix - np.diag(np.diag(op.matrix))
        assert np.abs(off).max() == 0
        np.testing.assert_allclose(np.diag(op.matrix), np.abs(grid.frequencies) + 1 - 3.3 ** 2)

    def test_single_mode_solution(self):
        g = make_grid(16)
        op = assemble_helmholtz(2.0, 1.0, 0.0, None, g)
        u = solve_resolvent(op, SpectralField.mode(g, 1))
        np.testing.assert_allclose(u.coeffs, SpectralField.mode(g, 1, 1 / (np.pi ** 2 + 1)).coeffs, atol=1e-16)

    def test_action_matches_matrix_free(self, grid):
        rng = np.random.default_rng(0)
        for _ in range(20):
            s = rng.uniform(0.6, 2.5)
            k = rng.uniform(-1, 1) * min(5.0, np.sqrt(grid.xi_max ** s / 4))
            op = assemble_helmholtz(s, 1.0, k, GAMMA, grid)
            f = rand(grid, rng)
            ref = frac_laplacian_apply(f, s) + f * (1.0 - k * k) + multiply_pointwise(f, GAMMA) * (1j * k)
            err = np.linalg.norm(op.apply(f).coeffs - ref.coeffs) / np.linalg.norm(ref.coeffs)
            assert err <= 1e-10

    def test_conjugate_transpose(self, grid):
        a = assemble_helmholtz(1.5, 1.0, 4.0, GAMMA, grid).matrix
        b = assemble_helmholtz(1.5, 1.0, -4.0, GAMMA, grid).matrix
        np.testing.assert_allclose(b, a.conj().T, atol=1e-14)

    def test_under_resolved(self):
        with pytest.raises(UnderResolvedError):
            assemble_helmholtz(1.0, 1.0, 50.0, GAMMA, make_grid(64))

    def test_rejects_massless(self, grid):
        with pytest.raises(ValueError):
            assemble_helmholtz(1.0, 0.0, 1.0, GAMMA, grid)

    def test_required_modes(self):
        for s, k in [(1.0, 256.0), (2.0, 256.0), (3.0, 256.0), (0.8, 20.0)]:
            g = make_grid(required_modes(s, k))
            assert g.xi_max ** s >= 4 * k * k
            assert make_grid(g.n_modes // 2).xi_max ** s < 4 * k * k or g.n_modes == 16


class TestSolve:
    def test_zero_rhs(self, grid):
        u = solve_resolvent(assemble_helmholtz(1.0, 1.0, 2.0, GAMMA, grid), SpectralField.zeros(grid))
        assert np.all(u.coeffs == 0)

    def test_undamped_division(self, grid):
        s, k = 1.2, 2.5
        u = solve_resolvent(assemble_helmholtz(s, 1.0, k, None, grid), SpectralField.mode(grid, 3))
        assert u.coeffs[3] == pytest.approx(1 / ((3 * np.pi) ** s + 1 - k * k), rel=1e-14)

    def test_imaginary_identity_example(self):
        g = make_grid(256)
        rng = np.random.default_rng(1)
        f = rand(g, rng)
        k = 5.0
        u = solve_resolvent(assemble_helmholtz(1.0, 1.0, k, GAMMA, g), f)
        rhs = k * g.spacing * np.sum(GAMMA.sample(g) * np.abs(u.values) ** 2)
        assert f.inner(u).imag == pytest.approx(rhs, rel=1e-8)

    def test_residual_and_adjoint(self, grid):
        rng = np.random.default_rng(2)
        for _ in range(50):
            s = rng.choice([0.8, 1.0, 1.5, 2.0])
            k = rng.uniform(-1, 1) * min(8.0, np.sqrt(grid.xi_max ** s / 4))
            op = assemble_helmholtz(s, 1.0, k, GAMMA, grid)
            f, h = rand(grid, rng), rand(grid, rng)
            u = solve_resolvent(op, f)
            assert np.linalg.norm((op.apply(u) - f).coeffs) <= 1e-9 * np.linalg.norm(f.coeffs)
            w = solve_resolvent(assemble_helmholtz(s, 1.0, -k, GAMMA, grid), h)
            assert abs(u.inner(h) - f.inner(w)) <= 1e-9 * abs(u.inner(h))

    def test_resolvent_algebra(self, grid):
        rng = np.random.default_rng(3)
        s, k = 1.4, 3.7
        op = assemble_helmholtz(s, 1.0, k, GAMMA, grid)
        f = rand(grid, rng)
        lhs = solve_resolvent(op, (multiply_pointwise(f, GAMMA) + f * (1j * k)) * (1j * k)) - f
        rhs = -solve_resolvent(op, frac_laplacian_apply(f, s) + f)
        assert np.linalg.norm((lhs - rhs).coeffs) <= 1e-9 * np.linalg.norm(rhs.coeffs)

    def test_singular_guard(self):
        g = make_grid(32)
        k = np.sqrt(np.pi ** 2 + 1)
        op = assemble_helmholtz(2.0, 1.0, k, None, g)
        with pytest.raises(SingularOperatorError) as exc:
            solve_resolvent(op, SpectralField.mode(g, 1))
        assert exc.value.condition > 1e14

    def test_small_k_coercivity(self, grid):
        m = 2.0
        for s in (0.6, 1.0, 2.0):
            for k in np.linspace(-np.sqrt(m) / 2, np.sqrt(m) / 2, 7):
                nrm = resolvent_norm(assemble_helmholtz(s, m, k, GAMMA, grid), "L2->Hs2", weights="energy")
                assert nrm <= 4 / (3 * np.sqrt(m)) * (1 + 1e-12)

    def test_window_rejects_outside_content(self):
        g = make_grid(4096)
        op = assemble_helmholtz(1.5, 1.0, 100.0, GAMMA, g)
        assert op.windowed
        with pytest.raises(ValueError):
            solve_resolvent(op, SpectralField.mode(g, 1))


class TestNorms:
    def test_undamped_distance_formula(self, grid):
        for s in (0.7, 1.0, 2.0):
            for k in geometric_k_grid(1, 3, 8, s=s, m=1.0, grid=grid):
                exact = 1 / np.min(np.abs(np.abs(grid.frequencies) ** s + 1 - k * k))
                assert resolvent_norm(assemble_helmholtz(s, 1.0, k, None, grid)) == pytest.approx(exact, rel=1e-10)

    def test_k0_s2_is_one(self, grid):
        assert resolvent_norm(assemble_helmholtz(2.0, 1.0, 0.0, None, grid)) == pytest.approx(1.0, rel=1e-14)

    def test_weight_monotonicity(self, grid):
        op = assemble_helmholtz(1.3, 1.0, 3.0, GAMMA, grid)
        l2 = resolvent_norm(op, "L2->L2")
        assert resolvent_norm(op, "L2->Hs2") >= l2
        assert resolvent_norm(op, "Hneg->L2") >= l2

    def test_power_iteration_cross_check(self, grid):
        op = assemble_helmholtz(1.0, 1.0, 6.0, GAMMA, grid)
        for pair in ("L2->L2", "L2->Hs2", "Hneg->L2"):
            assert power_iteration_norm(op, pair) == pytest.approx(resolvent_norm(op, pair), rel=1e-8)

    def test_unknown_pair(self, grid):
        with pytest.raises(ValueError):
            resolvent_norm(assemble_helmholtz(1.0, 1.0, 1.0, GAMMA, grid), "H1->L2")

    def test_window_convergence(self):
        g = make_grid(8192)
        a = resolvent_norm(assemble_helmholtz(1.5, 1.0, 150.0, GAMMA, g, window=64))
        b = resolvent_norm(assemble_helmholtz(1.5, 1.0, 150.0, GAMMA, g, window=256))
        assert a == pytest.approx(b, rel=1e-6)


class TestGenerator:
    def test_zero_rhs(self, grid):
        z = SpectralField.zeros(grid)
        u1, u2 = full_resolvent_apply(1.0, 1.0, 2.0, GAMMA, grid, z, z)
        assert np.all(u1.coeffs == 0) and np.all(u2.coeffs == 0)

    def test_k0_undamped(self, grid):
        rng = np.random.default_rng(4)
        f1, f2 = rand(grid, rng), rand(grid, rng)
        u1, u2 = full_resolvent_apply(1.5, 2.0, 0.0, None, grid, f1, f2)
        np.testing.assert_allclose(u1.coeffs, f2.coeffs / (np.abs(grid.frequencies) ** 1.5 + 2.0), atol=1e-15)
        np.testing.assert_allclose(u2.coeffs, -f1.coeffs)

    def test_block_vs_monolithic(self):
        grid = make_grid(256)
        rng = np.random.default_rng(5)
        f1, f2 = rand(grid, rng), rand(grid, rng)
        a = full_resolvent_apply(1.0, 1.0, 8.0, GAMMA, grid, f1, f2)
        b = full_resolvent_solve_monolithic(1.0, 1.0, 8.0, GAMMA, grid, f1, f2)
        for x, y in zip(a, b):
            assert np.linalg.norm(x.coeffs - y.coeffs) <= 1e-9 * np.linalg.norm(y.coeffs)

    def test_residual_energy_norm(self, grid):
        rng = np.random.default_rng(6)
        s, k = 1.2, 4.0
        f1, f2 = rand(grid, rng), rand(grid, rng)
        u1, u2 = full_resolvent_apply(s, 1.0, k, GAMMA, grid, f1, f2)
        M = generator_matrix(s, 1.0, k, GAMMA, grid)
        r = M @ np.concatenate([u1.coeffs, u2.coeffs]) - np.concatenate([f1.coeffs, f2.coeffs])
        w = np.concatenate([(1 + grid.frequencies ** 2) ** (s / 4), np.ones(grid.n_modes)])
        F = np.concatenate([f1.coeffs, f2.coeffs])
        assert np.linalg.norm(w * r) <= 1e-9 * np.linalg.norm(w * F)

    def test_undamped_skew_in_energy_product(self, grid):
        # A is skew-adjoint for the weight (m + |xi|^s) on u when gamma = 0
        s, m = 1.3, 1.0
        A = 0 * 1j - generator_matrix(s, m, 0.0, None, grid)
        w = np.concatenate([m + np.abs(grid.frequencies) ** s, np.ones(grid.n_modes)])
        S = w[:, None] * A
        np.testing.assert_allclose(S + S.conj().T, 0, atol=1e-10)

    def test_block_domination(self, grid):
        s, k = 1.5, 5.0
        full = full_resolvent_norm(s, 1.0, k, GAMMA, grid)
        part = resolvent_norm(assemble_helmholtz(s, 1.0, k, GAMMA, grid), "L2->Hs2")
        assert full >= part * (1 - 1e-12)

    def test_constant_damping_modal_closed_form(self, grid):
        a, s, m, k = 0.8, 2.0, 1.0, 3.3
        gam = DampingProfile.constant(a)
        best = 0.0
        for xi in grid.frequencies:
            w = np.sqrt(1 + xi * xi)
            Mj = np.array([[1j * k, -1.0], [xi * xi + m, 1j * k + a]])
            W = np.diag([w, 1.0])
            best = max(best, 1 / np.linalg.svd(W @ Mj @ np.linalg.inv(W), compute_uv=False)[-1])
        assert full_resolvent_norm(s, m, k, gam, grid) == pytest.approx(best, rel=1e-8)

    def test_k0_inverse_generator(self, grid):
        s, m = 1.0, 1.0
        A = -generator_matrix(s, m, 0.0, GAMMA, grid)
        W = np.concatenate([(1 + grid.frequencies ** 2) ** (s / 4), np.ones(grid.n_modes)])
        inv = np.linalg.inv(A)
        exact = np.linalg.norm(W[:, None] * inv / W[None, :], 2)
        assert full_resolvent_norm(s, m, 0.0, GAMMA, grid) == pytest.approx(exact, rel=1e-8)


class TestScan:
    def test_geometric_grid(self):
        ks = geometric_k_grid()
        assert len(ks) == 40 and ks[0] == 1 and ks[-1] == pytest.approx(256)
        step = np.diff(np.log10(ks))
        np.testing.assert_allclose(step, step[0])
        assert step[0] == pytest.approx(1 / 16, rel=0.02)

    def test_resonance_avoidance(self):
        g = make_grid(64)
        k_res = np.sqrt(np.pi ** 2 * 4 + 1)  # j = 2 at s = 2, m = 1
        ks = geometric_k_grid(k_res / 10 ** (2 / 16), k_res * 10 ** (2 / 16), 16, s=2.0, m=1.0, grid=g)
        res = np.sqrt(np.abs(g.frequencies) ** 2 + 1)
        assert np.min(np.abs(ks[:, None] - res[None, :])) > 1e-3

    def test_undamped_scan_matches_formula(self):
        g = make_grid(256)
        ks = geometric_k_grid(1, 64, 16, s=2.0, m=1.0, grid=g)
        scan = scan_resolvent(2.0, 1.0, None, g, ks)
        exact = [1 / np.min(np.abs(g.frequencies ** 2 + 1 - k * k)) for k in ks]
        np.testing.assert_allclose(scan.norms, exact, rtol=1e-10)

    def test_s1_bounded_ratio(self):
        scan = scan_resolvent(1.0, 1.0, GAMMA, None, geometric_k_grid(1, 256, 16))
        assert scan.bound_exponent == 1.0
        assert scan.bound.stabilized and np.isfinite(scan.bound.sup_ratio)

    def test_s3_norm_decreases(self):
        ks = geometric_k_grid(16, 256, 16)
        scan = scan_resolvent(3.0, 1.0, GAMMA, None, ks)
        # decreasing trend at large k
        assert scan.fitted_slope < 0

    def test_rows(self):
        scan = scan_resolvent(1.5, 1.0, GAMMA, make_grid(128), geometric_k_grid(1, 8, 4))
        rows = list(scan.rows())
        assert len(rows) == len(scan.k_grid)
        assert set(rows[0]) == {"s", "m", "k", "pair", "norm", "paper_exponent", "normalized_ratio"}

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            scan_resolvent(1.0, 1.0, GAMMA, make_grid(64), [2.0, 1.0])
        with pytest.raises(ValueError):
            scan_resolvent(1.0, 1.0, GAMMA, make_grid(64), [1.0], pair="bogus")
