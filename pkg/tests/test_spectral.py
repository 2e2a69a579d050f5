import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracdamp.spectral import (DampingProfile, SpectralField, frac_laplacian_apply, make_grid,
                               multiply_pointwise, sample_damping, sobolev_norm)


class TestGrid:
    def test_four_modes_frequencies(self):
        g = make_grid(4, 1.0)
        assert sorted(g.frequencies) == pytest.approx([-2 * np.pi, -np.pi, 0.0, np.pi])

    def test_unit_frequency_spacing_on_pi(self):
        g = make_grid(8, np.pi)
        assert np.diff(np.sort(g.frequencies)) == pytest.approx(np.ones(7))
        assert g.frequency_spacing == pytest.approx(1.0)

    def test_spacing(self):
        g = make_grid(256, 1.0)
        assert len(g.points) == 256
        assert np.diff(g.points) == pytest.approx(np.full(255, 1 / 128))
        assert g.points[0] == -1.0

    def test_zero_frequency_present(self):
        assert 0.0 in make_grid(16).frequencies

    @pytest.mark.parametrize("n", [2, 3, 7, 0, -4, 5.5])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError):
            make_grid(n)

    @pytest.mark.parametrize("L", [0.0, -1.0, np.inf])
    def test_rejects_bad_half_period(self, L):
        with pytest.raises(ValueError):
            make_grid(8, L)


class TestSpectralField:
    def test_representations_agree(self):
        g = make_grid(64)
        f = SpectralField.from_values(g, np.random.default_rng(0).standard_normal(64))
        assert f.fresh == (True, False)
        c = f.coeffs
        assert f.fresh == (True, True)
        np.testing.assert_allclose(g.to_values(c), f.values, atol=1e-12 * np.abs(f.values).max())

    def test_mode_is_exponential(self):
        g = make_grid(32)
        f = SpectralField.mode(g, 3, 2.0)
        np.testing.assert_allclose(f.values, 2.0 * np.exp(1j * 3 * np.pi * g.points), atol=1e-13)

    def test_arrays_read_only(self):
        f = SpectralField.mode(make_grid(8), 1)
        with pytest.raises(ValueError):
            f.coeffs[0] = 1.0

    def test_random_real_field_is_real(self):
        g = make_grid(32)
        f = SpectralField.random_bandlimited(g, 5, np.random.default_rng(1))
        assert np.abs(f.values.imag).max() < 1e-14
        assert np.all(f.coeffs[np.abs(g.indices) > 5] == 0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            SpectralField.from_values(make_grid(8), np.zeros(6))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 7), st.integers(0, 2 ** 31 - 1))
    def test_round_trip_and_parseval(self, p, seed):
        g = make_grid(2 ** p)
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(g.n_modes) + 1j * rng.standard_normal(g.n_modes)
        f = SpectralField.from_values(g, v)
        back = g.to_values(f.coeffs)
        assert np.linalg.norm(back - v) <= 1e-12 * np.linalg.norm(v)
        assert abs(f.l2_norm() - sobolev_norm(f, 0.0)) <= 1e-12 * f.l2_norm()


class TestFractionalLaplacian:
    def test_constant_annihilated(self):
        g = make_grid(16)
        f = SpectralField.from_values(g, np.ones(16))
        for s in (0.3, 1.0, 2.0):
            assert np.abs(frac_laplacian_apply(f, s).values).max() < 1e-14

    @pytest.mark.parametrize("s, factor", [(2.0, np.pi ** 2), (1.0, np.pi)])
    def test_cosine_eigenfunction(self, s, factor):
        g = make_grid(32)
        f = SpectralField.from_function(g, lambda x: np.cos(np.pi * x))
        np.testing.assert_allclose(frac_laplacian_apply(f, s).values, factor * f.values, atol=1e-12)

    def test_rejects_nonpositive_order(self):
        f = SpectralField.mode(make_grid(8), 1)
        for s in (0.0, -1.0):
            with pytest.raises(ValueError):
                frac_laplacian_apply(f, s)

    def test_s2_is_second_derivative(self):
        g = make_grid(64)
        f = SpectralField.from_function(g, lambda x: np.sin(3 * np.pi * x) + 0.5 * np.cos(7 * np.pi * x))
        exact = (3 * np.pi) ** 2 * np.sin(3 * np.pi * g.points) + 0.5 * (7 * np.pi) ** 2 * np.cos(7 * np.pi * g.points)
        np.testing.assert_allclose(frac_laplacian_apply(f, 2.0).values.real, exact, atol=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.integers(0, 2 ** 31 - 1))
    def test_self_adjoint_and_composition(self, s1, s2, seed):
        g = make_grid(64)
        rng = np.random.default_rng(seed)
        f = SpectralField.random_bandlimited(g, 20, rng)
        h = SpectralField.random_bandlimited(g, 20, rng)
        a = frac_laplacian_apply(f, s1).inner(h)
        b = f.inner(frac_laplacian_apply(h, s1))
        assert abs(a - b) <= 1e-10 * max(abs(a), 1e-300)
        assert frac_laplacian_apply(f, s1).inner(f).real >= -1e-12
        lhs = frac_laplacian_apply(frac_laplacian_apply(f, s2), s1).coeffs
        rhs = frac_laplacian_apply(f, s1 + s2).coeffs
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


class TestSobolev:
    def test_zero(self):
        assert sobolev_norm(SpectralField.zeros(make_grid(8)), 1.3) == 0.0

    def test_order_zero_is_l2(self):
        g = make_grid(32)
        f = SpectralField.from_function(g, lambda x: np.exp(np.sin(np.pi * x)))
        assert sobolev_norm(f, 0.0) == pytest.approx(f.l2_norm(), rel=1e-12)

    def test_single_mode_order_one(self):
        # unit-norm e^{i pi x}: H^1 norm^2 = ||f||^2 + ||f'||^2 = 1 + pi^2
        g = make_grid(16)
        f = SpectralField.mode(g, 1, 1 / np.sqrt(2))
        assert f.l2_norm() == pytest.approx(1.0, rel=1e-14)
        deriv = SpectralField.from_values(g, 1j * np.pi * f.values)
        quad = np.sqrt(f.l2_norm() ** 2 + deriv.l2_norm() ** 2)
        assert sobolev_norm(f, 1.0) == pytest.approx(np.sqrt(1 + np.pi ** 2), rel=1e-13)
        assert sobolev_norm(f, 1.0) == pytest.approx(quad, rel=1e-13)

    def test_rejects_infinite_order(self):
        with pytest.raises(ValueError):
            sobolev_norm(SpectralField.mode(make_grid(8), 1), np.inf)


class TestDamping:
    def test_constant_multiplies(self):
        g = make_grid(32)
        f = SpectralField.random_bandlimited(g, 6, np.random.default_rng(2))
        out = multiply_pointwise(f, DampingProfile.constant(0.7))
        np.testing.assert_allclose(out.coeffs, 0.7 * f.coeffs, atol=1e-15)

    def test_indicator_of_one(self):
        g = make_grid(64)
        gam = DampingProfile.indicator(2.0, 0.25)
        out = multiply_pointwise(SpectralField.from_values(g, np.ones(64)), gam)
        inside = np.abs(g.points) <= 0.25
        np.testing.assert_allclose(out.values[inside], 2.0)
        np.testing.assert_allclose(out.values[~inside], 0.0)

    def test_smoothed_profile_bounds(self):
        gam = DampingProfile.smoothed_indicator(1.5, 0.4, smoothing_width=0.2)
        x = np.linspace(-1, 1, 2001)
        v = gam(x)
        assert v.min() >= 0 and v.max() <= 1.5
        assert np.all(v[gam.in_support(x)] >= gam.epsilon)
        assert np.all(v[np.abs(x) >= 0.6] == 0)

    def test_default_ramp_four_cells(self):
        g = make_grid(128)
        v = sample_damping(DampingProfile.smoothed_indicator(1.0, 0.5), g)
        ramp = (v > 0) & (v < 1)
        assert ramp.sum() == 2 * 3  # 3 interior samples per side on a 4-cell ramp

    def test_periodic(self):
        gam = DampingProfile.smoothed_indicator(1.0, 0.3, 0.1, center=0.2)
        x = np.linspace(-3, 3, 101)
        np.testing.assert_allclose(gam(x), gam(x + 2.0), atol=1e-14)

    def test_period_mismatch(self):
        f = SpectralField.mode(make_grid(16, 1.0), 1)
        with pytest.raises(ValueError):
            multiply_pointwise(f, DampingProfile.indicator(1.0, 0.2, period=3.0))

    def test_grid_multiple_of_period_allowed(self):
        g = make_grid(64, 2.0)
        assert sample_damping(DampingProfile.indicator(1.0, 0.2), g).shape == (64,)

    @pytest.mark.parametrize("kwargs", [dict(kind="bogus", amplitude=1.0), dict(kind="constant", amplitude=0.0),
                                        dict(kind="indicator", amplitude=1.0, half_width=1.5),
                                        dict(kind="indicator", amplitude=1.0, half_width=0.2, epsilon=2.0)])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            DampingProfile(**kwargs)

    def test_multiplication_symmetric(self):
        g = make_grid(64)
        rng = np.random.default_rng(3)
        gam = DampingProfile.smoothed_indicator(1.0, 0.5, 0.25)
        for _ in range(10):
            f = SpectralField.from_values(g, rng.standard_normal(64))
            h = SpectralField.from_values(g, rng.standard_normal(64))
            a = multiply_pointwise(f, gam).inner(h)
            assert abs(a - f.inner(multiply_pointwise(h, gam))) <= 1e-12 * abs(a)
