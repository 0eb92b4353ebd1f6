import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from moisture_fvm.grid import UniformGrid
from moisture_fvm.mollifier import (
    CellAverageSampler,
    PressureField,
    check_l2_nonexpansive,
    check_smoothness,
    constant_pressure,
    cylinder_l2,
    get_pressure,
    kernel_1d,
    kernel_2d,
    l2_distance,
    mollified_cell_averages,
    mollify,
    rough_pressure,
    sine_bubble_pressure,
    sine_product_pressure,
    zero_pressure,
)


class TestKernel:
    def test_support_edge_and_peak(self):
        k = kernel_1d(1.0)
        np.testing.assert_array_equal(k(np.array([-1.0, 1.0])), [0.0, 0.0])
        np.testing.assert_allclose(k(np.array([0.0])), np.exp(-1.0) / k.normalization)
        assert k.peak == pytest.approx(np.exp(-1.0) / k.normalization)

    @pytest.mark.parametrize("delta", [1.0, 0.3, 0.01])
    def test_unit_mass_simpson(self, delta):
        k = kernel_1d(delta)
        r = np.linspace(-delta, delta, 10**5 + 1)
        np.testing.assert_allclose(simpson(k(r), x=r), 1.0, atol=1e-8)

    def test_unit_mass_2d(self):
        k = kernel_2d(0.2)
        r = np.linspace(0.0, 0.2, 10**5 + 1)
        np.testing.assert_allclose(2 * np.pi * simpson(r * k(r, 0 * r), x=r), 1.0, atol=1e-8)

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        r = rng.uniform(-1, 1, 100)
        k = kernel_1d(0.8)
        np.testing.assert_array_equal(k(r), k(-r))
        k2 = kernel_2d(0.8)
        np.testing.assert_array_equal(k2(r, r[::-1]), k2(-r, r[::-1]))

    def test_derivative_bound_is_tight(self):
        k = kernel_1d(1.0)
        r = np.linspace(-1, 1, 200001)
        np.testing.assert_allclose(np.abs(np.gradient(k(r), r)).sum() * (r[1] - r[0]), k.derivative_l1, rtol=1e-4)

    def test_rejects_bad_delta(self):
        with pytest.raises(ValueError):
            kernel_1d(0.0)


class TestPressureField:
    def test_zero_extension(self):
        p = constant_pressure(T=1.0, value=2.0)
        np.testing.assert_array_equal(p(np.array([-0.1, 0.5, 1.2]), np.array([0.5, 0.5, 0.5])), [0.0, 2.0, 0.0])
        with pytest.raises(ValueError):
            p.evaluate(1.5, 0.5)

    def test_non_finite(self):
        p = PressureField(lambda t, x: np.full(np.shape(t), np.inf), 1.0)
        with pytest.raises(ValueError):
            p.evaluate(0.5, 0.5)

    def test_registry(self):
        for name in ("zero", "constant", "sine-product", "sine-bubble", "rough"):
            assert get_pressure(name, T=0.5).horizon == 0.5
        with pytest.raises(ValueError):
            get_pressure("nope")


class TestMollify:
    def test_constant_interior(self):
        rho = mollify(constant_pressure(1.0, 2.0), 0.1)
        t = np.array([0.1, 0.5, 0.9])
        x = np.array([0.1, 0.5, 0.9])
        np.testing.assert_allclose(rho(t, x), 2.0, atol=1e-12)

    def test_zero_extension_loss(self):
        rho = mollify(constant_pressure(1.0, 2.0), 0.1)
        assert float(rho(0.05, 0.5)) < 2.0
        assert float(rho(0.0, 0.5)) == pytest.approx(1.0, abs=0.05)

    def test_monte_carlo_oracle(self):
        T, delta = 1.0, 0.1
        p = PressureField(lambda t, x: np.sin(2 * np.pi * x) + 0 * t, T, sup_abs=1.0)
        rho = mollify(p, delta)
        rng = np.random.default_rng(7)
        pts_t = rng.uniform(0.15, 0.85, 20)
        pts_x = rng.uniform(0.15, 0.85, 20)
        # uniform samples on the disc weighted by the kernel
        m = 10**6
        rad = delta * np.sqrt(rng.uniform(size=m))
        ang = rng.uniform(0, 2 * np.pi, m)
        dt, dx = rad * np.cos(ang), rad * np.sin(ang)
        w = kernel_2d(delta)(dt, dx) * np.pi * delta**2
        for t0, x0 in zip(pts_t, pts_x):
            mc = np.mean(w * p(t0 - dt, x0 - dx))
            np.testing.assert_allclose(float(rho(t0, x0)), mc, atol=1e-3)

    def test_tensor_mode_constant(self):
        rho = mollify(constant_pressure(1.0, -1.5), 0.05, mode="tensor")
        np.testing.assert_allclose(float(rho(0.5, 0.5)), -1.5, atol=1e-12)

    @pytest.mark.parametrize("name", ["sine-product", "rough", "constant"])
    def test_l2_nonexpansive(self, name):
        p = get_pressure(name, T=1.0)
        assert check_l2_nonexpansive(p, mollify(p, 0.05)).passed

    @pytest.mark.parametrize("delta", [0.2, 0.05])
    def test_smoothness(self, delta):
        assert check_smoothness(mollify(rough_pressure(1.0), delta)).passed

    def test_delta_convergence_lipschitz(self):
        p = sine_bubble_pressure(1.0)
        deltas = [0.1, 0.05, 0.025, 0.0125]
        errs = [l2_distance(mollify(p, d), p) for d in deltas]
        assert all(b < 1.05 * a for a, b in zip(errs[:-1], errs[1:]))
        assert errs[-1] < 1e-2

    def test_sup_bound(self):
        rho = mollify(rough_pressure(1.0), 0.1)
        tt, xx = np.meshgrid(np.linspace(0, 1, 30), np.linspace(0, 1, 30))
        assert np.abs(rho(tt, xx)).max() <= rho.sup_abs

    @settings(max_examples=15, deadline=None)
    @given(st.floats(-3, 3), st.floats(0.02, 0.3))
    def test_fill_range(self, c, delta):
        # the result is a convex combination of field values and the fill value
        rho = mollify(constant_pressure(1.0, c), delta, quad_points=4, panels=2)
        tt, xx = np.meshgrid(np.linspace(0, 1, 9), np.linspace(0, 1, 9))
        vals = rho(tt, xx)
        assert vals.min() >= min(c, 0.0) - 1e-12 and vals.max() <= max(c, 0.0) + 1e-12

    def test_invalid(self):
        with pytest.raises(ValueError):
            mollify(zero_pressure(), 0.1, mode="box")


class TestCellAverages:
    def test_constant_interior(self):
        rho = mollify(constant_pressure(1.0, 3.0), 0.05)
        vals = mollified_cell_averages(rho, UniformGrid(20), 0.5).values
        np.testing.assert_allclose(vals[2:-2], 3.0, atol=1e-6)

    def test_time_out_of_range(self):
        rho = mollify(constant_pressure(1.0), 0.1)
        with pytest.raises(ValueError):
            mollified_cell_averages(rho, UniformGrid(4), 1.5)
        with pytest.raises(ValueError):
            CellAverageSampler(rho, UniformGrid(4))(-0.1)

    def test_l2_below_pressure_norm(self):
        p = sine_product_pressure(1.0)
        rho = mollify(p, 0.1)
        g = UniformGrid(32)
        sup_l2 = max(np.sqrt(np.mean(p.evaluate(t + 0 * g.centers, g.centers) ** 2)) for t in np.linspace(0, 1, 101))
        for t in (0.0, 0.3, 1.0):
            vals = mollified_cell_averages(rho, g, t).values
            assert np.sqrt(g.dx * np.sum(vals**2)) <= sup_l2 + 1e-9

    def test_sampler_matches_direct(self):
        rho = mollify(sine_product_pressure(0.1), 0.05)
        g = UniformGrid(64)
        sampler = CellAverageSampler(rho, g)
        for t in (0.0, 0.0137, 0.1):
            np.testing.assert_allclose(sampler(t), mollified_cell_averages(rho, g, t, 6).values, atol=1e-7)

    def test_sampler_zero_and_raw(self):
        g = UniformGrid(8)
        np.testing.assert_array_equal(CellAverageSampler(zero_pressure(), g)(0.3), 0.0)
        p = rough_pressure(1.0)
        np.testing.assert_allclose(CellAverageSampler(p, g)(0.1), mollified_cell_averages(p, g, 0.1).values)

    def test_cylinder_l2(self):
        assert cylinder_l2(constant_pressure(2.0, 3.0)) == pytest.approx(3.0 * np.sqrt(2.0))
