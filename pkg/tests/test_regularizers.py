"""Penalty values, closed-form prox maps, and their contracts."""

import numpy as np
import pytest

import depositum as dp
from depositum.regularizers import h_pointwise
from helpers import grid_prox, random_regularizer


class TestWorkedValues:
    def test_l1_soft_threshold(self):
        got = dp.prox(dp.L1(1.0), 0.5, np.array([2.0, -2.0, 0.3]))
        np.testing.assert_allclose(got, [1.5, -1.5, 0.0])

    def test_mcp_inner_and_outer(self):
        spec = dp.MCP(lam=1.0, theta=2.0)
        np.testing.assert_allclose(dp.prox(spec, 0.5, np.array([1.0])), [2.0 / 3.0])
        np.testing.assert_allclose(dp.prox(spec, 0.5, np.array([3.0])), [3.0])

    def test_mcp_plateau_value(self):
        assert dp.eval_h(dp.MCP(1.0, 2.0), np.array([3.0])) == pytest.approx(1.0)

    def test_zero_everything(self):
        x = np.array([1.0, -2.0])
        assert dp.eval_h(dp.Zero(), x) == 0.0
        np.testing.assert_array_equal(dp.prox(dp.Zero(), 0.7, x), x)

    def test_box_clip_and_indicator(self):
        spec = dp.Box(-1.0, 2.0)
        np.testing.assert_allclose(dp.prox(spec, 0.3, np.array([-5.0, 0.5, 9.0])), [-1.0, 0.5, 2.0])
        assert dp.eval_h(spec, np.array([0.0, 1.0])) == 0.0
        assert dp.eval_h(spec, np.array([0.0, 3.0])) == np.inf

    def test_weak_moduli(self):
        assert dp.weak_modulus(dp.Zero()) == 0.0
        assert dp.weak_modulus(dp.L1(1.0)) == 0.0
        assert dp.weak_modulus(dp.Box(0.0, 1.0)) == 0.0
        assert dp.weak_modulus(dp.MCP(1.0, 2.0)) == pytest.approx(0.5)
        assert dp.weak_modulus(dp.SCAD(1.0, 3.7)) == pytest.approx(1.0 / 2.7)


class TestModulusIsTight:
    """h + (rho/2) z^2 must be convex at rho and lose convexity just below it."""

    @pytest.mark.parametrize("spec", [dp.MCP(1.0, 2.0), dp.SCAD(1.0, 3.7)])
    def test_second_differences(self, spec):
        rho = dp.weak_modulus(spec)
        z = np.arange(-6.0, 6.0, 0.01)

        def min_second_diff(r):
            vals = h_pointwise(spec, z) + 0.5 * r * z * z
            return (vals[2:] - 2 * vals[1:-1] + vals[:-2]).min()

        assert min_second_diff(rho) >= -1e-9
        assert min_second_diff(0.95 * rho) < -1e-7


class TestProxContracts:
    def test_step_too_large(self):
        with pytest.raises(dp.StepTooLarge):
            dp.prox(dp.MCP(1.0, 2.0), 2.0, np.array([1.0]))
        with pytest.raises(dp.StepTooLarge):
            dp.prox(dp.SCAD(1.0, 3.0), 2.0, np.array([1.0]))

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            dp.prox(dp.L1(1.0), 0.0, np.array([1.0]))

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            dp.L1(-1.0)
        with pytest.raises(ValueError):
            dp.MCP(1.0, 0.0)
        with pytest.raises(ValueError):
            dp.SCAD(1.0, 2.0)
        with pytest.raises(ValueError):
            dp.Box(2.0, 1.0)

    def test_l1_threshold_boundary(self):
        """Output is zero exactly when |x| <= alpha * weight."""
        spec = dp.L1(0.8)
        alpha = 0.5
        rng = np.random.default_rng(0)
        x = rng.uniform(-2, 2, size=2000)
        out = dp.prox(spec, alpha, x)
        np.testing.assert_array_equal(out == 0.0, np.abs(x) <= alpha * spec.weight)

    def test_mcp_region_boundary_agrees(self):
        spec = dp.MCP(1.0, 2.0)
        alpha = 0.5
        edge = spec.theta * spec.lam
        inner = np.sign(edge) * max(abs(edge) - alpha * spec.lam, 0.0) / (1 - alpha / spec.theta)
        assert inner == pytest.approx(edge, abs=1e-12)
        np.testing.assert_allclose(dp.prox(spec, alpha, np.array([edge])), [edge])

    def test_scad_region_boundaries_agree(self):
        spec = dp.SCAD(1.0, 3.7)
        alpha = 0.6
        for edge in (spec.lam * (1 + alpha), spec.a * spec.lam):
            lo = dp.prox(spec, alpha, np.array([edge - 1e-11]))[0]
            hi = dp.prox(spec, alpha, np.array([edge + 1e-11]))[0]
            assert abs(hi - lo) < 1e-9

    def test_separability(self):
        """Vector prox equals the coordinate-wise scalar prox."""
        rng = np.random.default_rng(1)
        for kind in range(4):
            spec, alpha = random_regularizer(rng, kind)
            x = rng.uniform(-4, 4, size=12)
            whole = dp.prox(spec, alpha, x)
            parts = np.array([dp.prox(spec, alpha, np.array([v]))[0] for v in x])
            np.testing.assert_array_equal(whole, parts)

    def test_matches_grid_oracle(self):
        rng = np.random.default_rng(2)
        for k in range(120):
            spec, alpha = random_regularizer(rng, k % 4)
            x = float(rng.uniform(-4, 4))
            closed = dp.prox(spec, alpha, np.array([x]))[0]
            assert abs(closed - grid_prox(spec, alpha, x)) <= 2e-4

    def test_nonexpansive_up_to_modulus_factor(self):
        rng = np.random.default_rng(3)
        for k in range(400):
            spec, alpha = random_regularizer(rng, k % 4)
            rho = dp.weak_modulus(spec)
            x = rng.uniform(-5, 5, size=8)
            y = rng.uniform(-5, 5, size=8)
            dpx = np.linalg.norm(dp.prox(spec, alpha, x) - dp.prox(spec, alpha, y))
            assert dpx <= np.linalg.norm(x - y) / (1.0 - alpha * rho) + 1e-12


class TestProxGradMap:
    def test_zero_spec_is_identity_on_v(self):
        rng = np.random.default_rng(4)
        x, v = rng.normal(size=6), rng.normal(size=6)
        np.testing.assert_array_equal(dp.prox_grad_map(dp.Zero(), 0.3, x, v), v)

    def test_definition_consistency(self):
        spec = dp.L1(0.5)
        rng = np.random.default_rng(5)
        x, v = rng.normal(size=6), rng.normal(size=6)
        alpha = 0.4
        expect = (x - dp.prox(spec, alpha, x - alpha * v)) / alpha
        np.testing.assert_array_equal(dp.prox_grad_map(spec, alpha, x, v), expect)

    def test_fixed_point_iff_stationary_scalar(self):
        """Map vanishes where the composite subgradient condition holds."""
        spec = dp.L1(1.0)
        # at x = 0 any |v| <= weight gives a zero map
        assert dp.prox_grad_map(spec, 0.5, np.array([0.0]), np.array([0.7]))[0] == 0.0
        assert dp.prox_grad_map(spec, 0.5, np.array([0.0]), np.array([1.3]))[0] != 0.0
