"""Mixing matrices, spectral quantities, and the communication schedule."""

import numpy as np
import pytest

import depositum as dp


def lam_of(spec):
    return dp.build_mixing(spec).lam


class TestBuildAndSpectrum:
    def test_complete_gap_is_zero(self):
        assert lam_of(dp.TopologySpec.complete(4)) == 0.0
        assert lam_of(dp.TopologySpec.complete(9)) == 0.0

    def test_ring4_uniform(self):
        assert lam_of(dp.TopologySpec.ring(4)) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_ring_n_eigen_formula(self):
        # uniform ring weights: eigenvalues (1 + 2 cos(2 pi k / n)) / 3
        for n in (5, 6, 8, 11):
            lam = lam_of(dp.TopologySpec.ring(n))
            ks = np.arange(1, n)
            expect = np.abs((1.0 + 2.0 * np.cos(2 * np.pi * ks / n)) / 3.0).max()
            assert lam == pytest.approx(expect, abs=1e-10)

    def test_star3_metropolis_matrix_and_gap(self):
        m = dp.build_mixing(dp.TopologySpec.star(3))
        expect = np.array([
            [1 / 3, 1 / 3, 1 / 3],
            [1 / 3, 2 / 3, 0.0],
            [1 / 3, 0.0, 2 / 3],
        ])
        np.testing.assert_allclose(m.w, expect, atol=1e-12)
        assert m.lam == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_rows_and_cols_sum_to_one(self):
        specs = [
            dp.TopologySpec.complete(5),
            dp.TopologySpec.ring(7),
            dp.TopologySpec.star(6),
            dp.TopologySpec.edge_list(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], "metropolis"),
        ]
        for spec in specs:
            w = dp.build_mixing(spec).w
            np.testing.assert_allclose(w.sum(axis=0), 1.0, atol=1e-12)
            np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-12)
            assert (w >= 0).all()

    def test_uniform_rejects_irregular_degrees(self):
        with pytest.raises(dp.NonDoublyStochastic):
            dp.build_mixing(dp.TopologySpec.star(4, weighting="uniform"))

    def test_disconnected_graph(self):
        with pytest.raises(dp.DisconnectedGraph):
            dp.build_mixing(dp.TopologySpec.edge_list(4, [(0, 1), (2, 3)], "metropolis"))

    def test_spectral_gap_guards(self):
        bad_row = np.array([[0.5, 0.4], [0.5, 0.5]])
        with pytest.raises(dp.NotStochastic):
            dp.spectral_gap(bad_row)
        bad_col = np.array([[0.9, 0.1], [0.6, 0.4]])
        with pytest.raises(dp.NotStochastic):
            dp.spectral_gap(bad_col)
        with pytest.raises(dp.DimensionMismatch):
            dp.spectral_gap(np.ones((2, 3)) / 3.0)

    def test_spectral_gap_snaps_tiny_values(self):
        n = 6
        w = np.full((n, n), 1.0 / n)
        assert dp.spectral_gap(w) == 0.0

    def test_trivial_single_agent(self):
        m = dp.MixingMatrix.trivial()
        assert m.n == 1
        assert m.lam == 0.0
        np.testing.assert_array_equal(m.w, [[1.0]])

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            dp.TopologySpec.complete(1)
        with pytest.raises(ValueError):
            dp.TopologySpec.edge_list(3, [(0, 3)], "metropolis")
        with pytest.raises(ValueError):
            dp.TopologySpec.edge_list(3, [(1, 1)], "metropolis")


class TestMixing:
    def test_average_preserved_and_contraction(self):
        rng = np.random.default_rng(0)
        m = dp.build_mixing(dp.TopologySpec.ring(6))
        x = rng.normal(size=(6, 4))
        mixed = dp.mix(m, x)
        np.testing.assert_allclose(mixed.mean(axis=0), x.mean(axis=0), atol=1e-12)
        dev = lambda a: np.linalg.norm(a - a.mean(axis=0))
        assert dev(mixed) <= m.lam * dev(x) + 1e-12

    def test_dimension_mismatch(self):
        m = dp.build_mixing(dp.TopologySpec.ring(4))
        with pytest.raises(dp.DimensionMismatch):
            dp.mix(m, np.zeros((5, 3)))


class TestCommSchedule:
    def test_table(self):
        # period 3: gossip on t = 3, 6, 9, ... and never on t = 0
        got = [dp.is_comm_round(t, 3) for t in range(8)]
        assert got == [False, False, False, True, False, False, True, False]

    def test_every_round_when_period_one(self):
        assert not dp.is_comm_round(0, 1)
        assert all(dp.is_comm_round(t, 1) for t in range(1, 6))

    def test_bad_period(self):
        with pytest.raises(ValueError):
            dp.is_comm_round(2, 0)


class TestDeltaParams:
    def test_worked_examples(self):
        d1, d2 = dp.delta_params(0.0, 2, 0.0)
        assert d1 == pytest.approx(4.0 / 27.0, abs=1e-12)
        assert d2 == pytest.approx(4.0 / 27.0, abs=1e-12)

        d1, d2 = dp.delta_params(1.0 / 3.0, 1, 0.0)
        assert d1 == pytest.approx(4.0 / 27.0, abs=1e-12)
        assert d2 == pytest.approx(4.0 / 27.0, abs=1e-12)

    def test_perfect_mixing_every_round(self):
        d1, d2 = dp.delta_params(0.0, 1, 0.0)
        assert d1 == pytest.approx(0.25, abs=1e-12)
        assert d2 == pytest.approx(0.25, abs=1e-12)

    def test_drag_only_shrinks_d1(self):
        lam, t0 = 0.0, 2
        base1, base2 = dp.delta_params(lam, t0, 0.0)
        d1, d2 = dp.delta_params(lam, t0, 0.3)
        assert d1 == pytest.approx(base1 * (1 - 0.3) ** (2 * t0 + 2), abs=1e-15)
        assert d2 == base2

    def test_admissibility_boundary(self):
        lam, t0 = 0.25, 2
        limit = 1.0 - lam ** (1.0 / (2 * t0))
        dp.delta_params(lam, t0, limit - 1e-9)
        with pytest.raises(dp.InadmissibleStep):
            dp.delta_params(lam, t0, limit)
        with pytest.raises(dp.InadmissibleStep):
            dp.delta_params(lam, t0, -0.1)

    def test_positive_inside_admissible_region(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            lam = float(rng.uniform(0.0, 0.999))
            t0 = int(rng.integers(1, 9))
            cap = 1.0 - lam ** (1.0 / (2 * t0))
            ar = float(rng.uniform(0.0, cap * 0.999))
            d1, d2 = dp.delta_params(lam, t0, ar)
            assert d1 > 0.0
            assert d2 > 0.0
            assert d1 <= d2 + 1e-15
