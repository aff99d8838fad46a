"""Stationarity terms, trace serialization, and decay-rate fitting."""

import numpy as np
import pytest

import depositum as dp
from depositum.metrics import CSV_COLUMNS, MetricsRecord
from helpers import logistic_problem


class QuadProblem:
    """f_j(x) = 0.5 ||x - c_j||^2, so grad f_j(x) = x - c_j and L = 1."""

    def __init__(self, centers):
        self.centers = np.asarray(centers, dtype=float)

    @property
    def n(self):
        return self.centers.shape[0]

    def full_grad_multi(self, points, client):
        return np.asarray(points, dtype=float) - self.centers[client]


class TestStationarity:
    def test_quad_oracle(self):
        """Hand-checked: every term equals 2 and s/n = 3."""
        problem = QuadProblem([[1.0], [-1.0]])
        x = np.array([[1.0], [-1.0]])
        terms = dp.stationarity_measure(x, np.array([1.0]), 0.5, 1.0, problem, dp.Zero())
        assert terms["prox_grad_sq"] == pytest.approx(2.0, abs=1e-14)
        assert terms["cons_x_sq"] == pytest.approx(2.0, abs=1e-14)
        assert terms["grad_est_sq"] == pytest.approx(2.0, abs=1e-14)
        assert terms["s_over_n"] == pytest.approx(3.0, abs=1e-14)

    def test_identical_clients_reduce_to_single_gradient(self):
        problem = QuadProblem([[0.5], [0.5], [0.5]])
        x = np.full((3, 1), 2.0)
        nu_bar = np.array([1.5])  # the exact global gradient at 2.0
        terms = dp.stationarity_measure(x, nu_bar, 0.3, 1.0, problem, dp.Zero())
        assert terms["cons_x_sq"] == 0.0
        assert terms["grad_est_sq"] == pytest.approx(0.0, abs=1e-14)
        assert terms["s_over_n"] == pytest.approx(1.5**2, abs=1e-14)

    def test_permutation_invariance(self):
        centers = [[1.0], [-2.0], [3.0]]
        x = np.array([[0.5], [1.0], [-1.0]])
        nu_bar = np.array([0.3])
        a = dp.stationarity_measure(x, nu_bar, 0.2, 1.0, QuadProblem(centers), dp.L1(0.1))
        perm = [2, 0, 1]
        b = dp.stationarity_measure(
            x[perm], nu_bar, 0.2, 1.0, QuadProblem([centers[i] for i in perm]), dp.L1(0.1)
        )
        for key in a:
            assert a[key] == pytest.approx(b[key], abs=1e-13)

    def test_matches_per_client_loop_on_logistic(self):
        problem = logistic_problem(d=4, n_samples=48, n_clients=3)
        rng = np.random.default_rng(0)
        x = rng.normal(size=(3, problem.dim))
        nu_bar = rng.normal(size=problem.dim)
        alpha, L = 0.3, problem.smoothness()
        reg = dp.L1(0.05)
        terms = dp.stationarity_measure(x, nu_bar, alpha, L, problem, reg)

        global_at = np.stack([problem.mean_grad(x[i]) for i in range(3)])
        gmap = dp.prox_grad_map(reg, alpha, x, global_at)
        prox_grad_sq = float((gmap * gmap).sum())
        cons = x - x.mean(axis=0)
        cons_x_sq = float((cons * cons).sum())
        local_mean = np.mean([problem.full_grad(x[i], i) for i in range(3)], axis=0)
        grad_est_sq = 3 * float(((local_mean - nu_bar) ** 2).sum())

        assert terms["prox_grad_sq"] == pytest.approx(prox_grad_sq, rel=1e-12)
        assert terms["cons_x_sq"] == pytest.approx(cons_x_sq, rel=1e-12)
        assert terms["grad_est_sq"] == pytest.approx(grad_est_sq, rel=1e-12, abs=1e-12)
        s = prox_grad_sq + L * L * cons_x_sq + grad_est_sq
        assert terms["s_over_n"] == pytest.approx(s / 3, rel=1e-12)


class TestEvaluateIteration:
    def test_fields(self):
        problem = logistic_problem(d=4, n_samples=48, n_clients=3)
        rng = np.random.default_rng(1)
        x = rng.normal(size=(3, problem.dim)) * 0.2
        y = rng.normal(size=(3, problem.dim))
        nu = rng.normal(size=(3, problem.dim))
        reg = dp.L1(0.02)
        rec = dp.evaluate_iteration(problem, reg, 0.3, problem.smoothness(), x, y, nu, t=7)
        assert rec.t == 7
        x_bar = x.mean(axis=0)
        assert rec.loss == pytest.approx(problem.mean_loss(x_bar) + dp.eval_h(reg, x_bar))
        dev_y = y - y.mean(axis=0)
        assert rec.cons_y_sq == pytest.approx(float((dev_y * dev_y).sum()))
        dev_nu = nu - nu.mean(axis=0)
        assert rec.cons_nu_sq == pytest.approx(float((dev_nu * dev_nu).sum()))
        assert rec.accuracy is None

    def test_accuracy(self):
        problem = logistic_problem(d=4, n_samples=48, n_clients=3)
        test = dp.synth_logistic(4, 30, 2.5, np.random.default_rng(50))
        x = np.zeros((3, problem.dim))
        rec = dp.evaluate_iteration(
            problem, dp.Zero(), 0.3, 1.0, x, x, x, t=0, test_set=test
        )
        assert 0.0 <= rec.accuracy <= 1.0


class TestCsv:
    def test_header_and_row_shape(self):
        rec = MetricsRecord(3, 0.5, 1e-3, 2e-3, 3e-3, 4e-3, 5e-3, 6e-3, None)
        trace = dp.Trace((rec,), seed=1, digest=None, duration=0.0)
        lines = trace.to_csv().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[0] == "t,loss,prox_grad_sq,cons_x_sq,cons_y_sq,cons_nu_sq,grad_est_sq,s_over_n,accuracy"
        cells = lines[1].split(",")
        assert len(cells) == len(CSV_COLUMNS)
        assert cells[0] == "3"
        assert cells[-1] == ""  # accuracy None stays empty

    def test_values_roundtrip_through_repr(self):
        rec = MetricsRecord(1, 1 / 3, 0.1, 0.2, 0.3, 0.4, 0.5, 2 / 7, 0.925)
        cells = rec.csv_row().split(",")
        assert float(cells[1]) == 1 / 3
        assert float(cells[7]) == 2 / 7
        assert float(cells[8]) == 0.925

    def test_final(self):
        recs = tuple(
            MetricsRecord(t, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, None) for t in (0, 5, 9)
        )
        trace = dp.Trace(recs, seed=0, digest=None, duration=0.0)
        assert trace.final().t == 9


class TestRunningAverage:
    def test_example(self):
        out = dp.running_average([(1, 2.0), (2, 4.0), (3, 9.0)])
        assert out == [(1, 2.0), (2, 3.0), (3, 5.0)]

    def test_empty(self):
        assert dp.running_average([]) == []


class TestFitDecayRate:
    def test_pure_power_law(self):
        series = [(t, 100.0 / t) for t in range(1, 201)]
        assert dp.fit_decay_rate(series) == pytest.approx(-1.0, abs=1e-9)

    def test_constant_series_is_flat(self):
        series = [(t, 5.0) for t in range(1, 51)]
        assert dp.fit_decay_rate(series) == 0.0

    def test_plateau_suffix_is_trimmed(self):
        series = [(t, 100.0 / t if t <= 100 else 1.0) for t in range(1, 301)]
        assert dp.fit_decay_rate(series) == pytest.approx(-1.0, abs=0.02)

    def test_window_caps_fit(self):
        series = [(t, 100.0 / t) for t in range(1, 201)]
        assert dp.fit_decay_rate(series, window=0.25) == pytest.approx(-1.0, abs=1e-9)

    def test_zero_t_points_dropped(self):
        series = [(0, 7.0)] + [(t, 100.0 / t) for t in range(1, 31)]
        assert dp.fit_decay_rate(series) == pytest.approx(-1.0, abs=1e-9)

    def test_too_few_points(self):
        with pytest.raises(dp.TooFewPoints):
            dp.fit_decay_rate([(t, 2.0) for t in range(10)])  # only 9 have t > 0

    def test_nonpositive_values_rejected(self):
        series = [(t, 1.0 / t) for t in range(1, 20)] + [(20, 0.0)]
        with pytest.raises(ValueError):
            dp.fit_decay_rate(series)

    def test_bad_window(self):
        series = [(t, 1.0 / t) for t in range(1, 20)]
        with pytest.raises(ValueError):
            dp.fit_decay_rate(series, window=0.0)
        with pytest.raises(ValueError):
            dp.fit_decay_rate(series, window=1.5)
