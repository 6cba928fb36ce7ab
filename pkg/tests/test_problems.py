"""Models, losses, datasets, and the regularity-constant machinery."""

import math

import numpy as np
import pytest

from lnlab import problems as prb
from lnlab.problems import (DataPoint, Dataset, InputError, ModelSpec, ProblemSpec,
                            TANH_CURVATURE, closed_form_constants, empirical_risk,
                            estimate_constants, eval_model, instance_loss,
                            make_synthetic_dataset, minibatch_grad, neighbor_dataset)
from lnlab.rng import GaussianStream


class TestEvalModel:
    def test_saturating_at_origin(self):
        x = np.array([0.3, -0.7])
        f, grad = eval_model(ModelSpec("saturating_index", 1.0), np.zeros(2), x)
        assert f == 0.0
        np.testing.assert_allclose(grad, x, atol=1e-15)

    def test_saturating_hand_value_and_finite_difference(self):
        model = ModelSpec("saturating_index", 1.0)
        theta, x = np.array([1.0]), np.array([1.0])
        f, grad = eval_model(model, theta, x)
        assert abs(f - math.tanh(1.0)) < 1e-12          # 0.76159...
        assert abs(grad[0] - (1.0 - math.tanh(1.0) ** 2)) < 1e-12  # 0.41997...
        h = 1e-5
        fd = (eval_model(model, theta + h, x)[0] - eval_model(model, theta - h, x)[0]) / (2 * h)
        assert abs(grad[0] - fd) < 1e-8

    def test_linear(self):
        f, grad = eval_model(ModelSpec("linear"), np.array([2.0, 0.0]), np.array([1.0, 1.0]))
        assert f == 2.0
        np.testing.assert_array_equal(grad, np.array([1.0, 1.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            eval_model(ModelSpec("linear"), np.zeros(2), np.zeros(3))


class TestLosses:
    def test_perfect_fit_zero_loss(self, saturating_problem):
        spec = prb.ProblemSpec(saturating_problem.model, 0.0, saturating_problem.dataset)
        x = spec.dataset.xs[0]
        theta = np.zeros(2)
        f, _ = eval_model(spec.model, theta, x)
        loss, grad = instance_loss(spec, theta, DataPoint(x, f))
        assert loss == 0.0
        np.testing.assert_allclose(grad, 0.0, atol=1e-15)

    def test_linear_hand_value(self):
        ds = Dataset(xs=np.ones((1, 1)), ys=np.zeros(1), x_max=1.0, y_max=1.0)
        spec = ProblemSpec(ModelSpec("linear"), 0.0, ds)
        loss, grad = instance_loss(spec, np.array([2.0]), ds.point(0))
        assert loss == 2.0 and grad[0] == 2.0

    def test_ridge_only_contribution(self):
        ds = Dataset(xs=np.zeros((1, 2)), ys=np.zeros(1), x_max=1.0, y_max=1.0)
        spec = ProblemSpec(ModelSpec("linear"), 1.0, ds)
        loss, grad = instance_loss(spec, np.array([1.0, 0.0]), ds.point(0))
        assert abs(loss - 0.5) < 1e-15
        np.testing.assert_allclose(grad, [1.0, 0.0], atol=1e-15)

    def test_empirical_risk_single_point_and_mean(self, saturating_problem):
        spec = saturating_problem
        theta = np.array([0.3, 0.1])
        l0, _ = instance_loss(spec, theta, spec.dataset.point(0))
        assert abs(empirical_risk(spec, theta, [0]) - l0) < 1e-15
        l1, _ = instance_loss(spec, theta, spec.dataset.point(1))
        assert abs(empirical_risk(spec, theta, [0, 1]) - 0.5 * (l0 + l1)) < 1e-14

    def test_empirical_risk_matches_manual_sum(self, saturating_problem):
        spec = saturating_problem
        rng = np.random.default_rng(0)
        for _ in range(5):
            theta = rng.standard_normal(2)
            batch = np.arange(spec.dataset.n)
            manual = np.mean([instance_loss(spec, theta, spec.dataset.point(i))[0]
                              for i in batch])
            assert abs(empirical_risk(spec, theta, batch) - manual) < 1e-12

    def test_empty_batch_rejected(self, saturating_problem):
        with pytest.raises(InputError):
            empirical_risk(saturating_problem, np.zeros(2), [])


class TestMinibatchGrad:
    def test_zero_perturbation_reduces_to_plain(self, saturating_problem):
        spec = saturating_problem
        theta = np.array([0.2, -0.4])
        batch = [0, 3, 5]
        plain = minibatch_grad(spec, theta, batch)
        noisy = minibatch_grad(spec, theta, batch, noisy_labels=np.zeros(3))
        np.testing.assert_array_equal(plain, noisy)

    def test_linear_hand_value(self):
        ds = Dataset(xs=np.ones((1, 1)), ys=np.zeros(1), x_max=1.0, y_max=1.0)
        spec = ProblemSpec(ModelSpec("linear"), 0.0, ds)
        g = minibatch_grad(spec, np.array([1.0]), [0], noisy_labels=np.array([0.5]))
        assert abs(g[0] - 0.5) < 1e-15

    def test_noise_enters_through_gradient_matrix(self, saturating_problem):
        # perturbed-label gradient equals plain gradient minus
        # (1/k) grad_f^T xi, checked on random draws
        spec = saturating_problem
        rng = np.random.default_rng(1)
        for _ in range(20):
            theta = rng.standard_normal(2)
            batch = rng.choice(spec.dataset.n, size=4, replace=False)
            xi = rng.standard_normal(4)
            lhs = minibatch_grad(spec, theta, batch, noisy_labels=xi)
            _, grads = prb.model_values_and_grads(spec.model, theta, spec.dataset.xs[batch])
            rhs = minibatch_grad(spec, theta, batch) - (grads.T @ xi) / 4.0
            np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-14)

    def test_matches_finite_difference_of_risk(self, saturating_problem):
        spec = saturating_problem
        theta = np.array([0.4, -0.2])
        batch = [1, 2, 7, 9]
        grad = minibatch_grad(spec, theta, batch)
        h = 1e-6
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fd = (empirical_risk(spec, theta + e, batch)
                  - empirical_risk(spec, theta - e, batch)) / (2 * h)
            assert abs(grad[j] - fd) / max(abs(fd), 1e-9) < 1e-5

    def test_perturbation_length_checked(self, saturating_problem):
        with pytest.raises(InputError):
            minibatch_grad(saturating_problem, np.zeros(2), [0, 1], noisy_labels=np.zeros(3))


class TestDatasets:
    def test_zero_teacher_zero_labels(self):
        model = ModelSpec("linear")
        ds = make_synthetic_dataset(model, 20, 3, np.zeros(3), 0.0, 1.0, 1.0, seed=4)
        np.testing.assert_array_equal(ds.ys, np.zeros(20))

    def test_deterministic_given_seed(self):
        model = ModelSpec("saturating_index", 1.0)
        a = make_synthetic_dataset(model, 50, 2, np.array([0.5, -0.5]), 0.3, 1.0, 1.0, seed=9)
        b = make_synthetic_dataset(model, 50, 2, np.array([0.5, -0.5]), 0.3, 1.0, 1.0, seed=9)
        assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys)

    def test_feature_norms_bounded(self):
        model = ModelSpec("linear")
        ds = make_synthetic_dataset(model, 1000, 2, np.zeros(2), 0.0, 0.7, 1.0, seed=2)
        assert np.max(np.linalg.norm(ds.xs, axis=1)) <= 0.7 + 1e-12

    def test_bad_radius_rejected(self):
        with pytest.raises(InputError):
            make_synthetic_dataset(ModelSpec("linear"), 5, 2, np.zeros(2), 0.0, 0.0, 1.0, seed=1)

    def test_neighbor_dataset(self, saturating_problem):
        ds = saturating_problem.dataset
        z = DataPoint(np.array([0.1, 0.2]), 0.5)
        swapped = neighbor_dataset(ds, 3, z)
        diffs = sum(1 for i in range(ds.n)
                    if not (np.array_equal(ds.xs[i], swapped.xs[i]) and ds.ys[i] == swapped.ys[i]))
        assert diffs == 1
        restored = neighbor_dataset(swapped, 3, ds.point(3))
        assert np.array_equal(restored.xs, ds.xs) and np.array_equal(restored.ys, ds.ys)
        same = neighbor_dataset(ds, 3, ds.point(3))
        assert np.array_equal(same.xs, ds.xs) and np.array_equal(same.ys, ds.ys)
        with pytest.raises(InputError):
            neighbor_dataset(ds, ds.n, z)

    def test_csv_round_trip(self, tmp_path, saturating_problem):
        ds = saturating_problem.dataset
        path = tmp_path / "data.csv"
        ds.to_csv(path, metadata={"seed": 1})
        back = Dataset.from_csv(path)
        np.testing.assert_array_equal(back.xs, ds.xs)
        np.testing.assert_array_equal(back.ys, ds.ys)
        assert back.x_max == ds.x_max and back.y_max == ds.y_max


class TestClosedFormConstants:
    def test_hand_example(self, saturating_problem):
        c = closed_form_constants(saturating_problem, eta=0.1, delta=1.0, k=1)
        assert abs(c.ell_f - 1.0) < 1e-15
        assert abs(TANH_CURVATURE - 0.7698003589195010) < 1e-15
        assert abs(c.M_fit - (1.0 + 2.0 * TANH_CURVATURE)) < 1e-12
        assert abs(c.m - 1.5) < 1e-15
        assert abs(c.b - 4.0 / 6.0) < 1e-12
        expected_alpha = 6.0 - 2.0 * (1.0 + 2.0 * TANH_CURVATURE) - 0.1 * TANH_CURVATURE ** 2
        assert abs(c.alpha - expected_alpha) < 1e-12
        assert abs(c.alpha - 0.8615) < 1e-3
        assert c.alpha_feasible

    def test_degenerate_zero_features(self):
        ds = Dataset(xs=np.zeros((3, 2)), ys=np.zeros(3), x_max=1e-12, y_max=0.0)
        spec = ProblemSpec(ModelSpec("linear"), 0.0, ds)
        c = closed_form_constants(spec, eta=0.0, delta=0.0, k=1)
        assert c.ell_f <= 1e-12 and c.grad_lipschitz == 0.0
        assert not c.mb_feasible  # ridge 0: pair flagged, not raised

    def test_alpha_infeasible_at_small_ridge(self, saturating_problem):
        spec = ProblemSpec(saturating_problem.model, 1.0, saturating_problem.dataset)
        c = closed_form_constants(spec, eta=0.1, delta=1.0, k=1)
        assert c.alpha < 0 and not c.alpha_feasible


class TestEstimateConstants:
    def test_pure_quadratic_recovers_analytic_values(self, ridge_only_problem):
        report = estimate_constants(ridge_only_problem, 128, 10.0, seed=5,
                                    eta=0.1, delta=0.0, k=1)
        c = report.constants
        assert abs(c.M - 1.0) < 1e-9
        assert abs(c.alpha - 2.0) < 1e-9
        assert c.b < 1e-6
        assert abs(c.m - 1.0) < 0.05

    def test_alpha_running_minimum(self, saturating_problem):
        report = estimate_constants(saturating_problem, 64, 10.0, seed=8,
                                    eta=0.05, delta=0.5, k=4)
        assert np.all(np.diff(report.alpha_running) <= 0)

    def test_alpha_prefix_property(self, saturating_problem):
        # the same seed draws the same leading pairs, so more pairs can
        # only lower the running minimum
        small = estimate_constants(saturating_problem, 32, 10.0, seed=8,
                                   eta=0.05, delta=0.5, k=4)
        large = estimate_constants(saturating_problem, 96, 10.0, seed=8,
                                   eta=0.05, delta=0.5, k=4)
        assert large.constants.alpha <= small.constants.alpha + 1e-12
        np.testing.assert_array_equal(large.alpha_running[:32], small.alpha_running)

    def test_alpha_hat_dominates_closed_form(self, saturating_problem):
        closed = closed_form_constants(saturating_problem, eta=0.05, delta=0.5, k=4)
        for seed in range(10):
            report = estimate_constants(saturating_problem, 64, 10.0, seed=seed,
                                        eta=0.05, delta=0.5, k=4)
            assert report.constants.alpha >= closed.alpha - 1e-9

    def test_audit_consistency_relation(self, saturating_problem):
        report = estimate_constants(saturating_problem, 64, 10.0, seed=3,
                                    eta=0.05, delta=0.5, k=4)
        c = report.constants
        assert c.alpha <= 2.0 * c.M + 1e-9

    def test_certificate_holds_on_fresh_sample(self, saturating_problem):
        report = estimate_constants(saturating_problem, 128, 10.0, seed=12,
                                    eta=0.05, delta=0.5, k=4)
        assert report.fresh_violations == 0
        c = report.constants
        stream = GaussianStream(999)
        for _ in range(200):
            theta = stream.ball_point(2, 10.0)
            v = float(theta @ minibatch_grad(saturating_problem, theta,
                                             np.arange(saturating_problem.dataset.n)))
            assert v >= c.m * float(theta @ theta) - c.b - 1e-9

    def test_degenerate_count_rejected(self, ridge_only_problem):
        with pytest.raises(InputError):
            estimate_constants(ridge_only_problem, 1, 10.0, seed=1, eta=0.1, delta=0.0, k=1)
