"""Chains, flows, couplings, ensembles: hand values and exactness invariants."""

import math

import numpy as np
import pytest

from lnlab import dynamics as dyn
from lnlab import problems as prb
from lnlab.dynamics import (ChainConfig, InitSpec, integrate_flow, replay,
                            run_coupled, run_discrete_chain, sample_minibatch,
                            simulate_ensemble, step_label_noise_sgd, step_sgld)
from lnlab.problems import DataPoint, Dataset, InputError, ModelSpec, ProblemSpec
from lnlab.rng import GaussianStream


def one_point_problem(ridge=0.0):
    ds = Dataset(xs=np.ones((1, 1)), ys=np.zeros(1), x_max=1.0, y_max=1.0)
    return ProblemSpec(ModelSpec("linear"), ridge, ds)


class TestSampleMinibatch:
    def test_full_batch(self):
        assert np.array_equal(sample_minibatch(6, 6, GaussianStream(0)), np.arange(6))

    def test_k_greater_than_n_rejected(self):
        with pytest.raises(InputError):
            sample_minibatch(3, 4, GaussianStream(0))

    def test_sorted_distinct(self):
        stream = GaussianStream(4)
        for _ in range(50):
            s = sample_minibatch(12, 5, stream)
            assert len(set(s.tolist())) == 5 and np.all(np.diff(s) > 0)


class TestSteppers:
    def test_label_noise_fixed_point(self, ridge_only_problem):
        theta = np.zeros(1)
        out = step_label_noise_sgd(ridge_only_problem, theta, [0], np.zeros(1), eta=0.1)
        np.testing.assert_array_equal(out, theta)

    def test_label_noise_hand_values(self):
        spec = one_point_problem()
        out = step_label_noise_sgd(spec, np.array([1.0]), [0], np.zeros(1), eta=0.1)
        assert abs(out[0] - 0.9) < 1e-15
        out = step_label_noise_sgd(spec, np.array([1.0]), [0], np.array([0.5]), eta=0.1)
        assert abs(out[0] - 0.95) < 1e-15

    def test_sgld_hand_values(self):
        spec = one_point_problem()
        out = step_sgld(spec, np.array([1.0]), [0], np.zeros(1), eta=0.1, beta_inv=0.0)
        assert abs(out[0] - 0.9) < 1e-15
        out = step_sgld(spec, np.array([1.0]), [0], np.ones(1), eta=0.1, beta_inv=0.5)
        assert abs(out[0] - (0.9 + math.sqrt(0.1))) < 1e-15  # 1.21623...


class TestDiscreteChain:
    def test_zero_horizon(self, saturating_problem):
        cfg = ChainConfig(eta=0.1, delta=0.5, k=4, horizon=0, seed=1)
        traj = run_discrete_chain(saturating_problem, cfg, np.array([1.0, 0.0]))
        assert traj.states.shape == (1, 2)
        np.testing.assert_array_equal(traj.states[0], [1.0, 0.0])

    def test_ridge_only_recursion(self, ridge_only_problem):
        cfg = ChainConfig(eta=0.1, delta=0.0, k=1, horizon=2, seed=3)
        traj = run_discrete_chain(ridge_only_problem, cfg, np.array([1.0]))
        assert abs(traj.states[-1][0] - 0.81) < 1e-15

    def test_identical_seeds_identical_trajectories(self, saturating_problem):
        cfg = ChainConfig(eta=0.05, delta=0.5, k=4, horizon=25, seed=77)
        a = run_discrete_chain(saturating_problem, cfg, np.array([1.0, 0.0]))
        b = run_discrete_chain(saturating_problem, cfg, np.array([1.0, 0.0]))
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.batches, b.batches)

    def test_replay_reproduces_states_bitwise(self, saturating_problem):
        cfg = ChainConfig(eta=0.05, delta=0.5, k=4, horizon=30, seed=13)
        traj = run_discrete_chain(saturating_problem, cfg, np.array([0.5, 0.5]))
        again = replay(saturating_problem, traj, cfg)
        assert np.array_equal(traj.states, again.states)

    def test_sgld_replay_bitwise(self, saturating_problem):
        cfg = ChainConfig(algorithm="sgld", eta=0.05, beta_inv=0.3, k=4, horizon=30, seed=13)
        traj = run_discrete_chain(saturating_problem, cfg, np.array([0.5, 0.5]))
        again = replay(saturating_problem, traj, cfg)
        assert np.array_equal(traj.states, again.states)

    def test_label_noise_identity_three_term_form(self, saturating_problem):
        # a step through perturbed labels equals the explicit
        # drift + (eta/k) grad_f^T xi decomposition
        spec = saturating_problem
        rng = np.random.default_rng(5)
        for _ in range(20):
            theta = rng.standard_normal(2)
            batch = np.sort(rng.choice(spec.dataset.n, size=4, replace=False))
            xi = rng.standard_normal(4) * 0.7
            noisy_grad = prb.minibatch_grad(spec, theta, batch, noisy_labels=xi)
            via_noisy = theta - 0.05 * noisy_grad
            explicit = step_label_noise_sgd(spec, theta, batch, xi, eta=0.05)
            np.testing.assert_allclose(via_noisy, explicit, rtol=1e-12, atol=1e-14)


class TestFlow:
    def test_zero_horizon(self, saturating_problem):
        cfg = ChainConfig(algorithm="label_noise_flow", eta=0.1, delta=0.5, k=4,
                          horizon=0, substeps=8, seed=1)
        traj = integrate_flow(saturating_problem, cfg, np.array([1.0, 0.0]))
        assert traj.states.shape == (1, 2)

    def test_deterministic_relaxation_to_exponential(self, ridge_only_problem):
        # pure quadratic with no noise: the flow solves theta' = -theta
        cfg = ChainConfig(algorithm="label_noise_flow", eta=1.0, delta=0.0, k=1,
                          horizon=1, substeps=1024, seed=1)
        traj = integrate_flow(ridge_only_problem, cfg, np.array([1.0]))
        assert abs(traj.states[-1][0] - math.exp(-1.0)) < 2.0 / 1024

    @pytest.mark.parametrize("algorithm", ["label_noise_sgd", "sgld"])
    def test_single_substep_matches_discrete_step_bitwise(self, saturating_problem, algorithm):
        cfg = ChainConfig(algorithm=algorithm, eta=0.1, delta=0.5, beta_inv=0.2,
                          k=3, horizon=5, substeps=1, seed=21)
        disc = run_discrete_chain(saturating_problem, cfg, np.array([1.0, -0.5]))
        flow = integrate_flow(saturating_problem, cfg, np.array([1.0, -0.5]))
        assert np.array_equal(disc.states, flow.states)

    def test_constant_gradient_stationary_variance(self):
        # linear model, one point (x=1, y=0), ridge 1: an exactly solvable
        # mean-reverting diffusion with stationary variance
        # delta * eta * x^2 / (2 k (ridge + x^2))
        ds = Dataset(xs=np.ones((1, 1)), ys=np.zeros(1), x_max=1.0, y_max=1.0)
        spec = ProblemSpec(ModelSpec("linear"), 1.0, ds)
        cfg = ChainConfig(algorithm="label_noise_flow", eta=0.1, delta=1.0, k=1,
                          horizon=80, substeps=8, seed=17)
        states = dyn.ensemble_states(spec, cfg, 3000, [80], InitSpec("point", np.zeros(1)))
        var = float(np.var(states[80][:, 0]))
        expected = 1.0 * 0.1 * 1.0 / (2.0 * 1 * (1.0 + 1.0))
        assert abs(var - expected) / expected < 0.12


class TestCouplings:
    def test_neighbor_null_when_index_never_sampled(self, saturating_problem):
        spec = saturating_problem
        schedule = np.array([[1, 2, 3]] * 15)
        cfg = ChainConfig(eta=0.05, delta=0.5, k=3, horizon=15, seed=5)
        run = run_coupled(spec, cfg, "neighbor_stability", i=0,
                          z_new=DataPoint(np.array([0.3, 0.3]), 0.9),
                          init=np.array([1.0, 0.0]), batch_schedule=schedule)
        assert np.array_equal(run.first.states, run.second.states)

    def test_neighbor_full_batch_diverges_at_first_step(self, saturating_problem):
        spec = saturating_problem
        n = spec.dataset.n
        theta0 = np.array([1.0, 0.0])
        z_new = DataPoint(np.array([0.3, 0.3]), 0.9)
        cfg = ChainConfig(eta=0.05, delta=0.5, k=n, horizon=2, seed=5)
        run = run_coupled(spec, cfg, "neighbor_stability", i=0, z_new=z_new, init=theta0)
        g_old = prb.instance_loss(spec, theta0, spec.dataset.point(0))[1]
        g_new = prb.instance_loss(spec, theta0, z_new)[1]
        assert not np.allclose(g_old, g_new)
        assert not np.allclose(run.first.states[1], run.second.states[1])

    def test_synchronous_no_noise_equals_deterministic_euler_error(self, saturating_problem):
        # with delta = 0 the coupled gap is the deterministic one-step error
        spec = saturating_problem
        cfg = ChainConfig(eta=0.1, delta=0.0, k=spec.dataset.n, horizon=1,
                          substeps=64, seed=2)
        run = run_coupled(spec, cfg, "synchronous_discretization",
                          init=np.array([1.0, 0.0]))
        theta0 = np.array([1.0, 0.0])
        batch = run.first.batches[0]
        disc = theta0 - 0.1 * prb.minibatch_grad(spec, theta0, batch)
        cur = theta0.copy()
        for _ in range(64):
            cur = cur - (0.1 / 64) * prb.minibatch_grad(spec, cur, batch)
        gap_expected = np.linalg.norm(disc - cur)
        gap_run = np.linalg.norm(run.first.states[1] - run.second.states[1])
        assert abs(gap_run - gap_expected) < 1e-12


class TestEnsembles:
    def test_forced_equal_plans_identical_samples(self, saturating_problem):
        cfg = ChainConfig(eta=0.05, delta=0.5, k=4, horizon=10, seed=3)
        theta0, batches, normals = dyn._ensemble_plans(
            saturating_problem, cfg, 1, InitSpec("point", np.array([1.0, 0.0])))
        dup = (np.repeat(theta0, 2, axis=0), np.repeat(batches, 2, axis=0),
               np.repeat(normals, 2, axis=0))
        states = dyn.ensemble_states(saturating_problem, cfg, 2, [10],
                                     InitSpec("point", np.array([1.0, 0.0])), plans=dup)
        assert np.array_equal(states[10][0], states[10][1])

    def test_checkpoint_zero_is_initial_law(self, saturating_problem):
        init = InitSpec("gaussian", np.zeros(2), 0.5)
        measures = simulate_ensemble(saturating_problem,
                                     ChainConfig(eta=0.05, delta=0.5, k=4,
                                                 horizon=5, seed=9),
                                     16, [0, 5], init)
        from lnlab.rng import derive_seed
        expected = np.stack([init.sample(GaussianStream(derive_seed(9, r)), 1)[0]
                             for r in range(16)])
        np.testing.assert_array_equal(measures[0].samples, expected)

    def test_ridge_only_uniform_contraction(self, ridge_only_problem):
        cfg = ChainConfig(eta=0.1, delta=0.0, k=1, horizon=20, seed=31)
        init = InitSpec("gaussian", np.zeros(1), 1.0)
        states = dyn.ensemble_states(ridge_only_problem, cfg, 64, [0, 20], init)
        bound = (1.0 - 0.1 * 1.0) ** 20 * np.max(np.abs(states[0]))
        assert np.max(np.abs(states[20])) <= bound + 1e-12

    def test_replica_order_invariance(self, saturating_problem):
        cfg = ChainConfig(eta=0.05, delta=0.5, k=4, horizon=8, seed=3)
        init = InitSpec("point", np.array([1.0, 0.0]))
        plans = dyn._ensemble_plans(saturating_problem, cfg, 6, init)
        perm = np.array([4, 2, 0, 5, 1, 3])
        permuted = (plans[0][perm], plans[1][perm], plans[2][perm])
        base = dyn.ensemble_states(saturating_problem, cfg, 6, [8], init, plans=plans)
        shuf = dyn.ensemble_states(saturating_problem, cfg, 6, [8], init, plans=permuted)
        assert np.array_equal(base[8][perm], shuf[8])

    def test_trajectory_csv_export(self, tmp_path, ridge_only_problem):
        cfg = ChainConfig(eta=0.1, delta=0.0, k=1, horizon=3, seed=3)
        traj = run_discrete_chain(ridge_only_problem, cfg, np.array([1.0]))
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        body = path.read_text().splitlines()
        assert body[0] == "t,theta_0"
        assert len(body) == 5
