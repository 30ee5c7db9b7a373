"""Tests for the optimizers, the three training strategies and the
training loop."""

import math

import numpy as np
import pytest

from windcast.data import SupervisedSet
from windcast.errors import (
    DivergenceError,
    ScheduleOverflowError,
    SchemaError,
    ShapeError,
)
from windcast.network import Architecture, Loss, forward, init_network
from windcast.optim import (
    OPTIMIZER_KINDS,
    Optimizer,
    OptimizerConfig,
    StrategyConfig,
    TrainingTrace,
    centralize_gradient,
    cosine_lr,
    train,
)

from oracles import adam_trajectory, plain_steps


class TestCentralize:
    def test_documented_example(self):
        g = np.array([[1.0, 2.0, 3.0]])
        np.testing.assert_array_equal(centralize_gradient(g), [[-1.0, 0.0, 1.0]])

    def test_bias_vector_untouched(self):
        g = np.array([1.0, 2.0, 3.0])
        out = centralize_gradient(g)
        np.testing.assert_array_equal(out, g)

    def test_row_means_within_four_ulps(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            g = rng.normal(0.0, rng.uniform(1e-6, 1e6), size=(int(rng.integers(1, 9)), int(rng.integers(1, 9))))
            c = centralize_gradient(g)
            magnitude = np.abs(c).max(axis=1)
            means = np.abs(c.mean(axis=1))
            assert np.all(means <= 4.0 * np.spacing(magnitude) + np.spacing(0.0))

    def test_idempotent_exactly(self):
        rng = np.random.default_rng(18)
        for _ in range(100):
            g = rng.normal(size=(int(rng.integers(1, 7)), int(rng.integers(1, 7))))
            once = centralize_gradient(g)
            twice = centralize_gradient(once)
            np.testing.assert_array_equal(once, twice)

    def test_frobenius_norm_non_increasing(self):
        rng = np.random.default_rng(19)
        for _ in range(100):
            g = rng.normal(size=(5, 8)) + rng.uniform(-3, 3)
            c = centralize_gradient(g)
            assert np.linalg.norm(c) <= np.linalg.norm(g) * (1.0 + 1e-15)

    def test_zero_matrix_unchanged(self):
        g = np.zeros((3, 4))
        np.testing.assert_array_equal(centralize_gradient(g), g)


class TestCosineSchedule:
    def test_endpoints(self):
        alpha0 = 0.37
        assert cosine_lr(0, alpha0, 100) == alpha0
        assert cosine_lr(100, alpha0, 100) == 0.0
        np.testing.assert_allclose(cosine_lr(50, alpha0, 100), alpha0 / 2.0, rtol=1e-15)

    def test_monotone_non_increasing(self):
        alpha0 = 1.0
        values = [cosine_lr(t, alpha0, 1000) for t in range(1001)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_overflow_raises(self):
        with pytest.raises(ScheduleOverflowError):
            cosine_lr(101, 0.1, 100)

    def test_negative_epoch_rejected(self):
        with pytest.raises(SchemaError):
            cosine_lr(-1, 0.1, 100)

    def test_optimizer_learning_rate_uses_schedule(self):
        params = [np.zeros(3)]
        strategies = StrategyConfig(cosine_lr=True, initial_lr=0.5, total_epochs=20)
        opt = Optimizer(OptimizerConfig(), strategies, params)
        for epoch in (1, 7, 20):
            assert opt.learning_rate(epoch) == cosine_lr(epoch, 0.5, 20)

    def test_fixed_rate_when_disabled(self):
        params = [np.zeros(3)]
        opt = Optimizer(OptimizerConfig(fixed_lr=0.01), StrategyConfig(), params)
        assert opt.learning_rate(1) == 0.01
        assert opt.learning_rate(999) == 0.01


class TestOptimizerSteps:
    def test_first_step_magnitude_adam(self):
        # With zero moments, one adam step moves by lr * g / sqrt(g^2 + eps).
        g = np.array([0.3, -2.0, 0.0001])
        p = np.zeros(3)
        lr, eps = 0.05, 1e-8
        opt = Optimizer(OptimizerConfig(fixed_lr=lr, epsilon=eps), StrategyConfig(), [p])
        opt.step([p], [g.copy()])
        expected = -lr * g / np.sqrt(g * g + eps)
        np.testing.assert_allclose(p, expected, rtol=1e-15)

    def test_constant_gradient_bias_correction(self):
        # For constant g the corrected first moment equals g itself.
        g = np.array([0.7, -1.3])
        p = np.zeros(2)
        opt = Optimizer(OptimizerConfig(), StrategyConfig(), [p])
        for _ in range(25):
            opt.step([p], [g.copy()])
        m_hat = opt.m[0] / (1.0 - opt.config.beta1 ** opt.t)
        v_hat = opt.v[0] / (1.0 - opt.config.beta2 ** opt.t)
        np.testing.assert_allclose(m_hat, g, rtol=1e-12)
        np.testing.assert_allclose(v_hat, g * g, rtol=1e-12)

    def test_reduction_bitwise_all_kinds(self):
        # Strategies off: the step must equal the plain update bit for bit.
        rng = np.random.default_rng(23)
        for kind in OPTIMIZER_KINDS:
            for _ in range(25):
                theta0 = rng.uniform(-1.0, 1.0, size=int(rng.integers(1, 12)))
                grads = [rng.normal(size=theta0.shape) for _ in range(5)]
                lr = float(rng.uniform(0.001, 0.2))
                p = theta0.copy()
                opt = Optimizer(
                    OptimizerConfig(kind=kind, fixed_lr=lr), StrategyConfig(), [p]
                )
                for g in grads:
                    opt.step([p], [g.copy()])
                expected = plain_steps(kind, theta0, grads, lr)[-1]
                assert np.array_equal(p, expected)

    def test_adam_oracle_trajectory(self):
        rng = np.random.default_rng(29)
        theta = rng.uniform(-1.0, 1.0, size=10)
        lr = 0.01
        reference = adam_trajectory(theta.copy(), steps=100, lr=lr)
        p = theta.copy()
        opt = Optimizer(OptimizerConfig(fixed_lr=lr), StrategyConfig(), [p])
        for step in range(100):
            opt.step([p], [p.copy()])
            np.testing.assert_allclose(p, reference[step], rtol=0, atol=1e-12)

    def test_multiple_parameter_arrays(self):
        rng = np.random.default_rng(31)
        w = rng.normal(size=(3, 4))
        b = rng.normal(size=3)
        opt = Optimizer(OptimizerConfig(), StrategyConfig(), [w, b])
        opt.step([w, b], [np.ones((3, 4)), np.ones(3)])
        assert w.shape == (3, 4) and b.shape == (3,)
        assert opt.t == 1

    def test_gradient_shape_mismatch(self):
        p = np.zeros(3)
        opt = Optimizer(OptimizerConfig(), StrategyConfig(), [p])
        with pytest.raises(ShapeError):
            opt.step([p], [np.zeros(4)])

    def test_parameter_count_mismatch(self):
        p = np.zeros(3)
        opt = Optimizer(OptimizerConfig(), StrategyConfig(), [p])
        with pytest.raises(ShapeError):
            opt.step([p, p], [np.zeros(3), np.zeros(3)])

    def test_non_finite_gradient_diverges(self):
        p = np.zeros(3)
        opt = Optimizer(OptimizerConfig(), StrategyConfig(), [p])
        with pytest.raises(DivergenceError) as excinfo:
            opt.step([p], [np.array([1.0, np.nan, 0.0])])
        assert excinfo.value.exit_code == 4

    def test_config_validation(self):
        with pytest.raises(SchemaError):
            OptimizerConfig(kind="sgd")
        with pytest.raises(SchemaError):
            OptimizerConfig(beta1=1.0)
        with pytest.raises(SchemaError):
            OptimizerConfig(epsilon=0.0)
        with pytest.raises(SchemaError):
            StrategyConfig(noise_tau=-0.1)
        with pytest.raises(SchemaError):
            StrategyConfig(total_epochs=0)


class TestNoiseInjection:
    def test_stream_contract_bitwise(self):
        # Replicating the update and the dedicated noise stream reproduces
        # the noisy trajectory exactly.
        tau, lr, eps, b1, b2 = 1e-3, 0.05, 1e-8, 0.9, 0.999
        seed = 424
        rng = np.random.default_rng(37)
        theta0 = rng.uniform(-1.0, 1.0, size=6)
        grads = [rng.normal(size=6) for _ in range(5)]

        p = theta0.copy()
        opt = Optimizer(
            OptimizerConfig(fixed_lr=lr),
            StrategyConfig(noise_tau=tau, noise_seed=seed),
            [p],
        )
        for g in grads:
            opt.step([p], [g.copy()])

        noise_rng = np.random.default_rng([seed, 1])
        q = theta0.copy()
        m = np.zeros_like(q)
        v = np.zeros_like(q)
        for t, g in enumerate(grads, start=1):
            m = b1 * m + (1.0 - b1) * g
            v = b2 * v + (1.0 - b2) * (g * g)
            m_hat = m / (1.0 - b1 ** t)
            v_hat = v / (1.0 - b2 ** t)
            q -= lr * m_hat / np.sqrt(v_hat + eps)
            q += noise_rng.uniform(-tau, tau, size=q.shape)
        assert np.array_equal(p, q)

    def test_same_seed_reproduces(self):
        def run():
            p = np.ones(4)
            opt = Optimizer(
                OptimizerConfig(),
                StrategyConfig(noise_tau=1e-4, noise_seed=7),
                [p],
            )
            for _ in range(10):
                opt.step([p], [p.copy()])
            return p

        np.testing.assert_array_equal(run(), run())

    def test_zero_tau_matches_plain_bitwise(self):
        rng = np.random.default_rng(41)
        theta0 = rng.uniform(-1.0, 1.0, size=5)
        grads = [rng.normal(size=5) for _ in range(4)]
        p = theta0.copy()
        opt = Optimizer(
            OptimizerConfig(fixed_lr=0.02),
            StrategyConfig(noise_tau=0.0, noise_seed=99),
            [p],
        )
        for g in grads:
            opt.step([p], [g.copy()])
        assert np.array_equal(p, plain_steps("adam", theta0, grads, 0.02)[-1])

    def test_noise_is_bounded(self):
        tau = 1e-3
        grads = [np.full(8, 0.5) for _ in range(6)]
        theta0 = np.zeros(8)
        p = theta0.copy()
        opt = Optimizer(
            OptimizerConfig(fixed_lr=0.01),
            StrategyConfig(noise_tau=tau, noise_seed=3),
            [p],
        )
        plain = plain_steps("adam", theta0, grads, 0.01)
        for step, g in enumerate(grads):
            opt.step([p], [g.copy()])
            # noise accumulates; per step it adds at most tau in magnitude
            assert np.max(np.abs(p - plain[step])) <= (step + 1) * tau


class TestCentralizedStep:
    def test_weight_gradient_centralized_before_moments(self):
        w = np.zeros((2, 3))
        g = np.array([[1.0, 2.0, 3.0], [4.0, 4.0, 4.0]])
        opt = Optimizer(
            OptimizerConfig(fixed_lr=0.1), StrategyConfig(centralize=True), [w]
        )
        opt.step([w], [g.copy()])
        np.testing.assert_array_equal(
            opt.m[0], (1.0 - opt.config.beta1) * centralize_gradient(g)
        )
        # second row is constant, centralizes to zero, so it never moves
        np.testing.assert_array_equal(w[1], 0.0)
        assert w[0, 0] != 0.0 and w[0, 2] != 0.0
        assert w[0, 1] == 0.0  # centered middle entry has exactly zero gradient


class TestTrainingTrace:
    def test_csv_round_trip_exact(self):
        rows = [
            (1, 0.1, 0.123456789123456789, 0.5),
            (2, 0.05, 3.14e-12, None),
        ]
        trace = TrainingTrace(rows)
        again = TrainingTrace.from_csv(trace.to_csv())
        assert len(again) == 2
        for (e1, l1, t1, v1), (e2, l2, t2, v2) in zip(trace.rows, again.rows):
            assert e1 == e2 and l1 == l2 and t1 == t2 and v1 == v2

    def test_bad_header_rejected(self):
        with pytest.raises(SchemaError):
            TrainingTrace.from_csv("not,a,trace\n1,2,3\n")


def _linear_problem(seed=105):
    """A tiny exactly-linear regression task the net can drive to zero."""
    arch = Architecture(layer_sizes=(4, 1))
    net = init_network(arch, seed=seed)
    rng = np.random.default_rng(seed + 1)
    x = rng.uniform(-0.25, 0.25, size=(64, 4))
    w_true = net.weights[0] + rng.uniform(-0.05, 0.05, size=net.weights[0].shape)
    y = (x @ w_true.T).ravel()
    return net, SupervisedSet(x, y, ("a", "b", "c", "d"))


class TestTrainLoop:
    def test_zero_epochs_noop(self):
        net, data = _linear_problem()
        before = [p.copy() for p in net.parameters()]
        _, trace = train(
            net, data, None, OptimizerConfig(), StrategyConfig(), Loss(), epochs=0
        )
        assert len(trace) == 0
        for p, b in zip(net.parameters(), before):
            np.testing.assert_array_equal(p, b)

    def test_trace_rows_match_epochs(self):
        net, data = _linear_problem()
        _, trace = train(
            net, data, None, OptimizerConfig(fixed_lr=0.01), StrategyConfig(),
            Loss(), epochs=7,
        )
        assert [row[0] for row in trace.rows] == list(range(1, 8))
        assert all(row[1] == 0.01 for row in trace.rows)
        assert all(row[3] is None for row in trace.rows)

    def test_loss_decreases_monotonically_until_converged(self):
        net, data = _linear_problem()
        _, trace = train(
            net, data, None, OptimizerConfig(fixed_lr=0.001), StrategyConfig(),
            Loss(), epochs=500,
        )
        losses = [row[2] for row in trace.rows]
        first_small = next(i for i, v in enumerate(losses) if v < 1e-6)
        assert first_small < 500
        for a, b in zip(losses[:first_small], losses[1 : first_small + 1]):
            assert b < a

    def test_equal_seeds_identical_traces(self):
        def run():
            net, data = _linear_problem(seed=33)
            _, trace = train(
                net, data, None, OptimizerConfig(), StrategyConfig(noise_tau=1e-4, noise_seed=5),
                Loss(), epochs=20,
            )
            return trace.to_csv()

        assert run() == run()

    def test_validation_loss_recorded(self):
        net, data = _linear_problem()
        val = SupervisedSet(data.x[:10], data.y[:10], data.feature_names)
        _, trace = train(
            net, data, val, OptimizerConfig(), StrategyConfig(), Loss(), epochs=3
        )
        assert all(isinstance(row[3], float) for row in trace.rows)

    def test_early_stop_restores_best_parameters(self):
        net, data = _linear_problem(seed=51)
        val = SupervisedSet(data.x[:16], data.y[:16], data.feature_names)
        loss = Loss()
        net, trace = train(
            net, data, val, OptimizerConfig(fixed_lr=0.3), StrategyConfig(),
            loss, epochs=200, early_stop_patience=3,
        )
        best_val = min(row[3] for row in trace.rows)
        final_val = loss.value(forward(net, val.x), val.y)
        np.testing.assert_allclose(final_val, best_val, rtol=1e-12)

    def test_early_stop_needs_validation(self):
        net, data = _linear_problem()
        with pytest.raises(SchemaError):
            train(
                net, data, None, OptimizerConfig(), StrategyConfig(), Loss(),
                epochs=5, early_stop_patience=2,
            )

    def test_cosine_requires_room_in_schedule(self):
        net, data = _linear_problem()
        strategies = StrategyConfig(cosine_lr=True, initial_lr=0.1, total_epochs=5)
        with pytest.raises(ScheduleOverflowError):
            train(
                net, data, None, OptimizerConfig(), strategies, Loss(), epochs=6
            )

    def test_cosine_rates_recorded_in_trace(self):
        net, data = _linear_problem()
        strategies = StrategyConfig(cosine_lr=True, initial_lr=0.2, total_epochs=10)
        _, trace = train(
            net, data, None, OptimizerConfig(), strategies, Loss(), epochs=10
        )
        expected = [cosine_lr(t, 0.2, 10) for t in range(1, 11)]
        np.testing.assert_array_equal([row[1] for row in trace.rows], expected)

    def test_divergence_reports_epoch(self):
        net, data = _linear_problem()
        with pytest.raises(DivergenceError) as excinfo:
            train(
                net, data, None, OptimizerConfig(fixed_lr=1e160), StrategyConfig(),
                Loss(), epochs=50,
            )
        assert "epoch" in str(excinfo.value)
        assert excinfo.value.exit_code == 4

    def test_batched_training_runs(self):
        net, data = _linear_problem()
        _, trace = train(
            net, data, None, OptimizerConfig(), StrategyConfig(), Loss(),
            epochs=4, batch_size=16,
        )
        assert len(trace) == 4
