import math

import numpy as np
import pytest
import torch

from drscreen.grading import Grade
from drscreen.model import ModelConfig, build
from drscreen.trainer import (
    AdamState,
    DataError,
    NumericError,
    RunResult,
    TrainConfig,
    adam_step,
    cross_entropy,
    evaluate_accuracy,
    one_hot,
    select_best,
    train_one_run,
)


def scalar_adam_reference(theta, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    """Plain-float trace of the Adam update rule, one scalar parameter."""
    m = v = 0.0
    t = 0
    trace = []
    for g in grads:
        t += 1
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        theta = theta - lr * m_hat / (math.sqrt(v_hat) + eps)
        trace.append(theta)
    return trace


def make_synthetic_set(cfg: ModelConfig, n: int, seed: int):
    """Images whose mean brightness encodes the grade; trivially learnable."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        g = i % 5
        img = np.full((cfg.input_side, cfg.input_side, 3), 0.1 + 0.2 * g,
                      dtype=np.float32)
        img += rng.normal(0, 0.01, size=img.shape).astype(np.float32)
        out.append((np.clip(img, 0.0, 1.0), Grade(g)))
    return out


class TestOneHot:
    @pytest.mark.parametrize("g,idx", [(0, 0), (2, 2), (4, 4)])
    def test_basis_vectors(self, g, idx):
        vec = one_hot(Grade(g))
        assert vec.shape == (5,)
        assert vec[idx] == 1.0
        assert vec.sum() == 1.0


class TestCrossEntropy:
    def test_confident_correct_goes_to_zero(self):
        eps = 1e-6
        p = torch.tensor([[1 - 4 * eps, eps, eps, eps, eps]])
        t = torch.tensor([[1.0, 0, 0, 0, 0]])
        assert float(cross_entropy(p, t)) < 1e-4

    def test_uniform_is_ln5(self):
        p = torch.full((3, 5), 0.5)
        t = torch.eye(5)[:3]
        assert float(cross_entropy(p, t)) == pytest.approx(math.log(5), rel=1e-6)

    def test_mean_reduction(self):
        p = torch.tensor([[0.9, 0.1, 0.1, 0.1, 0.1],
                          [0.1, 0.8, 0.1, 0.1, 0.1]])
        t = torch.tensor([[1.0, 0, 0, 0, 0], [0, 1.0, 0, 0, 0]])
        l1 = float(cross_entropy(p[:1], t[:1]))
        l2 = float(cross_entropy(p[1:], t[1:]))
        both = float(cross_entropy(p, t))
        assert both == pytest.approx((l1 + l2) / 2, rel=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            cross_entropy(torch.ones(2, 5) / 2, torch.ones(3, 5))


class TestAdamStep:
    def test_zero_gradients_fixpoint(self):
        cfg = TrainConfig()
        p = torch.tensor([1.0, -2.0, 3.0])
        state = AdamState.init([p])
        adam_step([p], [torch.zeros(3)], state, cfg)
        assert torch.equal(p, torch.tensor([1.0, -2.0, 3.0]))

    def test_matches_scalar_reference_one_step(self):
        cfg = TrainConfig(learning_rate=5e-5)
        p = torch.tensor([1.0], dtype=torch.float64)
        state = AdamState.init([p])
        adam_step([p], [torch.tensor([4.0], dtype=torch.float64)], state, cfg)
        expected = scalar_adam_reference(1.0, [4.0], lr=5e-5)[-1]
        assert float(p) == pytest.approx(expected, rel=1e-12)
        assert float(p) == pytest.approx(1 - 5e-5 * (4 / (4 + 1e-8)), rel=1e-6)

    def test_matches_scalar_reference_trace(self):
        cfg = TrainConfig(learning_rate=1e-3)
        p = torch.tensor([0.5], dtype=torch.float64)
        state = AdamState.init([p])
        grads = [2.0, 2.0, -1.0, 0.3, 2.0]
        got = []
        for g in grads:
            adam_step([p], [torch.tensor([g], dtype=torch.float64)], state, cfg)
            got.append(float(p))
        expected = scalar_adam_reference(0.5, grads, lr=1e-3)
        assert got == pytest.approx(expected, rel=1e-10)
        assert state.t == len(grads)

    def test_non_finite_gradient_aborts(self):
        cfg = TrainConfig()
        p = torch.tensor([1.0])
        state = AdamState.init([p])
        with pytest.raises(NumericError):
            adam_step([p], [torch.tensor([float("nan")])], state, cfg)


class TestTrainOneRun:
    def test_empty_dataset_rejected(self, tiny_config):
        cfg = TrainConfig(epochs=1)
        with pytest.raises(DataError):
            train_one_run([], [(np.zeros((32, 32, 3), np.float32), Grade(0))],
                          tiny_config, cfg, run_seed=0)

    def test_epochs_zero_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)

    def test_deterministic_loss_history(self, tiny_config):
        data = make_synthetic_set(tiny_config, 8, seed=0)
        cfg = TrainConfig(learning_rate=1e-3, batch_size=4, epochs=2, num_runs=1)
        a = train_one_run(data, data, tiny_config, cfg, run_seed=11)
        b = train_one_run(data, data, tiny_config, cfg, run_seed=11)
        assert a.loss_history == b.loss_history
        assert a.holdout_accuracy == b.holdout_accuracy
        for pa, pb in zip(a.model.parameters(), b.model.parameters()):
            assert torch.equal(pa, pb)

    def test_history_length_and_accuracy_range(self, tiny_config):
        data = make_synthetic_set(tiny_config, 8, seed=1)
        cfg = TrainConfig(learning_rate=1e-3, batch_size=4, epochs=3, num_runs=1)
        res = train_one_run(data, data, tiny_config, cfg, run_seed=1)
        assert len(res.loss_history) == 3
        assert 0.0 <= res.holdout_accuracy <= 1.0

    def test_evaluate_accuracy_empty(self, tiny_config):
        model = build(tiny_config, seed=0)
        with pytest.raises(DataError):
            evaluate_accuracy(model, [])


class TestSelectBest:
    def _result(self, idx, acc):
        return RunResult(run_index=idx, model=None, loss_history=[],
                         holdout_accuracy=acc)

    def test_argmax(self):
        results = [self._result(0, 0.91), self._result(1, 0.93), self._result(2, 0.90)]
        assert select_best(results).run_index == 1

    def test_tie_earliest(self):
        results = [self._result(0, 0.9), self._result(1, 0.9)]
        assert select_best(results).run_index == 0

    def test_singleton(self):
        results = [self._result(0, 0.5)]
        assert select_best(results) is results[0]

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            select_best([])

    def test_default_protocol_is_ten_runs(self):
        assert TrainConfig().num_runs == 10
        assert TrainConfig().learning_rate == pytest.approx(5e-5)
        assert TrainConfig().batch_size == 32
        assert TrainConfig().epochs == 15
