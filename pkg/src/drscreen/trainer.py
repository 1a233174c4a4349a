"""Training loop: cross-entropy loss, Adam updates, multi-run best-of-N.

Reference protocol: learning rate 5e-5, batch size 32, 15 epochs, 10 runs,
keeping the run with the best held-out overall accuracy.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np
import torch

from .grading import Grade
from .imaging import AugmentConfig, augment
from .model import DenseClassifier, ModelConfig, build, forward

LOG_EPSILON = 1e-7


class DataError(ValueError):
    """Raised when a training/evaluation dataset is unusable."""


class NumericError(RuntimeError):
    """Raised when gradients go non-finite mid-run."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-5
    batch_size: int = 32
    epochs: int = 15
    num_runs: int = 10
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1 or self.epochs < 1 or self.num_runs < 1:
            raise ValueError("batch_size, epochs and num_runs must all be >= 1")


@dataclass
class AdamState:
    """First/second moment accumulators mirroring the parameter list."""

    m: list[torch.Tensor]
    v: list[torch.Tensor]
    t: int = 0

    @classmethod
    def init(cls, params: list[torch.Tensor]) -> "AdamState":
        return cls(m=[torch.zeros_like(p) for p in params],
                   v=[torch.zeros_like(p) for p in params])


@dataclass
class RunResult:
    run_index: int
    model: DenseClassifier
    loss_history: list[float]
    holdout_accuracy: float


def one_hot(g: Grade, num_classes: int = 5) -> np.ndarray:
    vec = np.zeros(num_classes, dtype=np.float32)
    vec[int(Grade(g))] = 1.0
    return vec


def cross_entropy(probabilities: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Mean negative log of the renormalized true-class probability.

    Sigmoid outputs do not sum to 1, so each row is renormalized to a
    distribution before the log-loss; argmax semantics are unchanged.
    """
    if probabilities.shape != targets.shape:
        raise ValueError(
            f"shape mismatch: probabilities {tuple(probabilities.shape)} vs "
            f"targets {tuple(targets.shape)}"
        )
    renorm = probabilities / probabilities.sum(dim=1, keepdim=True)
    true_prob = (renorm * targets).sum(dim=1)
    return -torch.log(torch.clamp(true_prob, min=LOG_EPSILON)).mean()


def adam_step(params: list[torch.Tensor], grads: list[torch.Tensor],
              state: AdamState, cfg: TrainConfig) -> None:
    """One Adam update, in place. t is incremented before the update."""
    state.t += 1
    b1, b2, eps, lr = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon, cfg.learning_rate
    with torch.no_grad():
        for p, g, m, v in zip(params, grads, state.m, state.v):
            if not torch.isfinite(g).all():
                raise NumericError("non-finite gradient encountered")
            m.mul_(b1).add_(g, alpha=1 - b1)
            v.mul_(b2).addcmul_(g, g, value=1 - b2)
            m_hat = m / (1 - b1 ** state.t)
            v_hat = v / (1 - b2 ** state.t)
            p.sub_(lr * m_hat / (v_hat.sqrt() + eps))


def _batched_loss(model: DenseClassifier, images: np.ndarray,
                  targets: np.ndarray) -> torch.Tensor:
    x = torch.from_numpy(images).permute(0, 3, 1, 2).contiguous()
    probs = model(x)
    return cross_entropy(probs, torch.from_numpy(targets))


def evaluate_accuracy(model: DenseClassifier, dataset, batch_size: int = 32) -> float:
    """Eval-mode overall accuracy on a list of (image, Grade) pairs."""
    if not dataset:
        raise DataError("empty evaluation set")
    model.eval()
    correct = 0
    for start in range(0, len(dataset), batch_size):
        chunk = dataset[start:start + batch_size]
        batch = np.stack([img for img, _ in chunk]).astype(np.float32)
        probs = forward(model, batch, mode="eval")
        preds = probs.argmax(axis=1)
        correct += sum(int(p) == int(g) for p, (_, g) in zip(preds, chunk))
    return correct / len(dataset)


def train_one_run(train_set, test_set, model_cfg: ModelConfig,
                  train_cfg: TrainConfig, run_seed: int,
                  augment_cfg: AugmentConfig | None = None,
                  progress_log=None) -> RunResult:
    """Train one model from scratch and score it on the held-out set.

    train_set/test_set are lists of (image H x W x 3 float32 in [0,1], Grade).
    Shuffling, initialization, dropout and augmentation all derive from
    run_seed, so a run is reproducible bit-for-bit.
    """
    if not train_set:
        raise DataError("empty training set")
    if not test_set:
        raise DataError("empty held-out set")

    torch.manual_seed(run_seed)
    model = build(model_cfg, seed=run_seed)
    model.train()
    params = [p for p in model.parameters()]
    state = AdamState.init(params)
    shuffle_rng = np.random.default_rng(run_seed)
    aug_rng = np.random.default_rng(run_seed + 1)

    n = len(train_set)
    num_classes = model_cfg.num_classes
    loss_history: list[float] = []
    for epoch in range(train_cfg.epochs):
        order = shuffle_rng.permutation(n)
        epoch_start = time.monotonic()
        losses = []
        for start in range(0, n, train_cfg.batch_size):
            idx = order[start:start + train_cfg.batch_size]
            images, targets = [], []
            for i in idx:
                img, grade = train_set[i]
                if augment_cfg is not None:
                    img = augment(img, augment_cfg, aug_rng)
                images.append(img.astype(np.float32))
                targets.append(one_hot(grade, num_classes))
            loss = _batched_loss(model, np.stack(images), np.stack(targets))
            model.zero_grad()
            loss.backward()
            adam_step(params, [p.grad for p in params], state, train_cfg)
            losses.append(float(loss.detach()))
        mean_loss = float(np.mean(losses))
        loss_history.append(mean_loss)
        if progress_log is not None:
            progress_log.write(json.dumps({
                "run": run_seed, "epoch": epoch, "mean_loss": mean_loss,
                "seconds": round(time.monotonic() - epoch_start, 3),
            }) + "\n")
            progress_log.flush()

    accuracy = evaluate_accuracy(model, test_set, train_cfg.batch_size)
    model.eval()
    return RunResult(run_index=0, model=model, loss_history=loss_history,
                     holdout_accuracy=accuracy)


def select_best(results: list[RunResult]) -> RunResult:
    """Run with the highest held-out accuracy; ties go to the earliest run."""
    if not results:
        raise DataError("no run results to select from")
    return max(results, key=lambda r: (r.holdout_accuracy, -r.run_index))


def run_protocol(train_set, test_set, model_cfg: ModelConfig,
                 train_cfg: TrainConfig, augment_cfg: AugmentConfig | None = None,
                 progress_log=None) -> tuple[RunResult, list[RunResult]]:
    """The multi-run protocol: num_runs independent runs, keep the best."""
    results = []
    for r in range(train_cfg.num_runs):
        result = train_one_run(train_set, test_set, model_cfg, train_cfg,
                               run_seed=train_cfg.seed + r,
                               augment_cfg=augment_cfg, progress_log=progress_log)
        result.run_index = r
        results.append(result)
    return select_best(results), results
