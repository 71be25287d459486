"""Adam-based optimization of embeddings and student parameters.

Modes: ``joint`` updates all parameter groups on every step; ``coordinate``
alternates full epochs, even epochs moving the embeddings only and odd
epochs the (means, prior) pair. Shuffle order derives from (seed, epoch), so
both modes see identical data order at equal epochs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .model_core import (
    EmbeddingTable,
    PredictionTable,
    StudentParams,
    TrainConfig,
    apply_temperature,
)
from .objective import _PreparedStudent, _batch_gradients, _log_softmax_rows, _row_losses

_DIM = 2


class TrainingDiverged(RuntimeError):
    """Raised when the loss turns non-finite during optimization."""


@dataclass
class AdamState:
    """First/second moment buffers and step counter for one parameter group."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def like(cls, param: np.ndarray) -> "AdamState":
        return cls(m=np.zeros_like(param), v=np.zeros_like(param))

    def update(self, param: np.ndarray, grad: np.ndarray, lr: float) -> None:
        self.step += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.step)
        v_hat = self.v / (1.0 - self.beta2**self.step)
        param -= lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def update_rows(self, param: np.ndarray, rows: np.ndarray, grad: np.ndarray, lr: float) -> None:
        """Update a row subset without advancing the step counter.

        Valid because each epoch visits every row exactly once, so all rows
        share the group-level update count; the caller bumps ``step`` once
        per epoch.
        """
        t = self.step + 1
        m = self.beta1 * self.m[rows] + (1.0 - self.beta1) * grad
        v = self.beta2 * self.v[rows] + (1.0 - self.beta2) * grad * grad
        self.m[rows] = m
        self.v[rows] = v
        m_hat = m / (1.0 - self.beta1**t)
        v_hat = v / (1.0 - self.beta2**t)
        param[rows] -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass(frozen=True)
class TraceRecord:
    epoch: int
    temperature: float
    loss: float
    acc_teacher: float


@dataclass
class TrainTrace:
    records: list = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "temperature", "loss", "acc_teacher"])
            for r in self.records:
                writer.writerow([r.epoch, repr(r.temperature), repr(r.loss), repr(r.acc_teacher)])


def anneal_temperature(schedule, epoch: int) -> float:
    """Piecewise-linear interpolation of (epoch, T) breakpoints, clamped."""
    if not schedule:
        return 1.0
    xs = np.array([e for e, _ in schedule], dtype=float)
    ts = np.array([t for _, t in schedule], dtype=float)
    return float(max(1.0, np.interp(float(epoch), xs, ts)))


def initialize(preds: PredictionTable, cfg: TrainConfig):
    """Seeded initialization of embeddings and student parameters.

    Scales are fixed at sqrt(log K) * I, means drawn from a standard 2-D
    Gaussian, prior logits zero. Embeddings start either standard-Gaussian or
    at the mean of their argmax class plus sd-0.1 jitter.
    """
    k = preds.n_classes
    if k < 2:
        raise ValueError("at least two classes are required")
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed & 0xFFFFFFFFFFFFFFFF]))
    means = rng.standard_normal((k, _DIM))
    scales = np.broadcast_to(np.sqrt(np.log(k)) * np.eye(_DIM), (k, _DIM, _DIM)).copy()
    prior_logits = np.zeros(k)
    if cfg.init == "random":
        points = rng.standard_normal((preds.n_rows, _DIM))
    else:
        anchors = means[np.argmax(preds.probs, axis=1)]
        points = anchors + 0.1 * rng.standard_normal((preds.n_rows, _DIM))
    params = StudentParams(means=means, scales=scales, dof=2.0, prior_logits=prior_logits)
    return EmbeddingTable(points=points), params


def train(preds: PredictionTable, cfg: TrainConfig, trace_path=None):
    """Run the full optimization; returns (embeddings, params, trace)."""
    n = preds.n_rows
    if cfg.batch_size > n:
        raise ValueError("batch_size must not exceed the number of rows")
    emb0, params0 = initialize(preds, cfg)
    points = emb0.points.copy()
    means = params0.means.copy()
    prior = params0.prior_logits.copy()
    prepared = _PreparedStudent(means, params0.scales, params0.dof, prior)

    adam_embed = AdamState.like(points)
    adam_means = AdamState.like(means)
    adam_prior = AdamState.like(prior)

    teacher_argmax = np.argmax(preds.probs, axis=1)
    trace = TrainTrace()

    for epoch in range(1, cfg.epochs + 1):
        temperature = anneal_temperature(cfg.temperature_schedule, epoch)
        log_teacher = np.log(apply_temperature(preds.probs, temperature))
        if cfg.mode == "joint":
            move_embed = move_model = True
        else:
            move_embed = epoch % 2 == 0
            move_model = not move_embed

        order = np.random.default_rng(
            np.random.SeedSequence([cfg.seed & 0xFFFFFFFFFFFFFFFF, epoch])
        ).permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            d_embed, d_means, d_prior, per_row = _batch_gradients(
                prepared, points[batch], log_teacher[batch]
            )
            if not np.all(np.isfinite(per_row)):
                bad = batch[int(np.argmax(~np.isfinite(per_row)))]
                raise TrainingDiverged(
                    f"non-finite loss at row {bad} (epoch {epoch})"
                )
            if move_embed:
                adam_embed.update_rows(points, batch, d_embed, cfg.lr_embed)
            if move_model:
                adam_means.update(means, d_means, cfg.lr_means)
                adam_prior.update(prior, d_prior, cfg.lr_prior)
                prepared = _PreparedStudent(means, params0.scales, params0.dof, prior)
        if move_embed:
            adam_embed.step += 1

        epoch_loss, acc = _evaluate(prepared, points, log_teacher, teacher_argmax)
        if not np.isfinite(epoch_loss):
            raise TrainingDiverged(f"non-finite epoch loss (epoch {epoch})")
        trace.append(
            TraceRecord(
                epoch=epoch,
                temperature=temperature,
                loss=epoch_loss,
                acc_teacher=acc,
            )
        )

    emb = EmbeddingTable(points=points)
    params = StudentParams(
        means=means, scales=params0.scales, dof=params0.dof, prior_logits=prior
    )
    if trace_path is not None:
        trace.to_csv(trace_path)
    return emb, params, trace


def _evaluate(prepared, points, log_teacher, teacher_argmax):
    *_, log_joint = prepared.geometry(points)
    log_q = _log_softmax_rows(log_joint)
    per_row, *_ = _row_losses(log_teacher, log_q)
    acc = float(np.mean(np.argmax(log_q, axis=1) == teacher_argmax))
    return float(per_row.mean()), acc
