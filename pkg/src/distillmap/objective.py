"""Symmetric-KL distillation loss and its analytic gradients.

Per row i the loss is sym_kl(p_i, q_i) with p_i the (optionally tempered)
teacher row and q_i = softmax over class log-joints of the student at y_i.
Gradients flow through the log-sum-exp posterior into the embeddings, class
means and prior logits; the teacher side is constant data. All reductions
are plain element-wise sums in fixed order, so results do not depend on
BLAS threading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model_core import EmbeddingTable, PredictionTable, StudentParams, apply_temperature
from .special import gammaln

_DIM = 2


@dataclass(frozen=True)
class LossReport:
    total: float
    per_row: np.ndarray

    def __post_init__(self):
        per_row = np.asarray(self.per_row, dtype=float)
        object.__setattr__(self, "per_row", per_row)
        object.__setattr__(self, "total", float(self.total))


@dataclass(frozen=True)
class GradientBundle:
    d_embed: np.ndarray
    d_means: np.ndarray
    d_prior: np.ndarray

    def __post_init__(self):
        for name in ("d_embed", "d_means", "d_prior"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, arr)


def sym_kl(p, q) -> float:
    """0.5 * (KL(p, q) + KL(q, p)) in nats; symmetric by construction."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * (_kl(p, q) + _kl(q, p))


def _kl(p, q) -> float:
    terms = np.where(p > 0.0, p * (np.log(np.where(p > 0, p, 1.0)) - np.log(q)), 0.0)
    return float(terms.sum())


class _PreparedStudent:
    """Raw arrays derived from StudentParams for the vectorized kernels.

    The 2x2 scale inverses are carried as packed (a, b, c) coefficients of
    [[a, b], [b, c]]; the per-class constant folds the t normalizer and the
    log prior.
    """

    def __init__(self, means, scales, dof, prior_logits):
        means = np.asarray(means, dtype=float)
        scales = np.asarray(scales, dtype=float)
        prior_logits = np.asarray(prior_logits, dtype=float)
        det = scales[:, 0, 0] * scales[:, 1, 1] - scales[:, 0, 1] * scales[:, 1, 0]
        self.means = means
        self.nu = float(dof)
        self.inv_a = scales[:, 1, 1] / det
        self.inv_b = -scales[:, 0, 1] / det
        self.inv_c = scales[:, 0, 0] / det
        shift = prior_logits - prior_logits.max()
        self.log_prior = shift - np.log(np.exp(shift).sum())
        self.t_const = (
            gammaln((self.nu + _DIM) / 2.0)
            - gammaln(self.nu / 2.0)
            - (_DIM / 2.0) * np.log(self.nu * np.pi)
            - 0.5 * np.log(det)
        )

    @classmethod
    def from_params(cls, params: StudentParams) -> "_PreparedStudent":
        return cls(params.means, params.scales, params.dof, params.prior_logits)

    def geometry(self, points: np.ndarray):
        """Centered coordinates, quadratic forms and log joints, all (N, K)."""
        dx = points[:, 0:1] - self.means[None, :, 0]
        dy = points[:, 1:2] - self.means[None, :, 1]
        gx = self.inv_a * dx + self.inv_b * dy
        gy = self.inv_b * dx + self.inv_c * dy
        quad = dx * gx + dy * gy
        log_joint = (
            self.t_const
            - ((self.nu + _DIM) / 2.0) * np.log1p(quad / self.nu)
            + self.log_prior
        )
        return dx, dy, gx, gy, quad, log_joint


def _log_softmax_rows(a: np.ndarray) -> np.ndarray:
    shift = a - a.max(axis=1, keepdims=True)
    return shift - np.log(np.exp(shift).sum(axis=1, keepdims=True))


def _row_losses(log_p: np.ndarray, log_q: np.ndarray):
    """Per-row sym-KL plus the intermediates reused by the gradient kernel."""
    p = np.exp(log_p)
    q = np.exp(log_q)
    r = log_q - log_p
    kl_pq = np.sum(p * -r, axis=1)
    kl_qp = np.sum(q * r, axis=1)
    per_row = 0.5 * (kl_pq + kl_qp)
    return per_row, p, q, r, kl_qp


def loss(
    preds: PredictionTable,
    emb: EmbeddingTable,
    params: StudentParams,
    temperature: float = 1.0,
) -> LossReport:
    """Mean per-row symmetric KL between tempered teacher rows and posteriors."""
    _check_aligned(preds, emb, params)
    prepared = _PreparedStudent.from_params(params)
    tempered = apply_temperature(preds.probs, temperature)
    *_, log_joint = prepared.geometry(emb.points)
    per_row, *_ = _row_losses(np.log(tempered), _log_softmax_rows(log_joint))
    return LossReport(total=float(per_row.mean()), per_row=per_row)


def gradients(
    preds: PredictionTable,
    emb: EmbeddingTable,
    params: StudentParams,
    temperature: float = 1.0,
    batch=None,
) -> GradientBundle:
    """Gradients of the batch-mean loss w.r.t. embeddings, means, prior logits.

    Rows outside the batch contribute nothing; their d_embed rows are exactly
    zero.
    """
    _check_aligned(preds, emb, params)
    n = preds.n_rows
    if batch is None:
        batch = np.arange(n)
    batch = np.asarray(batch, dtype=np.int64)
    if batch.size == 0:
        raise ValueError("batch must be a non-empty set of row indices")
    if batch.min() < 0 or batch.max() >= n or np.unique(batch).size != batch.size:
        raise ValueError("batch must be a set of distinct row indices in [0, N)")
    prepared = _PreparedStudent.from_params(params)
    tempered = apply_temperature(preds.probs[batch], temperature)
    d_embed = np.zeros((n, _DIM))
    d_embed_batch, d_means, d_prior, _ = _batch_gradients(
        prepared, emb.points[batch], np.log(tempered)
    )
    d_embed[batch] = d_embed_batch
    return GradientBundle(d_embed=d_embed, d_means=d_means, d_prior=d_prior)


def _batch_gradients(prepared: _PreparedStudent, points: np.ndarray, log_p: np.ndarray):
    """Core kernel: returns (d_embed, d_means, d_prior, per_row_loss)."""
    b = points.shape[0]
    dx, dy, gx, gy, quad, log_joint = prepared.geometry(points)
    log_q = _log_softmax_rows(log_joint)
    per_row, p, q, r, kl_qp = _row_losses(log_p, log_q)

    # s = dD/d(log joint); rows of s sum to zero by softmax gauge invariance.
    s = 0.5 * (q - p + q * (r - kl_qp[:, None]))
    # grad of the per-class t log-density w.r.t. y is -alpha * Sigma^-1 (y - mu)
    alpha = (prepared.nu + _DIM) / (prepared.nu + quad)
    wx = s * alpha * gx
    wy = s * alpha * gy
    d_embed = np.stack((-wx.sum(axis=1), -wy.sum(axis=1)), axis=1) / b
    d_means = np.stack((wx.sum(axis=0), wy.sum(axis=0)), axis=1) / b
    d_prior = s.sum(axis=0) / b
    return d_embed, d_means, d_prior, per_row


def _check_aligned(preds: PredictionTable, emb: EmbeddingTable, params: StudentParams):
    if preds.n_rows != emb.n_rows:
        raise ValueError(
            f"prediction table has {preds.n_rows} rows but embedding has {emb.n_rows}"
        )
    if preds.n_classes != params.n_classes:
        raise ValueError(
            f"prediction table has {preds.n_classes} classes but params have "
            f"{params.n_classes}"
        )
