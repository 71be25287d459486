"""Visualization-quality metrics: local fidelity, compression quality, confusion.

Local fidelity averages the Jensen-Shannon distance between each point's
student posterior and those of its k nearest embedded neighbors; small values
mean nearby points carry similar predictive distributions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .model_core import EmbeddingTable, PredictionTable, StudentParams, student_posterior
from .objective import loss


@dataclass(frozen=True)
class MetricsReport:
    kl_sym_final: float
    acc_teacher: float
    acc_ground: Optional[float] = None
    local_fidelity: Dict[int, float] = field(default_factory=dict)
    confusion: Optional[np.ndarray] = None

    def to_json_dict(self) -> dict:
        out = {
            "kl_sym_final": self.kl_sym_final,
            "acc_teacher": self.acc_teacher,
            "acc_ground": self.acc_ground,
            "local_fidelity": {str(k): v for k, v in self.local_fidelity.items()},
        }
        if self.confusion is not None:
            out["confusion"] = self.confusion.tolist()
        return out


def jsd(p, q) -> float:
    """Jensen-Shannon distance: sqrt of the JS divergence, natural log."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m = 0.5 * (p + q)
    div = 0.5 * (_kl_to(p, m) + _kl_to(q, m))
    return float(np.sqrt(max(div, 0.0)))


def _kl_to(p, m):
    terms = np.where(p > 0.0, p * (np.log(np.where(p > 0, p, 1.0)) - np.log(m)), 0.0)
    return terms.sum(axis=-1)


def _jsd_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise JSD for aligned stacks of distributions."""
    m = 0.5 * (p + q)
    div = 0.5 * (_kl_to(p, m) + _kl_to(q, m))
    return np.sqrt(np.maximum(div, 0.0))


def local_fidelity(emb: EmbeddingTable, params: StudentParams, k: int) -> float:
    """Mean JSD between each row's posterior and its k nearest neighbors'.

    Neighbors by Euclidean distance in the embedding, self excluded, ties
    broken by ascending row index; brute-force O(N^2) scan.
    """
    n = emb.n_rows
    if not 1 <= k < n:
        raise ValueError("k must satisfy 1 <= k < N")
    posts = student_posterior(emb.points, params)
    total = 0.0
    block = max(1, int(4e6) // n)
    pts = emb.points
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        dx = pts[lo:hi, 0:1] - pts[None, :, 0]
        dy = pts[lo:hi, 1:2] - pts[None, :, 1]
        d2 = dx * dx + dy * dy
        d2[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        nbrs = np.argsort(d2, axis=1, kind="stable")[:, :k]
        p = np.repeat(posts[lo:hi], k, axis=0)
        q = posts[nbrs.reshape(-1)]
        total += float(_jsd_rows(p, q).sum())
    return total / (n * k)


def compression_quality(
    preds: PredictionTable, emb: EmbeddingTable, params: StudentParams
):
    """(kl_sym_final, acc_ground, acc_teacher) of a finished run.

    acc_ground is None when the table carries no labels.
    """
    report = loss(preds, emb, params, temperature=1.0)
    student_argmax = np.argmax(student_posterior(emb.points, params), axis=1)
    teacher_argmax = np.argmax(preds.probs, axis=1)
    acc_teacher = float(np.mean(student_argmax == teacher_argmax))
    acc_ground = None
    if preds.labels is not None:
        acc_ground = float(np.mean(student_argmax == preds.labels))
    return report.total, acc_ground, acc_teacher


def confusion_matrix(labels, predicted, n_classes: int) -> np.ndarray:
    """K x K count matrix; cell (r, c) counts rows predicted r with label c."""
    labels = np.asarray(labels, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if labels.shape != predicted.shape or labels.ndim != 1:
        raise ValueError("labels and predictions must be aligned vectors")
    for name, arr in (("labels", labels), ("predicted", predicted)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ValueError(f"{name} contain entries outside [0, K)")
    out = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(out, (predicted, labels), 1)
    return out


def metrics_report(
    preds: PredictionTable,
    emb: EmbeddingTable,
    params: StudentParams,
    knn: tuple = (1, 5, 10),
) -> MetricsReport:
    """Assemble the full report for a run (confusion uses teacher argmax)."""
    kl_final, acc_ground, acc_teacher = compression_quality(preds, emb, params)
    fidelity = {int(k): local_fidelity(emb, params, int(k)) for k in knn if k < emb.n_rows}
    confusion = None
    if preds.labels is not None:
        confusion = confusion_matrix(
            preds.labels, np.argmax(preds.probs, axis=1), preds.n_classes
        )
    return MetricsReport(
        kl_sym_final=kl_final,
        acc_teacher=acc_teacher,
        acc_ground=acc_ground,
        local_fidelity=fidelity,
        confusion=confusion,
    )
