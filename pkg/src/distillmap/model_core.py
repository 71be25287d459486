"""Domain types and the student classifier's densities and transforms.

The student is a naive Bayes model over 2-D embeddings: per-class bivariate
Student's t conditionals (Sigma_k is the *scale* matrix, not the covariance;
at dof=2 the covariance does not exist) with a categorical prior given by
softmax(prior_logits).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .special import gammaln, logsumexp

#: Teacher probabilities are clamped to at least this value on ingestion so
#: every KL term stays finite (float32 softmax emits exact zeros).
PROB_EPS = 1e-8

_T_DIM = 2  # embeddings are always 2-D


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PredictionTable:
    """N teacher prediction vectors over K classes, plus optional extras.

    ``probs`` rows must already be clamped and normalized; use :meth:`ingest`
    for raw teacher output.
    """

    probs: np.ndarray
    labels: Optional[np.ndarray] = None
    logits: Optional[np.ndarray] = None
    row_ids: tuple = ()

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[1] < 2:
            raise ValueError("probs must be an N x K matrix with K >= 2")
        n, k = probs.shape
        sums = probs.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"row {bad} of probs sums to {sums[bad]!r}, not 1")
        if np.any(probs < PROB_EPS * 0.5):
            raise ValueError("probs must be eps-clamped; use PredictionTable.ingest")
        object.__setattr__(self, "probs", _freeze(probs))

        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (n,):
                raise ValueError("labels must have exactly one entry per row")
            if labels.min() < 0 or labels.max() >= k:
                raise ValueError("labels must lie in [0, K)")
            object.__setattr__(self, "labels", _freeze(labels))
        logits = self.logits
        if logits is not None:
            logits = np.asarray(logits, dtype=float)
            if logits.shape != (n, k):
                raise ValueError("logits must match the shape of probs")
            if not np.all(np.isfinite(logits)):
                raise ValueError("logits must be finite")
            object.__setattr__(self, "logits", _freeze(logits))
        ids = tuple(str(r) for r in self.row_ids) if self.row_ids else tuple(
            str(i) for i in range(n)
        )
        if len(ids) != n:
            raise ValueError("row_ids must have exactly one entry per row")
        object.__setattr__(self, "row_ids", ids)

    @classmethod
    def ingest(cls, probs, labels=None, logits=None, row_ids=()) -> "PredictionTable":
        """Clamp raw teacher rows to >= PROB_EPS and renormalize.

        Rows already summing to 1 within 1e-12 are left untouched, so
        ingesting a table's own rows is the identity and file round-trips are
        bit-exact.
        """
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 2:
            raise ValueError("probs must be an N x K matrix")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        clamped = np.maximum(probs, PROB_EPS)
        sums = clamped.sum(axis=1)
        off = np.abs(sums - 1.0) > 1e-12
        if np.any(off):
            clamped[off] /= sums[off, None]
            # renormalization drags clamped entries an ulp under the floor;
            # lifting them back costs at most K * 1e-16 of row mass, keeping
            # re-ingestion the identity
            np.maximum(clamped, PROB_EPS, out=clamped)
        return cls(clamped, labels=labels, logits=logits, row_ids=row_ids)

    @property
    def n_rows(self) -> int:
        return self.probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]

    def effective_logits(self) -> np.ndarray:
        """Stored logits, or log of the clamped probabilities when absent."""
        if self.logits is not None:
            return self.logits
        return np.log(self.probs)


@dataclass(frozen=True)
class EmbeddingTable:
    """N 2-D points, row-aligned with a PredictionTable."""

    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != _T_DIM:
            raise ValueError("points must be an N x 2 matrix")
        if not np.all(np.isfinite(points)):
            raise ValueError("embedding coordinates must be finite")
        object.__setattr__(self, "points", _freeze(points))

    @property
    def n_rows(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class StudentParams:
    """Student parameters: per-class t means/scales, dof, prior logits."""

    means: np.ndarray
    scales: np.ndarray
    dof: float
    prior_logits: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        if means.ndim != 2 or means.shape[1] != _T_DIM:
            raise ValueError("means must be a K x 2 matrix")
        k = means.shape[0]
        scales = np.asarray(self.scales, dtype=float)
        if scales.shape != (k, _T_DIM, _T_DIM):
            raise ValueError("scales must be a K x 2 x 2 array")
        if np.any(np.abs(scales[:, 0, 1] - scales[:, 1, 0]) > 1e-12):
            raise ValueError("each scale matrix must be symmetric within 1e-12")
        # SPD for a symmetric 2x2: positive leading entry and determinant.
        dets = scales[:, 0, 0] * scales[:, 1, 1] - scales[:, 0, 1] * scales[:, 1, 0]
        if np.any(scales[:, 0, 0] <= 0) or np.any(dets <= 0):
            raise ValueError("each scale matrix must be positive-definite")
        if not float(self.dof) > 0:
            raise ValueError("dof must be positive")
        prior = np.asarray(self.prior_logits, dtype=float)
        if prior.shape != (k,):
            raise ValueError("prior_logits must be a K-vector")
        if not np.all(np.isfinite(prior)):
            raise ValueError("prior_logits must be finite")
        object.__setattr__(self, "means", _freeze(means))
        object.__setattr__(self, "scales", _freeze(scales))
        object.__setattr__(self, "dof", float(self.dof))
        object.__setattr__(self, "prior_logits", _freeze(prior))

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]

    def log_prior(self) -> np.ndarray:
        return self.prior_logits - logsumexp(self.prior_logits)

    def prior(self) -> np.ndarray:
        return np.exp(self.log_prior())


@dataclass(frozen=True)
class SubsetMask:
    """Boolean keep-mask over the K classes; at least two must survive."""

    keep: np.ndarray

    def __post_init__(self):
        keep = np.asarray(self.keep, dtype=bool)
        if keep.ndim != 1:
            raise ValueError("keep must be a K-vector of booleans")
        if int(keep.sum()) < 2:
            raise ValueError("a subset mask must keep at least two classes")
        object.__setattr__(self, "keep", _freeze(keep))

    @classmethod
    def from_indices(cls, indices: Sequence[int], n_classes: int) -> "SubsetMask":
        idx = list(indices)
        if any(i < 0 or i >= n_classes for i in idx):
            raise ValueError(f"class indices must lie in [0, {n_classes})")
        keep = np.zeros(n_classes, dtype=bool)
        keep[idx] = True
        return cls(keep)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for a distillation run."""

    epochs: int = 600
    batch_size: int = 500
    lr_means: float = 1e-2
    lr_prior: float = 5e-3
    lr_embed: float = 5e-2
    mode: str = "joint"
    temperature_schedule: Optional[tuple] = None
    seed: int = 0
    deterministic: bool = False
    init: str = "cluster-center"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        for name in ("lr_means", "lr_prior", "lr_embed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.mode not in ("joint", "coordinate"):
            raise ValueError("mode must be 'joint' or 'coordinate'")
        if self.init not in ("random", "cluster-center"):
            raise ValueError("init must be 'random' or 'cluster-center'")
        sched = self.temperature_schedule
        if sched is not None:
            sched = tuple((int(e), float(t)) for e, t in sched)
            epochs = [e for e, _ in sched]
            temps = [t for _, t in sched]
            if any(b <= a for a, b in zip(epochs, epochs[1:])):
                raise ValueError("schedule epochs must be strictly increasing")
            if any(t < 1.0 for t in temps):
                raise ValueError("schedule temperatures must be >= 1")
            if temps[-1] != 1.0:
                raise ValueError("the final scheduled temperature must be 1")
            object.__setattr__(self, "temperature_schedule", sched)


def _check_spd_2x2(scale: np.ndarray) -> None:
    if scale.shape != (_T_DIM, _T_DIM):
        raise ValueError("scale must be a 2 x 2 matrix")
    if abs(scale[0, 1] - scale[1, 0]) > 1e-12:
        raise ValueError("scale matrix must be symmetric")
    det = scale[0, 0] * scale[1, 1] - scale[0, 1] * scale[1, 0]
    if scale[0, 0] <= 0 or det <= 0:
        raise ValueError("scale matrix must be positive-definite")


def t_log_density(y, mu, scale, nu: float):
    """Log pdf of the bivariate Student's t at ``y`` (single point or N x 2).

    log Gamma((nu+2)/2) - log Gamma(nu/2) - log(nu*pi) - 0.5*log|Sigma|
        - ((nu+2)/2) * log(1 + (y-mu)' Sigma^-1 (y-mu) / nu)
    """
    scale = np.asarray(scale, dtype=float)
    _check_spd_2x2(scale)
    if not nu > 0:
        raise ValueError("nu must be positive")
    mu = np.asarray(mu, dtype=float).reshape(_T_DIM)
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    pts = y.reshape(-1, _T_DIM)

    det = scale[0, 0] * scale[1, 1] - scale[0, 1] * scale[1, 0]
    inv = (
        np.array([[scale[1, 1], -scale[0, 1]], [-scale[1, 0], scale[0, 0]]]) / det
    )
    d = pts - mu
    quad = (
        inv[0, 0] * d[:, 0] ** 2
        + 2.0 * inv[0, 1] * d[:, 0] * d[:, 1]
        + inv[1, 1] * d[:, 1] ** 2
    )
    const = (
        gammaln((nu + _T_DIM) / 2.0)
        - gammaln(nu / 2.0)
        - (_T_DIM / 2.0) * np.log(nu * np.pi)
        - 0.5 * np.log(det)
    )
    out = const - ((nu + _T_DIM) / 2.0) * np.log1p(quad / nu)
    return float(out[0]) if single else out


def class_log_joints(y, params: StudentParams) -> np.ndarray:
    """Per-class log t-density + log prior at ``y`` (single point or N x 2)."""
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    pts = y.reshape(-1, _T_DIM)
    log_prior = params.log_prior()
    out = np.empty((pts.shape[0], params.n_classes))
    for k in range(params.n_classes):
        out[:, k] = t_log_density(pts, params.means[k], params.scales[k], params.dof)
    out += log_prior
    return out[0] if single else out


def student_posterior(y, params: StudentParams):
    """Posterior over classes at embedding ``y`` via log-sum-exp."""
    joints = class_log_joints(y, params)
    shift = joints - np.max(joints, axis=-1, keepdims=True)
    e = np.exp(shift)
    return e / e.sum(axis=-1, keepdims=True)


def student_marginal(y, params: StudentParams):
    """Prior-weighted mixture density of the student at ``y``."""
    joints = class_log_joints(y, params)
    return np.exp(logsumexp(joints, axis=-1))


def apply_temperature(probs, t: float):
    """Flatten prediction rows: softmax(log(probs) / T)."""
    if not t >= 1.0:
        raise ValueError("temperature must be >= 1")
    probs = np.asarray(probs, dtype=float)
    logits = np.log(probs) / t
    shift = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shift)
    return e / e.sum(axis=-1, keepdims=True)


def apply_subset_mask(probs_row, mask: SubsetMask) -> np.ndarray:
    """Keep the masked entries of one prediction row and renormalize."""
    row = np.asarray(probs_row, dtype=float)
    if row.shape != mask.keep.shape:
        raise ValueError("mask length must match the number of classes")
    kept = row[mask.keep]
    total = kept.sum()
    if total < PROB_EPS * row.shape[0]:
        raise ValueError("subset mask removes essentially all probability mass")
    return kept / total


def subset_table(table: PredictionTable, mask: SubsetMask) -> PredictionTable:
    """Restrict a whole table to the masked classes.

    Labels are remapped to the surviving class indices; if any row's label is
    dropped by the mask the labels field is omitted entirely. Logit columns
    are sliced as-is (softmax of a slice equals the renormalized subset).
    """
    if mask.keep.shape[0] != table.n_classes:
        raise ValueError("mask length must match the number of classes")
    kept = table.probs[:, mask.keep]
    totals = kept.sum(axis=1)
    if np.any(totals < PROB_EPS * table.n_classes):
        bad = int(np.argmin(totals))
        raise ValueError(f"subset mask leaves row {bad} without probability mass")
    probs = kept / totals[:, None]
    labels = None
    if table.labels is not None:
        remap = np.full(table.n_classes, -1, dtype=np.int64)
        remap[mask.keep] = np.arange(int(mask.keep.sum()))
        mapped = remap[table.labels]
        if np.all(mapped >= 0):
            labels = mapped
    logits = table.logits[:, mask.keep] if table.logits is not None else None
    return PredictionTable.ingest(
        probs, labels=labels, logits=logits, row_ids=table.row_ids
    )


def predictive_entropy(probs):
    """Shannon entropy of prediction rows, natural log, 0*log(0) = 0.

    Terms are summed in sorted order so that any permutation of a row yields
    the bit-identical entropy.
    """
    probs = np.asarray(probs, dtype=float)
    terms = np.where(probs > 0.0, probs * np.log(np.where(probs > 0, probs, 1.0)), 0.0)
    ordered = np.sort(terms, axis=-1)
    out = -np.sum(ordered, axis=-1)
    return float(out) if out.ndim == 0 else out
