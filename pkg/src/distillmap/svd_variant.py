"""Closed-form rank-2 factorization of the teacher logit matrix.

The best rank-2 approximation L ~ Y W (Frobenius norm) doubles as a softmax
student: reconstructed logit rows Y_i W feed a plain softmax. Y carries the
singular-value scale (Y = U2 S2) so the embedding shows the spread; W rows
are the orthonormal right singular vectors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

_RANK = 2


@dataclass(frozen=True)
class SvdModel:
    embed: np.ndarray
    weights: np.ndarray
    singular_values: np.ndarray
    residual: float

    def __post_init__(self):
        embed = np.asarray(self.embed, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        sv = np.asarray(self.singular_values, dtype=float)
        if embed.ndim != 2 or embed.shape[1] != _RANK:
            raise ValueError("embed must be an N x 2 matrix")
        if weights.ndim != 2 or weights.shape[0] != _RANK:
            raise ValueError("weights must be a 2 x K matrix")
        if sv.shape != (_RANK,) or sv[0] < sv[1] or sv[1] < 0:
            raise ValueError("singular values must satisfy s1 >= s2 >= 0")
        if self.residual < 0:
            raise ValueError("residual must be non-negative")
        object.__setattr__(self, "embed", embed)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "singular_values", sv)
        object.__setattr__(self, "residual", float(self.residual))


def jacobi_eigh(a: np.ndarray, max_sweeps: int = 64):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) sorted by descending eigenvalue,
    eigenvectors in columns.
    """
    a = np.array(a, dtype=float)
    k = a.shape[0]
    if a.shape != (k, k) or np.max(np.abs(a - a.T)) > 1e-10 * max(1.0, np.max(np.abs(a))):
        raise ValueError("jacobi_eigh requires a symmetric square matrix")
    v = np.eye(k)
    scale = np.sqrt(np.sum(a * a))
    if scale == 0.0:
        return np.zeros(k), v
    tol = 1e-14 * scale
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off <= tol:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p, q]
                if abs(apq) <= tol / k:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) if theta != 0 else 1.0
                t = t / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = rot_p, rot_q
    eigvals = np.diag(a).copy()
    order = np.argsort(-eigvals, kind="stable")
    return eigvals[order], v[:, order]


def fit_svd(logits: np.ndarray) -> SvdModel:
    """Best rank-2 factorization of an N x K logit matrix.

    Works on the K x K Gram matrix (K is small), accumulated in fixed row
    order, so the result is deterministic regardless of BLAS threading.
    """
    logits = np.asarray(logits, dtype=float)
    if logits.ndim != 2 or logits.shape[0] < 2 or logits.shape[1] < 2:
        raise ValueError("logits must be an N x K matrix with N, K >= 2")
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits must be finite")
    gram = np.einsum("ij,ik->jk", logits, logits)
    eigvals, eigvecs = jacobi_eigh(gram)
    lam = eigvals[:_RANK].copy()
    vecs = eigvecs[:, :_RANK].copy()
    # deterministic column signs: largest-magnitude entry positive
    for j in range(_RANK):
        lead = np.argmax(np.abs(vecs[:, j]))
        if vecs[lead, j] < 0:
            vecs[:, j] = -vecs[:, j]

    rank_tol = logits.shape[1] * 1e-12 * max(lam[0], 0.0)
    deficient = lam[1] <= rank_tol
    lam = np.maximum(lam, 0.0)
    sigma = np.sqrt(lam)
    embed = np.einsum("ij,jk->ik", logits, vecs)
    if deficient:
        warnings.warn("logit matrix is numerically rank-deficient; dropping the second component")
        sigma[1] = 0.0
        embed[:, 1] = 0.0
    weights = vecs.T
    resid = logits - np.einsum("ij,jk->ik", embed, weights)
    residual = float(np.sqrt(np.sum(resid * resid)))
    return SvdModel(
        embed=embed, weights=weights, singular_values=sigma, residual=residual
    )


def svd_student_posterior(model: SvdModel, row: int) -> np.ndarray:
    """Softmax of the reconstructed logit row for one data point."""
    logits = model.embed[row] @ model.weights
    shift = logits - logits.max()
    e = np.exp(shift)
    return e / e.sum()


def teacher_agreement(model: SvdModel, logits: np.ndarray) -> float:
    """Fraction of rows whose reconstructed argmax matches the input argmax."""
    logits = np.asarray(logits, dtype=float)
    recon = np.einsum("ij,jk->ik", model.embed, model.weights)
    return float(np.mean(np.argmax(recon, axis=1) == np.argmax(logits, axis=1)))
