"""Density-based confidence models and accuracy-data rejection curves.

A fitted model scores each row; higher means the teacher's prediction vector
is less unusual. KDE and the Gaussian mixture operate on the 2-D embeddings,
the Dirichlet mixture directly on the prediction vectors, and the entropy
baseline needs no fitting at all. Scores are log-densities (monotone in the
density, immune to underflow at N = 1e4).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model_core import EmbeddingTable, PredictionTable, predictive_entropy
from .special import digamma, gammaln, inverse_digamma, logsumexp

_KINDS = ("kde", "gmm", "dmm", "entropy")


@dataclass(frozen=True)
class ConfidenceModel:
    kind: str
    bandwidth: Optional[np.ndarray] = None       # kde: (2,) per-axis
    points: Optional[np.ndarray] = None          # kde: reference embeddings
    weights: Optional[np.ndarray] = None         # gmm/dmm: (C,)
    means: Optional[np.ndarray] = None           # gmm: (C, 2)
    covariances: Optional[np.ndarray] = None     # gmm: (C, 2, 2)
    concentrations: Optional[np.ndarray] = None  # dmm: (C, K)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown confidence kind {self.kind!r}")
        if self.kind == "kde":
            if self.bandwidth is None or self.points is None:
                raise ValueError("kde model needs bandwidth and reference points")
            if np.any(np.asarray(self.bandwidth) <= 0):
                raise ValueError("kde bandwidths must be positive")
        if self.kind in ("gmm", "dmm"):
            w = np.asarray(self.weights, dtype=float)
            if abs(w.sum() - 1.0) > 1e-9 or np.any(w < 0):
                raise ValueError("mixture weights must be a distribution")
        if self.kind == "dmm" and np.any(np.asarray(self.concentrations) <= 0):
            raise ValueError("Dirichlet concentrations must be positive")


def entropy_model() -> ConfidenceModel:
    """Negative-predictive-entropy baseline (no fitting)."""
    return ConfidenceModel(kind="entropy")


# ---------------------------------------------------------------------------
# kernel density estimation

def fit_kde(emb: EmbeddingTable, bandwidth=None) -> ConfidenceModel:
    """Gaussian KDE with per-axis Scott bandwidth sigma * N^(-1/6)."""
    pts = emb.points
    if pts.shape[0] < 2:
        raise ValueError("KDE needs at least two points")
    if bandwidth is None:
        sd = pts.std(axis=0, ddof=1)
        h = sd * pts.shape[0] ** (-1.0 / 6.0)
        if np.any(h < 1e-6):
            warnings.warn("zero-variance axis; flooring KDE bandwidth at 1e-6")
            h = np.maximum(h, 1e-6)
    else:
        h = np.asarray(bandwidth, dtype=float)
    return ConfidenceModel(kind="kde", bandwidth=h, points=pts)


#: Floor for log-densities: log of the smallest positive normal double. Keeps
#: scores finite (hence JSON-serializable) when every kernel underflows.
LOG_DENSITY_FLOOR = float(np.log(np.finfo(float).tiny))


def kde_log_density(model: ConfidenceModel, query: np.ndarray) -> np.ndarray:
    ref = model.points
    h = model.bandwidth
    n = ref.shape[0]
    query = np.atleast_2d(np.asarray(query, dtype=float))
    norm = -np.log(2.0 * np.pi * h[0] * h[1]) - np.log(n)
    out = np.empty(query.shape[0])
    # chunked so the (rows x refs) kernel matrix stays small
    step = max(1, int(4e6) // max(n, 1))
    for lo in range(0, query.shape[0], step):
        q = query[lo : lo + step]
        zx = (q[:, 0:1] - ref[None, :, 0]) / h[0]
        zy = (q[:, 1:2] - ref[None, :, 1]) / h[1]
        out[lo : lo + step] = logsumexp(-0.5 * (zx * zx + zy * zy), axis=1)
    return np.maximum(out + norm, LOG_DENSITY_FLOOR)


# ---------------------------------------------------------------------------
# Gaussian mixture on embeddings

def fit_gmm(
    emb: EmbeddingTable,
    components: int,
    seed: int = 0,
    restarts: int = 3,
    max_iter: int = 500,
    tol: float = 1e-6,
    history: list | None = None,
) -> ConfidenceModel:
    """Full-covariance EM with k-means++ seeding; keeps the best of 3 restarts.

    ``history``, when given, collects the per-iteration mean log-likelihood of
    the winning restart (diagnostic hook).
    """
    pts = emb.points
    n = pts.shape[0]
    if not 1 <= components <= n:
        raise ValueError("components must lie in [1, N]")
    best = None
    best_ll = -np.inf
    best_history: list = []
    for restart in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 7, restart]))
        run_history: list = []
        model, ll = _gmm_em(pts, components, rng, max_iter, tol, history=run_history)
        if ll > best_ll:
            best, best_ll, best_history = model, ll, run_history
    if history is not None:
        history.extend(best_history)
    weights, means, covs = best
    return ConfidenceModel(kind="gmm", weights=weights, means=means, covariances=covs)


def _kmeans_pp(pts: np.ndarray, c: int, rng) -> np.ndarray:
    centers = [pts[rng.integers(pts.shape[0])]]
    for _ in range(1, c):
        d2 = np.min(
            [np.sum((pts - ctr) ** 2, axis=1) for ctr in centers], axis=0
        )
        total = d2.sum()
        if total <= 0:
            centers.append(pts[rng.integers(pts.shape[0])])
            continue
        centers.append(pts[rng.choice(pts.shape[0], p=d2 / total)])
    return np.array(centers)


def _floor_cov(cov: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    # raise the smaller eigenvalue of a symmetric 2x2 to the floor
    tr = cov[0, 0] + cov[1, 1]
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    disc = max(tr * tr / 4.0 - det, 0.0)
    lo = tr / 2.0 - np.sqrt(disc)
    if lo < floor:
        cov = cov + (floor - lo) * np.eye(2)
    return cov


def _gmm_log_pdf(pts, means, covs, weights):
    n, c = pts.shape[0], means.shape[0]
    comp = np.empty((n, c))
    for j in range(c):
        cov = covs[j]
        det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
        ia = cov[1, 1] / det
        ib = -cov[0, 1] / det
        ic = cov[0, 0] / det
        dx = pts[:, 0] - means[j, 0]
        dy = pts[:, 1] - means[j, 1]
        quad = ia * dx * dx + 2.0 * ib * dx * dy + ic * dy * dy
        comp[:, j] = -0.5 * quad - 0.5 * np.log(det) - np.log(2.0 * np.pi)
    return comp + np.log(weights)


def _gmm_em(pts, c, rng, max_iter, tol, history=None):
    n = pts.shape[0]
    means = _kmeans_pp(pts, c, rng)
    base_cov = np.cov(pts.T) if n > 1 else np.eye(2)
    base_cov = _floor_cov(np.atleast_2d(base_cov) * 1.0)
    covs = np.array([base_cov.copy() for _ in range(c)])
    weights = np.full(c, 1.0 / c)
    prev = -np.inf
    for _ in range(max_iter):
        logp = _gmm_log_pdf(pts, means, covs, weights)
        row_norm = logsumexp(logp, axis=1)
        ll = float(np.mean(row_norm))
        if history is not None:
            history.append(ll)
        resp = np.exp(logp - np.atleast_1d(row_norm)[:, None])
        mass = resp.sum(axis=0)
        safe = np.maximum(mass, 1e-300)
        weights = mass / mass.sum()
        means = np.einsum("nc,nd->cd", resp, pts) / safe[:, None]
        for j in range(c):
            d = pts - means[j]
            cov = np.einsum("n,nd,ne->de", resp[:, j], d, d) / safe[j]
            covs[j] = _floor_cov(0.5 * (cov + cov.T))
        empty = np.where(mass < 1e-10)[0]
        if empty.size:
            # re-seed empty components from the farthest point
            d2 = np.min(np.sum((pts[:, None, :] - means[None]) ** 2, axis=2), axis=1)
            for j in empty:
                far = int(np.argmax(d2))
                means[j] = pts[far]
                covs[j] = base_cov.copy()
                weights[j] = 1.0 / n
                d2[far] = -1.0
            weights = weights / weights.sum()
        if ll - prev < tol and np.isfinite(prev):
            prev = ll
            break
        prev = ll
    return (weights, means, covs), prev


# ---------------------------------------------------------------------------
# Dirichlet mixture on prediction vectors

def _dirichlet_log_pdf(log_rows: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """log Dirichlet(alpha) density for each row of exp(log_rows); (N, C)."""
    norm = gammaln(alphas.sum(axis=1)) - gammaln(alphas).sum(axis=1)
    return norm[None, :] + np.einsum("nk,ck->nc", log_rows, alphas - 1.0)


#: Dirichlet precision cap: vanishing within-component variance sends the MLE
#: to infinity (the fixed point then crawls upward forever), so clamp there.
_PRECISION_CAP = 1e5


def _minka_update(
    alpha: np.ndarray,
    mean_log: np.ndarray,
    mean_p: np.ndarray,
    mean_p2: np.ndarray,
    max_iter: int = 100,
) -> np.ndarray:
    """Fixed-point MLE for one Dirichlet given weighted sufficient statistics."""
    mean = np.clip(mean_p, 1e-10, None)
    mean = mean / mean.sum()
    var = mean_p2[0] - mean_p[0] ** 2
    if var <= 0 or mean[0] * (1.0 - mean[0]) / var - 1.0 > _PRECISION_CAP:
        return np.clip(mean * _PRECISION_CAP, 1e-3, None)
    alpha = np.clip(alpha, 1e-3, _PRECISION_CAP)
    for _ in range(max_iter):
        new = inverse_digamma(digamma(alpha.sum()) + mean_log)
        new = np.where(np.isfinite(new) & (new > 0), new, 1e-3)
        if new.sum() > _PRECISION_CAP:
            alpha = np.clip(new / new.sum() * _PRECISION_CAP, 1e-3, None)
            break
        new = np.maximum(new, 1e-3)
        if np.max(np.abs(new - alpha)) < 1e-10:
            alpha = new
            break
        alpha = new
    return alpha


def fit_dmm(
    preds: PredictionTable,
    components: int,
    seed: int = 0,
    max_iter: int = 500,
    tol: float = 1e-6,
    history: list | None = None,
) -> ConfidenceModel:
    """EM for a mixture of Dirichlet distributions over prediction rows."""
    n, k = preds.probs.shape
    if not 1 <= components <= n:
        raise ValueError("components must lie in [1, N]")
    log_rows = np.log(preds.probs)
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 11]))
    anchors = preds.probs[rng.choice(n, size=components, replace=False)]
    alphas = np.clip(anchors * k, 1e-3, None)
    weights = np.full(components, 1.0 / components)
    prev = -np.inf
    for _ in range(max_iter):
        logp = _dirichlet_log_pdf(log_rows, alphas) + np.log(weights)
        row_norm = logsumexp(logp, axis=1)
        ll = float(np.mean(row_norm))
        if history is not None:
            history.append(ll)
        resp = np.exp(logp - np.atleast_1d(row_norm)[:, None])
        mass = resp.sum(axis=0)
        mass = np.maximum(mass, 1e-12)
        weights = mass / mass.sum()
        for j in range(components):
            mean_log = np.einsum("n,nk->k", resp[:, j], log_rows) / mass[j]
            mean_p = np.einsum("n,nk->k", resp[:, j], preds.probs) / mass[j]
            mean_p2 = np.einsum("n,nk->k", resp[:, j], preds.probs**2) / mass[j]
            alphas[j] = _minka_update(alphas[j], mean_log, mean_p, mean_p2)
        if ll - prev < tol and np.isfinite(prev):
            prev = ll
            break
        prev = ll
    return ConfidenceModel(kind="dmm", weights=weights, concentrations=alphas)


def dmm_log_density(model: ConfidenceModel, probs: np.ndarray) -> np.ndarray:
    log_rows = np.log(np.asarray(probs, dtype=float))
    logp = _dirichlet_log_pdf(log_rows, model.concentrations) + np.log(model.weights)
    return np.atleast_1d(logsumexp(logp, axis=1))


# ---------------------------------------------------------------------------
# scoring and rejection

def score(
    model: ConfidenceModel,
    emb: Optional[EmbeddingTable] = None,
    preds: Optional[PredictionTable] = None,
) -> np.ndarray:
    """Per-row confidence; higher means more confident."""
    if model.kind in ("kde", "gmm") and emb is None:
        raise ValueError(f"{model.kind} scoring requires embeddings")
    if model.kind in ("dmm", "entropy") and preds is None:
        raise ValueError(f"{model.kind} scoring requires prediction vectors")
    if model.kind == "kde":
        return kde_log_density(model, emb.points)
    if model.kind == "gmm":
        logp = _gmm_log_pdf(emb.points, model.means, model.covariances, model.weights)
        return np.atleast_1d(logsumexp(logp, axis=1))
    if model.kind == "dmm":
        return dmm_log_density(model, preds.probs)
    return -np.atleast_1d(predictive_entropy(preds.probs))


@dataclass(frozen=True)
class RejectionCurve:
    fractions: np.ndarray
    accuracies: np.ndarray

    def __post_init__(self):
        fr = np.asarray(self.fractions, dtype=float)
        acc = np.asarray(self.accuracies, dtype=float)
        if fr.shape != acc.shape or fr.ndim != 1:
            raise ValueError("fractions and accuracies must be aligned vectors")
        if np.any(np.diff(fr) <= 0):
            raise ValueError("fractions must be strictly increasing")
        if fr[-1] != 1.0 or fr[0] <= 0.0:
            raise ValueError("fractions must lie in (0, 1] and end at 1.0")
        if np.any((acc < 0) | (acc > 1)):
            raise ValueError("accuracies must lie in [0, 1]")
        object.__setattr__(self, "fractions", fr)
        object.__setattr__(self, "accuracies", acc)


DEFAULT_GRID = tuple(np.round(np.linspace(0.05, 1.0, 20), 8))


def rejection_curve(scores, labels, preds_argmax, grid=DEFAULT_GRID) -> RejectionCurve:
    """Accuracy on the ceil(f*N) highest-score rows for each fraction f.

    Ties are broken by ascending row index, so constant scores keep the row
    prefix.
    """
    scores = np.asarray(scores, dtype=float)
    if labels is None:
        raise ValueError("rejection curves require true labels")
    labels = np.asarray(labels)
    preds_argmax = np.asarray(preds_argmax)
    n = scores.shape[0]
    if labels.shape != (n,) or preds_argmax.shape != (n,):
        raise ValueError("scores, labels and predictions must be aligned")
    order = np.lexsort((np.arange(n), -scores))
    correct = (preds_argmax == labels)[order]
    cum = np.cumsum(correct)
    fractions = np.asarray(grid, dtype=float)
    # round before ceil so 0.9 * N does not spill to N*0.9 + 1 in binary
    kept = np.ceil(np.round(fractions * n, 9)).astype(int)
    accs = cum[kept - 1] / kept
    return RejectionCurve(fractions=fractions, accuracies=accs)
