"""Synthetic teacher: a desk-scale stand-in for a real classifier.

Latent 2-D class centers sit on a circle; rows are Gaussian draws around
their label's center and the prediction vector is a softmax over negative
squared center distances. Confusable pairs pull centers together; outlier
rows move some probability mass onto a random non-adjacent class, producing
rows whose runner-up class is unusual for their cluster.
"""

from __future__ import annotations

import numpy as np

from .model_core import PredictionTable


def synth_teacher(
    classes: int,
    n: int,
    confusable_pairs=(),
    outlier_fraction: float = 0.0,
    seed: int = 0,
    radius: float = 4.0,
    blob_sd: float = 0.55,
    softness: float = 2.0,
) -> PredictionTable:
    """Generate N prediction rows over K classes, deterministic per seed."""
    if classes < 2:
        raise ValueError("at least two classes are required")
    if not 0.0 <= outlier_fraction <= 0.1:
        raise ValueError("outlier_fraction must lie in [0, 0.1]")
    for pair in confusable_pairs:
        i, j, strength = pair
        if not 0.0 < strength < 1.0:
            raise ValueError("confusable strengths must lie in (0, 1)")
        if not (0 <= i < classes and 0 <= j < classes and i != j):
            raise ValueError("confusable pairs must name two distinct classes")

    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 23]))
    angles = 2.0 * np.pi * np.arange(classes) / classes
    centers = radius * np.stack((np.cos(angles), np.sin(angles)), axis=1)
    for i, j, strength in confusable_pairs:
        mid = 0.5 * (centers[i] + centers[j])
        centers[i] = centers[i] + strength * (mid - centers[i])
        centers[j] = centers[j] + strength * (mid - centers[j])

    labels = rng.permutation(np.arange(n) % classes)
    latents = centers[labels] + blob_sd * rng.standard_normal((n, 2))
    d2 = np.sum((latents[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    logits = -d2 / softness
    shift = logits - logits.max(axis=1, keepdims=True)
    probs = np.exp(shift)
    probs /= probs.sum(axis=1, keepdims=True)

    n_out = int(round(outlier_fraction * n))
    if n_out:
        rows = rng.choice(n, size=n_out, replace=False)
        for i in rows:
            a = labels[i]
            ring = np.arange(classes)
            gap = np.minimum(np.abs(ring - a), classes - np.abs(ring - a))
            candidates = ring[gap >= 2]
            if candidates.size == 0:
                continue
            b = int(rng.choice(candidates))
            w = rng.uniform(0.02, 0.3)
            probs[i] *= 1.0 - w
            probs[i, b] += w

    return PredictionTable.ingest(
        probs,
        labels=labels,
        logits=np.log(np.maximum(probs, 1e-300)),
        row_ids=tuple(str(i) for i in range(n)),
    )
