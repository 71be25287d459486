import numpy as np
import pytest

import distillmap as dm

# Desk-scale evaluation run shared by the acceptance criteria that need a
# trained map with mobile embeddings: two weakly-confusable class pairs plus
# a few percent of dark-knowledge outliers put the teacher's mistakes at
# cluster fringes and between clusters.
EVAL_SYNTH = dict(
    classes=10,
    n=2000,
    confusable_pairs=((0, 1, 0.35), (4, 5, 0.3)),
    outlier_fraction=0.03,
    seed=1,
    radius=4.0,
    blob_sd=0.75,
    softness=2.0,
)
EVAL_FIT = dict(
    epochs=600,
    batch_size=500,
    lr_means=1e-2,
    lr_prior=5e-3,
    lr_embed=5e-2,
    mode="joint",
    seed=0,
    deterministic=True,
    init="cluster-center",
)


@pytest.fixture(scope="session")
def eval_table():
    return dm.synth_teacher(**EVAL_SYNTH)


@pytest.fixture(scope="session")
def eval_run(eval_table):
    cfg = dm.TrainConfig(**EVAL_FIT)
    emb, params, trace = dm.train(eval_table, cfg)
    return emb, params, trace


def random_instance(n, k, seed, spread=1.0):
    """Small random (preds, emb, params) triple for oracle comparisons."""
    rng = np.random.default_rng(seed)
    preds = dm.PredictionTable.ingest(rng.dirichlet(np.full(k, 1.5), size=n))
    emb = dm.EmbeddingTable(spread * rng.standard_normal((n, 2)))
    scales = np.broadcast_to(np.sqrt(np.log(k)) * np.eye(2), (k, 2, 2)).copy()
    params = dm.StudentParams(
        means=spread * rng.standard_normal((k, 2)),
        scales=scales,
        dof=2.0,
        prior_logits=rng.standard_normal(k),
    )
    return preds, emb, params
