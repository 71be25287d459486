import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import distillmap as dm
from distillmap.model_core import PROB_EPS, class_log_joints


def simplex_rows(k=4, n=1):
    return st.lists(
        st.lists(st.floats(1e-6, 1.0), min_size=k, max_size=k),
        min_size=n,
        max_size=n,
    ).map(lambda rows: np.array(rows) / np.array(rows).sum(axis=1, keepdims=True))


# ---------------------------------------------------------------------------
# t log-density

def test_t_log_density_at_mean_closed_form():
    # at y = mu with Sigma = s^2 I, nu = 2 the density is 1 / (2 pi s^2)
    for s2 in (0.25, 1.0, 3.7):
        got = dm.t_log_density([1.0, -2.0], [1.0, -2.0], s2 * np.eye(2), 2.0)
        assert got == pytest.approx(np.log(1.0 / (2.0 * np.pi * s2)), abs=1e-12)


def test_t_log_density_log10_scale_value():
    got = dm.t_log_density([0.0, 0.0], [0.0, 0.0], np.log(10.0) * np.eye(2), 2.0)
    assert got == pytest.approx(-np.log(2.0 * np.pi * np.log(10.0)), abs=1e-12)
    assert np.exp(got) == pytest.approx(0.069130, abs=5e-5)
    assert got == pytest.approx(-2.671, abs=1e-3)


def test_t_log_density_symmetric_about_mean():
    mu = np.array([0.7, -1.1])
    scale = np.array([[2.0, 0.3], [0.3, 1.0]])
    rng = np.random.default_rng(0)
    for _ in range(20):
        delta = rng.standard_normal(2)
        a = dm.t_log_density(mu + delta, mu, scale, 2.0)
        b = dm.t_log_density(mu - delta, mu, scale, 2.0)
        assert a == pytest.approx(b, abs=1e-12)


def test_t_log_density_grid_integrates_to_one():
    xs = np.arange(-40.0, 40.0, 0.05)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack((gx.ravel(), gy.ravel()), axis=1)
    vals = np.exp(dm.t_log_density(pts, [0.0, 0.0], np.eye(2), 2.0))
    integral = vals.sum() * 0.05 * 0.05
    assert integral == pytest.approx(1.0, abs=1e-2)


def test_t_log_density_rejects_bad_scale():
    with pytest.raises(ValueError):
        dm.t_log_density([0, 0], [0, 0], np.array([[1.0, 2.0], [2.0, 1.0]]), 2.0)
    with pytest.raises(ValueError):
        dm.t_log_density([0, 0], [0, 0], np.array([[1.0, 0.5], [0.4, 1.0]]), 2.0)
    with pytest.raises(ValueError):
        dm.t_log_density([0, 0], [0, 0], np.eye(2), -1.0)


# ---------------------------------------------------------------------------
# student posterior

def _params(means, prior=None, scale=1.0, dof=2.0):
    means = np.asarray(means, dtype=float)
    k = means.shape[0]
    return dm.StudentParams(
        means=means,
        scales=np.broadcast_to(scale * np.eye(2), (k, 2, 2)).copy(),
        dof=dof,
        prior_logits=np.zeros(k) if prior is None else np.asarray(prior, float),
    )


def test_posterior_equidistant_is_half():
    params = _params([[-1.0, 0.0], [1.0, 0.0]])
    post = dm.student_posterior([0.0, 3.3], params)
    assert np.allclose(post, [0.5, 0.5], atol=1e-12)


def test_posterior_argmax_at_own_mean():
    rng = np.random.default_rng(5)
    means = rng.standard_normal((6, 2)) * 3
    params = _params(means)
    for k in range(6):
        post = dm.student_posterior(means[k], params)
        assert np.argmax(post) == k


def test_posterior_matches_extended_precision():
    rng = np.random.default_rng(11)
    params = _params(rng.standard_normal((3, 2)), prior=rng.standard_normal(3))
    y = rng.standard_normal(2)
    post = dm.student_posterior(y, params)
    joints = class_log_joints(y, params)
    with mpmath.workdps(50):
        exps = [mpmath.exp(mpmath.mpf(v)) for v in joints]
        total = sum(exps)
        oracle = np.array([float(e / total) for e in exps])
    assert np.max(np.abs(post - oracle)) < 1e-12
    assert abs(post.sum() - 1.0) < 1e-12


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_posterior_is_simplex(seed):
    rng = np.random.default_rng(seed)
    params = _params(rng.standard_normal((4, 2)) * 2, prior=rng.standard_normal(4))
    pts = rng.standard_normal((8, 2)) * 5
    post = dm.student_posterior(pts, params)
    assert np.all(post >= 0)
    assert np.allclose(post.sum(axis=1), 1.0, atol=1e-12)


def test_posterior_uniform_prior_identical_scales_argmax():
    rng = np.random.default_rng(7)
    means = rng.standard_normal((5, 2)) * 4
    params = _params(means)
    post = dm.student_posterior(means, params)
    assert np.array_equal(np.argmax(post, axis=1), np.arange(5))


# ---------------------------------------------------------------------------
# temperature

def test_temperature_identity_at_one():
    rng = np.random.default_rng(2)
    rows = rng.dirichlet(np.ones(6), size=10)
    assert np.allclose(dm.apply_temperature(rows, 1.0), rows, atol=1e-12)


def test_temperature_limit_uniform():
    out = dm.apply_temperature(np.array([0.9, 0.1]), 1e6)
    assert np.allclose(out, [0.5, 0.5], atol=1e-5)


def test_temperature_hand_value():
    out = dm.apply_temperature(np.array([0.8, 0.2]), 2.0)
    assert np.allclose(out, [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)


def test_temperature_below_one_rejected():
    with pytest.raises(ValueError):
        dm.apply_temperature(np.array([0.5, 0.5]), 0.5)


@given(simplex_rows(k=5, n=3), st.floats(1.0, 50.0))
@settings(max_examples=40, deadline=None)
def test_temperature_keeps_simplex(rows, t):
    out = dm.apply_temperature(np.maximum(rows, PROB_EPS), t)
    assert np.allclose(out.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(out > 0)


# ---------------------------------------------------------------------------
# subset mask

def test_subset_mask_hand_value():
    mask = dm.SubsetMask.from_indices([0, 1], 3)
    out = dm.apply_subset_mask(np.array([0.5, 0.3, 0.2]), mask)
    assert np.allclose(out, [0.625, 0.375], atol=1e-12)


def test_subset_mask_all_true_identity():
    mask = dm.SubsetMask(np.ones(4, dtype=bool))
    row = np.array([0.4, 0.3, 0.2, 0.1])
    assert np.allclose(dm.apply_subset_mask(row, mask), row, atol=1e-15)


def test_subset_mask_one_hot():
    mask = dm.SubsetMask.from_indices([0, 2], 3)
    out = dm.apply_subset_mask(np.array([1.0, 0.0, 0.0]), mask)
    assert np.allclose(out, [1.0, 0.0], atol=0)


def test_subset_mask_degenerate_mass():
    mask = dm.SubsetMask.from_indices([1, 2], 3)
    with pytest.raises(ValueError):
        dm.apply_subset_mask(np.array([1.0, 1e-12, 1e-12]), mask)


def test_subset_mask_needs_two_classes():
    with pytest.raises(ValueError):
        dm.SubsetMask.from_indices([1], 4)


def test_subset_table_remaps_labels_and_slices_logits():
    rng = np.random.default_rng(1)
    raw = rng.dirichlet(np.ones(4), size=6)
    base = dm.PredictionTable.ingest(raw)
    table = dm.PredictionTable.ingest(
        base.probs, labels=np.array([0, 2, 2, 0, 3, 0]), logits=np.log(base.probs)
    )
    mask = dm.SubsetMask.from_indices([0, 2, 3], 4)
    sub = dm.subset_table(table, mask)
    assert sub.n_classes == 3
    assert sub.labels.tolist() == [0, 1, 1, 0, 2, 0]
    # softmax of sliced logits equals the renormalized probability subset
    sliced = np.exp(sub.logits)
    sliced /= sliced.sum(axis=1, keepdims=True)
    kept = table.probs[:, [0, 2, 3]]
    kept /= kept.sum(axis=1, keepdims=True)
    assert np.allclose(sliced, kept, atol=1e-9)


def test_subset_table_drops_unmappable_labels():
    probs = np.full((3, 3), 1.0 / 3.0)
    table = dm.PredictionTable.ingest(probs, labels=np.array([0, 1, 2]))
    sub = dm.subset_table(table, dm.SubsetMask.from_indices([0, 1], 3))
    assert sub.labels is None


# ---------------------------------------------------------------------------
# entropy

def test_entropy_one_hot_zero():
    assert dm.predictive_entropy(np.array([1.0, 0.0, 0.0])) == 0.0


def test_entropy_uniform_max():
    row = np.full(10, 0.1)
    assert dm.predictive_entropy(row) == pytest.approx(np.log(10.0), abs=1e-12)


def test_entropy_permutation_exact():
    row = np.array([0.95, 0.03, 0.02, 0.0, 0.0])
    perm = np.array([0.0, 0.02, 0.95, 0.0, 0.03])
    assert dm.predictive_entropy(row) == dm.predictive_entropy(perm)


@given(simplex_rows(k=6), st.permutations(list(range(6))))
@settings(max_examples=40, deadline=None)
def test_entropy_permutation_invariant_property(rows, perm):
    row = rows[0]
    assert dm.predictive_entropy(row) == dm.predictive_entropy(row[list(perm)])


def test_entropy_bounds():
    rng = np.random.default_rng(9)
    rows = rng.dirichlet(np.ones(7), size=50)
    h = dm.predictive_entropy(rows)
    assert np.all(h >= 0.0) and np.all(h <= np.log(7.0) + 1e-12)


# ---------------------------------------------------------------------------
# table invariants

def test_ingest_clamps_and_normalizes():
    table = dm.PredictionTable.ingest(np.array([[1.0, 0.0], [0.4, 0.6]]))
    assert np.all(table.probs >= PROB_EPS)
    assert np.allclose(table.probs.sum(axis=1), 1.0, atol=1e-9)


def test_ingest_idempotent_bitwise():
    rng = np.random.default_rng(21)
    table = dm.PredictionTable.ingest(rng.dirichlet((0.2, 0.4, 0.1), size=50))
    again = dm.PredictionTable.ingest(table.probs)
    assert np.array_equal(again.probs, table.probs)


def test_ingest_rejects_negative():
    with pytest.raises(ValueError):
        dm.PredictionTable.ingest(np.array([[1.1, -0.1]]))


def test_table_field_lengths_validated():
    probs = np.full((3, 2), 0.5)
    with pytest.raises(ValueError):
        dm.PredictionTable.ingest(probs, labels=np.array([0, 1]))
    with pytest.raises(ValueError):
        dm.PredictionTable.ingest(probs, logits=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        dm.PredictionTable.ingest(probs, row_ids=("a",))
    with pytest.raises(ValueError):
        dm.PredictionTable.ingest(probs, labels=np.array([0, 1, 5]))


def test_student_params_validation():
    ok = np.broadcast_to(np.eye(2), (2, 2, 2)).copy()
    dm.StudentParams(np.zeros((2, 2)), ok, 2.0, np.zeros(2))
    bad_sym = ok.copy()
    bad_sym[0, 0, 1] = 1e-6
    with pytest.raises(ValueError):
        dm.StudentParams(np.zeros((2, 2)), bad_sym, 2.0, np.zeros(2))
    bad_pd = ok.copy()
    bad_pd[1] = -np.eye(2)
    with pytest.raises(ValueError):
        dm.StudentParams(np.zeros((2, 2)), bad_pd, 2.0, np.zeros(2))
    with pytest.raises(ValueError):
        dm.StudentParams(np.zeros((2, 2)), ok, 0.0, np.zeros(2))


def test_types_are_immutable():
    table = dm.PredictionTable.ingest(np.full((2, 2), 0.5))
    with pytest.raises(ValueError):
        table.probs[0, 0] = 0.9
    emb = dm.EmbeddingTable(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        emb.points[0, 0] = 1.0


def test_embedding_rejects_nonfinite():
    with pytest.raises(ValueError):
        dm.EmbeddingTable(np.array([[0.0, np.inf]]))


def test_student_marginal_positive():
    params = _params([[0.0, 0.0], [2.0, 0.0]])
    vals = dm.student_marginal(np.array([[0.0, 0.0], [10.0, 10.0]]), params)
    assert np.all(vals > 0)


@given(simplex_rows(k=5), st.sets(st.integers(0, 4), min_size=2))
@settings(max_examples=40, deadline=None)
def test_subset_mask_preserves_ratios(rows, keep):
    row = np.maximum(rows[0], 1e-6)
    row = row / row.sum()
    mask = dm.SubsetMask.from_indices(sorted(keep), 5)
    out = dm.apply_subset_mask(row, mask)
    assert out.sum() == pytest.approx(1.0, abs=1e-12)
    kept = row[mask.keep]
    # renormalization preserves pairwise ratios of the kept entries
    assert np.allclose(out * kept.sum(), kept, atol=1e-12)
