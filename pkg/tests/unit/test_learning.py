"""
Tests for the plaintext learner: datasets, logistic regression, AUC and
cross-validation.
"""

import itertools
import math

import numpy as np
import pytest

from spamcraft.exceptions import DivergenceError
from spamcraft.features import SparseBinaryVector
from spamcraft.learning import (
    LabeledDataset,
    Model,
    accuracy,
    auc,
    cross_validate,
    gradient,
    load_model,
    log_likelihood,
    majority_baseline,
    save_model,
    sigmoid_prob,
    synthetic_dataset,
    train_batch,
    train_dense,
    train_online,
    update_weights,
)
from spamcraft.learning.cross_validation import assign_folds
from spamcraft.learning.logistic import model_from_bytes, model_to_bytes


def _dataset(rows, labels):
    return LabeledDataset.from_dense(np.array(rows, dtype=float), labels)


class TestLabeledDataset:
    """Dataset container behavior."""

    def test_from_dense_and_csr(self):
        ds = _dataset([[1, 0, 1], [0, 1, 0]], [1, -1])
        assert ds.n == 2
        assert ds.dim == 3
        assert ds.to_dense().tolist() == [[1, 0, 1], [0, 1, 0]]
        assert ds.class_counts() == (1, 1)

    def test_labels_must_be_signs(self):
        with pytest.raises(ValueError):
            _dataset([[1, 0]], [0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            LabeledDataset([SparseBinaryVector([0], 3)], [1], 4)

    def test_blocks_and_split(self):
        ds = synthetic_dataset(25, 6, seed=1)
        sizes = [b.n for b in ds.blocks(10)]
        assert sizes == [10, 10, 5]
        parts = ds.split(3)
        assert sum(p.n for p in parts) == 25
        with pytest.raises(ValueError):
            list(ds.blocks(0))

    def test_concat(self):
        a = synthetic_dataset(5, 4, seed=1)
        b = synthetic_dataset(3, 4, seed=2)
        joined = a.concat(b)
        assert joined.n == 8
        assert joined.labels.tolist() == a.labels.tolist() + b.labels.tolist()
        with pytest.raises(ValueError):
            a.concat(synthetic_dataset(3, 5, seed=2))


class TestLogistic:
    """Likelihood, gradient and update rules."""

    def test_sigmoid_at_zero(self):
        x = SparseBinaryVector([0, 2], 3)
        assert sigmoid_prob(np.zeros(3), x, 1) == 0.5
        assert sigmoid_prob(np.zeros(3), x, -1) == 0.5

    def test_sigmoid_saturates(self):
        x = SparseBinaryVector([0], 1)
        assert sigmoid_prob(np.array([1000.0]), x, 1) == pytest.approx(1.0)

    def test_sigmoid_matches_formula(self):
        rng = np.random.default_rng(2)
        w = rng.normal(size=5)
        x = rng.integers(0, 2, size=5).astype(float)
        expected = 1.0 / (1.0 + math.exp(-(-1) * float(w @ x)))
        assert sigmoid_prob(w, x, -1) == pytest.approx(expected)

    def test_log_likelihood_at_zero(self):
        ds = synthetic_dataset(4, 3, seed=0)
        assert log_likelihood(np.zeros(3), ds) == pytest.approx(-4 * math.log(2))

    def test_log_likelihood_single_instance(self):
        ds = _dataset([[1, 1, 0]], [1])
        w = np.array([0.3, -0.1, 5.0])
        assert log_likelihood(w, ds) == pytest.approx(-math.log(1 + math.exp(-0.2)))

    def test_gradient_at_zero(self):
        ds = synthetic_dataset(20, 5, seed=3)
        expected = 0.5 * (ds.labels[:, None] * ds.to_dense()).sum(axis=0)
        assert np.allclose(gradient(np.zeros(5), ds), expected)

    def test_gradient_of_empty_dataset(self):
        assert gradient(np.ones(4), LabeledDataset.empty(4)).tolist() == [0.0] * 4

    def test_gradient_finite_differences(self):
        ds = synthetic_dataset(30, 6, seed=4)
        w = np.random.default_rng(5).normal(scale=0.3, size=6)
        h = 1e-5
        numeric = np.array([
            (log_likelihood(w + h * e, ds) - log_likelihood(w - h * e, ds)) / (2 * h)
            for e in np.eye(6)
        ])
        assert np.allclose(gradient(w, ds), numeric, rtol=1e-6, atol=1e-8)

    def test_gradient_additivity(self):
        a = synthetic_dataset(12, 5, seed=6)
        b = synthetic_dataset(9, 5, seed=7)
        w = np.linspace(-0.5, 0.5, 5)
        assert np.allclose(gradient(w, a.concat(b)), gradient(w, a) + gradient(w, b))

    def test_update_rule(self):
        w = np.array([1.0, -2.0])
        g = np.array([0.5, 0.5])
        assert update_weights(w, g, 0.1).tolist() == pytest.approx([1.05, -1.95])
        assert update_weights(w, g, 0.1, 0.25).tolist() == pytest.approx([1.55, -2.95])


class TestTraining:
    """Batch, online and dense training."""

    def test_separable_pair(self):
        ds = _dataset([[1, 0], [0, 1]], [1, -1])
        model = train_batch(ds, eta=0.1, max_iters=100)
        predictions = [model.classify(x) for x in ds.vectors]
        assert accuracy(predictions, ds.labels) == 1.0

    def test_hand_computed_step(self):
        ds = _dataset([[1, 0, 1]], [1])
        model = train_online([ds], eta=0.5)
        assert model.w.tolist() == pytest.approx([0.25, 0.0, 0.25])

    def test_hand_computed_step_from_nonzero_start(self):
        ds = _dataset([[1, 0, 1]], [1])
        w0 = np.array([0.2, 0.0, -0.1])
        model = train_online([ds], eta=0.5, w0=w0)
        step = 0.5 / (1 + math.exp(0.1))
        assert model.w.tolist() == pytest.approx([0.2 + step, 0.0, -0.1 + step])

    def test_single_block_equals_one_batch_iteration(self):
        ds = synthetic_dataset(40, 8, seed=8)
        online = train_online(ds.blocks(ds.n), eta=0.01)
        batch = train_batch(ds, eta=0.01, max_iters=1)
        assert np.array_equal(online.w, batch.w)

    def test_unregularized_matches_plain_rule(self):
        ds = synthetic_dataset(20, 4, seed=9)
        model = train_batch(ds, eta=0.01, reg_lambda=0.0, max_iters=1)
        assert np.allclose(model.w, 0.01 * gradient(np.zeros(4), ds))

    def test_ascent_is_monotone(self):
        ds = synthetic_dataset(50, 10, seed=10)
        values = []
        train_batch(ds, eta=1e-3, max_iters=100, tol=0.0,
                    callback=lambda _, w: values.append(log_likelihood(w, ds)))
        assert len(values) == 100
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_block_size_sweep(self):
        ds = synthetic_dataset(2400, 30, seed=11)
        train, test = ds.subset(range(2000)), ds.subset(range(2000, 2400))
        for size in (1, 100, 1000):
            model = train_online(train.blocks(size), eta=0.001)
            assert auc(model.scores(test), test.labels) > 0.8

    def test_empty_stream_needs_dimension(self):
        assert train_online([], dim=3).w.tolist() == [0.0, 0.0, 0.0]
        with pytest.raises(ValueError):
            train_online([])

    def test_divergence_detected(self):
        ds = _dataset([[1]], [1])
        with pytest.raises(DivergenceError):
            train_batch(ds, eta=1e308, reg_lambda=1e308, max_iters=5)

    def test_nonpositive_step_size(self):
        with pytest.raises(ValueError):
            train_batch(synthetic_dataset(4, 2, seed=0), eta=0.0)

    def test_dense_training_matches_sparse(self):
        ds = synthetic_dataset(30, 5, seed=12)
        dense = train_dense(ds.to_dense(), ds.labels, eta=0.01, block_size=10, passes=2)
        blocks = (b for _ in range(2) for b in ds.blocks(10))
        sparse = train_online(blocks, eta=0.01)
        assert np.allclose(dense.w, sparse.w)


class TestModel:
    """Model invariants and the binary format."""

    def test_invariants(self):
        with pytest.raises(ValueError):
            Model(np.zeros(2), eta=0.0)
        with pytest.raises(ValueError):
            Model(np.zeros(2), reg_lambda=-1.0)
        with pytest.raises(DivergenceError):
            Model(np.array([np.nan]))

    def test_zero_margin_is_ham(self):
        assert Model.zeros(3).classify(SparseBinaryVector([0, 1], 3)) == -1

    def test_binary_format(self):
        model = Model(np.array([1.5, -0.25]), eta=0.001, reg_lambda=0.01)
        data = model_to_bytes(model)
        assert data.startswith(b"2 0.001 0.01\n")
        assert data[-8:] == np.array([-0.25], dtype='>f8').tobytes()
        restored = model_from_bytes(data)
        assert np.array_equal(restored.w, model.w)
        assert (restored.eta, restored.reg_lambda) == (0.001, 0.01)

    def test_truncated_body(self):
        with pytest.raises(ValueError):
            model_from_bytes(b"3 0.001 0.0\n" + b"\x00" * 8)

    def test_model_file(self, tmp_path):
        model = Model(np.arange(4, dtype=float), eta=0.5)
        restored = load_model(save_model(model, tmp_path / "m" / "model.bin"))
        assert np.array_equal(restored.w, model.w)


class TestMetrics:
    """AUC, accuracy and the majority baseline."""

    def test_perfect_ranking(self):
        assert auc([0.1, 0.4, 0.35, 0.8], [-1, 1, -1, 1]) == 1.0

    def test_constant_scores(self):
        assert auc([3.0] * 6, [1, -1, 1, -1, -1, 1]) == 0.5

    def test_matches_pairwise_concordance(self):
        rng = np.random.default_rng(13)
        scores = np.round(rng.normal(size=200), 1)
        labels = np.where(rng.random(200) < 0.4, 1, -1)
        pos, neg = scores[labels == 1], scores[labels == -1]
        concordant = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
        assert auc(scores, labels) == pytest.approx(concordant / (pos.size * neg.size))

    def test_single_class(self):
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1, 1])

    def test_majority_baseline(self):
        assert majority_baseline([1, 1, 1, -1]) == 0.75
        assert majority_baseline([-1, -1, 1]) == pytest.approx(2 / 3)
        assert majority_baseline([]) == 0.0

    def test_accuracy(self):
        assert accuracy([1, -1, 1], [1, 1, 1]) == pytest.approx(2 / 3)


class TestCrossValidation:
    """m-fold selection of the regularization constant."""

    def test_single_lambda(self):
        ds = synthetic_dataset(60, 5, seed=14)
        result = cross_validate(ds, 3, [0.01], seed=1, max_iters=20)
        assert result.best_lambda == 0.01
        assert len(result.table) == 3

    def test_symmetric_duplicated_folds(self):
        base = synthetic_dataset(20, 5, seed=15)
        ds = base.concat(base)
        result = cross_validate(ds, 2, [0.0], fold_ids=[0] * 20 + [1] * 20, max_iters=20)
        fold_aucs = result.table['auc'].tolist()
        assert fold_aucs[0] == pytest.approx(fold_aucs[1])

    def test_selection_matches_exhaustive_oracle(self):
        ds = synthetic_dataset(80, 6, seed=16, noise=0.1)
        grid = [0.0, 0.001, 0.05]
        result = cross_validate(ds, 4, grid, seed=3, max_iters=30)
        ids = assign_folds(ds.labels, 4, 3)
        means = {}
        for reg_lambda in grid:
            scores = []
            for fold in range(4):
                train = ds.subset(np.flatnonzero(ids != fold))
                test = ds.subset(np.flatnonzero(ids == fold))
                model = train_batch(train, reg_lambda=reg_lambda, max_iters=30)
                scores.append(auc(model.scores(test), test.labels))
            means[reg_lambda] = np.mean(scores)
        best = max(grid, key=lambda lam: (means[lam], -lam))
        assert result.best_lambda == best

    def test_fold_assignment_is_stratified_and_seeded(self):
        labels = np.array([1] * 10 + [-1] * 20)
        ids = assign_folds(labels, 5, seed=9)
        assert np.array_equal(ids, assign_folds(labels, 5, seed=9))
        for fold in range(5):
            assert np.sum(labels[ids == fold] == 1) == 2

    def test_custom_trainer(self):
        ds = synthetic_dataset(40, 4, seed=17)
        calls = []

        def trainer(train_set, reg_lambda):
            calls.append(reg_lambda)
            return Model.zeros(train_set.dim)

        result = cross_validate(ds, 2, [0.1, 0.2], seed=0, trainer=trainer)
        assert sorted(calls) == [0.1, 0.1, 0.2, 0.2]
        assert result.best_lambda == 0.1

    def test_invalid_arguments(self):
        ds = synthetic_dataset(20, 3, seed=18)
        with pytest.raises(ValueError):
            cross_validate(ds, 1, [0.0])
        with pytest.raises(ValueError):
            cross_validate(ds, 2, [])
