import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from i2s import ensemble
from i2s.ensemble import TrainParams
from oracles import best_single_threshold_accuracy


def _toy_separable(rng, n=40, d=5):
    """Two classes split cleanly by a threshold on feature 0."""
    X = rng.normal(size=(n, d))
    X[: n // 2, 0] = rng.uniform(-2.0, -1.0, size=n // 2)
    X[n // 2 :, 0] = rng.uniform(1.0, 2.0, size=n - n // 2)
    labels = ["neg"] * (n // 2) + ["pos"] * (n - n // 2)
    return X, labels


def _multiclass(rng, n_per=15, k=3, d=6, spread=0.25):
    X, labels = [], []
    for c in range(k):
        center = np.zeros(d)
        center[c % d] = 3.0 * (c + 1)
        X.append(rng.normal(size=(n_per, d)) * spread + center)
        labels += [f"c{c}"] * n_per
    return np.vstack(X), labels


class TestTrain:
    def test_separable_toy_reaches_perfect_accuracy(self, rng):
        X, labels = _toy_separable(rng)
        assert best_single_threshold_accuracy(X, labels) == 1.0  # oracle premise
        model = ensemble.train(X, labels, TrainParams(rounds=5, max_depth=3))
        predicted, _ = model.predict_batch(X)
        assert predicted == labels

    def test_deterministic_bytes(self, rng):
        X, labels = _multiclass(rng)
        params = TrainParams(rounds=8, max_depth=4, seed=3)
        a = ensemble.to_bytes(ensemble.train(X, labels, params))
        b = ensemble.to_bytes(ensemble.train(X, labels, params))
        assert a == b

    def test_single_class_rejected(self, rng):
        X = rng.normal(size=(6, 3))
        with pytest.raises(ValueError, match="need ≥2 classes"):
            ensemble.train(X, ["A"] * 6)

    def test_ragged_rows_rejected(self):
        with pytest.raises(ValueError, match="ragged|2-D"):
            ensemble.train([[1.0, 2.0], [1.0]], ["a", "b"])

    def test_too_few_rows(self):
        with pytest.raises(ValueError, match="at least 2"):
            ensemble.train([[1.0]], ["a"])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            ensemble.train([[1.0], [np.nan]], ["a", "b"])

    def test_label_count_mismatch(self, rng):
        with pytest.raises(ValueError, match="labels"):
            ensemble.train(rng.normal(size=(4, 2)), ["a", "b"])

    def test_subsample_deterministic(self, rng):
        X, labels = _multiclass(rng)
        params = TrainParams(rounds=6, subsample_fraction=0.7, seed=11)
        a = ensemble.to_bytes(ensemble.train(X, labels, params))
        b = ensemble.to_bytes(ensemble.train(X, labels, params))
        assert a == b
        # and still learns the clusters
        model = ensemble.train(X, labels, params)
        predicted, _ = model.predict_batch(X)
        assert np.mean([p == t for p, t in zip(predicted, labels)]) > 0.9

    def test_training_loss_non_increasing(self, rng):
        X, labels = _multiclass(rng, spread=1.2)
        params = TrainParams(rounds=20, max_depth=3)
        model = ensemble.train(X, labels, params)
        codes = {c: i for i, c in enumerate(model.classes)}
        y = np.array([codes[lab] for lab in labels])
        losses = []
        for r in range(len(model.trees) + 1):
            scores = model.decision_scores(X, num_rounds=r)
            z = scores - scores.max(axis=1, keepdims=True)
            logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
            losses.append(-logp[np.arange(len(y)), y].mean())
        diffs = np.diff(losses)
        assert (diffs <= 1e-9).all(), f"loss increased: {losses}"

    def test_min_leaf_respected(self, rng):
        X, labels = _toy_separable(rng, n=20)
        model = ensemble.train(
            X, labels, TrainParams(rounds=3, max_depth=4, min_leaf_samples=5)
        )
        for round_trees in model.trees:
            for tree in round_trees:
                # every split must send >= 5 rows each way at the root
                if tree.feature[0] >= 0:
                    left = (X[:, tree.feature[0]] < tree.threshold[0]).sum()
                    assert 5 <= left <= len(X) - 5


class TestPredict:
    def test_scores_sum_to_one(self, rng):
        X, labels = _multiclass(rng)
        model = ensemble.train(X, labels, TrainParams(rounds=4))
        label, scores = ensemble.predict(model, X[0])
        assert sum(scores.values()) == pytest.approx(1.0, abs=1e-9)
        assert label in model.classes

    def test_training_rows_recovered(self, rng):
        X, labels = _multiclass(rng)
        model = ensemble.train(X, labels, TrainParams(rounds=10, max_depth=4))
        for i in (0, 17, 44):
            label, _ = ensemble.predict(model, X[i])
            assert label == labels[i]

    def test_wrong_row_length(self, rng):
        X, labels = _toy_separable(rng)
        model = ensemble.train(X, labels, TrainParams(rounds=2))
        with pytest.raises(ValueError, match="≠ feature count"):
            ensemble.predict(model, np.zeros(X.shape[1] + 1))

    def test_exact_tie_takes_lowest_class(self):
        model = ensemble.EnsembleModel(
            classes=("a", "b", "c"), trees=[], params=TrainParams(), feature_count=2
        )
        label, scores = ensemble.predict(model, [0.0, 0.0])
        assert label == "a"
        assert all(s == pytest.approx(1 / 3) for s in scores.values())

    @given(seed=st.integers(0, 10_000), col=st.integers(0, 4))
    @settings(max_examples=10)
    def test_monotone_transform_invariance(self, seed, col):
        """Splits are order-based, so warping one column monotonically in both
        train and test leaves labels unchanged on every row whose position in
        the training order is unambiguous (training rows and out-of-range
        rows; points interior to a gap between training values have no
        order-defined side)."""
        rng = np.random.default_rng(seed)
        X, labels = _multiclass(rng, n_per=10, spread=1.0)
        outside = rng.normal(size=(20, X.shape[1])) * 2.0
        lo, hi = X[:, col].min(), X[:, col].max()
        half = len(outside) // 2
        outside[:half, col] = lo - rng.uniform(0.5, 3.0, size=half)
        outside[half:, col] = hi + rng.uniform(0.5, 3.0, size=len(outside) - half)
        X_eval = np.vstack([X, outside])
        params = TrainParams(rounds=6, max_depth=3)

        def transform(m):
            out = m.copy()
            out[:, col] = np.exp(out[:, col] / 2.0)
            return out

        base = ensemble.train(X, labels, params)
        warped = ensemble.train(transform(X), labels, params)
        base_pred, _ = base.predict_batch(X_eval)
        warped_pred, _ = warped.predict_batch(transform(X_eval))
        assert base_pred == warped_pred


class TestPersistence:
    def test_round_trip_predictions_identical(self, rng, tmp_path):
        X, labels = _multiclass(rng)
        model = ensemble.train(X, labels, TrainParams(rounds=6))
        path = tmp_path / "model.i2s"
        size = ensemble.save(model, path)
        assert size == path.stat().st_size > 0
        loaded = ensemble.load(path)
        rows = rng.normal(size=(100, X.shape[1])) * 3.0
        a_labels, a_scores = model.predict_batch(rows)
        b_labels, b_scores = loaded.predict_batch(rows)
        assert a_labels == b_labels
        assert np.array_equal(a_scores, b_scores)  # bit-identical
        assert loaded.params == model.params
        assert loaded.classes == model.classes

    def test_bad_magic(self, rng, tmp_path):
        X, labels = _toy_separable(rng, n=10)
        model = ensemble.train(X, labels, TrainParams(rounds=1))
        data = bytearray(ensemble.to_bytes(model))
        data[0] ^= 0xFF
        with pytest.raises(ValueError, match="bad magic"):
            ensemble.from_bytes(bytes(data))

    def test_truncated(self, rng):
        X, labels = _toy_separable(rng, n=10)
        model = ensemble.train(X, labels, TrainParams(rounds=1))
        data = ensemble.to_bytes(model)
        with pytest.raises(ValueError, match="truncated"):
            ensemble.from_bytes(data[: len(data) // 2])

    def test_unsupported_version(self, rng):
        X, labels = _toy_separable(rng, n=10)
        model = ensemble.train(X, labels, TrainParams(rounds=1))
        data = bytearray(ensemble.to_bytes(model))
        data[4] = 99
        with pytest.raises(ValueError, match="version"):
            ensemble.from_bytes(bytes(data))


class TestParams:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"rounds": 0},
            {"max_depth": 0},
            {"learning_rate": 0.0},
            {"learning_rate": 1.5},
            {"subsample_fraction": 0.0},
            {"min_leaf_samples": 0},
            {"min_split_gain": -1.0},
            {"seed": -1},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            TrainParams(**kwargs)

    def test_defaults(self):
        p = TrainParams()
        assert (p.rounds, p.max_depth, p.learning_rate) == (100, 6, 0.3)
        assert (p.min_split_gain, p.min_leaf_samples) == (0.0, 1)
        assert (p.subsample_fraction, p.seed) == (1.0, 42)
