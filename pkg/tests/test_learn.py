import numpy as np
import pytest

from lib.learn import (
    ModelSpec, evaluate, fit_classifier, learning_curve, load_model, mlp_init,
    mlp_loss_and_grads, mlp_train, permutation_importance, predict, rfc_train, save_model,
    standardize_apply, standardize_fit, svm_train, train_val_split, write_curve_csv,
)


def blobs(n_per_class=60, seed=0, labels=(3, 4, 5)):
    """Well separated Gaussian clusters on a line, one per label."""
    rng = np.random.default_rng(seed)
    X, y = [], []
    for i, label in enumerate(labels):
        centre = np.array([4.0 * i, -2.0 * i])
        X.append(centre + 0.3 * rng.normal(size=(n_per_class, 2)))
        y.extend([label] * n_per_class)
    return np.vstack(X), np.asarray(y)


def test_standardizer_zero_scale_column():
    X = np.array([[1.0, 5.0], [3.0, 5.0]])
    s = standardize_fit(X)
    out = standardize_apply(s, X)
    np.testing.assert_allclose(out[:, 0], [-1.0, 1.0])
    np.testing.assert_array_equal(out[:, 1], [0.0, 0.0])


def test_svm_separates_stacked_clusters():
    X, y = blobs()
    spec = ModelSpec('svm', {'C': 10.0, 'epochs': 100, 'scheme': 'multiclass'})
    model = fit_classifier(spec, X, y, seed=0)
    assert evaluate(model, X, y).accuracy >= 0.98


def test_svm_defaults_to_one_vs_rest():
    X, y = blobs(labels=(1, 2))
    model = fit_classifier(ModelSpec('svm', {'epochs': 50}), X, y, seed=0)
    assert model.params['scheme'] == 'ovr'
    assert evaluate(model, X, y).accuracy >= 0.98
    with pytest.raises(ValueError, match='scheme'):
        svm_train(X, y, scheme='crammer')


def test_svm_is_deterministic():
    X, y = blobs()
    a = svm_train(X, y, seed=4, epochs=20)
    b = svm_train(X, y, seed=4, epochs=20)
    np.testing.assert_array_equal(a.params['W'], b.params['W'])


def test_rfc_fits_training_data():
    X, y = blobs()
    model = rfc_train(X, y, n_trees=15, seed=1)
    assert evaluate(model, X, y).accuracy >= 0.98
    again = rfc_train(X, y, n_trees=15, seed=1)
    np.testing.assert_array_equal(predict(model, X), predict(again, X))


def test_rfc_independent_of_jobs():
    X, y = blobs(n_per_class=20)
    serial = rfc_train(X, y, n_trees=6, seed=2, n_jobs=1)
    parallel = rfc_train(X, y, n_trees=6, seed=2, n_jobs=2)
    for a, b in zip(serial.params['trees'], parallel.params['trees']):
        np.testing.assert_array_equal(a['threshold'], b['threshold'])
        np.testing.assert_array_equal(a['label'], b['label'])


def test_mlp_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    layers = mlp_init([3, 5, 4], rng)
    X = rng.normal(size=(7, 3))
    y_idx = rng.integers(0, 4, size=7)
    _, grads = mlp_loss_and_grads(layers, X, y_idx)
    h = 1e-6
    for i, layer in enumerate(layers):
        for key in ('W', 'b'):
            flat = layer[key].reshape(-1)
            for j in range(0, flat.size, 3):
                old = flat[j]
                flat[j] = old + h
                up = mlp_loss_and_grads(layers, X, y_idx)[0]
                flat[j] = old - h
                down = mlp_loss_and_grads(layers, X, y_idx)[0]
                flat[j] = old
                numeric = (up - down) / (2 * h)
                analytic = grads[i][key].reshape(-1)[j]
                assert numeric == pytest.approx(analytic, rel=1e-5, abs=1e-7)


def test_mlp_loss_decreases():
    X, y = blobs()
    history = []
    mlp_train(X, y, hidden=(8,), seed=0, epochs=30, lr=1e-2, history=history)
    assert len(history) == 30
    assert history[-1] < history[0]


def test_mlp_learns_clusters():
    X, y = blobs()
    spec = ModelSpec('mlp', {'hidden': (10, 30, 10), 'epochs': 150, 'lr': 1e-2})
    model = fit_classifier(spec, X, y, seed=0)
    assert evaluate(model, X, y).accuracy >= 0.95


def test_training_needs_two_classes():
    X = np.zeros((4, 2))
    with pytest.raises(ValueError, match='at least 2 classes'):
        svm_train(X, np.array([3, 3, 3, 3]))


def test_unknown_model_kind():
    X, y = blobs()
    with pytest.raises(ValueError, match='unknown model kind'):
        fit_classifier(ModelSpec('knn'), X, y)


def test_predict_feature_length_mismatch():
    X, y = blobs()
    model = svm_train(X, y, epochs=5)
    with pytest.raises(ValueError, match='feature-length mismatch'):
        predict(model, np.zeros((2, 3)))


def test_evaluate_confusion():
    X, y = blobs(labels=(2, 3))
    model = svm_train(X, y, epochs=30)
    report = evaluate(model, X, y, seed=9)
    assert report.labels == [2, 3]
    assert report.confusion.sum() == y.size
    np.testing.assert_allclose(report.by_true.sum(axis=1), [1.0, 1.0])
    data = report.as_dict()
    assert data['seed'] == 9
    assert data['accuracy'] == report.accuracy


def test_train_val_split():
    tr, va = train_val_split(10, 0.7, seed=0)
    assert len(tr) == 7 and len(va) == 3
    assert sorted(np.concatenate([tr, va]).tolist()) == list(range(10))
    again = train_val_split(10, 0.7, seed=0)
    np.testing.assert_array_equal(tr, again[0])
    with pytest.raises(ValueError, match='train fraction'):
        train_val_split(10, 1.0, seed=0)


def test_learning_curve(tmp_path):
    X, y = blobs(n_per_class=30)
    curve = learning_curve(ModelSpec('svm', {'epochs': 10}), X, y, [0.3, 0.7], n_repeats=2, seed=0)
    assert [p.train_frac for p in curve] == [0.3, 0.7]
    assert all(0.0 <= p.val_mean <= 1.0 for p in curve)
    path = tmp_path / 'curve.csv'
    write_curve_csv(path, curve)
    assert path.read_text().splitlines()[0] == 'train_frac,train_mean,train_std,val_mean,val_std'


def test_permutation_importance_finds_informative_feature():
    rng = np.random.default_rng(0)
    X = np.column_stack([np.repeat([0.0, 5.0], 40), rng.normal(size=80)])
    y = np.repeat([1, 2], 40)
    model = fit_classifier(ModelSpec('svm', {'epochs': 40}), X, y)
    scores = permutation_importance(model, X, y, seed=0, n_repeats=3)
    assert scores[0] > scores[1]


@pytest.mark.parametrize('spec', [
    ModelSpec('svm', {'epochs': 10}),
    ModelSpec('rfc', {'n_trees': 5}),
    ModelSpec('mlp', {'hidden': (6,), 'epochs': 5}),
])
def test_save_and_load_model(tmp_path, spec):
    X, y = blobs(n_per_class=20)
    model = fit_classifier(spec, X, y, seed=0)
    path = tmp_path / 'model.json'
    save_model(path, model)
    loaded = load_model(path)
    assert loaded.kind == model.kind
    np.testing.assert_array_equal(predict(loaded, X), predict(model, X))


def test_load_model_rejects_other_versions(tmp_path):
    path = tmp_path / 'model.json'
    path.write_text('{"format_version": 99}')
    with pytest.raises(ValueError, match='format version'):
        load_model(path)
    path.write_text('not json')
    with pytest.raises(ValueError, match='cannot read model file'):
        load_model(path)
