"""
Classifiers that predict the dimension of a variety from its period features.

Everything is written against numpy: a linear SVM trained by subgradient
descent on the hinge loss, a random forest of CART trees, and a ReLU
multilayer perceptron trained with Adam. Training is deterministic given
the data, the hyperparameters and the seed.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
KINDS = ('svm', 'rfc', 'mlp')


@dataclass(eq=False)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, X):
        X = np.asarray(X, dtype=np.float64)
        safe = np.where(self.scale > 0, self.scale, 1.0)
        out = (X - self.mean) / safe
        out[:, self.scale == 0] = 0.0
        return out


@dataclass(eq=False)
class ClassifierModel:
    kind: str
    classes: np.ndarray
    params: dict
    n_features: int
    standardizer: Standardizer = None


@dataclass(eq=False)
class EvalReport:
    accuracy: float
    labels: list
    confusion: np.ndarray
    by_true: np.ndarray
    by_predicted: np.ndarray
    seed: int = None

    def as_dict(self):
        return {
            'accuracy': self.accuracy,
            'labels': [int(x) for x in self.labels],
            'confusion': self.confusion.tolist(),
            'confusion_by_true': self.by_true.tolist(),
            'confusion_by_predicted': self.by_predicted.tolist(),
            'seed': self.seed,
        }


@dataclass(frozen=True)
class ModelSpec:
    """A classifier kind plus the keyword arguments of its trainer."""

    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CurvePoint:
    train_frac: float
    train_mean: float
    train_std: float
    val_mean: float
    val_std: float


def standardize_fit(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError('standardize_fit needs a non-empty 2-d array')
    return Standardizer(mean=X.mean(axis=0), scale=X.std(axis=0))


def standardize_apply(s, X):
    return s.apply(X)


def _encode_labels(y):
    y = np.asarray(y)
    classes, y_idx = np.unique(y, return_inverse=True)
    if classes.size < 2:
        raise ValueError('training needs at least 2 classes, got {}'.format(classes.tolist()))
    return classes, y_idx


# --- linear SVM -------------------------------------------------------------

def _hinge_gradient(W, Xb, y_idx, scheme):
    scores = Xb @ W
    n = Xb.shape[0]
    rows = np.arange(n)
    if scheme == 'ovr':
        targets = -np.ones_like(scores)
        targets[rows, y_idx] = 1.0
        active = (1.0 - targets * scores) > 0
        coeff = -targets * active
    else:
        margins = 1.0 + scores - scores[rows, y_idx][:, None]
        margins[rows, y_idx] = 0.0
        active = margins > 0
        coeff = active.astype(np.float64)
        coeff[rows, y_idx] = -active.sum(axis=1)
    return Xb.T @ coeff / n


def svm_train(X, y, C=10.0, seed=0, epochs=200, batch_size=64, lr=0.5, scheme='ovr'):
    """
    Linear SVM on the L2-regularised hinge loss.

    Minimises ||W||^2 / (2 C n) + mean hinge by seeded mini-batch subgradient
    steps lr / sqrt(epoch + 1), averaging the iterates of the second half of
    training. scheme 'multiclass' uses the joint hinge over all class scores,
    'ovr' trains one binary hinge per class. Prediction is the argmax score.
    """
    X = np.asarray(X, dtype=np.float64)
    classes, y_idx = _encode_labels(y)
    n, f = X.shape
    if scheme not in ('multiclass', 'ovr'):
        raise ValueError('unknown SVM scheme {!r}'.format(scheme))
    Xb = np.hstack([X, np.ones((n, 1))])
    lam = 1.0 / (C * n)
    rng = np.random.default_rng(seed)
    W = np.zeros((f + 1, classes.size))
    W_avg = np.zeros_like(W)
    averaged = 0
    for epoch in range(epochs):
        step = lr / math.sqrt(epoch + 1)
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            grad = _hinge_gradient(W, Xb[batch], y_idx[batch], scheme)
            grad[:-1] += lam * W[:-1]
            W -= step * grad
            if epoch >= epochs // 2:
                W_avg += W
                averaged += 1
    W_final = W_avg / averaged if averaged else W
    return ClassifierModel(kind='svm', classes=classes, params={'W': W_final, 'scheme': scheme},
                           n_features=f)


def _svm_scores(model, X):
    W = model.params['W']
    return np.hstack([X, np.ones((X.shape[0], 1))]) @ W


# --- random forest ----------------------------------------------------------

def _best_split(X, y_idx, n_classes, features):
    """Gini-optimal (feature, threshold, impurity) over candidate features, or None."""
    n = y_idx.size
    onehot = np.eye(n_classes)[y_idx]
    best = None
    for feat in features:
        order = np.argsort(X[:, feat], kind='stable')
        values = X[order, feat]
        left_counts = np.cumsum(onehot[order], axis=0)[:-1]
        valid = values[1:] > values[:-1]
        if not valid.any():
            continue
        n_left = np.arange(1, n)
        n_right = n - n_left
        right_counts = left_counts[-1] + onehot[order][-1] - left_counts
        gini_left = 1.0 - np.sum((left_counts / n_left[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right_counts / n_right[:, None]) ** 2, axis=1)
        impurity = (n_left * gini_left + n_right * gini_right) / n
        impurity[~valid] = np.inf
        pos = int(np.argmin(impurity))
        if best is None or impurity[pos] < best[2]:
            threshold = 0.5 * (values[pos] + values[pos + 1])
            best = (int(feat), float(threshold), float(impurity[pos]))
    return best


def _grow_tree(X, y_idx, n_classes, max_features, rng, max_depth=None, min_samples_split=2):
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(None)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(y_idx.size), 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = np.bincount(y_idx[idx], minlength=n_classes)
        value[node] = counts
        if (counts.max() == idx.size or idx.size < min_samples_split
                or (max_depth is not None and depth >= max_depth)):
            continue
        features = rng.choice(X.shape[1], size=max_features, replace=False)
        split = _best_split(X[idx], y_idx[idx], n_classes, features)
        if split is None:
            continue
        feat, thr, _ = split
        mask = X[idx, feat] <= thr
        feature[node], threshold[node] = feat, thr
        left[node], right[node] = new_node(), new_node()
        stack.append((right[node], idx[~mask], depth + 1))
        stack.append((left[node], idx[mask], depth + 1))
    return {
        'feature': np.asarray(feature, dtype=np.int64),
        'threshold': np.asarray(threshold, dtype=np.float64),
        'left': np.asarray(left, dtype=np.int64),
        'right': np.asarray(right, dtype=np.int64),
        'label': np.asarray([int(np.argmax(v)) for v in value], dtype=np.int64),
    }


def _fit_tree(X, y_idx, n_classes, max_features, seed_seq, max_depth):
    rng = np.random.default_rng(seed_seq)
    sample = rng.integers(0, y_idx.size, size=y_idx.size)
    return _grow_tree(X[sample], y_idx[sample], n_classes, max_features, rng, max_depth=max_depth)


def _tree_predict(tree, X):
    node = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        feat = tree['feature'][node]
        internal = feat >= 0
        if not internal.any():
            return tree['label'][node]
        rows = np.flatnonzero(internal)
        go_left = X[rows, feat[internal]] <= tree['threshold'][node[internal]]
        node[rows] = np.where(go_left, tree['left'][node[internal]], tree['right'][node[internal]])


def rfc_train(X, y, n_trees=300, seed=0, max_depth=None, n_jobs=1):
    """
    Random forest of bootstrap-bagged CART trees.

    Splits minimise Gini impurity over ceil(sqrt(n_features)) random features;
    each tree draws from its own spawned seed, so the forest does not depend
    on n_jobs. Prediction is a majority vote.
    """
    X = np.asarray(X, dtype=np.float64)
    classes, y_idx = _encode_labels(y)
    max_features = max(1, math.ceil(math.sqrt(X.shape[1])))
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    trees = Parallel(n_jobs=n_jobs)(
        delayed(_fit_tree)(X, y_idx, classes.size, max_features, s, max_depth) for s in seeds
    )
    return ClassifierModel(kind='rfc', classes=classes, params={'trees': list(trees)},
                           n_features=X.shape[1])


def _rfc_votes(model, X):
    votes = np.zeros((X.shape[0], model.classes.size))
    rows = np.arange(X.shape[0])
    for tree in model.params['trees']:
        votes[rows, _tree_predict(tree, X)] += 1.0
    return votes


# --- multilayer perceptron --------------------------------------------------

def relu(x):
    return np.maximum(0.0, x)


def softmax(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def mlp_init(sizes, rng):
    """He-initialised weights for layer sizes [n_in, h_1, ..., n_out]."""
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        layers.append({'W': rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_in, fan_out)),
                       'b': np.zeros(fan_out)})
    return layers


def mlp_forward(layers, X):
    activations = [X]
    for layer in layers[:-1]:
        activations.append(relu(activations[-1] @ layer['W'] + layer['b']))
    logits = activations[-1] @ layers[-1]['W'] + layers[-1]['b']
    return activations, softmax(logits)


def mlp_loss_and_grads(layers, X, y_idx):
    """Mean cross-entropy and its gradients with respect to every W and b."""
    n = X.shape[0]
    activations, probs = mlp_forward(layers, X)
    rows = np.arange(n)
    loss = float(-np.mean(np.log(probs[rows, y_idx] + 1e-300)))
    delta = probs.copy()
    delta[rows, y_idx] -= 1.0
    delta /= n
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        grads[i] = {'W': activations[i].T @ delta, 'b': delta.sum(axis=0)}
        if i > 0:
            delta = (delta @ layers[i]['W'].T) * (activations[i] > 0)
    return loss, grads


def mlp_train(X, y, hidden=(10, 30, 10), seed=0, epochs=200, lr=1e-3, batch_size=64,
              history=None):
    """
    ReLU network with softmax output, trained with Adam on cross-entropy.

    Args:
        history: optional list that receives the full-data loss after each epoch
    """
    X = np.asarray(X, dtype=np.float64)
    classes, y_idx = _encode_labels(y)
    rng = np.random.default_rng(seed)
    layers = mlp_init([X.shape[1], *hidden, classes.size], rng)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m = [{k: np.zeros_like(v) for k, v in layer.items()} for layer in layers]
    v = [{k: np.zeros_like(val) for k, val in layer.items()} for layer in layers]
    t = 0
    n = X.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            _, grads = mlp_loss_and_grads(layers, X[batch], y_idx[batch])
            t += 1
            for layer, g, mi, vi in zip(layers, grads, m, v):
                for key in ('W', 'b'):
                    mi[key] = beta1 * mi[key] + (1.0 - beta1) * g[key]
                    vi[key] = beta2 * vi[key] + (1.0 - beta2) * g[key] ** 2
                    m_hat = mi[key] / (1.0 - beta1 ** t)
                    v_hat = vi[key] / (1.0 - beta2 ** t)
                    layer[key] -= lr * m_hat / (np.sqrt(v_hat) + eps)
        if history is not None:
            history.append(mlp_loss_and_grads(layers, X, y_idx)[0])
    return ClassifierModel(kind='mlp', classes=classes, params={'layers': layers},
                           n_features=X.shape[1])


# --- shared entry points ----------------------------------------------------

def train(spec, X, y, seed=0):
    if spec.kind == 'svm':
        return svm_train(X, y, seed=seed, **spec.params)
    if spec.kind == 'rfc':
        return rfc_train(X, y, seed=seed, **spec.params)
    if spec.kind == 'mlp':
        return mlp_train(X, y, seed=seed, **spec.params)
    raise ValueError('unknown model kind {!r}, expected one of {}'.format(spec.kind, KINDS))


def fit_classifier(spec, X, y, seed=0):
    """Standardise on X, train on the standardised features, keep the Standardizer."""
    s = standardize_fit(X)
    model = train(spec, standardize_apply(s, X), y, seed=seed)
    model.standardizer = s
    return model


def predict(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ValueError('feature-length mismatch: model expects {}, got {}'
                         .format(model.n_features, X.shape[1]))
    if model.standardizer is not None:
        X = standardize_apply(model.standardizer, X)
    if model.kind == 'svm':
        scores = _svm_scores(model, X)
    elif model.kind == 'rfc':
        scores = _rfc_votes(model, X)
    elif model.kind == 'mlp':
        scores = mlp_forward(model.params['layers'], X)[1]
    else:
        raise ValueError('unknown model kind {!r}'.format(model.kind))
    return model.classes[np.argmax(scores, axis=1)]


def evaluate(model, X, y, seed=None):
    """Accuracy and confusion matrices (rows: true label, columns: predicted)."""
    y = np.asarray(y)
    predicted = predict(model, X)
    labels = np.union1d(model.classes, np.unique(y))
    index = {label: i for i, label in enumerate(labels.tolist())}
    confusion = np.zeros((labels.size, labels.size), dtype=np.int64)
    for t, p in zip(y.tolist(), predicted.tolist()):
        confusion[index[t], index[p]] += 1
    row_sums = confusion.sum(axis=1, keepdims=True)
    col_sums = confusion.sum(axis=0, keepdims=True)
    by_true = np.divide(confusion, row_sums, out=np.zeros(confusion.shape), where=row_sums > 0)
    by_predicted = np.divide(confusion, col_sums, out=np.zeros(confusion.shape), where=col_sums > 0)
    accuracy = float(np.trace(confusion) / y.size)
    return EvalReport(accuracy=accuracy, labels=labels.tolist(), confusion=confusion,
                      by_true=by_true, by_predicted=by_predicted, seed=seed)


def train_val_split(n, train_frac, seed):
    """Seeded shuffle split into (train indices, validation indices)."""
    if not 0 < train_frac < 1:
        raise ValueError('train fraction must lie in (0, 1), got {}'.format(train_frac))
    order = np.random.default_rng(seed).permutation(n)
    cut = max(1, min(n - 1, int(round(train_frac * n))))
    return order[:cut], order[cut:]


def learning_curve(spec, X, y, train_fracs, n_repeats=5, seed=0):
    """Mean and standard deviation of train/validation accuracy per fraction."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    curve = []
    for frac in train_fracs:
        train_acc, val_acc = [], []
        for r in range(n_repeats):
            tr, va = train_val_split(y.size, frac, seed + r)
            model = fit_classifier(spec, X[tr], y[tr], seed=seed + r)
            train_acc.append(evaluate(model, X[tr], y[tr]).accuracy)
            val_acc.append(evaluate(model, X[va], y[va]).accuracy)
        curve.append(CurvePoint(train_frac=float(frac),
                                train_mean=float(np.mean(train_acc)), train_std=float(np.std(train_acc)),
                                val_mean=float(np.mean(val_acc)), val_std=float(np.std(val_acc))))
        logger.info('learning_curve: frac=%.3f val=%.4f', frac, curve[-1].val_mean)
    return curve


def write_curve_csv(path, curve):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['train_frac', 'train_mean', 'train_std', 'val_mean', 'val_std'])
        for point in curve:
            writer.writerow([point.train_frac, repr(point.train_mean), repr(point.train_std),
                             repr(point.val_mean), repr(point.val_std)])


def permutation_importance(model, X, y, seed=0, n_repeats=10):
    """Mean accuracy drop when one feature column is shuffled."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    base = evaluate(model, X, y).accuracy
    rng = np.random.default_rng(seed)
    importances = np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        drops = []
        for _ in range(n_repeats):
            shuffled = X.copy()
            shuffled[:, j] = rng.permutation(X[:, j])
            drops.append(base - evaluate(model, shuffled, y).accuracy)
        importances[j] = float(np.mean(drops))
    return importances


# --- persistence ------------------------------------------------------------

def _to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return {'__array__': obj.tolist(), 'dtype': str(obj.dtype)}
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_to_jsonable(v) for v in obj]
    return obj


def _from_jsonable(obj):
    if isinstance(obj, dict):
        if '__array__' in obj:
            return np.asarray(obj['__array__'], dtype=obj['dtype'])
        return {k: _from_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_from_jsonable(v) for v in obj]
    return obj


def save_model(path, model):
    payload = {
        'format_version': MODEL_FORMAT_VERSION,
        'kind': model.kind,
        'classes': model.classes.tolist(),
        'n_features': model.n_features,
        'params': _to_jsonable(model.params),
        'standardizer': None if model.standardizer is None else {
            'mean': model.standardizer.mean.tolist(),
            'scale': model.standardizer.scale.tolist(),
        },
    }
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f)


def load_model(path):
    try:
        with open(path, encoding='utf-8') as f:
            payload = json.load(f)
    except (OSError, ValueError) as err:
        raise ValueError('cannot read model file {}: {}'.format(path, err)) from err
    version = payload.get('format_version')
    if version != MODEL_FORMAT_VERSION:
        raise ValueError('unsupported model format version {!r}'.format(version))
    s = payload.get('standardizer')
    standardizer = None if s is None else Standardizer(mean=np.asarray(s['mean']),
                                                       scale=np.asarray(s['scale']))
    return ClassifierModel(kind=payload['kind'], classes=np.asarray(payload['classes']),
                           params=_from_jsonable(payload['params']),
                           n_features=int(payload['n_features']), standardizer=standardizer)
