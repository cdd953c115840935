"""Linear modality probe over token-level encoder states."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..errors import ArgumentError


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class ModalityProbe(ClassifierMixin, BaseEstimator):
    """Logistic regression fit by full-batch gradient descent.

    Features are standardized with training statistics. Labels are 1 for
    audio tokens and 0 for text tokens.
    """

    def __init__(self, learning_rate=0.5, n_iter=500, l2=0.0):
        self.learning_rate = learning_rate
        self.n_iter = n_iter
        self.l2 = l2

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = unique_labels(y)
        if len(self.classes_) != 2:
            raise ArgumentError(f"the probe needs two classes, got {list(self.classes_)}")
        t = (y == self.classes_[1]).astype(np.float64)
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)
        self.scale_[self.scale_ == 0] = 1.0
        Z = (X - self.mean_) / self.scale_
        w = np.zeros(Z.shape[1])
        b = 0.0
        n = len(t)
        for _ in range(self.n_iter):
            err = _sigmoid(Z @ w + b) - t
            w -= self.learning_rate * (Z.T @ err / n + self.l2 * w)
            b -= self.learning_rate * err.mean()
        self.coef_, self.intercept_ = w, b
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return ((X - self.mean_) / self.scale_) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p = _sigmoid(self.decision_function(X))
        return np.stack([1.0 - p, p], axis=1)

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]


def true_rates(y_true, y_pred):
    """(TPR%, TNR%) with label 1 as the positive class."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    pos, neg = y_true == 1, y_true == 0
    tpr = 100.0 * (y_pred[pos] == 1).mean() if pos.any() else 0.0
    tnr = 100.0 * (y_pred[neg] == 0).mean() if neg.any() else 0.0
    return float(tpr), float(tnr)


def modality_probe(states, labels, test_fraction=0.25, seed=0, **probe_params):
    """Train on a seeded split of tokens and report held-out (TPR%, TNR%)."""
    states = np.asarray(states, dtype=np.float64)
    labels = np.asarray(labels).astype(int)
    if len(np.unique(labels)) < 2:
        raise ArgumentError("modality probe needs both audio and text tokens")
    if not 0 < test_fraction < 1:
        raise ArgumentError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    order = np.random.default_rng([seed, 59]).permutation(len(labels))
    n_test = max(1, int(round(test_fraction * len(labels))))
    test, train = order[:n_test], order[n_test:]
    probe = ModalityProbe(**probe_params).fit(states[train], labels[train])
    return true_rates(labels[test], probe.predict(states[test]))
