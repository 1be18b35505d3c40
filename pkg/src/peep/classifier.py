"""Feed-forward softmax classifier trained with Adam, written on plain numpy.

The network is rectified-linear hidden layers plus a softmax output, trained
by mini-batch cross-entropy with an L2 penalty. Defaults mirror a common
library MLP configuration: hidden widths (512, 1024, 2014, 1024, 512), batch
size 100, step 0.001 with first/second moment decays 0.9/0.999, penalty
0.0001, at most 200 epochs. Training halts early once the epoch loss has
failed to improve by ``tol`` for ``n_iter_no_change`` consecutive epochs.

Given the same data and ``random_state``, fit is bit-for-bit reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .exceptions import DimensionMismatch, EmptyInput, SingleClass
from .rng import derive_rng
from .validation import as_matrix, check_fitted


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class MlpClassifier(BaseEstimator, ClassifierMixin):
    """Multilayer perceptron over perturbed coefficient vectors.

    ``validation_fraction`` is consulted only when ``early_stopping`` is True;
    otherwise the stop rule watches the training loss, and the full training
    set is used.
    """

    def __init__(
        self,
        hidden_layer_sizes=(512, 1024, 2014, 1024, 512),
        batch_size: int = 100,
        learning_rate: float = 0.001,
        beta_1: float = 0.9,
        beta_2: float = 0.999,
        adam_epsilon: float = 1e-8,
        alpha: float = 0.0001,
        max_epochs: int = 200,
        tol: float = 1e-4,
        n_iter_no_change: int = 10,
        shuffle: bool = True,
        early_stopping: bool = False,
        validation_fraction: float = 0.1,
        random_state: int = 0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta_1 = beta_1
        self.beta_2 = beta_2
        self.adam_epsilon = adam_epsilon
        self.alpha = alpha
        self.max_epochs = max_epochs
        self.tol = tol
        self.n_iter_no_change = n_iter_no_change
        self.shuffle = shuffle
        self.early_stopping = early_stopping
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    # -- forward / backward -------------------------------------------------

    def _forward(self, X, coefs, intercepts):
        """Activations per layer; index 0 is the input."""
        activations = [X]
        for l, (W, b) in enumerate(zip(coefs, intercepts)):
            Z = activations[-1] @ W + b
            last = l == len(coefs) - 1
            activations.append(_softmax(Z) if last else _relu(Z))
        return activations

    def _loss_and_grads(self, X, y_idx, coefs, intercepts):
        """Cross-entropy + L2 loss and its parameter gradients for one batch."""
        nb = X.shape[0]
        activations = self._forward(X, coefs, intercepts)
        probs = activations[-1]
        loss = -np.log(np.clip(probs[np.arange(nb), y_idx], 1e-300, None)).mean()
        loss += (0.5 * self.alpha / nb) * sum(float((W * W).sum()) for W in coefs)

        grads_W = [None] * len(coefs)
        grads_b = [None] * len(coefs)
        delta = probs.copy()
        delta[np.arange(nb), y_idx] -= 1.0
        delta /= nb
        for l in range(len(coefs) - 1, -1, -1):
            grads_W[l] = activations[l].T @ delta + (self.alpha / nb) * coefs[l]
            grads_b[l] = delta.sum(axis=0)
            if l > 0:
                delta = (delta @ coefs[l].T) * (activations[l] > 0)
        return loss, grads_W, grads_b

    # -- training -----------------------------------------------------------

    def fit(self, X, y):
        X = as_matrix(X)
        y = np.asarray(y)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DimensionMismatch("y must be 1-D and aligned with X rows")
        classes, y_idx = np.unique(y, return_inverse=True)
        if classes.shape[0] < 2:
            raise SingleClass(f"need >= 2 classes, got {classes.shape[0]}")
        self.classes_ = classes
        n_classes = classes.shape[0]
        dims = [X.shape[1], *self.hidden_layer_sizes, n_classes]

        rng = derive_rng(self.random_state, "mlp")
        coefs, intercepts = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            coefs.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            intercepts.append(rng.uniform(-bound, bound, size=fan_out))

        X_val = y_val = None
        if self.early_stopping and 0.0 < self.validation_fraction < 1.0:
            n_val = max(1, int(round(self.validation_fraction * X.shape[0])))
            order = rng.permutation(X.shape[0])
            val, tr = order[:n_val], order[n_val:]
            X_val, y_val = X[val], y_idx[val]
            X, y_idx = X[tr], y_idx[tr]

        params = coefs + intercepts
        m_state = [np.zeros_like(p) for p in params]
        v_state = [np.zeros_like(p) for p in params]
        step = 0

        n = X.shape[0]
        batch = min(self.batch_size, n)
        best = np.inf
        stagnant = 0
        self.loss_curve_ = []
        for _epoch in range(self.max_epochs):
            order = rng.permutation(n) if self.shuffle else np.arange(n)
            accumulated = 0.0
            for start in range(0, n, batch):
                idx = order[start : start + batch]
                loss, gW, gb = self._loss_and_grads(X[idx], y_idx[idx], coefs, intercepts)
                accumulated += loss * idx.shape[0]
                step += 1
                lr_t = (
                    self.learning_rate
                    * np.sqrt(1.0 - self.beta_2**step)
                    / (1.0 - self.beta_1**step)
                )
                for p, g, m, v in zip(params, gW + gb, m_state, v_state):
                    m *= self.beta_1
                    m += (1.0 - self.beta_1) * g
                    v *= self.beta_2
                    v += (1.0 - self.beta_2) * g * g
                    p -= lr_t * m / (np.sqrt(v) + self.adam_epsilon)
            epoch_loss = accumulated / n
            self.loss_curve_.append(epoch_loss)

            if self.early_stopping and X_val is not None:
                score = float(
                    (np.argmax(self._forward(X_val, coefs, intercepts)[-1], 1) == y_val).mean()
                )
                metric = -score  # smaller is better, mirrors the loss rule
            else:
                metric = epoch_loss
            if metric > best - self.tol:
                stagnant += 1
            else:
                stagnant = 0
            best = min(best, metric)
            if stagnant >= self.n_iter_no_change:
                break

        self.coefs_ = coefs
        self.intercepts_ = intercepts
        self.n_features_in_ = dims[0]
        self.layer_dims_ = dims
        self.n_epochs_ = len(self.loss_curve_)
        return self

    # -- inference ----------------------------------------------------------

    def _check_input(self, X):
        check_fitted(self, "coefs_")
        X = as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(
                f"X has {X.shape[1]} features, model expects {self.n_features_in_}"
            )
        return X

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_input(X)
        return self._forward(X, self.coefs_, self.intercepts_)[-1]

    def predict(self, X) -> np.ndarray:
        # argmax takes the first maximum, i.e. ties go to the lowest class.
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


@dataclass(frozen=True)
class EvalReport:
    """Accuracy, per-class precision/recall/F1, support-weighted averages."""

    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    confusion: np.ndarray  # rows = truth, columns = prediction


def evaluate(model, X, y) -> EvalReport:
    """Score ``model.predict`` against integer labels.

    Classes absent from both truth and predictions keep zero scores and zero
    weight in the weighted averages.
    """
    X = as_matrix(X)
    y = np.asarray(y)
    if y.shape[0] == 0:
        raise EmptyInput("empty test set")
    preds = model.predict(X)
    classes = np.asarray(model.classes_)
    if not np.isin(y, classes).all():
        raise DimensionMismatch("test labels contain classes unknown to the model")
    k = classes.shape[0]
    y_idx = np.searchsorted(classes, y)
    p_idx = np.searchsorted(classes, preds)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (y_idx, p_idx), 1)

    truth_count = confusion.sum(axis=1)
    pred_count = confusion.sum(axis=0)
    hits = np.diag(confusion).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(pred_count > 0, hits / pred_count, 0.0)
        recall = np.where(truth_count > 0, hits / truth_count, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2.0 * precision * recall / denom, 0.0)
    total = truth_count.sum()
    weights = truth_count / total
    return EvalReport(
        accuracy=float(hits.sum() / total),
        precision=precision,
        recall=recall,
        f1=f1,
        support=truth_count,
        weighted_precision=float(precision @ weights),
        weighted_recall=float(recall @ weights),
        weighted_f1=float(f1 @ weights),
        confusion=confusion,
    )
