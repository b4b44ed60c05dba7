# aspem/operations/logreg.py
"""Binary logistic regression used to score link-prediction pairs."""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit, logit
from sklearn.linear_model import LogisticRegression

from aspem.core.errors import EvaluationError

logger = logging.getLogger(__name__)

PRIOR_CLIP = 1e-6


@dataclass(frozen=True)
class LogRegModel:
    weights: np.ndarray
    bias: float

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) @ self.weights + self.bias

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return expit(self.decision_function(features))


def train_logreg(features, labels, epochs: int = 1000, l2: float = 1.0) -> LogRegModel:
    """
    Fit ``P(y=1 | x) = sigmoid(w . x + b)`` with an L2 penalty of strength ``l2``
    on ``w`` (the bias is not penalized).

    Labels must be 0/1. When only one class is present the model is the
    constant prior (zero weights) and a warning is logged.

    Raises:
        EvaluationError: on empty input, inconsistent shapes or non-binary labels
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EvaluationError("Logistic regression needs a nonempty 2-D feature matrix")
    if y.shape != (X.shape[0],):
        raise EvaluationError(f"{X.shape[0]} feature rows but {y.size} labels")
    if not np.isin(y, (0, 1)).all():
        raise EvaluationError("Logistic regression labels must be 0 or 1")
    if epochs < 1 or l2 < 0:
        raise EvaluationError(f"Invalid training parameters epochs={epochs}, l2={l2}")

    y = y.astype(np.int64)
    if np.unique(y).size == 1:
        prior = float(np.clip(y.mean(), PRIOR_CLIP, 1 - PRIOR_CLIP))
        logger.warning(f"Single-class training data (all labels {y[0]}); using the constant prior model")
        return LogRegModel(weights=np.zeros(X.shape[1]), bias=float(logit(prior)))

    if l2 == 0:
        model = LogisticRegression(penalty=None, max_iter=epochs)
    else:
        model = LogisticRegression(C=1.0 / l2, max_iter=epochs)
    model.fit(X, y)
    return LogRegModel(weights=model.coef_.ravel().copy(), bias=float(model.intercept_[0]))


def predict_score(model: LogRegModel, x) -> Union[float, np.ndarray]:
    """Probability of the positive class for one vector or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.weights.shape[0]:
        raise EvaluationError(f"Feature length {x.shape[-1]}, model expects {model.weights.shape[0]}")
    scores = model.predict_proba(x)
    return float(scores) if x.ndim == 1 else scores
