"""The three naive Bayes variants of the model comparison.

All three accumulate per-feature log-likelihood terms in feature order
(vectorized across rows, sequential across features) so that a plain
scalar re-computation produces bit-identical joint scores — the test
suite relies on exact equality against brute-force posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))


def posterior_from_joint(joint: np.ndarray) -> np.ndarray:
    """Class posteriors from joint log scores, shifted for stability."""
    shifted = joint - joint.max(axis=1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=1, keepdims=True)


def _class_split(matrix: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return matrix[y == 0], matrix[y == 1]


@dataclass
class GaussianNBModel:
    log_prior: np.ndarray  # (2,)
    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d), floored

    def joint_log_likelihood(self, matrix: np.ndarray) -> np.ndarray:
        n = matrix.shape[0]
        joint = np.tile(self.log_prior, (n, 1))
        for j in range(matrix.shape[1]):
            for c in (0, 1):
                var = self.variances[c, j]
                diff = matrix[:, j] - self.means[c, j]
                joint[:, c] += -0.5 * (LOG_2PI + np.log(var)) - diff**2 / (2.0 * var)
        return joint

    def predict_proba(self, matrix: np.ndarray) -> np.ndarray:
        return posterior_from_joint(self.joint_log_likelihood(matrix))[:, 1]

    def state_dict(self) -> dict:
        return {
            "log_prior": self.log_prior.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "GaussianNBModel":
        return cls(
            log_prior=np.asarray(state["log_prior"], dtype=np.float64),
            means=np.asarray(state["means"], dtype=np.float64),
            variances=np.asarray(state["variances"], dtype=np.float64),
        )


def fit_gaussian_nb(matrix: np.ndarray, y: np.ndarray, additive_smoothing: float = 1e-9) -> GaussianNBModel:
    """Per-class feature means and variances; smoothing is an absolute
    variance floor added to every estimate (keeps degenerate columns finite)."""
    n = matrix.shape[0]
    groups = _class_split(matrix, y)
    log_prior = np.array([np.log(g.shape[0] / n) for g in groups])
    means = np.stack([g.mean(axis=0) for g in groups])
    variances = np.stack([g.var(axis=0) + additive_smoothing for g in groups])
    return GaussianNBModel(log_prior=log_prior, means=means, variances=variances)


@dataclass
class MultinomialNBModel:
    log_prior: np.ndarray  # (2,)
    feature_log_prob: np.ndarray  # (2, d)

    def joint_log_likelihood(self, matrix: np.ndarray) -> np.ndarray:
        n = matrix.shape[0]
        joint = np.tile(self.log_prior, (n, 1))
        for j in range(matrix.shape[1]):
            for c in (0, 1):
                joint[:, c] += matrix[:, j] * self.feature_log_prob[c, j]
        return joint

    def predict_proba(self, matrix: np.ndarray) -> np.ndarray:
        return posterior_from_joint(self.joint_log_likelihood(matrix))[:, 1]

    def state_dict(self) -> dict:
        return {
            "log_prior": self.log_prior.tolist(),
            "feature_log_prob": self.feature_log_prob.tolist(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "MultinomialNBModel":
        return cls(
            log_prior=np.asarray(state["log_prior"], dtype=np.float64),
            feature_log_prob=np.asarray(state["feature_log_prob"], dtype=np.float64),
        )


def fit_multinomial_nb(matrix: np.ndarray, y: np.ndarray, additive_smoothing: float = 1.0) -> MultinomialNBModel:
    n, d = matrix.shape
    groups = _class_split(matrix, y)
    log_prior = np.array([np.log(g.shape[0] / n) for g in groups])
    rows = []
    for g in groups:
        counts = g.sum(axis=0)
        rows.append(np.log((counts + additive_smoothing) / (counts.sum() + additive_smoothing * d)))
    return MultinomialNBModel(log_prior=log_prior, feature_log_prob=np.stack(rows))


@dataclass
class BernoulliNBModel:
    log_prior: np.ndarray  # (2,)
    prob_one: np.ndarray  # (2, d): P(feature nonzero | class)

    def joint_log_likelihood(self, matrix: np.ndarray) -> np.ndarray:
        bits = (matrix > 0).astype(np.float64)
        n = matrix.shape[0]
        joint = np.tile(self.log_prior, (n, 1))
        for j in range(matrix.shape[1]):
            for c in (0, 1):
                p = self.prob_one[c, j]
                joint[:, c] += bits[:, j] * np.log(p) + (1.0 - bits[:, j]) * np.log(1.0 - p)
        return joint

    def predict_proba(self, matrix: np.ndarray) -> np.ndarray:
        return posterior_from_joint(self.joint_log_likelihood(matrix))[:, 1]

    def state_dict(self) -> dict:
        return {"log_prior": self.log_prior.tolist(), "prob_one": self.prob_one.tolist()}

    @classmethod
    def from_state(cls, state: dict) -> "BernoulliNBModel":
        return cls(
            log_prior=np.asarray(state["log_prior"], dtype=np.float64),
            prob_one=np.asarray(state["prob_one"], dtype=np.float64),
        )


def fit_bernoulli_nb(matrix: np.ndarray, y: np.ndarray, additive_smoothing: float = 1.0) -> BernoulliNBModel:
    """Features binarized at zero: any nonzero value counts as present."""
    n = matrix.shape[0]
    bits = (matrix > 0).astype(np.float64)
    groups = _class_split(bits, y)
    log_prior = np.array([np.log(g.shape[0] / n) for g in groups])
    prob_one = np.stack(
        [(g.sum(axis=0) + additive_smoothing) / (g.shape[0] + 2.0 * additive_smoothing) for g in groups]
    )
    return BernoulliNBModel(log_prior=log_prior, prob_one=prob_one)
