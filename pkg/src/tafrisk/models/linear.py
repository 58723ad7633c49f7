"""Logistic regression via IRLS and a linear SVC with calibrated output.

The logistic fit maximizes the L2-penalized log-likelihood (intercept
unpenalized) by Newton steps with step halving, so the objective is
non-decreasing at every recorded iteration.  The SVC minimizes
regularized hinge loss by the classic decreasing-step subgradient
schedule, then fits a one-dimensional logistic link on its own training
margins to produce probabilities — a calibration choice, since a margin
alone is not a probability.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonConvergenceWarning
from ..rng import derive_seed

PROB_FLOOR = 1e-12


def sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ex = np.exp(eta[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def clip_probability(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)


def penalized_loglik(
    weights: np.ndarray, intercept: float, matrix: np.ndarray, y: np.ndarray, l2: float
) -> float:
    p = clip_probability(sigmoid(matrix @ weights + intercept))
    ll = float(np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
    return ll - 0.5 * l2 * float(weights @ weights)


def loglik_gradient(
    weights: np.ndarray, intercept: float, matrix: np.ndarray, y: np.ndarray, l2: float
) -> tuple[np.ndarray, float]:
    """Gradient of the penalized log-likelihood in (weights, intercept)."""
    p = sigmoid(matrix @ weights + intercept)
    resid = y - p
    return matrix.T @ resid - l2 * weights, float(resid.sum())


@dataclass
class LogisticModel:
    weights: np.ndarray
    intercept: float
    l2: float
    n_iterations: int
    converged: bool
    loglik_path: list[float] = field(default_factory=list)

    def predict_proba(self, matrix: np.ndarray) -> np.ndarray:
        return sigmoid(matrix @ self.weights + self.intercept)

    def state_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "l2": self.l2,
            "n_iterations": self.n_iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_state(cls, state: dict) -> "LogisticModel":
        return cls(
            weights=np.asarray(state["weights"], dtype=np.float64),
            intercept=float(state["intercept"]),
            l2=float(state["l2"]),
            n_iterations=int(state["n_iterations"]),
            converged=bool(state["converged"]),
        )


def fit_logistic(
    matrix: np.ndarray,
    y: np.ndarray,
    l2_strength: float = 1.0,
    max_iterations: int = 50,
    tolerance: float = 1e-6,
    warn_on_cap: bool = True,
) -> LogisticModel:
    n, d = matrix.shape
    y = y.astype(np.float64)
    w = np.zeros(d)
    b = 0.0
    ridge = np.zeros(d + 1)
    ridge[:d] = l2_strength

    path = [penalized_loglik(w, b, matrix, y, l2_strength)]
    converged = False
    iterations = 0
    design = np.hstack([matrix, np.ones((n, 1))])
    for iterations in range(1, max_iterations + 1):
        p = clip_probability(sigmoid(matrix @ w + b))
        weight = p * (1.0 - p)
        grad = design.T @ (y - p)
        grad[:d] -= l2_strength * w
        hess = (design.T * weight) @ design
        hess[np.diag_indices(d + 1)] += ridge
        try:
            delta = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            hess[np.diag_indices(d + 1)] += 1e-8
            delta = np.linalg.solve(hess, grad)

        # halve the step until the objective stops getting worse
        step = 1.0
        base = path[-1]
        improved = False
        for _ in range(30):
            cand_w = w + step * delta[:d]
            cand_b = b + step * delta[d]
            cand_ll = penalized_loglik(cand_w, cand_b, matrix, y, l2_strength)
            if cand_ll >= base:
                improved = True
                break
            step *= 0.5
        if not improved:
            converged = True  # no step improves the objective at float resolution
            break
        w, b = cand_w, cand_b
        path.append(cand_ll)
        if float(np.max(np.abs(step * delta))) < tolerance:
            converged = True
            break

    if not converged and warn_on_cap:
        warnings.warn(
            f"logistic fit stopped at iteration cap {iterations} without meeting "
            f"tolerance {tolerance:g}",
            NonConvergenceWarning,
            stacklevel=2,
        )
    return LogisticModel(
        weights=w,
        intercept=float(b),
        l2=l2_strength,
        n_iterations=iterations,
        converged=converged,
        loglik_path=path,
    )


@dataclass
class LinearSVCModel:
    weights: np.ndarray
    bias: float
    calibration_scale: float
    calibration_offset: float
    seed: int

    def margins(self, matrix: np.ndarray) -> np.ndarray:
        return matrix @ self.weights + self.bias

    def predict_proba(self, matrix: np.ndarray) -> np.ndarray:
        return sigmoid(self.calibration_scale * self.margins(matrix) + self.calibration_offset)

    def state_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "calibration_scale": self.calibration_scale,
            "calibration_offset": self.calibration_offset,
            "seed": self.seed,
        }

    @classmethod
    def from_state(cls, state: dict) -> "LinearSVCModel":
        return cls(
            weights=np.asarray(state["weights"], dtype=np.float64),
            bias=float(state["bias"]),
            calibration_scale=float(state["calibration_scale"]),
            calibration_offset=float(state["calibration_offset"]),
            seed=int(state["seed"]),
        )


def fit_linear_svc(
    matrix: np.ndarray,
    y: np.ndarray,
    hinge_regularization: float = 0.01,
    epochs: int = 10,
    seed: int = 0,
) -> LinearSVCModel:
    n, d = matrix.shape
    signs = 2.0 * y.astype(np.float64) - 1.0
    lam = hinge_regularization
    rng = np.random.default_rng(derive_seed(seed, 0))
    w = np.zeros(d)
    b = 0.0
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = signs[i] * (matrix[i] @ w + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * signs[i] * matrix[i]
                b += eta * signs[i]

    margins = (matrix @ w + b).reshape(-1, 1)
    link = fit_logistic(
        margins, y, l2_strength=1e-3, max_iterations=100, tolerance=1e-8, warn_on_cap=False
    )
    return LinearSVCModel(
        weights=w,
        bias=float(b),
        calibration_scale=float(link.weights[0]),
        calibration_offset=float(link.intercept),
        seed=seed,
    )


def hinge_objective(weights: np.ndarray, bias: float, matrix: np.ndarray, y: np.ndarray, lam: float) -> float:
    signs = 2.0 * y.astype(np.float64) - 1.0
    losses = np.maximum(0.0, 1.0 - signs * (matrix @ weights + bias))
    return 0.5 * lam * float(weights @ weights) + float(losses.mean())
