"""k-nearest-neighbour classifier over standardized features.

Training is storage: column means and deviations plus the standardized
matrix.  Distances accumulate per feature in column order so a scalar
re-computation matches exactly, and neighbour ranking uses a stable sort
— equal distances resolve to the earlier training row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class KNearestModel:
    k: int
    train: np.ndarray  # standardized training matrix
    labels: np.ndarray  # int64 0/1
    means: np.ndarray
    scales: np.ndarray  # population std, zeros replaced by 1

    def standardize(self, matrix: np.ndarray) -> np.ndarray:
        return (matrix - self.means) / self.scales

    def squared_distances(self, matrix: np.ndarray) -> np.ndarray:
        z = self.standardize(matrix)
        d2 = np.zeros((z.shape[0], self.train.shape[0]))
        for j in range(z.shape[1]):
            diff = z[:, j][:, None] - self.train[:, j][None, :]
            d2 += diff * diff
        return d2

    def predict_proba(self, matrix: np.ndarray) -> np.ndarray:
        d2 = self.squared_distances(matrix)
        order = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return self.labels[order].mean(axis=1)

    def state_dict(self) -> dict:
        return {
            "k": self.k,
            "train": self.train.tolist(),
            "labels": self.labels.tolist(),
            "means": self.means.tolist(),
            "scales": self.scales.tolist(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "KNearestModel":
        return cls(
            k=int(state["k"]),
            train=np.asarray(state["train"], dtype=np.float64),
            labels=np.asarray(state["labels"], dtype=np.int64),
            means=np.asarray(state["means"], dtype=np.float64),
            scales=np.asarray(state["scales"], dtype=np.float64),
        )


def fit_knearest(matrix: np.ndarray, y: np.ndarray, k: int = 7) -> KNearestModel:
    means = matrix.mean(axis=0)
    scales = matrix.std(axis=0)
    scales[scales == 0.0] = 1.0
    return KNearestModel(
        k=k,
        train=(matrix - means) / scales,
        labels=y.astype(np.int64),
        means=means,
        scales=scales,
    )
