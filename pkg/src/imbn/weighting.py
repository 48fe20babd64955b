"""Per-sample loss weights for imbalanced classes.

Two weight families are provided. Inverse class frequency assigns
w = N / N_k to every sample of class k, which makes the total weight mass
of each class equal to N. Class-balanced weighting interpolates between
uniform weights (beta = 0) and the inverse-frequency regime (beta -> 1)
via w = (1 - beta) / (1 - beta^N_k).
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyClassError


@dataclass
class ClassCounts:
    counts: np.ndarray  # (K,) sample count per class, all >= 1
    total: int


@dataclass
class WeightVector:
    weights: np.ndarray  # (N,) positive per-sample weights
    total: float  # Z, the sum of all weights


def class_counts(dataset) -> ClassCounts:
    """Count samples per class from one-hot targets; every class must occur."""
    targets = np.asarray(dataset.targets)
    if targets.size == 0:
        raise EmptyClassError("dataset is empty")
    counts = np.rint(targets.sum(axis=0)).astype(int)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise EmptyClassError(f"class(es) {missing} have no samples")
    return ClassCounts(counts=counts, total=int(counts.sum()))


def _per_class_to_vector(per_class: np.ndarray, labels) -> WeightVector:
    weights = per_class[np.asarray(labels)]
    return WeightVector(weights=weights, total=float(weights.sum()))


def inverse_frequency_weights(counts: ClassCounts, labels) -> WeightVector:
    """w = N / N_k for samples of class k; total weight is K * N."""
    per_class = counts.total / counts.counts.astype(float)
    return _per_class_to_vector(per_class, labels)


def class_balanced_weights(counts: ClassCounts, labels, beta: float) -> WeightVector:
    """w = (1 - beta) / (1 - beta^N_k) for samples of class k, beta in [0, 1)."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    alpha = counts.counts.astype(float)
    per_class = (1.0 - beta) / (1.0 - beta**alpha)
    return _per_class_to_vector(per_class, labels)


def effective_class_sizes(weights: WeightVector, labels, k: int) -> np.ndarray:
    """Total weight mass per class: entry k is the sum of w over class k."""
    labels = np.asarray(labels)
    if weights.weights.shape != labels.shape:
        raise ValueError(
            f"{weights.weights.shape[0]} weights for {labels.shape[0]} labels"
        )
    return np.bincount(labels, weights=weights.weights, minlength=k)
