"""Input checks shared by the estimators and the CLI."""

import math

import numpy as np

from .errors import DimensionMismatch


def check_vector(y, n=None, name="y"):
    """Return ``y`` as a finite 1-D float array, optionally of length ``n``."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise DimensionMismatch(f"{name} must have length {n}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinity")
    return arr


def check_matrix(X, n_features=None, name="X"):
    """Return ``X`` as a finite 2-D float array (a 1-D input becomes one row)."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if n_features is not None and arr.shape[1] != n_features:
        raise DimensionMismatch(f"{name} has {arr.shape[1]} features, expected {n_features}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinity")
    return arr


def check_rate(rate):
    rate = float(rate)
    if not (rate > 0 and math.isfinite(rate)):
        raise ValueError(f"rate must be positive and finite, got {rate}")
    return rate


def check_positive_int(value, name):
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_binary_labels(y):
    """Map two class labels to -1/+1; returns ``(signed, classes)``."""
    y = np.asarray(y)
    classes = np.unique(y)
    if classes.size != 2:
        raise ValueError(f"expected exactly two classes, found {classes.size}")
    return np.where(y == classes[1], 1.0, -1.0), classes
