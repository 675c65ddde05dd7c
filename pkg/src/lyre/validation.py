"""Input validation helpers used by the estimator-style classes."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateLabelsError, DimensionMismatchError, NumericInputError


def check_feature_matrix(X):
    """Coerce X to float64, keeping CSR sparsity, and reject non-finite values.

    Returns a C-contiguous ndarray for dense input and a CSR matrix for any
    scipy-sparse input.
    """
    if sp.issparse(X):
        X = X.tocsr().astype(np.float64)
        if not np.all(np.isfinite(X.data)):
            raise NumericInputError("feature matrix contains non-finite values")
        return X
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-d feature matrix, got ndim={X.ndim}")
    if not np.all(np.isfinite(X)):
        raise NumericInputError("feature matrix contains non-finite values")
    return X


def check_binary_labels(y, n_samples: int) -> np.ndarray:
    """Validate labels are in {-1, +1} with both classes present."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != n_samples:
        raise DimensionMismatchError(
            f"labels ({y.shape[0]}) and samples ({n_samples}) differ in length"
        )
    values = np.unique(y)
    if not np.all(np.isin(values, (-1.0, 1.0))):
        raise ValueError(f"labels must be -1/+1, got values {values!r}")
    if values.size < 2:
        raise DegenerateLabelsError("training labels contain a single class")
    return y


def check_vector(x, dimension: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != dimension:
        raise DimensionMismatchError(
            f"vector has dimension {x.shape[0]}, expected {dimension}"
        )
    return x


def check_consistent_length(*arrays) -> int:
    lengths = {len(a) for a in arrays}
    if len(lengths) > 1:
        raise DimensionMismatchError(f"inconsistent lengths: {sorted(lengths)}")
    return lengths.pop() if lengths else 0
