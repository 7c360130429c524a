"""Moving-average aggregation and MA-PCA clustering for dense block signals."""

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from ._validation import check_data, check_grid_shape, check_window
from .exceptions import ConfigurationError
from .numerics import PrefixSumTable, gram, leading_eigenvector, sign_labels


def moving_average_matrix(X, h3, grid_shape=None):
    """Column-wise moving sums scaled by ``h3^{-q/2}``.

    Vector data give ``p - h3 + 1`` columns; grid data use an ``h3 x h3``
    window and give ``(p1 - h3 + 1) * (p2 - h3 + 1)`` columns in row-major
    order of the window corner. ``h3 = 1`` returns a copy of ``X``.
    """
    X = check_data(X, min_samples=1)
    shape = check_grid_shape(grid_shape, X.shape[1])
    h3 = check_window(h3, "h3")
    if h3 > min(shape):
        raise ConfigurationError(f"h3={h3} exceeds the grid dimension {min(shape)}")
    if h3 == 1:
        return X.copy()
    ranges = [np.arange(p - h3 + 1) for p in shape]
    grids = np.meshgrid(*ranges, indexing="ij")
    starts = np.column_stack([g.ravel() for g in grids])
    lengths = np.full_like(starts, h3)
    return PrefixSumTable(X, shape).aggregates(starts, lengths)


def ma_pca(X, h3, grid_shape=None, return_eigen=False):
    """MA-PCA labels: sign of the leading eigenvector of ``Y Y'`` for the moving-average matrix ``Y``."""
    X = check_data(X, min_samples=2)
    Y = moving_average_matrix(X, h3, grid_shape)
    eig = leading_eigenvector(gram(Y))
    labels = sign_labels(eig.vector)
    return (labels, eig) if return_eigen else labels


def ma_pca_2d(X, h3, grid_shape, return_eigen=False):
    if grid_shape is None or len(tuple(grid_shape)) != 2:
        raise ConfigurationError("ma_pca_2d needs a (p1, p2) grid shape")
    return ma_pca(X, h3, grid_shape, return_eigen)


class MAPCA(ClusterMixin, BaseEstimator):
    """Spectral clustering on moving averages (window ``h3`` per mode).

    ``h3`` should be of the order of the signal block length; ``h3=1`` is plain
    spectral clustering.
    """

    def __init__(self, h3=1, grid_shape=None):
        self.h3 = h3
        self.grid_shape = grid_shape

    def fit(self, X, y=None):
        X = check_data(X, min_samples=2)
        self.n_features_in_ = X.shape[1]
        self.labels_, self.eigen_ = ma_pca(X, self.h3, self.grid_shape, return_eigen=True)
        return self
