"""Input validation helpers used by every estimator and public function."""

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import ConfigurationError


def check_data(X, min_samples=2):
    """Return ``X`` as a finite float64 ``(n, p)`` array."""
    return check_array(
        X,
        dtype=np.float64,
        ensure_2d=True,
        ensure_min_samples=min_samples,
        ensure_all_finite=True,
        copy=False,
    )


def check_grid_shape(grid_shape, n_features):
    """Normalise a grid shape to a tuple of per-mode dimensions.

    ``None`` means vector-valued data, returned as ``(n_features,)``. Columns of
    grid data are taken in row-major (C) order.
    """
    if grid_shape is None:
        return (int(n_features),)
    shape = tuple(int(s) for s in np.atleast_1d(grid_shape))
    if len(shape) not in (1, 2):
        raise ConfigurationError(
            f"only order-1 and order-2 data are supported, got grid shape {shape}"
        )
    if any(s < 1 for s in shape):
        raise ConfigurationError(f"grid dimensions must be positive, got {shape}")
    if int(np.prod(shape)) != n_features:
        raise ConfigurationError(
            f"grid shape {shape} has {int(np.prod(shape))} cells but data has "
            f"{n_features} columns"
        )
    return shape


def check_labels(labels, n_samples=None, both_groups=False):
    """Return labels as an int array with values in {-1, +1}."""
    lab = np.asarray(labels)
    if lab.ndim != 1:
        raise ConfigurationError("labels must be a 1-D vector")
    if n_samples is not None and lab.shape[0] != n_samples:
        raise ConfigurationError(
            f"labels have length {lab.shape[0]}, expected {n_samples}"
        )
    if not np.all(np.isin(lab, (-1, 1))):
        raise ConfigurationError("labels must take values in {-1, +1}")
    lab = lab.astype(np.int64)
    if both_groups:
        n_pos = int(np.sum(lab == 1))
        n_neg = lab.shape[0] - n_pos
        if n_pos < 2 or n_neg < 2:
            raise ConfigurationError(
                f"labels must split the sample into two groups of size >= 2, "
                f"got {n_pos} and {n_neg}"
            )
    return lab


def check_window(value, name, low=1, high=None):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    if value < low or (high is not None and value > high):
        bounds = f"[{low}, {high}]" if high is not None else f">= {low}"
        raise ConfigurationError(f"{name}={value} outside {bounds}")
    return int(value)
