"""Comparison methods that ignore block structure.

* spectral clustering: MA-PCA with window 1;
* two-cluster k-means (Lloyd iterations from k-means++ seeding, best of
  several restarts);
* a simplified IF-PCA: Kolmogorov-Smirnov feature screen after robust
  standardisation, then PCA on the kept columns. The higher-criticism
  threshold of the original method is not implemented.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from sklearn.base import BaseEstimator, ClusterMixin

from ._validation import check_data
from .exceptions import ConfigurationError
from .ma import ma_pca
from .numerics import gram, leading_eigenvector, make_rng, sign_labels


def spectral_baseline(X, return_eigen=False):
    """Vanilla spectral clustering: leading eigenvector of ``X X'``."""
    return ma_pca(X, 1, None, return_eigen)


class SpectralBaseline(ClusterMixin, BaseEstimator):
    def fit(self, X, y=None):
        X = check_data(X)
        self.n_features_in_ = X.shape[1]
        self.labels_ = spectral_baseline(X)
        return self


@dataclass(frozen=True)
class KmeansConfig:
    restarts: int = 10
    max_iter: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ConfigurationError("restarts must be >= 1")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be >= 1")


def _wcss(X, assign, centers):
    return float(((X - centers[assign]) ** 2).sum())


def _kmeanspp(X, rng):
    n = X.shape[0]
    first = int(rng.integers(n))
    d2 = ((X - X[first]) ** 2).sum(axis=1)
    total = d2.sum()
    if total > 0:
        second = int(rng.choice(n, p=d2 / total))
    else:
        second = (first + 1) % n
    return X[[first, second]].copy()


def _assign(X, centers):
    d = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return d.argmin(axis=1), d


def lloyd(X, centers, max_iter, history=None):
    """Two-centre Lloyd iterations.

    An empty cluster takes the point farthest from its current centre. The
    within-cluster sum of squares is appended to ``history`` after every
    update when a list is given.
    """
    assign, d = _assign(X, centers)
    for _ in range(max_iter):
        for k in range(2):
            if not np.any(assign == k):
                far = int(d[np.arange(len(X)), assign].argmax())
                assign[far] = k
        new = np.stack([X[assign == k].mean(axis=0) for k in range(2)])
        if history is not None:
            history.append(_wcss(X, assign, new))
        new_assign, d = _assign(X, new)
        converged = np.array_equal(new_assign, assign) and np.array_equal(new, centers)
        centers, assign = new, new_assign
        if converged:
            break
    for k in range(2):
        if not np.any(assign == k):
            far = int(d[np.arange(len(X)), assign].argmax())
            assign[far] = k
    centers = np.stack([X[assign == k].mean(axis=0) for k in range(2)])
    return assign, centers, _wcss(X, assign, centers)


def kmeans2(X, cfg=KmeansConfig()):
    """Two-cluster k-means on raw rows; returns labels in {-1, +1}.

    Restart ``r`` uses RNG stream ``r``; the lowest WCSS wins, ties going to the
    lowest restart. The cluster of the first observation is labelled +1.
    """
    X = check_data(X)
    best = None
    for r in range(cfg.restarts):
        rng = make_rng(cfg.seed, r)
        assign, _, w = lloyd(X, _kmeanspp(X, rng), cfg.max_iter)
        if best is None or w < best[1]:
            best = (assign, w)
    assign = best[0]
    return np.where(assign == assign[0], 1, -1).astype(np.int64)


class KMeans2(ClusterMixin, BaseEstimator):
    def __init__(self, restarts=10, max_iter=100, random_state=0):
        self.restarts = restarts
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_data(X)
        self.n_features_in_ = X.shape[1]
        self.labels_ = kmeans2(X, KmeansConfig(self.restarts, self.max_iter, self.random_state))
        return self


def robust_standardize(X):
    """Centre columns by the median and scale by the MAD (normal-consistent).

    Returns the standardised matrix and a mask of usable (non-zero MAD) columns.
    """
    med = np.median(X, axis=0)
    mad = np.median(np.abs(X - med), axis=0) * 1.482602218505602
    ok = mad > 0
    Z = np.zeros_like(X)
    Z[:, ok] = (X[:, ok] - med[ok]) / mad[ok]
    return Z, ok


def ks_statistics(Z):
    """Column-wise one-sample KS distance to the standard normal CDF."""
    n = Z.shape[0]
    S = np.sort(Z, axis=0)
    F = ndtr(S)
    i = np.arange(1, n + 1)[:, None]
    return np.maximum((i / n - F).max(axis=0), (F - (i - 1) / n).max(axis=0))


def ifpca_lite(X, top_k=None, ks_threshold=None, return_selected=False):
    """Simplified IF-PCA labels.

    Columns are kept by KS score: the ``top_k`` largest (default
    ``ceil(sqrt(p))``), or all above ``ks_threshold`` when given. Zero-MAD
    columns are dropped with a warning.
    """
    X = check_data(X, min_samples=3)
    n, p = X.shape
    Z, ok = robust_standardize(X)
    if not ok.all():
        warnings.warn(f"{int((~ok).sum())} column(s) with zero MAD excluded", RuntimeWarning)
    ks = np.full(p, -np.inf)
    ks[ok] = ks_statistics(Z[:, ok])
    if ks_threshold is not None:
        selected = np.flatnonzero(ks > ks_threshold)
    else:
        k = int(np.ceil(np.sqrt(p))) if top_k is None else int(top_k)
        k = min(k, int(ok.sum()))
        # stable sort: equal scores keep column order
        selected = np.sort(np.argsort(-ks, kind="stable")[:k])
    if selected.size == 0:
        raise ConfigurationError("IF-PCA screen kept no columns")
    labels = sign_labels(leading_eigenvector(gram(Z[:, selected])).vector)
    return (labels, selected, ks) if return_selected else labels


class IFPCALite(ClusterMixin, BaseEstimator):
    def __init__(self, top_k=None, ks_threshold=None):
        self.top_k = top_k
        self.ks_threshold = ks_threshold

    def fit(self, X, y=None):
        X = check_data(X, min_samples=3)
        self.n_features_in_ = X.shape[1]
        self.labels_, self.selected_, self.ks_ = ifpca_lite(
            X, self.top_k, self.ks_threshold, return_selected=True
        )
        return self
