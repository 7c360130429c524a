"""Clustering and signal-recovery losses."""

import numpy as np

from ._validation import check_labels
from .exceptions import ConfigurationError, UndefinedLossError


def hamming_clustering(est, truth):
    """Fraction of mislabelled observations, minimised over a global label flip."""
    est = check_labels(est)
    truth = check_labels(truth)
    if est.shape != truth.shape:
        raise ConfigurationError(f"length mismatch: {est.shape[0]} vs {truth.shape[0]}")
    wrong = float(np.mean(est != truth))
    return min(wrong, 1.0 - wrong)


def _as_mask(s, p):
    s = np.asarray(s)
    if s.dtype == bool:
        if s.size != p:
            raise ConfigurationError("support mask has the wrong size")
        return s.ravel()
    mask = np.zeros(p, dtype=bool)
    mask[s.astype(np.intp).ravel()] = True
    return mask


def hamming_signal(est, truth, p=None):
    """``|S_hat symmetric-difference S| / |S|``.

    Supports are boolean masks or arrays of 0-based indices (``p`` required for
    index arrays). The loss is 0 for exact recovery, 1 for an empty estimate and
    can exceed 1 when many false positives are reported.
    """
    if p is None:
        if np.asarray(truth).dtype != bool:
            raise ConfigurationError("p is required when supports are index arrays")
        p = np.asarray(truth).size
    S = _as_mask(truth, p)
    s = int(S.sum())
    if s == 0:
        raise UndefinedLossError("signal loss is undefined when the true support is empty")
    S_hat = _as_mask(est, p)
    return float(np.sum(S ^ S_hat)) / s
