"""Post-clustering block identification.

Given estimated labels, observations are aligned (``Y_i = l_i X_i``), the
aligned sum ``Y0 = n^{-1/2} sum_i Y_i`` is aggregated over every candidate
block, standardised by the pooled within-group standard deviation and screened
at ``sqrt(4 log(p h1))``; surviving blocks are picked by step-down on
``|Y0(I)|``.

The standardisation follows the estimator literally: ``sigma(I)`` is the
pooled sample standard deviation of the per-observation aggregates
``Y_i(I)``, which estimates ``Var{Y0(I)}`` because ``Y0`` carries the
``n^{-1/2}`` scaling.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin

from ._validation import check_data, check_grid_shape, check_labels, check_window
from .blocks import BlockSet, CandidateBlocks, candidate_blocks, step_down
from .numerics import PrefixSumTable

_CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class AlignedScanStat:
    block: object
    y0: float
    sigma: float
    standardized: float


@dataclass
class AlignedScan:
    cands: CandidateBlocks
    y0: np.ndarray
    sigma: np.ndarray
    standardized: np.ndarray
    degenerate: np.ndarray
    h1: int

    def __len__(self):
        return len(self.cands)

    @property
    def n_features(self):
        return int(np.prod(self.cands.shape))

    def stats(self):
        return [
            AlignedScanStat(
                self.cands.block(k),
                float(self.y0[k]),
                float(self.sigma[k]),
                float(self.standardized[k]),
            )
            for k in range(len(self.cands))
        ]


def aligned_scan(X, labels, h1, grid_shape=None, enumeration="full", min_length=2):
    """Label-aligned block statistics for every candidate block.

    ``sigma^2(I)`` pools the two estimated groups with divisor ``n - 2``.
    Where ``sigma == 0`` the standardized score is ``inf`` if ``Y0 != 0`` and
    ``0`` otherwise; such candidates are flagged in ``degenerate``.
    """
    X = check_data(X, min_samples=4)
    n, p = X.shape
    shape = check_grid_shape(grid_shape, p)
    labels = check_labels(labels, n, both_groups=True)
    h1 = check_window(h1, "h1")
    cands = candidate_blocks(shape, h1, enumeration, min_length)
    table = PrefixSumTable(labels[:, None] * X, shape)
    pos = labels == 1
    neg = ~pos

    P = len(cands)
    y0 = np.empty(P)
    sigma = np.empty(P)
    step = max(1, _CHUNK_ENTRIES // n)
    for lo in range(0, P, step):
        hi = min(P, lo + step)
        B = table.aggregates(cands.starts[lo:hi], cands.lengths[lo:hi])
        y0[lo:hi] = B.sum(axis=0) / np.sqrt(n)
        ss = 0.0
        for grp in (pos, neg):
            Bg = B[grp]
            ss = ss + ((Bg - Bg.mean(axis=0)) ** 2).sum(axis=0)
        sigma[lo:hi] = np.sqrt(ss / (n - 2))

    absval = np.abs(y0)
    degenerate = sigma == 0
    standardized = np.zeros(P)
    standardized[~degenerate] = absval[~degenerate] / sigma[~degenerate]
    standardized[degenerate & (absval > 0)] = np.inf
    return AlignedScan(cands, y0, sigma, standardized, degenerate, h1)


def recovery_threshold(p, h1, scale=4.0):
    """Identification threshold ``sqrt(scale * log(p * h1))``."""
    return float(np.sqrt(scale * np.log(p * h1)))


def identify_blocks(scan, threshold_scale=4.0):
    """Step-down selection on ``|Y0(I)|`` among blocks above the threshold."""
    t = recovery_threshold(scan.n_features, scan.h1, threshold_scale)
    chosen = step_down(scan.cands, scan.standardized > t, scan.y0, scan.h1 // 2)
    out = BlockSet()
    for k in chosen:
        out.blocks.append(scan.cands.block(k))
        out.scores.append(float(scan.y0[k]))
        out.stats.append(
            {
                "y0": float(scan.y0[k]),
                "sigma": float(scan.sigma[k]),
                "standardized": float(scan.standardized[k]),
            }
        )
    return out


def recover_2d(X, labels, h1, grid_shape, threshold_scale=4.0, enumeration="full"):
    scan = aligned_scan(X, labels, h1, grid_shape, enumeration)
    return identify_blocks(scan, threshold_scale)


class PostClusteringRecovery(SelectorMixin, BaseEstimator):
    """Identify signal blocks from data and estimated cluster labels.

    ``fit(X, y)`` takes the labels (values in {-1, +1}) as ``y``. After
    fitting, ``blocks_`` holds the selected blocks and ``get_support()`` /
    ``transform`` expose the covered coordinates like any feature selector.
    """

    def __init__(
        self, h1=4, threshold_scale=4.0, enumeration="full", min_length=2, grid_shape=None
    ):
        self.h1 = h1
        self.threshold_scale = threshold_scale
        self.enumeration = enumeration
        self.min_length = min_length
        self.grid_shape = grid_shape

    def fit(self, X, y):
        X = check_data(X, min_samples=4)
        self.n_features_in_ = X.shape[1]
        self.shape_ = check_grid_shape(self.grid_shape, X.shape[1])
        self.scan_ = aligned_scan(
            X, y, self.h1, self.shape_, self.enumeration, self.min_length
        )
        self.threshold_ = recovery_threshold(X.shape[1], self.h1, self.threshold_scale)
        self.blocks_ = identify_blocks(self.scan_, self.threshold_scale)
        return self

    def _get_support_mask(self):
        return self.blocks_.support_mask(self.shape_).ravel()

    @property
    def n_signals_(self):
        return int(self._get_support_mask().sum())
