"""Cross-block feature aggregation: pre-clustering block screen and CFA-PCA.

Each candidate block is paired with the far-away block whose aggregated
features have the largest averaged cross-product with it. Because the product
``X_i(I1) X_i(I2)`` has the same sign for every observation whatever its
label, the average does not cancel across the two clusters, and it involves no
variance terms. Significant blocks are then chosen greedily (step-down) and
observations are clustered on the selected block aggregates.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from ._validation import check_data, check_grid_shape, check_window
from .blocks import BlockSet, CandidateBlocks, candidate_blocks, step_down
from .exceptions import ConfigurationError, NoFeaturesSelectedError
from .ma import ma_pca
from .numerics import PrefixSumTable, gram, leading_eigenvector, sign_labels

# Working-set size (entries) of one chunk of the pair scan.
_CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class CfaCandidate:
    block: object
    partner: object
    w0: float
    sigma_w: float
    standardized: float


@dataclass
class CfaScan:
    """Result of :func:`cross_scan`, stored column-wise over the candidates."""

    cands: CandidateBlocks
    partner: np.ndarray
    w0: np.ndarray
    sigma_w: np.ndarray
    standardized: np.ndarray
    n_samples: int
    h1: int
    h2: int

    def __len__(self):
        return len(self.cands)

    def candidates(self):
        c = self.cands
        return [
            CfaCandidate(
                c.block(k),
                c.block(int(self.partner[k])),
                float(self.w0[k]),
                float(self.sigma_w[k]),
                float(self.standardized[k]),
            )
            for k in range(len(c))
        ]

    @property
    def n_features(self):
        return int(np.prod(self.cands.shape))


def _admissible(cands, rows, cols, h2):
    """``adm[a, b]``: block ``cols[b]`` misses ``expand(block rows[a], h2)``.

    For tensor blocks the product sets are disjoint as soon as one mode is.
    """
    s, e = cands.starts, cands.ends
    lo = s[rows] - h2
    hi = e[rows] + h2
    adm = None
    for t in range(s.shape[1]):
        disjoint = (e[cols, t][None, :] <= lo[:, t, None]) | (
            s[cols, t][None, :] >= hi[:, t, None]
        )
        adm = disjoint if adm is None else (adm | disjoint)
    return adm


def _partner_search(A, cands, h2):
    """Index of the admissible partner maximising ``|sum_i A_ik A_ij|``.

    Only the upper triangle of the (implicit) P x P cross-product matrix is
    computed: each chunk of rows is scored against all later columns and the
    maxima are propagated both row- and column-wise. Partners reach each row in
    increasing index order, so a strict ``>`` update keeps the lowest index on
    ties.
    """
    n, P = A.shape
    At = np.ascontiguousarray(A.T)
    best_val = np.full(P, -1.0)
    best_idx = np.full(P, -1, dtype=np.intp)
    step = max(1, _CHUNK_ENTRIES // max(P, 1))
    all_idx = np.arange(P)
    for lo in range(0, P, step):
        hi = min(P, lo + step)
        rows = all_idx[lo:hi]
        cols = all_idx[lo:]
        W = np.abs(At[lo:hi] @ A[:, lo:])
        W[~_admissible(cands, rows, cols, h2)] = -1.0

        j = W.argmax(axis=1)
        v = W[np.arange(hi - lo), j]
        upd = v > best_val[lo:hi]
        best_val[lo:hi][upd] = v[upd]
        best_idx[lo:hi][upd] = j[upd] + lo

        if hi < P:
            Wc = W[:, hi - lo:]
            i = Wc.argmax(axis=0)
            v = Wc[i, np.arange(P - hi)]
            upd = v > best_val[hi:]
            best_val[hi:][upd] = v[upd]
            best_idx[hi:][upd] = i[upd] + lo
    return best_idx


def cross_scan(X, h1, h2, grid_shape=None, enumeration="auto", min_length=2):
    """Cross-block statistics for every candidate block.

    For each candidate ``I`` the partner ``I~`` maximises
    ``|Wbar(I, I2)| = |n^{-1/2} sum_i X_i(I) X_i(I2)|`` over candidates ``I2``
    disjoint from ``expand(I, h2)``; ties go to the partner with the lower
    start, then the shorter length. Returns ``W0 = Wbar(I, I~)`` and
    ``sigma_w^2 = n^{-1} (sum_i W_i^2 - W0^2)`` (divisor ``n``).

    Raises ConfigurationError if some candidate has no admissible partner.
    """
    X = check_data(X, min_samples=3)
    n, p = X.shape
    shape = check_grid_shape(grid_shape, p)
    h1 = check_window(h1, "h1")
    h2 = check_window(h2, "h2")
    if h2 < h1:
        raise ConfigurationError(f"h2={h2} must be >= h1={h1}")
    cands = candidate_blocks(shape, h1, enumeration, min_length)
    A = PrefixSumTable(X, shape).aggregates(cands.starts, cands.lengths)

    partner = _partner_search(A, cands, h2)
    missing = np.flatnonzero(partner < 0)
    if missing.size:
        raise ConfigurationError(
            f"block {cands.block(int(missing[0]))} has no partner outside its "
            f"h2={h2} expansion; the grid is too small for this h2"
        )
    W = A * A[:, partner]
    w0 = W.sum(axis=0) / np.sqrt(n)
    var = (np.einsum("ij,ij->j", W, W) - w0**2) / n
    sigma = np.sqrt(np.clip(var, 0.0, None))
    standardized = _standardize(w0, sigma)
    return CfaScan(cands, partner, w0, sigma, standardized, n, h1, h2)


def _standardize(score, sigma):
    absval = np.abs(score)
    out = np.zeros_like(absval)
    pos = sigma > 0
    out[pos] = absval[pos] / sigma[pos]
    out[~pos & (absval > 0)] = np.inf
    return out


def cfa_threshold(p, h1, scale=6.0):
    """Screening threshold ``sqrt(scale * log(p * h1))``."""
    return float(np.sqrt(scale * np.log(p * h1)))


def cfa_select(scan, threshold_scale=6.0):
    """Step-down selection over a :class:`CfaScan`.

    Keeps candidates whose standardized score exceeds ``cfa_threshold``, then
    repeatedly takes the largest ``|W0|`` and drops everything that meets its
    expansion by ``h1 // 2``.
    """
    t = cfa_threshold(scan.n_features, scan.h1, threshold_scale)
    chosen = step_down(scan.cands, scan.standardized > t, scan.w0, scan.h1 // 2)
    out = BlockSet()
    for k in chosen:
        out.blocks.append(scan.cands.block(k))
        out.scores.append(float(scan.w0[k]))
    out.stats = [
        {
            "partner": scan.cands.block(int(scan.partner[k])).to_json(),
            "w0": float(scan.w0[k]),
            "sigma_w": float(scan.sigma_w[k]),
            "standardized": float(scan.standardized[k]),
        }
        for k in chosen
    ]
    return out


def block_features(X, blocks, grid_shape=None):
    """``(n, m)`` matrix of block aggregates, one column per block."""
    X = check_data(X)
    shape = check_grid_shape(grid_shape, X.shape[1])
    starts = np.array([[b.start - 1 for b in blk.modes] for blk in blocks], dtype=np.intp)
    lengths = np.array([[b.length for b in blk.modes] for blk in blocks], dtype=np.intp)
    if starts.shape[1] != len(shape):
        raise ConfigurationError("block order does not match grid shape")
    return PrefixSumTable(X, shape).aggregates(starts, lengths)


def cfa_pca(X, blocks, grid_shape=None, return_eigen=False):
    """Labels from the leading eigenvector of the selected-block Gram matrix."""
    if len(blocks) == 0:
        raise NoFeaturesSelectedError("no features selected by the CFA screen")
    Y = block_features(X, list(blocks), grid_shape)
    eig = leading_eigenvector(gram(Y))
    labels = sign_labels(eig.vector)
    return (labels, eig) if return_eigen else labels


class CFAPCA(ClusterMixin, BaseEstimator):
    """CFA-PCA clustering for sparse block signals.

    Parameters
    ----------
    h1 : int
        Candidate window: blocks have length ``min_length`` to ``h1 + 1`` per
        mode. Should cover the largest signal block.
    h2 : int
        Separation window (``h2 >= h1``) between a block and its partner.
    threshold_scale : float
        The ``6`` in the screening threshold ``sqrt(6 log(p h1))``.
    enumeration : {"auto", "full", "dyadic"}
        Candidate family; "auto" goes dyadic above 20000 candidates.
    min_length : {1, 2}
        Shortest candidate; 1 admits single coordinates (non-block signals).
    grid_shape : tuple or None
        ``(p1, p2)`` for matrix-valued observations flattened row-major.
    fallback : bool
        When the screen selects nothing, retry with ``threshold_scale=4`` and
        then fall back to MA-PCA labels with window ``fallback_h3`` (default
        ``h1``). When False, an empty screen raises NoFeaturesSelectedError.

    Attributes
    ----------
    labels_, blocks_, scan_, threshold_, fallback_ ("none", "threshold_4" or
    "ma_pca"), eigen_
    """

    def __init__(
        self,
        h1=4,
        h2=8,
        threshold_scale=6.0,
        enumeration="auto",
        min_length=2,
        grid_shape=None,
        fallback=True,
        fallback_h3=None,
    ):
        self.h1 = h1
        self.h2 = h2
        self.threshold_scale = threshold_scale
        self.enumeration = enumeration
        self.min_length = min_length
        self.grid_shape = grid_shape
        self.fallback = fallback
        self.fallback_h3 = fallback_h3

    def fit(self, X, y=None):
        X = check_data(X, min_samples=3)
        shape = check_grid_shape(self.grid_shape, X.shape[1])
        self.n_features_in_ = X.shape[1]
        self.scan_ = cross_scan(
            X, self.h1, self.h2, shape, self.enumeration, self.min_length
        )
        self.threshold_ = cfa_threshold(self.scan_.n_features, self.h1, self.threshold_scale)
        blocks = cfa_select(self.scan_, self.threshold_scale)
        self.fallback_ = "none"
        if not blocks and self.fallback and self.threshold_scale > 4.0:
            blocks = cfa_select(self.scan_, 4.0)
            if blocks:
                self.fallback_ = "threshold_4"
        self.blocks_ = blocks
        if blocks:
            self.labels_, self.eigen_ = cfa_pca(X, blocks, shape, return_eigen=True)
        elif self.fallback:
            h3 = self.fallback_h3 if self.fallback_h3 is not None else min(self.h1, min(shape))
            self.labels_, self.eigen_ = ma_pca(X, h3, shape, return_eigen=True)
            self.fallback_ = "ma_pca"
        else:
            raise NoFeaturesSelectedError("no features selected by the CFA screen")
        return self
