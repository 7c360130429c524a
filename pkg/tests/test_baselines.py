import itertools
import warnings

import numpy as np
import pytest
from scipy import stats

from blockclust.baselines import (
    IFPCALite,
    KMeans2,
    KmeansConfig,
    SpectralBaseline,
    ifpca_lite,
    kmeans2,
    ks_statistics,
    lloyd,
    robust_standardize,
    spectral_baseline,
)
from blockclust.ma import ma_pca
from blockclust.metrics import hamming_clustering
from blockclust.numerics import make_rng


def test_spectral_equals_window_one():
    X = make_rng(1).standard_normal((10, 25))
    assert np.array_equal(spectral_baseline(X), ma_pca(X, 1))
    assert np.array_equal(SpectralBaseline().fit(X).labels_, spectral_baseline(X))


def test_spectral_rank_one():
    lab = np.array([1, -1, 1, 1, -1])
    X = lab[:, None] * make_rng(2).standard_normal(8)[None, :]
    assert hamming_clustering(spectral_baseline(X), lab) == 0.0


class TestKmeans:
    def test_separated_clouds(self):
        rng = make_rng(0)
        A = rng.normal(0, 0.1, (10, 3))
        B = rng.normal(10, 0.1, (7, 3))
        lab = kmeans2(np.vstack([A, B]))
        assert np.all(lab[:10] == 1) and np.all(lab[10:] == -1)

    def test_duplicates_share_labels(self):
        X = make_rng(3).standard_normal((8, 4))
        X = np.vstack([X, X[:3]])
        lab = kmeans2(X)
        assert np.array_equal(lab[8:], lab[:3])

    def test_wcss_never_increases(self):
        X = make_rng(4).standard_normal((30, 5))
        hist = []
        lloyd(X, X[:2].copy(), 50, hist)
        assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))

    def test_matches_partition_enumeration(self):
        # exhaustive search over all 2-partitions of 20 points
        n = 20
        hits = 0
        masks = np.array(list(itertools.product([0, 1], repeat=n - 1)), dtype=bool)
        masks = np.hstack([np.zeros((len(masks), 1), bool), masks])[1:]
        for r in range(100):
            rng = make_rng(40, r)
            X = rng.standard_normal((n, 2)) + np.where(rng.random((n, 1)) < 0.5, 1.5, -1.5)
            best = _best_wcss(X, masks)
            lab = kmeans2(X, KmeansConfig(restarts=10, seed=r))
            hits += _wcss(X, lab == 1) <= best + 1e-9
        assert hits >= 90

    def test_estimator(self):
        X = make_rng(5).standard_normal((12, 3))
        est = KMeans2(restarts=3, random_state=7).fit(X)
        assert np.array_equal(est.labels_, kmeans2(X, KmeansConfig(3, 100, 7)))


def _wcss(X, mask):
    total = 0.0
    for m in (mask, ~mask):
        if m.any():
            total += ((X[m] - X[m].mean(axis=0)) ** 2).sum()
    return total


def _best_wcss(X, masks):
    # vectorised: WCSS = sum ||x||^2 - |A| ||mean_A||^2 - |B| ||mean_B||^2
    sq = (X**2).sum()
    m = masks.astype(float)
    na = m.sum(axis=1)
    nb = len(X) - na
    sa = m @ X
    sb = X.sum(axis=0) - sa
    w = sq - (sa**2).sum(axis=1) / na - (sb**2).sum(axis=1) / nb
    return float(w.min())


class TestKS:
    def test_matches_scipy(self):
        Z = make_rng(6).standard_normal((25, 7))
        ours = ks_statistics(Z)
        want = [stats.kstest(Z[:, j], "norm").statistic for j in range(7)]
        assert np.allclose(ours, want, atol=1e-12)

    def test_robust_standardize(self):
        X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [10.0, 5.0]])
        Z, ok = robust_standardize(X)
        assert ok.tolist() == [True, False]
        assert np.median(Z[:, 0]) == pytest.approx(0.0)

    def test_zero_mad_warns(self):
        X = make_rng(7).standard_normal((20, 6))
        X[:, 2] = 1.0
        with pytest.warns(RuntimeWarning):
            _, sel, _ = ifpca_lite(X, top_k=3, return_selected=True)
        assert 2 not in sel

    @pytest.mark.slow
    def test_null_selection_uniform(self):
        p, k = 20, 5
        counts = np.zeros(p)
        for r in range(500):
            X = make_rng(50, r).standard_normal((30, p))
            _, sel, _ = ifpca_lite(X, top_k=k, return_selected=True)
            counts[sel] += 1
        assert stats.chisquare(counts).pvalue > 0.01

    @pytest.mark.slow
    def test_mixture_column_ranks_first(self):
        first = 0
        for r in range(200):
            rng = make_rng(51, r)
            # after MAD scaling the mixture's KS distance stays near 1/4, so n
            # must be large enough for the null maximum to sit below it
            X = rng.standard_normal((100, 30))
            X[:, 9] += 5.0 * rng.choice([-1.0, 1.0], size=100)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                _, _, ks = ifpca_lite(X, top_k=1, return_selected=True)
            first += int(np.argmax(ks)) == 9
        assert first >= 198

    def test_estimator(self):
        X = make_rng(8).standard_normal((15, 16))
        est = IFPCALite(top_k=4).fit(X)
        assert len(est.selected_) == 4 and est.labels_.shape == (15,)
