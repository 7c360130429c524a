"""Window-size selection by the number of identified signal coordinates.

For each grid point the data are clustered, blocks are identified from the
resulting labels, and ``s_hat`` is the number of coordinates they cover. The
chosen point is the one with the smallest ``h1`` among those with
``s_hat > (1 - eps) * max s_hat``; ties go to the smaller second window, then
to the larger ``s_hat``.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from ._validation import check_data, check_grid_shape
from .cfa import CFAPCA
from .exceptions import ConfigurationError
from .ma import ma_pca
from .recovery import PostClusteringRecovery

H_MAX_DEFAULTS = {50: 15, 100: 25, 200: 30}


def default_h_max(p1):
    """Largest window for a grid side ``p1``: the tabulated value or the nearest below it."""
    keys = sorted(k for k in H_MAX_DEFAULTS if k <= p1)
    return H_MAX_DEFAULTS[keys[-1]] if keys else max(1, p1 // 4)


@dataclass
class TuningGrid:
    """Candidate ``(h1, h_other)`` pairs with ``h1 <= h_other``.

    Built from ``h_max`` (all pairs ``1 <= h1 <= h_other <= h_max``) unless
    ``points`` is given explicitly.
    """

    h_max: int = 15
    epsilon: float = 0.01
    points: list = field(default=None)

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError(f"epsilon={self.epsilon} must lie in (0, 1)")
        if self.points is None:
            if self.h_max < 1:
                raise ConfigurationError("h_max must be >= 1")
            self.points = [
                (a, b) for a in range(1, self.h_max + 1) for b in range(a, self.h_max + 1)
            ]
        self.points = [(int(a), int(b)) for a, b in self.points]
        if not self.points:
            raise ConfigurationError("tuning grid is empty")
        for a, b in self.points:
            if not 1 <= a <= b:
                raise ConfigurationError(f"grid point ({a}, {b}) needs 1 <= h1 <= second window")


@dataclass
class TuningResult:
    h1: int
    h_other: int
    no_signal: bool
    table: list  # dicts: h1, h_other, s_hat, labels

    def rows(self):
        return [(r["h1"], r["h_other"], r["s_hat"]) for r in self.table]


def select(table, epsilon):
    """Apply the selection rule to ``[(h1, h_other, s_hat), ...]``.

    Returns ``(h1, h_other, no_signal)``.
    """
    s_max = max(s for _, _, s in table)
    if s_max == 0:
        a, b, _ = min(table)
        return a, b, True
    ok = [(a, b, -s) for a, b, s in table if s > (1 - epsilon) * s_max]
    a, b, _ = min(ok)
    return a, b, False


def _ma_labels(args):
    X, shape, h3 = args
    return ma_pca(X, h3, shape)


def _cfa_labels(args):
    X, shape, h1, h2, min_length = args
    return CFAPCA(h1=h1, h2=h2, grid_shape=shape, min_length=min_length).fit(X).labels_


def _s_hat(args):
    X, labels, h1, shape, min_length = args
    rec = PostClusteringRecovery(h1=h1, grid_shape=shape, min_length=min_length)
    try:
        return rec.fit(X, labels).n_signals_
    except ConfigurationError:
        return 0  # all observations in one estimated group


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _tune(X, grid, grid_shape, min_length, workers, cluster_key, cluster_job, cluster_fn):
    # Labels are computed once per distinct clustering setting and s_hat once
    # per distinct (h1, labels) pair; both are pure, so caching is exact.
    X = check_data(X, min_samples=4)
    shape = check_grid_shape(grid_shape, X.shape[1])
    keys = [cluster_key(a, b) for a, b in grid.points]
    uniq = list(dict.fromkeys(keys))
    labels = dict(zip(uniq, _map(cluster_fn, [cluster_job(X, shape, k) for k in uniq], workers)))

    rec_keys = [(a, labels[k].tobytes()) for (a, _), k in zip(grid.points, keys)]
    rec_uniq = list(dict.fromkeys(rec_keys))
    lab_of = {rk: labels[k] for rk, k in zip(rec_keys, keys)}
    jobs = [(X, lab_of[rk], rk[0], shape, min_length) for rk in rec_uniq]
    s_of = dict(zip(rec_uniq, _map(_s_hat, jobs, workers)))

    table = [
        {"h1": a, "h_other": b, "s_hat": s_of[rk], "labels": labels[k]}
        for (a, b), k, rk in zip(grid.points, keys, rec_keys)
    ]
    h1, h2, flag = select([(r["h1"], r["h_other"], r["s_hat"]) for r in table], grid.epsilon)
    return TuningResult(h1, h2, flag, table)


def tune_ma(X, grid=None, grid_shape=None, min_length=2, workers=1):
    """Choose ``(h1, h3)`` for MA-PCA followed by block identification."""
    return _tune(
        X, grid or TuningGrid(), grid_shape, min_length, workers,
        cluster_key=lambda h1, h3: h3,
        cluster_job=lambda X, shape, h3: (X, shape, h3),
        cluster_fn=_ma_labels,
    )


def tune_cfa(X, grid=None, grid_shape=None, min_length=2, workers=1):
    """Choose ``(h1, h2)`` for CFA-PCA with the same rule as :func:`tune_ma`.

    Each point runs CFA-PCA, then block identification with window ``h1`` on
    its labels.
    """
    return _tune(
        X, grid or TuningGrid(), grid_shape, min_length, workers,
        cluster_key=lambda h1, h2: (h1, h2),
        cluster_job=lambda X, shape, k: (X, shape, k[0], k[1], min_length),
        cluster_fn=_cfa_labels,
    )
