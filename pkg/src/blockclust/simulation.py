"""Simulation of matrix-valued two-cluster data with block signals.

``X_i = l_i U + Z_i`` with symmetric labels, IID standard normal noise and a
``p1 x p2`` signal matrix ``U`` holding ``m`` rectangular blocks of constant
value ``+tau`` or ``-tau``. Block placement is sequential: a centre is drawn
uniformly from the grid minus a border band and minus the expansions of the
blocks already placed, per-mode sizes are drawn uniformly from
``[L_min, L_max]``, and the draw is accepted only if the whole block avoids
those expansions.
"""

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .baselines import KmeansConfig, ifpca_lite, kmeans2, spectral_baseline
from .blocks import Block, BlockSet, TensorBlock
from .cfa import CFAPCA
from .exceptions import ConfigurationError, InfeasibleConfigurationError
from .ma import ma_pca
from .metrics import hamming_clustering, hamming_signal
from .numerics import make_rng
from .recovery import PostClusteringRecovery

METHODS = ("cfa", "ma", "spectral", "kmeans", "ifpca")
SCHEMA_VERSION = 1

# Settings for a 50 x 50 grid. Each tau grid runs from near-chance loss to
# exact recovery for the method suited to the regime; MID_TAU is the point
# where that method's advantage over the others was largest in pilot runs.
PRESETS = {
    "dense": {
        "alpha": 0.5, "beta": 0.24, "tau_grid": [0.05, 0.1, 0.15, 0.2, 0.3, 0.5],
    },
    "sparse": {
        "alpha": 0.3, "beta": 0.6, "tau_grid": [0.5, 0.6, 0.7, 0.85, 1.0, 1.5],
        "cfa_enumeration": "full",
    },
}
MID_TAU = {"dense": 0.2, "sparse": 0.6}


@dataclass
class SimConfig:
    """Full generative and methodological specification of a sweep.

    Window sizes left as ``None`` are derived from the design: ``h1 = L_max - 1``
    (candidates up to ``L_max`` long), ``h2 = max(h1, d0)`` and
    ``h3 = floor(p1^alpha)``. Scattered layouts use single-coordinate
    candidates (``h1 = 1``, ``min_length = 1``).
    """

    p1: int = 50
    p2: int = 50
    theta: float = 0.4
    alpha: float = 0.5
    beta: float = 0.24
    rho_min: float = 0.8
    rho_max: float = 1.25
    rho0: float = 1.5
    tau_grid: list = field(default_factory=lambda: [0.1])
    reps: int = 100
    seed: int = 0
    signal_layout: str = "block"
    methods: list = field(default_factory=lambda: list(METHODS))
    h1: int = None
    h2: int = None
    h3: int = None
    cfa_enumeration: str = "auto"
    recovery_enumeration: str = "full"
    kmeans_restarts: int = 10

    def __post_init__(self):
        self.tau_grid = [float(t) for t in self.tau_grid]
        self.methods = list(self.methods)
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ConfigurationError(f"unknown methods {sorted(unknown)}")
        if self.signal_layout not in ("block", "scattered"):
            raise ConfigurationError("signal_layout must be 'block' or 'scattered'")
        if self.m < 1:
            raise ConfigurationError(f"block count m={self.m} must be >= 1")
        if self.reps < 1:
            raise ConfigurationError("reps must be >= 1")
        if self.signal_layout == "block":
            if self.L_min < 1 or self.L_min > self.L_max:
                raise ConfigurationError(
                    f"invalid block sizes L_min={self.L_min}, L_max={self.L_max}"
                )

    @property
    def p(self):
        return self.p1 * self.p2

    @property
    def n(self):
        return 2 * math.floor(self.p ** self.theta / 2)

    @property
    def m(self):
        return math.floor(self.p ** (1 - self.alpha - self.beta))

    @property
    def b(self):
        return self.p1 ** self.alpha

    @property
    def L_min(self):
        return math.floor(self.rho_min * self.b)

    @property
    def L_max(self):
        return math.floor(self.rho_max * self.b)

    @property
    def d0(self):
        return math.floor(self.rho0 * self.b)

    @property
    def min_length(self):
        return 1 if self.signal_layout == "scattered" else 2

    @property
    def window_h1(self):
        if self.h1 is not None:
            return self.h1
        return 1 if self.signal_layout == "scattered" else max(1, self.L_max - 1)

    @property
    def window_h2(self):
        if self.h2 is not None:
            return self.h2
        return max(self.window_h1, self.d0, 1)

    @property
    def window_h3(self):
        if self.h3 is not None:
            return self.h3
        return 1 if self.signal_layout == "scattered" else max(1, math.floor(self.b))

    def to_json(self):
        d = asdict(self)
        d.update(
            n=self.n, m=self.m, L_min=self.L_min, L_max=self.L_max, d0=self.d0,
            windows={"h1": self.window_h1, "h2": self.window_h2, "h3": self.window_h3},
        )
        return d


@dataclass
class GroundTruth:
    """Signal pattern with unit magnitude; the data use ``tau * signs``."""

    signs: np.ndarray
    blocks: BlockSet

    @property
    def shape(self):
        return self.signs.shape

    @property
    def support(self):
        return self.signs.ravel() != 0

    def signal(self, tau):
        return tau * self.signs

    def to_json(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "shape": list(self.shape),
            "blocks": [
                {"block": b.to_json(), "sign": int(s)}
                for b, s in zip(self.blocks.blocks, self.blocks.scores)
            ],
        }


def _footprint(center, lengths):
    # 0-based centre; lower half gets floor((L-1)/2) cells
    lo = [c - (L - 1) // 2 for c, L in zip(center, lengths)]
    return lo, [a + L for a, L in zip(lo, lengths)]


def _place_once(cfg, rng, max_draws):
    shape = (cfg.p1, cfg.p2)
    band = math.ceil(cfg.L_max / 2)
    forbidden = np.zeros(shape, dtype=bool)
    inner = np.zeros(shape, dtype=bool)
    inner[band: cfg.p1 - band, band: cfg.p2 - band] = True
    placed = []
    for _ in range(cfg.m):
        ok = False
        for _ in range(max_draws):
            centers = np.flatnonzero((inner & ~forbidden).ravel())
            if centers.size == 0:
                break
            c = np.unravel_index(int(centers[rng.integers(centers.size)]), shape)
            lengths = rng.integers(cfg.L_min, cfg.L_max + 1, size=2)
            lo, hi = _footprint(c, lengths)
            if min(lo) < 0 or hi[0] > cfg.p1 or hi[1] > cfg.p2:
                continue
            if forbidden[lo[0]:hi[0], lo[1]:hi[1]].any():
                continue
            ok = True
            break
        if not ok:
            return placed
        placed.append((lo, hi))
        e0 = max(0, lo[0] - cfg.d0), min(cfg.p1, hi[0] + cfg.d0)
        e1 = max(0, lo[1] - cfg.d0), min(cfg.p2, hi[1] + cfg.d0)
        forbidden[e0[0]:e0[1], e1[0]:e1[1]] = True
    return placed


def block_gap(b1, b2):
    """Chebyshev gap: the largest per-mode ``start - end`` separation."""
    return max(
        max(a.start - b.end, b.start - a.end) for a, b in zip(b1.modes, b2.modes)
    )


def generate_signal(cfg, rng, max_draws=200, max_restarts=100):
    """Random signal layout; fixed for all replicates of a sweep.

    Each placed block is separated by at least ``d0`` free cells (Chebyshev) from the
    earlier ones. A layout that gets stuck is restarted; after
    ``max_restarts`` failures an InfeasibleConfigurationError reports the best
    block count reached.
    """
    shape = (cfg.p1, cfg.p2)
    signs = np.zeros(shape)
    out = BlockSet()
    if cfg.signal_layout == "scattered":
        cells = rng.choice(cfg.p, size=cfg.m, replace=False)
        cells.sort()
        s = rng.choice((-1.0, 1.0), size=cfg.m)
        for cell, sign in zip(cells, s):
            r, c = divmod(int(cell), cfg.p2)
            signs[r, c] = sign
            out.blocks.append(TensorBlock((Block(r + 1, r + 1), Block(c + 1, c + 1))))
            out.scores.append(float(sign))
        return GroundTruth(signs, out)

    best = 0
    for _ in range(max_restarts):
        placed = _place_once(cfg, rng, max_draws)
        best = max(best, len(placed))
        if len(placed) == cfg.m:
            break
    else:
        raise InfeasibleConfigurationError(
            f"could only place {best} of {cfg.m} blocks on a {cfg.p1}x{cfg.p2} grid "
            f"(L_max={cfg.L_max}, d0={cfg.d0})",
            achieved=best,
        )
    s = rng.choice((-1.0, 1.0), size=cfg.m)
    for (lo, hi), sign in zip(placed, s):
        signs[lo[0]:hi[0], lo[1]:hi[1]] = sign
        out.blocks.append(
            TensorBlock((Block(int(lo[0]) + 1, int(hi[0])), Block(int(lo[1]) + 1, int(hi[1]))))
        )
        out.scores.append(float(sign))
    blocks = out.blocks
    for i in range(len(blocks)):
        for j in range(i):
            assert block_gap(blocks[i], blocks[j]) >= cfg.d0
    return GroundTruth(signs, out)


def generate_noise(n, p, rng):
    """Labels (+1/-1 with probability 1/2) and the ``n x p`` noise matrix."""
    labels = 2 * rng.integers(0, 2, size=n) - 1
    Z = rng.standard_normal((n, p))
    return labels.astype(np.int64), Z


def generate_dataset(truth, n, tau, rng):
    """One replicate ``X = l U + Z`` with ``U = tau * truth.signs`` flattened row-major."""
    labels, Z = generate_noise(n, truth.signs.size, rng)
    X = labels[:, None] * truth.signal(tau).ravel()[None, :] + Z
    return X, labels


def run_method(method, X, cfg):
    """Labels and estimated support (boolean mask) for one method.

    CFA-PCA recovers signals with its own pre-clustering screen; every other
    method is followed by post-clustering block identification.
    """
    shape = (cfg.p1, cfg.p2)
    h1, h2, h3 = cfg.window_h1, cfg.window_h2, cfg.window_h3
    info = {}
    if method == "cfa":
        est = CFAPCA(
            h1=h1, h2=h2, enumeration=cfg.cfa_enumeration,
            min_length=cfg.min_length, grid_shape=shape, fallback_h3=h3,
        ).fit(X)
        info["fallback"] = est.fallback_
        return est.labels_, est.blocks_.support_mask(shape).ravel(), info
    if method == "ma":
        labels = ma_pca(X, h3, shape)
    elif method == "spectral":
        labels = spectral_baseline(X)
    elif method == "kmeans":
        labels = kmeans2(X, KmeansConfig(restarts=cfg.kmeans_restarts, seed=cfg.seed))
    elif method == "ifpca":
        labels = ifpca_lite(X)
    else:
        raise ConfigurationError(f"unknown method {method!r}")
    rec = PostClusteringRecovery(
        h1=h1, enumeration=cfg.recovery_enumeration,
        min_length=cfg.min_length, grid_shape=shape,
    )
    try:
        support = rec.fit(X, labels).get_support()
    except ConfigurationError:
        # one estimated group (or a singleton group): nothing to align on
        support = None
    return labels, support, info


def run_replicate(cfg, truth, rep):
    """Losses for replicate ``rep`` at every tau and method.

    The replicate's labels and noise come from RNG stream ``rep`` and are
    shared across the tau grid. Returns ``(clu, sig, err)`` arrays of shape
    ``(len(tau_grid), len(methods))``; failures show as NaN with ``err`` set.
    """
    rng = make_rng(cfg.seed, 1, rep)
    labels, Z = generate_noise(cfg.n, cfg.p, rng)
    support = truth.support
    T, M = len(cfg.tau_grid), len(cfg.methods)
    clu = np.full((T, M), np.nan)
    sig = np.full((T, M), np.nan)
    err = np.zeros((T, M), dtype=bool)
    for a, tau in enumerate(cfg.tau_grid):
        X = labels[:, None] * truth.signal(tau).ravel()[None, :] + Z
        for b, method in enumerate(cfg.methods):
            try:
                est, s_hat, _ = run_method(method, X, cfg)
            except Exception:  # recorded per cell, never fatal for the sweep
                err[a, b] = True
                continue
            clu[a, b] = hamming_clustering(est, labels)
            if s_hat is None:
                err[a, b] = True
            else:
                sig[a, b] = hamming_signal(s_hat, support)
    return clu, sig, err


def _replicate_job(args):
    cfg, truth, rep = args
    return run_replicate(cfg, truth, rep)


@dataclass
class SweepResult:
    config: SimConfig
    truth: GroundTruth
    rows: list

    def cell(self, tau, method):
        for r in self.rows:
            if r["method"] == method and r["tau"] == float(tau):
                return r
        raise KeyError((tau, method))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["tau", "method", "clu_loss", "sig_loss", "reps", "failures", "flagged"]
        w.writerow(cols)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in cols])
        return buf.getvalue()

    def metadata(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_json(),
            "truth": self.truth.to_json(),
        }


def _fmt(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_sweep(cfg, workers=1, truth=None):
    """Average clustering and signal losses over replicates at each tau.

    Replicates run in ``workers`` processes; results are reduced in replicate
    order, so the output does not depend on the worker count. A (tau, method)
    cell with more than 10% failed replicates is flagged.
    """
    if truth is None:
        truth = generate_signal(cfg, make_rng(cfg.seed, 0))
    jobs = [(cfg, truth, r) for r in range(cfg.reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_replicate_job, jobs))
    else:
        results = [_replicate_job(j) for j in jobs]
    clu = np.stack([r[0] for r in results])
    sig = np.stack([r[1] for r in results])
    err = np.stack([r[2] for r in results])
    rows = []
    for a, tau in enumerate(cfg.tau_grid):
        for b, method in enumerate(cfg.methods):
            c = clu[:, a, b]
            s = sig[:, a, b]
            fails = int(err[:, a, b].sum())
            rows.append(
                {
                    "tau": tau,
                    "method": method,
                    "clu_loss": _ordered_mean(c),
                    "sig_loss": _ordered_mean(s),
                    "reps": cfg.reps,
                    "failures": fails,
                    "flagged": fails > 0.1 * cfg.reps,
                }
            )
    return SweepResult(cfg, truth, rows)


def _ordered_mean(values):
    total = 0.0
    count = 0
    for v in values:
        if not np.isnan(v):
            total += float(v)
            count += 1
    return total / count if count else float("nan")


def write_sweep(result, csv_path, truth_path=None):
    with open(csv_path, "w", newline="") as fh:
        fh.write(result.to_csv())
    if truth_path is not None:
        with open(truth_path, "w") as fh:
            json.dump(result.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")
