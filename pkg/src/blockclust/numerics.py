"""Numeric primitives shared by the clustering and recovery pipelines.

Prefix-sum tables give O(1) block aggregates, ``leading_eigenvector`` extracts
the first principal direction of a small n x n Gram matrix, and ``make_rng``
hands out reproducible, order-independent random streams.
"""

from typing import NamedTuple

import numpy as np

from .exceptions import ConfigurationError, DegenerateSpectrumError


def make_rng(seed, *stream):
    """PCG64 generator for ``(seed, stream...)``.

    The same key always yields the same sequence, independent of the order in
    which streams are requested, so replicate ``r`` can use stream ``r`` no
    matter which worker runs it.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


class PrefixSumTable:
    """Per-observation cumulative sums for O(1) block aggregation.

    For vector data ``table[i, j]`` is the sum of ``X[i, :j]``; for grid data it
    is a summed-area table with ``table[i, r, c]`` the sum over rows ``< r`` and
    columns ``< c``. The raw values are kept so that singleton blocks return the
    original entries exactly.
    """

    def __init__(self, X, shape=None):
        X = np.array(X, dtype=np.float64)
        n, p = X.shape
        shape = (p,) if shape is None else tuple(shape)
        if int(np.prod(shape)) != p:
            raise ConfigurationError(f"shape {shape} does not match {p} columns")
        self.shape = shape
        self.n_samples = n
        self.values = X.reshape((n,) + shape)
        table = np.zeros((n,) + tuple(s + 1 for s in shape))
        if len(shape) == 1:
            np.cumsum(self.values, axis=1, out=table[:, 1:])
        elif len(shape) == 2:
            table[:, 1:, 1:] = self.values.cumsum(axis=1).cumsum(axis=2)
        else:
            raise ConfigurationError("only order-1 and order-2 data are supported")
        self.table = table
        self.table.setflags(write=False)
        self.values.setflags(write=False)

    def window_sums(self, starts, lengths):
        """Raw sums over blocks given 0-based ``starts`` and ``lengths``.

        Both arguments have shape ``(P, q)`` (or ``(P,)`` for vector data).
        Returns an ``(n, P)`` array.
        """
        starts = np.asarray(starts, dtype=np.intp).reshape(-1, len(self.shape))
        lengths = np.asarray(lengths, dtype=np.intp).reshape(-1, len(self.shape))
        ends = starts + lengths
        T = self.table
        if len(self.shape) == 1:
            out = T[:, ends[:, 0]] - T[:, starts[:, 0]]
        else:
            r0, c0 = starts[:, 0], starts[:, 1]
            r1, c1 = ends[:, 0], ends[:, 1]
            out = T[:, r1, c1] - T[:, r0, c1] - T[:, r1, c0] + T[:, r0, c0]
        single = np.all(lengths == 1, axis=1)
        if single.any():
            idx = tuple(starts[single, t] for t in range(len(self.shape)))
            out[:, single] = self.values[(slice(None),) + idx]
        return out

    def aggregates(self, starts, lengths):
        """Block aggregates ``sum_{j in I} X_ij / sqrt(|I|)`` as an ``(n, P)`` array."""
        lengths = np.asarray(lengths, dtype=np.intp).reshape(-1, len(self.shape))
        sizes = np.prod(lengths, axis=1)
        return self.window_sums(starts, lengths) / np.sqrt(sizes)


def block_aggregate(table, i, block):
    """Aggregate of observation ``i`` (0-based) over a Block or TensorBlock.

    Blocks use 1-based inclusive indices, as everywhere in the public API.
    """
    modes = getattr(block, "modes", (block,))
    if len(modes) != len(table.shape):
        raise ConfigurationError("block order does not match the data")
    for b, p in zip(modes, table.shape):
        if b.start < 1 or b.end > p:
            raise ConfigurationError(f"block {b} outside [1, {p}]")
    starts = np.array([[b.start - 1 for b in modes]])
    lengths = np.array([[b.length for b in modes]])
    return float(table.aggregates(starts, lengths)[i, 0])


def sign_labels(v):
    """Entry-wise sign with exact zeros mapped to +1."""
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("sign_labels requires finite input")
    return np.where(v >= 0, 1, -1).astype(np.int64)


def gram(Y):
    """``Y @ Y.T`` symmetrised to remove rounding asymmetry."""
    G = Y @ Y.T
    return 0.5 * (G + G.T)


class EigenResult(NamedTuple):
    vector: np.ndarray
    value: float
    converged: bool
    degenerate: bool
    n_iter: int


def _refine(g, v, lam, steps=2):
    # Rayleigh-quotient steps: solve (g - lam I) y = v and renormalise.
    eye = np.eye(len(v))
    for _ in range(steps):
        try:
            y = np.linalg.solve(g - lam * eye, v)
        except np.linalg.LinAlgError:
            break  # shift is an exact eigenvalue, v is already exact
        yn = np.linalg.norm(y)
        if not np.isfinite(yn) or yn == 0.0:
            break
        y /= yn
        if y @ v < 0:
            y = -y
        v = y
        lam = float(v @ g @ v)
    return v, lam


def _dominant(g, v0, tol, max_iter):
    # Power iteration where round k applies g^(2^k): the running matrix is
    # squared and renormalised, so the gap ratio shrinks doubly-exponentially.
    norm = np.linalg.norm(g)
    m = g / norm
    v = v0
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = m @ v0
        wn = np.linalg.norm(w)
        if wn <= 1e-8 * np.linalg.norm(m):
            # start vector (numerically) orthogonal to the dominant space
            col = np.argmax(np.linalg.norm(m, axis=0))
            w = m[:, col]
            wn = np.linalg.norm(w)
        v = w / wn
        gv = g @ v
        lam = float(v @ gv)
        if np.linalg.norm(gv - lam * v) <= tol * abs(lam):
            v, lam = _refine(g, v, lam)
            return v, lam, True, it
        m = m @ m
        m = 0.5 * (m + m.T)
        mn = np.linalg.norm(m)
        if mn == 0.0 or not np.isfinite(mn):
            break
        m /= mn
    return v, lam, False, max_iter


def leading_eigenvector(g, tol=1e-10, max_iter=10_000, seed=0):
    """Leading eigenvector of a symmetric positive semidefinite matrix.

    Starts from a seeded random unit vector and runs power iteration with
    repeated squaring; ``max_iter`` bounds the number of squaring rounds.
    Converged when ``||g v - (v'gv) v|| <= tol * v'gv``; the converged vector
    is then polished by shifted inverse iteration, since rounding in the
    squared matrices limits its accuracy when the spectral gap is small.

    The returned vector is sign-normalised so that its largest-magnitude entry
    is positive (first such entry on ties). ``degenerate`` is set when the top
    eigenvalue is repeated to relative precision 1e-10, in which case any unit
    vector of the top eigenspace is an acceptable answer.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("g must be a square matrix")
    n = g.shape[0]
    if n < 2:
        raise ValueError("need at least two observations")
    if not np.all(np.isfinite(g)):
        raise ValueError("g contains non-finite entries")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.any(g):
        raise DegenerateSpectrumError("zero Gram matrix has no leading direction")
    g = 0.5 * (g + g.T)

    # A structured start such as the all-ones vector can be an exact
    # eigenvector of a smaller eigenvalue, which power iteration never leaves.
    v0 = make_rng(seed, 0).standard_normal(n)
    v0 /= np.linalg.norm(v0)

    v, lam, converged, n_iter = _dominant(g, v0, tol, max_iter)
    if lam <= 0:
        raise DegenerateSpectrumError("Gram matrix has no positive eigenvalue")

    # second eigenvalue from the deflated matrix, for the degeneracy flag
    deflated = g - lam * np.outer(v, v)
    if np.linalg.norm(deflated) <= 1e-12 * lam:
        lam2 = 0.0
    else:
        u0 = make_rng(seed, 1).standard_normal(n)
        u0 /= np.linalg.norm(u0)
        _, lam2, _, _ = _dominant(deflated, u0, tol, 64)
    degenerate = abs(lam - lam2) <= 1e-10 * lam

    k = int(np.argmax(np.abs(v)))
    if v[k] < 0:
        v = -v
    return EigenResult(v, lam, converged, degenerate, n_iter)
