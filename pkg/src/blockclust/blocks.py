"""Blocks of contiguous coordinates and the operations on them.

Public block objects use 1-based inclusive indices. Candidate collections used
by the scans are stored column-wise in :class:`CandidateBlocks` with 0-based
starts so that aggregates, overlap tests and the step-down selection run as
vectorised numpy code.
"""

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .exceptions import ConfigurationError

# Above this many candidates "auto" enumeration switches to the dyadic family.
AUTO_DYADIC_LIMIT = 20_000


@dataclass(frozen=True, order=True)
class Block:
    """Inclusive interval ``{start, ..., end}`` of 1-based coordinates."""

    start: int
    end: int

    def __post_init__(self):
        object.__setattr__(self, "start", int(self.start))
        object.__setattr__(self, "end", int(self.end))
        if self.start < 1 or self.end < self.start:
            raise ConfigurationError(f"invalid block [{self.start}, {self.end}]")

    @property
    def length(self):
        return self.end - self.start + 1

    @property
    def size(self):
        return self.length

    @property
    def modes(self):
        return (self,)

    def indices(self):
        return range(self.start, self.end + 1)

    def to_json(self):
        return {"start": self.start, "end": self.end}

    def __str__(self):
        return f"{self.start}-{self.end}"


@dataclass(frozen=True, order=True)
class TensorBlock:
    """Cartesian product of one :class:`Block` per mode."""

    modes: tuple

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes or not all(isinstance(b, Block) for b in self.modes):
            raise ConfigurationError("TensorBlock needs one Block per mode")

    @property
    def size(self):
        return prod(b.length for b in self.modes)

    def to_json(self):
        return [b.to_json() for b in self.modes]

    def __str__(self):
        return " x ".join(str(b) for b in self.modes)


def block_from_json(obj):
    if isinstance(obj, dict):
        return Block(int(obj["start"]), int(obj["end"]))
    return TensorBlock(tuple(block_from_json(o) for o in obj))


@dataclass
class BlockSet:
    """Blocks in selection order, each with the score it was ranked by."""

    blocks: list = field(default_factory=list)
    scores: list = field(default_factory=list)
    stats: list = field(default_factory=list)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __getitem__(self, k):
        return self.blocks[k]

    def support_mask(self, shape):
        """Boolean mask over the grid marking coordinates covered by any block."""
        shape = tuple(shape)
        mask = np.zeros(shape, dtype=bool)
        for b in self.blocks:
            modes = b.modes
            if len(modes) != len(shape):
                raise ConfigurationError("block order does not match grid shape")
            mask[tuple(slice(m.start - 1, m.end) for m in modes)] = True
        return mask

    def support(self, shape):
        """Sorted 1-based flat (row-major) indices of the covered coordinates."""
        return (np.flatnonzero(self.support_mask(shape).ravel()) + 1).tolist()

    def to_json(self):
        out = []
        for k, (b, s) in enumerate(zip(self.blocks, self.scores)):
            entry = {"block": b.to_json(), "score": float(s)}
            if k < len(self.stats):
                entry.update(self.stats[k])
            out.append(entry)
        return out


def expand(block, c, p):
    """Widen ``block`` by ``c`` on both sides, clamped to ``[1, p]``.

    For a TensorBlock, ``p`` is the grid shape and the same width is used on
    every mode.
    """
    if c < 0:
        raise ConfigurationError("expansion width must be non-negative")
    if isinstance(block, TensorBlock):
        return TensorBlock(
            tuple(expand(b, c, pt) for b, pt in zip(block.modes, p))
        )
    if block.end > p:
        raise ConfigurationError(f"block {block} outside [1, {p}]")
    return Block(max(1, block.start - c), min(p, block.end + c))


def _overlap(a, b):
    return max(0, min(a.end, b.end) - max(a.start, b.start) + 1)


def intersection_size(b1, b2):
    m1, m2 = b1.modes, b2.modes
    if len(m1) != len(m2):
        raise ConfigurationError("cannot compare blocks of different order")
    return prod(_overlap(a, b) for a, b in zip(m1, m2))


def dissimilarity(b1, b2):
    """``1 - |I1 & I2| / sqrt(|I1| |I2|)``; 0 for identical, 1 for disjoint blocks."""
    return 1.0 - intersection_size(b1, b2) / np.sqrt(b1.size * b2.size)


def maxmin_dissimilarity(truth, est):
    """Worst-case (over true blocks) distance to the closest estimated block.

    Returns 1 when nothing was estimated.
    """
    truth = list(truth)
    est = list(est)
    if not truth:
        raise ConfigurationError("truth must contain at least one block")
    if not est:
        return 1.0
    return max(min(dissimilarity(e, t) for e in est) for t in truth)


def _mode_family(p, h1, mode, min_length):
    max_len = min(h1 + 1, p)
    if mode == "full":
        lengths = range(min_length, max_len + 1)
        pairs = [(s, L) for s in range(p) for L in lengths if s + L <= p]
    elif mode == "dyadic":
        pairs = []
        L = 1
        while L <= max_len:
            if L >= min_length:
                stride = max(1, L // 2)
                pairs.extend((s, L) for s in range(0, p - L + 1, stride))
            L *= 2
        pairs.sort()
    else:
        raise ConfigurationError(f"unknown enumeration mode {mode!r}")
    return pairs


def count_full(shape, h1, min_length=2):
    """Number of candidates in full enumeration, without building them."""
    total = 1
    for p in shape:
        max_len = min(h1 + 1, p)
        total *= sum(p - L + 1 for L in range(min_length, max_len + 1))
    return total


def resolve_mode(shape, h1, mode, min_length=2):
    if mode == "auto":
        return "full" if count_full(shape, h1, min_length) <= AUTO_DYADIC_LIMIT else "dyadic"
    return mode


@dataclass
class CandidateBlocks:
    """Column store of candidate blocks on a grid.

    ``starts`` and ``lengths`` are ``(P, q)`` integer arrays with 0-based starts.
    Rows are ordered lexicographically by start (mode by mode) and then by
    length, so the first maximiser of any score breaks ties towards the lower
    start and the shorter block.
    """

    shape: tuple
    starts: np.ndarray
    lengths: np.ndarray
    h1: int
    mode: str

    def __len__(self):
        return self.starts.shape[0]

    @property
    def ends(self):
        # exclusive, 0-based
        return self.starts + self.lengths

    @property
    def sizes(self):
        return np.prod(self.lengths, axis=1)

    def block(self, k):
        blocks = tuple(
            Block(int(s) + 1, int(s + L))
            for s, L in zip(self.starts[k], self.lengths[k])
        )
        return blocks[0] if len(blocks) == 1 else TensorBlock(blocks)

    def to_blocks(self, idx=None):
        idx = range(len(self)) if idx is None else idx
        return [self.block(k) for k in idx]

    def hits_expanded(self, k, c, rows=None):
        """Mask of candidates intersecting ``expand(block k, c)``."""
        lo = self.starts[k] - c
        hi = self.ends[k] + c
        starts = self.starts if rows is None else self.starts[rows]
        ends = self.ends if rows is None else self.ends[rows]
        return np.all((starts < hi) & (ends > lo), axis=1)


def candidate_blocks(shape, h1, mode="full", min_length=2):
    """Candidate family on a grid: product of per-mode interval families.

    Per mode, full enumeration holds every interval of length ``min_length``
    to ``h1 + 1`` (i.e. ``{j, ..., j + h}`` with ``min_length - 1 <= h <= h1``);
    dyadic enumeration keeps power-of-two lengths in that range at stride
    ``max(1, length // 2)``. ``mode="auto"`` picks dyadic once the full family
    would exceed ``AUTO_DYADIC_LIMIT`` candidates.
    """
    shape = tuple(int(s) for s in shape)
    if h1 < 1:
        raise ConfigurationError(f"h1 must be >= 1, got {h1}")
    if min_length not in (1, 2):
        raise ConfigurationError("min_length must be 1 or 2")
    mode = resolve_mode(shape, h1, mode, min_length)
    families = [_mode_family(p, h1, mode, min_length) for p in shape]
    if any(not f for f in families):
        raise ConfigurationError(
            f"no candidate blocks for shape {shape}, h1={h1}, min_length={min_length}"
        )
    if len(shape) == 1:
        arr = np.array(families[0], dtype=np.intp)
        starts, lengths = arr[:, :1], arr[:, 1:]
    else:
        a = np.array(families[0], dtype=np.intp)
        b = np.array(families[1], dtype=np.intp)
        ia = np.repeat(np.arange(len(a)), len(b))
        ib = np.tile(np.arange(len(b)), len(a))
        starts = np.column_stack([a[ia, 0], b[ib, 0]])
        lengths = np.column_stack([a[ia, 1], b[ib, 1]])
        order = np.lexsort((lengths[:, 1], lengths[:, 0], starts[:, 1], starts[:, 0]))
        starts, lengths = starts[order], lengths[order]
    return CandidateBlocks(shape, starts, lengths, h1, mode)


def enumerate_blocks(p, h1, mode="full", min_length=2):
    """List of :class:`Block` in the candidate family on ``{1, ..., p}``."""
    if h1 < 1:
        raise ConfigurationError(f"h1 must be >= 1, got {h1}")
    return candidate_blocks((p,), h1, mode, min_length).to_blocks()


def step_down(cands, significant, scores, window):
    """Greedy selection shared by the CFA screen and post-clustering recovery.

    Repeatedly take the significant candidate with the largest ``|score|``
    (first in candidate order on ties), then discard every candidate that
    intersects its expansion by ``window``. Returns selected row indices in
    selection order.
    """
    alive = np.asarray(significant, dtype=bool).copy()
    absval = np.abs(np.asarray(scores, dtype=np.float64))
    alive &= ~np.isnan(absval)
    chosen = []
    while alive.any():
        rows = np.flatnonzero(alive)
        k = int(rows[np.argmax(absval[rows])])
        chosen.append(k)
        alive[rows[cands.hits_expanded(k, window, rows)]] = False
    return chosen
