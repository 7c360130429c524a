"""Minimax boundary functions in the (sparsity beta, strength r) plane.

Signals have ``m = p^{1-alpha-beta}`` blocks of size ``p^alpha`` and strength
``tau = p^{-r}``, with ``n = p^theta`` observations. For clustering and for
signal recovery there is a statistical boundary ``eta`` (no procedure is
consistent for ``r > eta``) and a computational boundary ``eta_tilde`` (no
polynomial-time procedure is consistent for ``r > eta_tilde``). All four are
piecewise linear in ``beta`` and defined on open intervals between
breakpoints; at a breakpoint both one-sided limits are reported.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError

BREAKPOINT_TOL = 1e-12


def c1(theta, alpha):
    return (1.0 - theta - alpha) / 2.0


def c2(theta, alpha):
    return 1.0 - theta / 2.0 - alpha


def check_phase_params(theta, alpha, beta=None):
    if not 0.0 < theta < 1.0:
        raise ConfigurationError(f"theta={theta} must lie in (0, 1)")
    if not 0.0 <= alpha < 1.0:
        raise ConfigurationError(f"alpha={alpha} must lie in [0, 1)")
    if not theta < 1.0 - alpha:
        raise ConfigurationError(f"need theta < 1 - alpha, got theta={theta}, alpha={alpha}")
    if beta is not None and not 0.0 < beta < 1.0 - alpha:
        raise ConfigurationError(f"beta={beta} must lie in (0, 1 - alpha) = (0, {1 - alpha})")


# Each function is a list of (upper breakpoint, linear piece) pairs; the last
# piece runs to the end of the domain beta < 1 - alpha.
def _pieces(theta, alpha):
    a, t = alpha, theta
    k1 = c1(t, a)
    k2 = c2(t, a)
    half = (1.0 - a) / 2.0
    end = 1.0 - a
    return {
        "eta_clu": [
            (k1, lambda b: (1 + t + a - 2 * b) / 4),
            (2 * k1, lambda b: (t + a) / 2),
            (end, lambda b: (1 - b) / 2),
        ],
        "eta_sig": [
            (2 * k1, lambda b: (t + a) / 2),
            (end, lambda b: (1 + t + a - b) / 4),
        ],
        "eta_tilde_clu": [
            (half, lambda b: (1 + t + a - 2 * b) / 4),
            (k2, lambda b: t / 4 + a / 2),
            (end, lambda b: (1 - b) / 2),
        ],
        "eta_tilde_sig": [
            (k1, lambda b: (t + a) / 2),
            (half, lambda b: (1 + t + a - 2 * b) / 4),
            (end, lambda b: t / 4 + a / 2),
        ],
    }


def _evaluate(pieces, beta, side):
    """Value of one piecewise function; ``side`` picks the limit at a breakpoint."""
    for upper, f in pieces:
        if abs(beta - upper) <= BREAKPOINT_TOL:
            if side == "left":
                return f(beta)
            continue
        if beta < upper:
            return f(beta)
    return pieces[-1][1](beta)


@dataclass(frozen=True)
class Boundaries:
    eta_clu: float
    eta_sig: float
    eta_tilde_clu: float
    eta_tilde_sig: float

    def as_tuple(self):
        return (self.eta_clu, self.eta_sig, self.eta_tilde_clu, self.eta_tilde_sig)


@dataclass(frozen=True)
class BoundaryEval:
    """Left and right limits of the four boundaries at ``beta``.

    Each ``eta_*`` property returns the common value of its function unless
    ``beta`` is one of that function's own breakpoints, in which case ``left``
    and ``right`` must be read explicitly. ``kinked`` names those functions.
    """

    left: Boundaries
    right: Boundaries
    kinked: frozenset = frozenset()

    @property
    def at_breakpoint(self):
        return bool(self.kinked)

    def _value(self, name):
        if name in self.kinked:
            raise ValueError(
                f"beta is at a breakpoint of {name}; use .left or .right for one-sided values"
            )
        return getattr(self.left, name)

    @property
    def eta_clu(self):
        return self._value("eta_clu")

    @property
    def eta_sig(self):
        return self._value("eta_sig")

    @property
    def eta_tilde_clu(self):
        return self._value("eta_tilde_clu")

    @property
    def eta_tilde_sig(self):
        return self._value("eta_tilde_sig")


def breakpoints(theta, alpha):
    """Interior breakpoints of the four functions, sorted and de-duplicated."""
    pts = {c1(theta, alpha), 2 * c1(theta, alpha), (1 - alpha) / 2, c2(theta, alpha)}
    return sorted(b for b in pts if 0 < b < 1 - alpha)


def eval_boundaries(theta, alpha, beta):
    check_phase_params(theta, alpha, beta)
    pieces = _pieces(theta, alpha)
    kinked = frozenset(
        name for name, fn in pieces.items()
        if any(abs(beta - upper) <= BREAKPOINT_TOL for upper, _ in fn[:-1])
    )
    sides = {}
    for side in ("left", "right"):
        sides[side] = Boundaries(
            *(_evaluate(pieces[name], beta, side) for name in
              ("eta_clu", "eta_sig", "eta_tilde_clu", "eta_tilde_sig"))
        )
    return BoundaryEval(sides["left"], sides["right"], kinked)


STAT_IMPOSSIBLE = "statistically-impossible"
COMP_IMPOSSIBLE = "computationally-impossible"
ACHIEVABLE = "polynomial-achievable"


def classify(r, eta, eta_tilde):
    """Region of strength exponent ``r`` given the two boundaries.

    Points exactly on a boundary are assigned to the easier side.
    """
    if r > eta:
        return STAT_IMPOSSIBLE
    if r > eta_tilde:
        return COMP_IMPOSSIBLE
    return ACHIEVABLE


def phase_grid(theta, alpha, beta_grid, r_grid):
    """Region table over a (beta, r) grid.

    Returns a list of dicts with keys ``beta, r, class_clu, class_sig``. At a
    breakpoint the boundaries are continuous, so the left limit is used.
    """
    check_phase_params(theta, alpha)
    rows = []
    for beta in np.asarray(beta_grid, dtype=float):
        ev = eval_boundaries(theta, alpha, float(beta))
        b = ev.left
        for r in np.asarray(r_grid, dtype=float):
            rows.append(
                {
                    "beta": float(beta),
                    "r": float(r),
                    "class_clu": classify(r, b.eta_clu, b.eta_tilde_clu),
                    "class_sig": classify(r, b.eta_sig, b.eta_tilde_sig),
                }
            )
    return rows
