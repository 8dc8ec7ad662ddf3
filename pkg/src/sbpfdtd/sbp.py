"""Staggered summation-by-parts first-derivative operators in 1D.

Two node families discretize the interval [0, L], L = n*h, for a cell
count n and width h:

* plus grid:   n+1 nodes at 0, h, 2h, ..., nh          (cell edges)
* minus grid:  n+2 nodes at 0, h/2, 3h/2, ..., nh       (cell centres
  plus both interval endpoints)

``d_plus`` differentiates minus-grid data onto the plus grid and
``d_minus`` differentiates plus-grid data onto the minus grid.  With the
diagonal norms ``p_plus``/``p_minus`` they satisfy the summation-by-parts
identity

    Q_plus + Q_minus^T = B,      Q = P D,

where B is zero except for -1 at the (first, first) and +1 at the
(last, last) corner.  Every entry of Q and P is a dyadic rational times
h, so the identity holds *exactly* in binary floating point; tests can
assert a zero residual rather than a tolerance.

Interior stencils are the plain two-point difference (second-order on
the staggered arrangement); the closures are first-order accurate, and
both operators differentiate constants and linears exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NodeGridKind",
    "SbpOperatorPair",
    "SbpCheck",
    "build_sbp_pair",
    "apply_d",
    "assemble_dense",
    "verify_sbp",
    "MIN_CELLS",
]

# Closure blocks overlap for fewer than 4 cells.
MIN_CELLS = 4


class NodeGridKind(enum.Enum):
    """Which of the two staggered node families a quantity lives on."""

    PLUS = "plus"
    MINUS = "minus"


# Undivided Q closures (exact dyadic entries, h = 1).  Rows are the first
# and last rows of Q = P D; interior rows are the plain [-1, +1] pair.
_Q_PLUS_TOP = np.array([
    [-1 / 2, 1 / 4, 1 / 4],
    [-1 / 2, -1 / 4, 3 / 4],
])
_Q_PLUS_BOT = np.array([
    [-3 / 4, 1 / 4, 1 / 2],
    [-1 / 4, -1 / 4, 1 / 2],
])
_Q_MINUS_TOP = np.array([
    [-1 / 2, 1 / 2, 0.0],
    [-1 / 4, 1 / 4, 0.0],
    [-1 / 4, -3 / 4, 1.0],
])
_Q_MINUS_BOT = np.array([
    [-1.0, 3 / 4, 1 / 4],
    [0.0, -1 / 4, 1 / 4],
    [0.0, -1 / 2, 1 / 2],
])

# Norm (quadrature weight) closures, h = 1.
_P_PLUS_ENDS = np.array([1 / 2])
_P_MINUS_ENDS = np.array([1 / 2, 1 / 4, 5 / 4])


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SbpOperatorPair:
    """Staggered SBP derivative pair for one axis.

    The derivative operators are held as closure blocks plus an interior
    coefficient so they can be applied matrix-free; ``assemble_dense``
    materializes them for oracle-style checks.  ``d_*`` blocks contain the
    1/h scaling, ``q_*`` blocks are the undivided (dyadic) entries.
    """

    n_cells: int
    h: float
    q_plus_top: np.ndarray
    q_plus_bot: np.ndarray
    q_minus_top: np.ndarray
    q_minus_bot: np.ndarray
    p_plus: np.ndarray    # (n+1,) includes h
    p_minus: np.ndarray   # (n+2,) includes h
    d_plus_top: np.ndarray    # (2, 3), rows of D_plus, cols 0..2
    d_plus_bot: np.ndarray    # (2, 3), cols n-1..n+1
    d_minus_top: np.ndarray   # (3, 3), cols 0..2
    d_minus_bot: np.ndarray   # (3, 3), cols n-2..n

    def n_nodes(self, kind: NodeGridKind) -> int:
        return self.n_cells + (1 if kind is NodeGridKind.PLUS else 2)

    def nodes(self, kind: NodeGridKind) -> np.ndarray:
        """Node coordinates of one grid family, ascending from 0 to n*h."""
        n, h = self.n_cells, self.h
        if kind is NodeGridKind.PLUS:
            return np.arange(n + 1) * h
        x = np.empty(n + 2)
        x[0] = 0.0
        x[1:-1] = (np.arange(n) + 0.5) * h
        x[-1] = n * h
        return x

    def boundary_weight(self, kind: NodeGridKind) -> float:
        """Norm weight at either interval endpoint (same on both)."""
        p = self.p_plus if kind is NodeGridKind.PLUS else self.p_minus
        return float(p[0])


def build_sbp_pair(n_cells: int, h: float = 1.0) -> SbpOperatorPair:
    """Construct the staggered SBP operator pair for ``n_cells`` cells of width ``h``."""
    if int(n_cells) != n_cells or n_cells < MIN_CELLS:
        raise ValueError(
            f"need at least {MIN_CELLS} cells for the SBP boundary closures, got {n_cells}"
        )
    if not (np.isfinite(h) and h > 0.0):
        raise ValueError(f"cell width must be positive and finite, got {h}")
    n = int(n_cells)

    p_plus = np.ones(n + 1)
    p_plus[[0, -1]] = _P_PLUS_ENDS[0]
    p_plus *= h

    p_minus = np.ones(n + 2)
    p_minus[:3] = _P_MINUS_ENDS
    p_minus[-3:] = _P_MINUS_ENDS[::-1]
    p_minus *= h

    # D rows = Q rows / p[row]; the row weights repeat the closure pattern.
    d_plus_top = _Q_PLUS_TOP / (p_plus[:2, None])
    d_plus_bot = _Q_PLUS_BOT / (p_plus[-2:, None])
    d_minus_top = _Q_MINUS_TOP / (p_minus[:3, None])
    d_minus_bot = _Q_MINUS_BOT / (p_minus[-3:, None])

    return SbpOperatorPair(
        n_cells=n,
        h=float(h),
        q_plus_top=_freeze(_Q_PLUS_TOP * h),
        q_plus_bot=_freeze(_Q_PLUS_BOT * h),
        q_minus_top=_freeze(_Q_MINUS_TOP * h),
        q_minus_bot=_freeze(_Q_MINUS_BOT * h),
        p_plus=_freeze(p_plus),
        p_minus=_freeze(p_minus),
        d_plus_top=_freeze(d_plus_top),
        d_plus_bot=_freeze(d_plus_bot),
        d_minus_top=_freeze(d_minus_top),
        d_minus_bot=_freeze(d_minus_bot),
    )


def _which_kind(which) -> NodeGridKind:
    if isinstance(which, NodeGridKind):
        return which
    try:
        return NodeGridKind(which)
    except ValueError:
        raise ValueError(f"operator selector must be 'plus' or 'minus', got {which!r}") from None


def apply_d(pair: SbpOperatorPair, which, values: np.ndarray) -> np.ndarray:
    """Apply ``d_plus`` or ``d_minus`` to a 1D array of nodal values.

    ``which='plus'`` consumes minus-grid data (n+2 values) and returns the
    derivative on the plus grid (n+1 values); ``which='minus'`` is the
    reverse.  Matrix-free: closure rows and the interior stencil are
    applied directly.
    """
    kind = _which_kind(which)
    v = np.asarray(values)
    n = pair.n_cells
    if kind is NodeGridKind.PLUS:
        n_src, n_dst, ioff = n + 2, n + 1, 0
        top, bot = pair.d_plus_top, pair.d_plus_bot
    else:
        n_src, n_dst, ioff = n + 1, n + 2, -1
        top, bot = pair.d_minus_top, pair.d_minus_bot
    if v.shape != (n_src,):
        raise ValueError(f"expected {n_src} source values for d_{kind.value}, got shape {v.shape}")

    out = np.zeros(n_dst, dtype=np.result_type(v.dtype, np.float64))
    kt, kb = top.shape[0], bot.shape[0]
    out[:kt] = top @ v[:3]
    out[n_dst - kb:] = bot @ v[-3:]
    r = np.arange(kt, n_dst - kb)
    out[r] = (v[r + ioff + 1] - v[r + ioff]) / pair.h
    return out


def assemble_dense(pair: SbpOperatorPair, which) -> np.ndarray:
    """Materialize ``d_plus`` or ``d_minus`` as a dense matrix (oracle use)."""
    kind = _which_kind(which)
    n = pair.n_cells
    if kind is NodeGridKind.PLUS:
        n_dst, n_src, ioff = n + 1, n + 2, 0
        top, bot = pair.d_plus_top, pair.d_plus_bot
    else:
        n_dst, n_src, ioff = n + 2, n + 1, -1
        top, bot = pair.d_minus_top, pair.d_minus_bot
    mat = np.zeros((n_dst, n_src))
    kt, kb = top.shape[0], bot.shape[0]
    mat[:kt, :3] = top
    mat[n_dst - kb:, n_src - 3:] = bot
    inv_h = 1.0 / pair.h
    for r in range(kt, n_dst - kb):
        mat[r, r + ioff] = -inv_h
        mat[r, r + ioff + 1] = inv_h
    return mat


def _assemble_q(pair: SbpOperatorPair, kind: NodeGridKind) -> np.ndarray:
    """Undivided Q = P D with exact dyadic entries."""
    n = pair.n_cells
    if kind is NodeGridKind.PLUS:
        n_dst, n_src, ioff = n + 1, n + 2, 0
        top, bot = pair.q_plus_top, pair.q_plus_bot
    else:
        n_dst, n_src, ioff = n + 2, n + 1, -1
        top, bot = pair.q_minus_top, pair.q_minus_bot
    q = np.zeros((n_dst, n_src))
    kt, kb = top.shape[0], bot.shape[0]
    q[:kt, :3] = top
    q[n_dst - kb:, n_src - 3:] = bot
    for r in range(kt, n_dst - kb):
        q[r, r + ioff] = -pair.h
        q[r, r + ioff + 1] = pair.h
    return q


@dataclass(frozen=True)
class SbpCheck:
    """Result of ``verify_sbp``: residuals of the defining identities."""

    n_cells: int
    h: float
    identity_residual: float       # max |Q_plus + Q_minus^T - B| / h
    accuracy_residuals: dict       # {("plus"|"minus", degree): max error}
    ok: bool


def verify_sbp(pair: SbpOperatorPair, tol: float = 1e-13) -> SbpCheck:
    """Check the SBP identity and polynomial accuracy of an operator pair.

    The identity residual is scaled by 1/h so it is dimensionless; with
    the dyadic closure entries stored here it comes out exactly 0.0.
    Accuracy residuals are the max-norm errors of differentiating x^0 and
    x^1 between the two grids.
    """
    n, h = pair.n_cells, pair.h
    q_sum = _assemble_q(pair, NodeGridKind.PLUS) + _assemble_q(pair, NodeGridKind.MINUS).T
    b = np.zeros_like(q_sum)
    b[0, 0] = -h
    b[-1, -1] = h
    identity_residual = float(np.max(np.abs(q_sum - b))) / h

    acc = {}
    for kind in NodeGridKind:
        src = pair.nodes(NodeGridKind.MINUS if kind is NodeGridKind.PLUS else NodeGridKind.PLUS)
        for degree in (0, 1):
            exact = np.zeros(pair.n_nodes(kind)) if degree == 0 else np.ones(pair.n_nodes(kind))
            err = apply_d(pair, kind, src**degree if degree else np.ones_like(src)) - exact
            acc[(kind.value, degree)] = float(np.max(np.abs(err)))

    ok = identity_residual <= tol and all(v <= tol * max(1.0, 1.0 / h) for v in acc.values())
    return SbpCheck(n_cells=n, h=h, identity_residual=identity_residual,
                    accuracy_residuals=acc, ok=ok)
