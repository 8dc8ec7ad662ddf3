"""Unit tests for the 1D staggered SBP operator pairs."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbpfdtd.sbp import (
    MIN_CELLS,
    NodeGridKind,
    apply_d,
    assemble_dense,
    build_sbp_pair,
    verify_sbp,
)


def test_minimum_cell_count_enforced():
    with pytest.raises(ValueError):
        build_sbp_pair(MIN_CELLS - 1)
    build_sbp_pair(MIN_CELLS)  # boundary case is legal


@pytest.mark.parametrize("n", [4, 5, 8, 16, 33, 64])
def test_sbp_identity_exact_in_floats(n):
    # closure entries are dyadic rationals, so Q+ + Q-^T - B cancels
    # exactly, not merely to rounding
    chk = verify_sbp(build_sbp_pair(n, h=0.37))
    assert chk.identity_residual == 0.0
    assert chk.ok


@pytest.mark.parametrize("n", [4, 8, 16, 64])
@pytest.mark.parametrize("h", [1.0, 0.05, 3.5])
def test_constants_and_linears_differentiated_exactly(n, h):
    chk = verify_sbp(build_sbp_pair(n, h))
    for (which, degree), resid in chk.accuracy_residuals.items():
        # d/dx of x^1 is O(1), so 1e-13 absolute is a tight float bound
        assert resid <= 1e-13 / min(h, 1.0), (which, degree, resid)


def test_node_layouts():
    pair = build_sbp_pair(6, h=0.5)
    xp = pair.nodes(NodeGridKind.PLUS)
    xm = pair.nodes(NodeGridKind.MINUS)
    assert xp.shape == (7,) and xm.shape == (8,)
    assert xp[0] == 0.0 and xp[-1] == pytest.approx(3.0)
    # minus grid: boundary points plus cell centres, half gaps at ends
    assert xm[0] == 0.0 and xm[-1] == pytest.approx(3.0)
    assert xm[1] == pytest.approx(0.25)
    assert np.allclose(np.diff(xm)[1:-1], 0.5)
    assert np.diff(xm)[0] == pytest.approx(0.25)


def test_norm_weights_positive_and_quadrature_exact():
    pair = build_sbp_pair(9, h=0.2)
    for p in (pair.p_plus, pair.p_minus):
        assert np.all(p > 0)
        # integral of 1 over the interval
        assert p.sum() == pytest.approx(9 * 0.2, rel=1e-14)


def test_boundary_weight_matches_norm_ends():
    pair = build_sbp_pair(12, h=0.7)
    assert pair.boundary_weight(NodeGridKind.PLUS) == pair.p_plus[0] == pair.p_plus[-1]
    assert pair.boundary_weight(NodeGridKind.MINUS) == pair.p_minus[0] == pair.p_minus[-1]


@pytest.mark.parametrize("which", ["plus", "minus"])
def test_matrix_free_apply_matches_dense(which, rng):
    pair = build_sbp_pair(11, h=0.31)
    d = assemble_dense(pair, which)
    n_src = pair.n_nodes(NodeGridKind.MINUS if which == "plus" else NodeGridKind.PLUS)
    v = rng.standard_normal(n_src)
    assert np.allclose(apply_d(pair, which, v), d @ v, rtol=0, atol=1e-13)


def test_dense_shapes():
    pair = build_sbp_pair(5)
    assert assemble_dense(pair, "plus").shape == (6, 7)
    assert assemble_dense(pair, "minus").shape == (7, 6)


def test_second_order_interior_convergence():
    # smooth profile: interior truncation error should fall ~4x per
    # refinement; closure rows are first order but enter through the
    # norm, which this plain max-norm check avoids by masking the ends
    errs = []
    for n in (16, 32, 64):
        pair = build_sbp_pair(n, h=1.0 / n)
        x_src = pair.nodes(NodeGridKind.MINUS)
        d = apply_d(pair, "plus", np.sin(2 * np.pi * x_src))
        x_dst = pair.nodes(NodeGridKind.PLUS)
        exact = 2 * np.pi * np.cos(2 * np.pi * x_dst)
        errs.append(np.max(np.abs(d - exact)[2:-2]))
    assert errs[1] < 0.3 * errs[0]
    assert errs[2] < 0.3 * errs[1]


@settings(max_examples=25, deadline=None)
@given(n=st.integers(min_value=MIN_CELLS, max_value=96),
       h=st.floats(min_value=1e-3, max_value=10.0,
                   allow_nan=False, allow_infinity=False))
def test_identity_holds_for_arbitrary_sizes(n, h):
    chk = verify_sbp(build_sbp_pair(n, h))
    assert chk.identity_residual == 0.0


def test_verify_flags_violations():
    pair = build_sbp_pair(8)
    broken = pair.q_plus_top.copy()
    broken.setflags(write=True)
    broken[0, 0] += 1e-6
    import dataclasses

    bad = dataclasses.replace(pair, q_plus_top=broken)
    assert not verify_sbp(bad).ok
