"""Dense assembly of the semi-discrete operator, for verification only.

Everything here materializes matrices the production path never forms:
3D derivative operators as Kronecker products of the dense 1D SBP
matrices, SAT penalties as explicit boundary-row couplings, and the
fully discrete one-step (amplification) matrix of the leapfrog.  Tests
compare the matrix-free kernels against these matrices entry by entry;
keep the two code paths independent.

State ordering matches ``Simulation.state_vector``: components in the
order Ex Ey Ez / Hx Hy Hz, each array raveled C-style from its
[iz, iy, ix] storage, i.e. x fastest.
"""

from __future__ import annotations

import cmath

import numpy as np

from .grids import (
    E_COMPONENTS,
    H_COMPONENTS,
    GridSpec,
    build_axis_pairs,
    component_kinds,
    component_shape,
    face_slicer,
    norm_weights,
)
from .materials import MaterialGrid
from .sbp import NodeGridKind, assemble_dense
from .solver import CURL_PAIRS, SatConfig, _E_CURL, _H_CURL

__all__ = [
    "dense_derivative",
    "assemble_semidiscrete",
    "one_step_matrix",
    "weighted_symmetry_residual",
]


def _stack_layout(grid: GridSpec, comps) -> tuple:
    offsets = {}
    pos = 0
    for c in comps:
        size = int(np.prod(component_shape(grid, c)))
        offsets[c] = (pos, size)
        pos += size
    return offsets, pos


def dense_derivative(grid: GridSpec, target: str, axis: str, pairs=None) -> np.ndarray:
    """Dense 3D derivative along ``axis`` landing on ``target``'s node set.

    The 1D operator is ``d_plus`` when the target is on the plus family
    along that axis, ``d_minus`` otherwise; the other two axes carry
    identities sized for the target's transverse node counts.
    """
    pairs = pairs or build_axis_pairs(grid)
    kinds = component_kinds(target)
    which = "plus" if kinds[axis] is NodeGridKind.PLUS else "minus"
    d = assemble_dense(pairs[axis], which)
    mats = []
    for ax in ("z", "y", "x"):  # storage order, x fastest => rightmost kron factor
        if ax == axis:
            mats.append(d)
        else:
            n = grid.cells(ax) + (1 if kinds[ax] is NodeGridKind.PLUS else 2)
            mats.append(np.eye(n))
    return np.kron(mats[0], np.kron(mats[1], mats[2]))


def _face_flat_indices(grid: GridSpec, comp: str, face: str) -> np.ndarray:
    shape = component_shape(grid, comp)
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    return idx[face_slicer(comp, face)].ravel()


def assemble_semidiscrete(grid: GridSpec, sat: SatConfig,
                          materials: MaterialGrid | None = None):
    """Dense blocks of the lossless semi-discrete system.

    Returns ``(m_e, m_h, w_e, w_h)`` with

        dE/dt = m_e @ H,    dH/dt = m_h @ E,

    and ``w_e``/``w_h`` the diagonal entries of the material-weighted SBP
    norm on each stack.  The energy-neutrality statement is that
    ``diag(w_e) m_e + (diag(w_h) m_h)^H`` vanishes.
    """
    sat.validate()
    if materials is None:
        materials = MaterialGrid.uniform(grid)
    if np.any(materials.sigma_e != 0.0):
        raise ValueError("dense oracle covers lossless media only")
    pairs = build_axis_pairs(grid)
    e_off, e_size = _stack_layout(grid, E_COMPONENTS)
    h_off, h_size = _stack_layout(grid, H_COMPONENTS)
    dtype = complex if sat.requires_complex() else float
    m_e = np.zeros((e_size, h_size), dtype=dtype)
    m_h = np.zeros((h_size, e_size), dtype=dtype)

    for target, terms in _E_CURL.items():
        r0, _ = e_off[target]
        for src, axis, sign in terms:
            c0, _ = h_off[src]
            block = sign * dense_derivative(grid, target, axis, pairs)
            m_e[r0:r0 + block.shape[0], c0:c0 + block.shape[1]] += block
    for target, terms in _H_CURL.items():
        r0, _ = h_off[target]
        for src, axis, sign in terms:
            c0, _ = e_off[src]
            block = sign * dense_derivative(grid, target, axis, pairs)
            m_h[r0:r0 + block.shape[0], c0:c0 + block.shape[1]] += block

    # SAT penalty rows on the boundary planes
    for ec, hc, ax, _g in CURL_PAIRS:
        periodic = sat.is_periodic(ax)
        alpha = float(sat.phases.get(ax, 0.0))
        for side in ("low", "high"):
            face = f"{ax}_{side}"
            other = f"{ax}_{'high' if side == 'low' else 'low'}"
            fac = cmath.exp((1j if side == "low" else -1j) * alpha)
            if dtype is float:
                fac = fac.real
            # H-side (sigma) on hc rows, E partner columns
            coef = sat.sigma[(hc, ax, side)] / pairs[ax].boundary_weight(component_kinds(hc)[ax])
            if coef:
                rows = h_off[hc][0] + _face_flat_indices(grid, hc, face)
                cols = e_off[ec][0] + _face_flat_indices(grid, ec, face)
                m_h[rows, cols] += coef
                if periodic:
                    cols2 = e_off[ec][0] + _face_flat_indices(grid, ec, other)
                    m_h[rows, cols2] += -coef * fac
            # E-side (chi) on ec rows, H partner columns
            coef = sat.chi[(ec, ax, side)] / pairs[ax].boundary_weight(component_kinds(ec)[ax])
            if coef:
                rows = e_off[ec][0] + _face_flat_indices(grid, ec, face)
                cols = h_off[hc][0] + _face_flat_indices(grid, hc, face)
                m_e[rows, cols] += coef
                if periodic:
                    cols2 = h_off[hc][0] + _face_flat_indices(grid, hc, other)
                    m_e[rows, cols2] += -coef * fac

    # material scaling of the rows, material-weighted norms on the stacks
    w_e = np.empty(e_size)
    w_h = np.empty(h_size)
    for ec in E_COMPONENTS:
        r0, size = e_off[ec]
        eps = materials.sample_eps(ec).ravel()
        m_e[r0:r0 + size] /= eps[:, None]
        w_e[r0:r0 + size] = eps * norm_weights(grid, ec, pairs).ravel()
    for hc in H_COMPONENTS:
        r0, size = h_off[hc]
        mu = materials.sample_mu(hc).ravel()
        m_h[r0:r0 + size] /= mu[:, None]
        w_h[r0:r0 + size] = mu * norm_weights(grid, hc, pairs).ravel()
    return m_e, m_h, w_e, w_h


def weighted_symmetry_residual(m_e, m_h, w_e, w_h) -> float:
    """Relative size of the symmetric part of the weighted system block.

    Zero (to rounding) exactly when the SAT coefficients are energy
    neutral; a single flipped sign shows up at order one.
    """
    s = w_e[:, None] * m_e + (w_h[:, None] * m_h).conj().T
    scale = float(np.max(np.abs(w_e[:, None] * m_e)))
    return float(np.max(np.abs(s))) / max(scale, np.finfo(float).tiny)


def one_step_matrix(m_e, m_h, dt: float) -> np.ndarray:
    """Dense leapfrog amplification matrix over the stacked [E; H] state.

    H advances first using E^n, then E uses the fresh H, hence

        [[I + dt^2 m_e m_h,  dt m_e],
         [dt m_h,             I    ]].
    """
    ne, nh = m_e.shape
    lam = np.zeros((ne + nh, ne + nh), dtype=np.result_type(m_e, m_h, float))
    lam[:ne, :ne] = np.eye(ne) + dt * dt * (m_e @ m_h)
    lam[:ne, ne:] = dt * m_e
    lam[ne:, :ne] = dt * m_h
    lam[ne:, ne:] = np.eye(nh)
    return lam
