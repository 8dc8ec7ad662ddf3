"""Material rasterization, node sampling, and source waveform tests."""

import math

import numpy as np
import pytest

from sbpfdtd.constants import EPS0
from sbpfdtd.grids import GridSpec
from sbpfdtd.materials import CurrentSource, MaterialGrid, Waveform, cell_centers


def test_uniform_fill():
    grid = GridSpec(4, 4, 4, 0.1, 0.1, 0.1)
    mats = MaterialGrid.uniform(grid, eps_r=2.0, mu_r=3.0, sigma_e=0.5, rho=1000.0)
    assert np.all(mats.eps_r == 2.0)
    assert np.all(mats.mu_r == 3.0)
    assert np.all(mats.sigma_e == 0.5)
    assert np.all(mats.rho == 1000.0)
    assert mats.eps_r.shape == grid.cell_shape


def test_cell_centers():
    grid = GridSpec(4, 5, 6, 0.5, 0.25, 0.2)
    cx = cell_centers(grid, "x")
    assert np.allclose(cx, [0.25, 0.75, 1.25, 1.75])


def test_box_painting_is_cell_centre_based():
    grid = GridSpec(8, 8, 8, 1.0, 1.0, 1.0)
    mats = MaterialGrid.uniform(grid)
    # covers centres 2.5 and 3.5 on each axis, nothing else
    mats.add_box(2.1, 3.9, 2.1, 3.9, 2.1, 3.9, eps_r=5.0)
    picked = mats.eps_r == 5.0
    assert picked.sum() == 8
    assert picked[2:4, 2:4, 2:4].all()


def test_cylinder_voxelization_matches_manual_count():
    grid = GridSpec(20, 20, 6, 1.0, 1.0, 1.0)
    mats = MaterialGrid.uniform(grid)
    mats.add_cylinder_z(10.0, 10.0, 5.0, 1.0, 5.0, eps_r=9.0)
    cx = cell_centers(grid, "x")
    cy = cell_centers(grid, "y")
    inside = (cx[None, :] - 10.0) ** 2 + (cy[:, None] - 10.0) ** 2 <= 25.0
    n_rings = int(inside.sum())
    picked = mats.eps_r == 9.0
    # z centres 1.5, 2.5, 3.5, 4.5 fall in [1, 5]
    assert picked.sum() == 4 * n_rings
    assert not picked[0].any() and not picked[-1].any()


def test_later_regions_overwrite_earlier():
    grid = GridSpec(6, 6, 6, 1.0, 1.0, 1.0)
    mats = MaterialGrid.uniform(grid)
    mats.add_box(0, 6, 0, 6, 0, 6, eps_r=4.0)
    mats.add_box(0, 6, 0, 6, 0, 3, eps_r=2.0)
    assert np.all(mats.eps_r[:3] == 2.0)
    assert np.all(mats.eps_r[3:] == 4.0)


def test_validate_rejects_nonphysical_values():
    grid = GridSpec(4, 4, 4, 1.0, 1.0, 1.0)
    mats = MaterialGrid.uniform(grid)
    mats.eps_r[0, 0, 0] = 0.0
    with pytest.raises(ValueError):
        mats.validate()
    mats = MaterialGrid.uniform(grid)
    mats.sigma_e[1, 1, 1] = -0.25
    with pytest.raises(ValueError):
        mats.validate()


def test_node_sampling_shapes_and_interface_averaging():
    grid = GridSpec(4, 4, 4, 1.0, 1.0, 1.0)
    mats = MaterialGrid.uniform(grid)
    mats.eps_r[:, :, :2] = 3.0      # x < 2 half-space
    eps = mats.sample_eps("Ey")     # Ey nodes sit on x plus lines
    from sbpfdtd.grids import component_shape

    assert eps.shape == component_shape(grid, "Ey")
    # inner plus node at the material jump averages both sides
    assert eps[0, 0, 0] == pytest.approx(3.0 * EPS0)
    assert eps[0, 0, 2] == pytest.approx(2.0 * EPS0)
    assert eps[0, 0, 4] == pytest.approx(1.0 * EPS0)


def test_minus_sampling_clamps_half_cells():
    grid = GridSpec(4, 4, 4, 1.0, 1.0, 1.0)
    mats = MaterialGrid.uniform(grid, eps_r=6.0)
    eps = mats.sample_eps("Ex")     # Ex is minus along x: 6 nodes
    assert eps.shape[2] == 6
    assert np.allclose(eps, 6.0 * EPS0)


def test_min_refractive_index():
    grid = GridSpec(4, 4, 4, 1.0, 1.0, 1.0)
    mats = MaterialGrid.uniform(grid)
    assert mats.min_refractive_index() == pytest.approx(1.0)
    mats.add_box(0, 1, 0, 1, 0, 1, eps_r=4.0)
    assert mats.min_refractive_index() == pytest.approx(1.0)  # min over cells


def test_voxel_csv(tmp_path):
    grid = GridSpec(4, 4, 4, 1.0, 1.0, 1.0)
    mats = MaterialGrid.uniform(grid)
    path = tmp_path / "vox.csv"
    path.write_text(
        "i,j,k,eps_r,mu_r,sigma_e,rho\n"
        "1,2,3,10.0,1.0,0.2,900.0\n"
        "0,0,0,5.0,2.0,0.0,0.0\n"
    )
    n = mats.apply_voxel_csv(path)
    assert n == 2
    assert mats.eps_r[3, 2, 1] == 10.0
    assert mats.sigma_e[3, 2, 1] == 0.2
    assert mats.mu_r[0, 0, 0] == 2.0


def test_voxel_csv_rejects_out_of_range(tmp_path):
    grid = GridSpec(4, 4, 4, 1.0, 1.0, 1.0)
    mats = MaterialGrid.uniform(grid)
    path = tmp_path / "vox.csv"
    path.write_text("i,j,k,eps_r,mu_r,sigma_e,rho\n9,0,0,1,1,0,0\n")
    with pytest.raises(ValueError):
        mats.apply_voxel_csv(path)


# ------------------------------------------------------------- waveforms

def test_gaussian_peak_and_symmetry():
    w = Waveform("gaussian", amplitude=2.0, width=1e-9, delay=5e-9)
    assert w(5e-9) == pytest.approx(2.0)
    assert w(4e-9) == pytest.approx(w(6e-9))
    assert abs(w(0.0)) < 2.0 * math.exp(-4 * math.pi * 24.99)


def test_gaussian_integral_formula():
    # closed form: integral of A exp(-4 pi u^2 / tw^2) du = A tw / 2
    w = Waveform("gaussian", amplitude=3.0, width=2.0, delay=10.0)
    t = np.linspace(0.0, 20.0, 20001)
    integral = np.trapezoid([w(v) for v in t], t)
    assert integral == pytest.approx(3.0 * 2.0 / 2.0, rel=1e-6)


def test_sinusoid_and_modulated():
    s = Waveform("sinusoid", amplitude=1.5, frequency=2.0)
    assert s(0.125) == pytest.approx(1.5)
    m = Waveform("modulated_gaussian", amplitude=1.0, width=4.0, delay=0.0,
                 frequency=2.0)
    assert m(0.0) == 0.0


def test_waveform_validation():
    with pytest.raises(ValueError):
        Waveform("square")
    with pytest.raises(ValueError):
        Waveform("gaussian", width=0.0)
    with pytest.raises(ValueError):
        Waveform("sinusoid", frequency=0.0)


def test_source_slicer_point_and_box():
    src = CurrentSource("Ex", (1, 2, 3), Waveform("gaussian", width=1.0))
    sl = src.node_slicer((7, 6, 6))
    probe = np.zeros((7, 6, 6))
    probe[sl] = 1.0
    assert probe.sum() == 1.0 and probe[3, 2, 1] == 1.0

    box = CurrentSource("Ex", ((0, 0, 0), (1, 1, 1)), Waveform("gaussian", width=1.0))
    probe[...] = 0.0
    probe[box.node_slicer((7, 6, 6))] = 1.0
    assert probe.sum() == 8.0


def test_source_slicer_rejects_out_of_range():
    src = CurrentSource("Ex", (99, 0, 0), Waveform("gaussian", width=1.0))
    with pytest.raises(ValueError):
        src.node_slicer((7, 6, 6))
