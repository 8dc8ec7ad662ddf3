"""Amplification-spectrum analysis: stability, dispersion, dissipation."""

import math

import numpy as np
import pytest

from sbpfdtd.constants import C0
from sbpfdtd.dispersion import (
    BlochPhases,
    angle_scan,
    build_amplification,
    error_metrics,
    normal_incidence_point,
    numerical_wavenumbers,
    sweep_normal_incidence,
    unit_circle_deviation,
)
from sbpfdtd.grids import GridSpec
from sbpfdtd.solver import cfl_max_dt


def test_bloch_phase_from_wavevector():
    grid = GridSpec(4, 4, 8, 0.5, 0.5, 0.25)
    k = (0.0, 0.0, 2.0)
    ph = BlochPhases.from_wavevector(k, grid)
    # phase across the whole axis: k_z * L_z
    assert ph.z == pytest.approx(2.0 * 8 * 0.25)
    assert ph.x == 0.0
    assert ph.as_dict() == {"x": ph.x, "y": ph.y, "z": ph.z}


def test_amplification_dimension_guard():
    grid = GridSpec(4, 4, 4, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="max_dim"):
        build_amplification(grid, 1e-12, max_dim=10)


def test_eigenvalues_on_unit_circle_below_cfl():
    grid = GridSpec(4, 4, 4, 1.0, 1.0, 1.0)
    dt = 0.95 * cfl_max_dt(grid)
    lam = build_amplification(grid, dt, BlochPhases(0.8, -0.3, 1.7))
    eigs = np.linalg.eigvals(lam)
    assert unit_circle_deviation(eigs) <= 1e-9
    # static solenoidal modes sit exactly at lambda = 1
    assert np.min(np.abs(eigs - 1.0)) < 1e-9


def test_instability_well_above_cfl():
    # the end-closure coupling leaves a 4-cell periodic box stable a bit
    # past the generic bound (no pure checkerboard mode on this layout);
    # by 1.3 dt_max eigenvalues leave the circle at any phase choice
    grid = GridSpec(4, 4, 4, 1.0, 1.0, 1.0)
    dt = 1.3 * cfl_max_dt(grid)
    lam = build_amplification(grid, dt, BlochPhases(math.pi, math.pi, math.pi))
    eigs = np.linalg.eigvals(lam)
    assert unit_circle_deviation(eigs) > 1e-2


def test_wavenumber_extraction_roundtrip():
    # a forward mode appears as exp(+i c k dt) and must invert exactly
    dt = 1e-11
    k0 = 20.0
    lam = np.array([np.exp(1j * C0 * k0 * dt), np.exp(1j * C0 * 35.0 * dt)])
    k_all, k_sel = numerical_wavenumbers(lam, dt, k0)
    assert k_sel.real == pytest.approx(k0, rel=1e-12)
    assert abs(k_sel.imag) < 1e-6
    assert k_all.shape == (2,)
    with pytest.raises(ValueError):
        numerical_wavenumbers(np.array([(5.0 + 0j)]), dt, k0)


def test_error_metrics_zero_for_exact_wavenumber():
    e = error_metrics(10.0, 10.0 + 0.0j)
    assert e.dispersion == 0.0 and e.dissipation == 0.0 and e.global_error == 0.0
    # pure phase error leaves dissipation untouched and vice versa
    e = error_metrics(10.0, 10.1 + 0.0j)
    assert e.dispersion > 0.0 and e.dissipation == 0.0
    e = error_metrics(10.0, 10.0 + 0.01j)
    assert e.dispersion == 0.0 and e.dissipation > 0.0
    assert e.global_error == pytest.approx(e.dissipation, rel=1e-9)


def test_normal_incidence_point_fields():
    pt = normal_incidence_point(ratio=1 / 10, cells_axial=6, cells_transverse=4,
                                dt_factor=0.5)
    assert pt.k0h_over_2pi == pytest.approx(0.1)
    assert pt.unit_circle_dev <= 1e-9
    assert pt.errors.dissipation <= 0.1 * pt.errors.dispersion
    assert pt.k_num.real == pytest.approx(pt.k0, rel=0.05)


def test_resolution_sweep_converges_second_order():
    pts = sweep_normal_incidence(ratios=(1 / 10, 1 / 20), cells_axial=6,
                                 cells_transverse=4, dt_factor=0.5)
    g10, g20 = pts[0].errors.global_error, pts[1].errors.global_error
    assert g20 < g10
    # leapfrog + second-order stencils: error ratio near 4 when h halves
    assert g10 / g20 == pytest.approx(4.0, rel=0.35)


def test_axis_directions_are_worst_on_scan():
    pts = angle_scan([0.0, 45.0], [0.0, 45.0], ratio=1 / 8, cells=4,
                     dt_factor=0.5)
    by_angle = {(p.theta_deg, p.phi_deg): p.errors.global_error for p in pts}
    # theta 0 is the +z axis regardless of phi; (45, 45) is the body
    # diagonal-ish direction with the smallest error
    assert by_angle[(45.0, 45.0)] < by_angle[(0.0, 0.0)]
    assert by_angle[(45.0, 45.0)] < by_angle[(45.0, 0.0)]
