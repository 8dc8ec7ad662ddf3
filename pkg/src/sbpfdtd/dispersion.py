"""Numerical dispersion analysis of the fully discrete update.

The leapfrog update on an all-periodic vacuum box is a linear map; its
matrix is recovered column by column by stepping unit impulses through
the matrix-free solver (so the analysis covers exactly the code that
runs, closures, SAT phases and all).  Eigenvalues lambda of that map
give the numerical frequencies, and

    k_num = ln(lambda) / (j c dt)

converts each to a complex numerical wavenumber on the principal
branch.  For a Bloch state with phase alpha_i = k0_i N_i h_i across the
box, the eigenvalue whose k_num lands nearest the exact k0 is the
physical mode; the rest of the spectrum belongs to other admissible
wavevectors sharing the same phases.

Error measures compare phase advance over one wavelength lw = 2 pi/k0:

* dispersion  |e^(-j k0 lw) - e^(-j Re(k_num) lw)|   (phase error)
* dissipation |1 - e^(Im(k_num) lw)|                  (amplitude error)
* global      |e^(-j k0 lw) - e^(-j k_num lw)|        (both at once)

A stable step keeps every eigenvalue on the unit circle to rounding;
pushing dt past the CFL bound moves pairs off the circle, which is the
stability diagnostic the tests use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C0
from .grids import AXES, GridSpec
from .materials import MaterialGrid
from .solver import SatConfig, Simulation, cfl_max_dt

__all__ = [
    "BlochPhases",
    "DispersionErrors",
    "DispersionPoint",
    "build_amplification",
    "numerical_wavenumbers",
    "error_metrics",
    "normal_incidence_point",
    "sweep_normal_incidence",
    "angle_scan",
]

DEFAULT_MAX_DIM = 5000
DEFAULT_CELLS = 8   # cells per axis for scan grids unless overridden


@dataclass(frozen=True)
class BlochPhases:
    """Phase advance of the Bloch state across the whole box, per axis [rad]."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_wavevector(cls, k0: tuple, grid: GridSpec) -> "BlochPhases":
        kx, ky, kz = k0
        return cls(x=kx * grid.extent("x"), y=ky * grid.extent("y"), z=kz * grid.extent("z"))

    def as_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "z": self.z}


def build_amplification(grid: GridSpec, dt: float, phases: BlochPhases = BlochPhases(),
                        *, materials: MaterialGrid | None = None,
                        max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    """One-step matrix of the all-periodic solver, probed matrix-free.

    Columns are produced by stepping unit basis states, so the result is
    the exact linear map the production kernels apply.  ``max_dim``
    guards against accidentally requesting an eigenproblem too large for
    a desk machine; raise it explicitly for bigger studies.
    """
    if materials is None:
        materials = MaterialGrid.uniform(grid)
    sat = SatConfig.for_boundaries("periodic", phases=phases.as_dict())
    sim = Simulation(grid, materials, sat, dt, complex_fields=True)
    dim = sim.state_size()
    if dim > max_dim:
        raise ValueError(
            f"state dimension {dim} exceeds max_dim={max_dim}; "
            f"shrink the grid or raise the cap"
        )
    lam = np.empty((dim, dim), dtype=np.complex128)
    basis = np.zeros(dim, dtype=np.complex128)
    for col in range(dim):
        basis[col] = 1.0
        sim.load_state_vector(basis)
        sim.step_index = 0
        sim.step()
        lam[:, col] = sim.state_vector()
        basis[col] = 0.0
    return lam


def unit_circle_deviation(eigvals: np.ndarray) -> float:
    return float(np.max(np.abs(np.abs(eigvals) - 1.0)))


def numerical_wavenumbers(eigvals: np.ndarray, dt: float, k0: float, *,
                          c: float = C0, spurious_band: float = 0.5):
    """Complex numerical wavenumbers and the one nearest the exact ``k0``.

    Eigenvalues farther than ``spurious_band`` from the unit circle are
    discarded before taking logarithms (they are numerically degenerate
    junk when the step is badly unstable).  Returns ``(k_all, k_sel)``.
    """
    lam = np.asarray(eigvals, dtype=complex)
    lam = lam[np.abs(np.abs(lam) - 1.0) <= spurious_band]
    if lam.size == 0:
        raise ValueError("no eigenvalues near the unit circle; step badly unstable?")
    k = np.log(lam) / (1j * c * dt)
    sel = k[int(np.argmin(np.abs(k - k0)))]
    return k, sel


@dataclass(frozen=True)
class DispersionErrors:
    dispersion: float
    dissipation: float
    global_error: float


def error_metrics(k0: float, k_num: complex, wavelength: float | None = None) -> DispersionErrors:
    lw = wavelength if wavelength is not None else 2.0 * math.pi / k0
    exact = np.exp(-1j * k0 * lw)
    disp = abs(exact - np.exp(-1j * k_num.real * lw))
    diss = abs(1.0 - math.exp(k_num.imag * lw))
    glob = abs(exact - np.exp(-1j * k_num * lw))
    return DispersionErrors(dispersion=float(disp), dissipation=float(diss),
                            global_error=float(glob))


@dataclass(frozen=True)
class DispersionPoint:
    theta_deg: float
    phi_deg: float
    k0h_over_2pi: float
    k0: float
    dt: float
    k_num: complex
    errors: DispersionErrors
    unit_circle_dev: float
    dim: int


def _scan_point(grid: GridSpec, k0_vec: np.ndarray, k0: float, dt_factor: float,
                max_dim: int, theta_deg: float, phi_deg: float,
                ratio: float) -> DispersionPoint:
    dt = dt_factor * cfl_max_dt(grid)
    phases = BlochPhases.from_wavevector(tuple(k0_vec), grid)
    lam = build_amplification(grid, dt, phases, max_dim=max_dim)
    eigs = np.linalg.eigvals(lam)
    dev = unit_circle_deviation(eigs)
    _, k_sel = numerical_wavenumbers(eigs, dt, k0)
    err = error_metrics(k0, k_sel)
    return DispersionPoint(theta_deg=theta_deg, phi_deg=phi_deg, k0h_over_2pi=ratio,
                           k0=k0, dt=dt, k_num=complex(k_sel), errors=err,
                           unit_circle_dev=dev, dim=lam.shape[0])


def normal_incidence_point(*, ratio: float, cells_axial: int = DEFAULT_CELLS,
                           cells_transverse: int = 4, h: float = 1.0,
                           dt_factor: float = 0.5,
                           max_dim: int = DEFAULT_MAX_DIM) -> DispersionPoint:
    """One dispersion sample for propagation along +z.

    ``ratio`` is the resolution k0 h / (2 pi), i.e. cells per wavelength
    inverted; 1/20 means twenty cells per wavelength.
    """
    grid = GridSpec(nx=cells_transverse, ny=cells_transverse, nz=cells_axial,
                    hx=h, hy=h, hz=h)
    k0 = 2.0 * math.pi * ratio / h
    return _scan_point(grid, np.array([0.0, 0.0, k0]), k0, dt_factor, max_dim,
                       theta_deg=0.0, phi_deg=0.0, ratio=ratio)


def sweep_normal_incidence(ratios=(1 / 40, 1 / 20, 1 / 10), **kw) -> list:
    """Resolution sweep at normal incidence; see ``normal_incidence_point``."""
    return [normal_incidence_point(ratio=r, **kw) for r in ratios]


def angle_scan(thetas_deg, phis_deg, *, ratio: float = 1 / 20,
               cells: int = 4, h: float = 1.0, dt_factor: float = 0.5,
               max_dim: int = DEFAULT_MAX_DIM) -> list:
    """Propagation-angle scan on a cubic box at fixed resolution.

    theta is measured from +z, phi from +x in the x-y plane.  Axis
    directions are the worst case for the global error on this scheme;
    the scan makes that visible.
    """
    grid = GridSpec(nx=cells, ny=cells, nz=cells, hx=h, hy=h, hz=h)
    k0 = 2.0 * math.pi * ratio / h
    out = []
    for th in thetas_deg:
        for ph in phis_deg:
            t, p = math.radians(th), math.radians(ph)
            k_vec = k0 * np.array([math.sin(t) * math.cos(p),
                                   math.sin(t) * math.sin(p),
                                   math.cos(t)])
            out.append(_scan_point(grid, k_vec, k0, dt_factor, max_dim,
                                   theta_deg=float(th), phi_deg=float(ph), ratio=ratio))
    return out
