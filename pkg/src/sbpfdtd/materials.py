"""Cell-centered material maps, node sampling, sources, and waveforms.

Material properties (relative permittivity/permeability, electric
conductivity, mass density) are stored one value per cell.  The solver
needs them at field node positions, which sit on cell edges and faces;
``sample_*`` average the adjacent cells arithmetically:

* along a minus (cell-centre) axis each node touches exactly one cell,
  with the two boundary nodes adopting their neighbouring cell;
* along a plus (cell-edge) axis each node averages its two adjacent
  cells, clamped at the box ends.

So permittivity/conductivity at an E node averages up to 4 cells and
permeability at an H node up to 2, and a material interface lands
halfway between the bulk values, e.g. eps_r 1 | 38 gives 19.5 on the
shared node plane.

Geometry painting works on cell-centre membership: a cell takes a
region's properties when its centre lies inside.  A voxel CSV override
can replace any single cell afterwards.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .constants import EPS0, MU0
from .grids import AXES, GridSpec, component_kinds, np_axis
from .sbp import NodeGridKind

__all__ = ["MaterialGrid", "Waveform", "CurrentSource", "cell_centers"]


def cell_centers(grid: GridSpec, axis: str) -> np.ndarray:
    n, h = grid.cells(axis), grid.spacing(axis)
    return (np.arange(n) + 0.5) * h


def _axis_node_sample(arr: np.ndarray, ax: int, n: int, kind: NodeGridKind) -> np.ndarray:
    """Resample one storage axis from cell values to node values."""
    if kind is NodeGridKind.MINUS:
        idx = np.clip(np.arange(n + 2) - 1, 0, n - 1)
        return np.take(arr, idx, axis=ax)
    left = np.clip(np.arange(n + 1) - 1, 0, n - 1)
    right = np.clip(np.arange(n + 1), 0, n - 1)
    return 0.5 * (np.take(arr, left, axis=ax) + np.take(arr, right, axis=ax))


@dataclass
class MaterialGrid:
    """Per-cell material properties on a :class:`GridSpec`.

    ``rho`` (mass density, kg/m^3) is only consulted for SAR output and
    may stay zero elsewhere.
    """

    grid: GridSpec
    eps_r: np.ndarray
    mu_r: np.ndarray
    sigma_e: np.ndarray
    rho: np.ndarray

    @classmethod
    def uniform(cls, grid: GridSpec, eps_r: float = 1.0, mu_r: float = 1.0,
                sigma_e: float = 0.0, rho: float = 0.0) -> "MaterialGrid":
        shape = grid.cell_shape
        m = cls(
            grid=grid,
            eps_r=np.full(shape, float(eps_r)),
            mu_r=np.full(shape, float(mu_r)),
            sigma_e=np.full(shape, float(sigma_e)),
            rho=np.full(shape, float(rho)),
        )
        m.validate()
        return m

    # ------------------------------------------------------------ painting

    def _centers(self):
        zc = cell_centers(self.grid, "z")[:, None, None]
        yc = cell_centers(self.grid, "y")[None, :, None]
        xc = cell_centers(self.grid, "x")[None, None, :]
        return xc, yc, zc

    def _paint(self, mask, eps_r=None, mu_r=None, sigma_e=None, rho=None):
        if not np.any(mask):
            raise ValueError("region contains no cell centres on this grid")
        for name, val in (("eps_r", eps_r), ("mu_r", mu_r),
                          ("sigma_e", sigma_e), ("rho", rho)):
            if val is not None:
                getattr(self, name)[mask] = float(val)
        self.validate()

    def add_box(self, x0, x1, y0, y1, z0, z1, **props) -> None:
        """Paint cells whose centres fall inside the closed box [x0,x1]x[y0,y1]x[z0,z1]."""
        xc, yc, zc = self._centers()
        mask = ((xc >= x0) & (xc <= x1) & (yc >= y0) & (yc <= y1)
                & (zc >= z0) & (zc <= z1))
        self._paint(mask, **props)

    def add_cylinder_z(self, cx, cy, radius, z0, z1, **props) -> None:
        """Paint a z-aligned circular cylinder by cell-centre membership."""
        xc, yc, zc = self._centers()
        mask = (((xc - cx) ** 2 + (yc - cy) ** 2 <= radius ** 2)
                & (zc >= z0) & (zc <= z1))
        self._paint(mask, **props)

    def apply_voxel_csv(self, path) -> int:
        """Overwrite single cells from rows ``i,j,k,eps_r,mu_r,sigma_e,rho``.

        Indices are cell indices in x, y, z order.  A header row is
        skipped when present.  Returns the number of cells written.
        """
        count = 0
        with open(path, newline="") as fh:
            for ln, row in enumerate(csv.reader(fh), start=1):
                row = [c.strip() for c in row if c.strip() != ""]
                if not row:
                    continue
                if ln == 1 and not row[0].lstrip("+-").isdigit():
                    continue  # header
                if len(row) != 7:
                    raise ValueError(f"{path}: line {ln}: expected 7 columns i,j,k,eps_r,mu_r,sigma_e,rho")
                try:
                    i, j, k = (int(row[0]), int(row[1]), int(row[2]))
                    vals = [float(v) for v in row[3:]]
                except ValueError as exc:
                    raise ValueError(f"{path}: line {ln}: {exc}") from None
                g = self.grid
                if not (0 <= i < g.nx and 0 <= j < g.ny and 0 <= k < g.nz):
                    raise ValueError(f"{path}: line {ln}: cell ({i},{j},{k}) outside grid "
                                     f"{g.nx}x{g.ny}x{g.nz}")
                self.eps_r[k, j, i], self.mu_r[k, j, i] = vals[0], vals[1]
                self.sigma_e[k, j, i], self.rho[k, j, i] = vals[2], vals[3]
                count += 1
        self.validate()
        return count

    # ---------------------------------------------------------- validation

    def validate(self) -> None:
        shape = self.grid.cell_shape
        for name in ("eps_r", "mu_r", "sigma_e", "rho"):
            a = getattr(self, name)
            if a.shape != shape:
                raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite values")
        if np.any(self.eps_r <= 0.0):
            raise ValueError("eps_r must be positive everywhere")
        if np.any(self.mu_r <= 0.0):
            raise ValueError("mu_r must be positive everywhere")
        if np.any(self.sigma_e < 0.0):
            raise ValueError("sigma_e must be non-negative")
        if np.any(self.rho < 0.0):
            raise ValueError("rho must be non-negative")

    # ------------------------------------------------------------ sampling

    def _sample(self, cells: np.ndarray, component: str) -> np.ndarray:
        kinds = component_kinds(component)
        out = cells
        for axis in AXES:
            out = _axis_node_sample(out, np_axis(axis), self.grid.cells(axis), kinds[axis])
        return out

    def sample_eps(self, component: str) -> np.ndarray:
        """Absolute permittivity [F/m] on an E component's nodes."""
        return self._sample(self.eps_r, component) * EPS0

    def sample_mu(self, component: str) -> np.ndarray:
        """Absolute permeability [H/m] on an H component's nodes."""
        return self._sample(self.mu_r, component) * MU0

    def sample_sigma(self, component: str) -> np.ndarray:
        """Electric conductivity [S/m] on an E component's nodes."""
        return self._sample(self.sigma_e, component)

    def min_refractive_index(self) -> float:
        return float(np.sqrt(np.min(self.eps_r * self.mu_r)))


_WAVEFORM_KINDS = ("gaussian", "modulated_gaussian", "sinusoid")


@dataclass(frozen=True)
class Waveform:
    """Time signature of a soft current source.

    * ``gaussian``:            A exp(-4 pi (t - delay)^2 / width^2)
    * ``modulated_gaussian``:  A sin(2 pi f t) exp(-4 pi (t - delay)^2 / width^2)
    * ``sinusoid``:            A sin(2 pi f t)

    ``width`` is the characteristic width t_w of the Gaussian envelope;
    the pulse integral equals A*width/2 for the plain Gaussian.
    """

    kind: str
    amplitude: float = 1.0
    width: float = 0.0
    delay: float = 0.0
    frequency: float = 0.0

    def __post_init__(self):
        if self.kind not in _WAVEFORM_KINDS:
            raise ValueError(f"waveform kind must be one of {_WAVEFORM_KINDS}, got {self.kind!r}")
        if self.kind in ("gaussian", "modulated_gaussian") and not self.width > 0.0:
            raise ValueError(f"{self.kind} waveform needs width > 0, got {self.width}")
        if self.kind in ("modulated_gaussian", "sinusoid") and not self.frequency > 0.0:
            raise ValueError(f"{self.kind} waveform needs frequency > 0, got {self.frequency}")

    def __call__(self, t: float) -> float:
        if self.kind == "sinusoid":
            return self.amplitude * math.sin(2.0 * math.pi * self.frequency * t)
        u = t - self.delay
        env = math.exp(-4.0 * math.pi * u * u / (self.width * self.width))
        if self.kind == "gaussian":
            return self.amplitude * env
        return self.amplitude * math.sin(2.0 * math.pi * self.frequency * t) * env


@dataclass(frozen=True)
class CurrentSource:
    """Soft additive current source J on one field component.

    ``where`` is either a single node index (i, j, k) or an inclusive
    node-index box ((i0, j0, k0), (i1, j1, k1)), in x, y, z order on the
    component's own node set.  The injected term enters the E update as
    -J/eps, so a positive amplitude drives the component negative first.
    """

    component: str
    where: tuple
    waveform: Waveform

    def node_slicer(self, shape_zyx: tuple) -> tuple:
        """Validated [k, j, i] slicer for this source on an array of the given shape."""
        w = self.where
        if len(w) == 3 and all(np.isscalar(v) for v in w):
            lo = hi = tuple(int(v) for v in w)
        else:
            try:
                (lo, hi) = w
                lo = tuple(int(v) for v in lo)
                hi = tuple(int(v) for v in hi)
            except (TypeError, ValueError):
                raise ValueError(f"source location must be (i,j,k) or ((i0,j0,k0),(i1,j1,k1)), got {w!r}") from None
        dims = shape_zyx[::-1]  # (nx_nodes, ny_nodes, nz_nodes)
        for a, (lo_a, hi_a, na) in enumerate(zip(lo, hi, dims)):
            if not (0 <= lo_a <= hi_a < na):
                raise ValueError(
                    f"source index range {lo}..{hi} leaves the {self.component} node set "
                    f"(axis {AXES[a]} has {na} nodes)"
                )
        return (slice(lo[2], hi[2] + 1), slice(lo[1], hi[1] + 1), slice(lo[0], hi[0] + 1))
