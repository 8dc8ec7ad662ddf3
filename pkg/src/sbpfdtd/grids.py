"""3D staggered grid layouts, field storage, and face access.

Every field component lives on a tensor product of the two 1D node
families from :mod:`sbpfdtd.sbp`.  Along its own axis an E component
uses the minus grid and the two transverse axes use the plus grid; H
components are the complement:

    ==========  ======  ======  ======
    component     x       y       z
    ==========  ======  ======  ======
    Ex          minus   plus    plus
    Ey          plus    minus   plus
    Ez          plus    plus    minus
    Hx          plus    minus   minus
    Hy          minus   plus    minus
    Hz          minus   minus   plus
    ==========  ======  ======  ======

Arrays are stored C-ordered as ``[iz, iy, ix]`` so that ``ravel()``
produces the x-fastest flattening assumed by the dense Kronecker
oracles.  User-facing node indices are written ``(i, j, k)`` in x, y, z
order and map to ``array[k, j, i]``.

Unlike the Yee arrangement, both families carry nodes on all six outer
faces, which is what lets boundary conditions act as penalty terms on
boundary values.  The price is a fixed number of extra node planes per
component; ``storage_overhead`` reports it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sbp import NodeGridKind, SbpOperatorPair, build_sbp_pair

__all__ = [
    "AXES",
    "COMPONENTS",
    "E_COMPONENTS",
    "H_COMPONENTS",
    "FACE_NAMES",
    "GridSpec",
    "FieldSet",
    "component_kinds",
    "component_shape",
    "node_coordinates",
    "np_axis",
    "split_face",
    "face_slicer",
    "extract_face",
    "scatter_face_add",
    "plane_cell_slab",
    "yee_component_shape",
    "storage_overhead",
    "build_axis_pairs",
    "norm_weights",
]

AXES = ("x", "y", "z")
E_COMPONENTS = ("Ex", "Ey", "Ez")
H_COMPONENTS = ("Hx", "Hy", "Hz")
COMPONENTS = E_COMPONENTS + H_COMPONENTS
FACE_NAMES = ("x_low", "x_high", "y_low", "y_high", "z_low", "z_high")

_MINUS, _PLUS = NodeGridKind.MINUS, NodeGridKind.PLUS
_KINDS = {
    "Ex": {"x": _MINUS, "y": _PLUS, "z": _PLUS},
    "Ey": {"x": _PLUS, "y": _MINUS, "z": _PLUS},
    "Ez": {"x": _PLUS, "y": _PLUS, "z": _MINUS},
    "Hx": {"x": _PLUS, "y": _MINUS, "z": _MINUS},
    "Hy": {"x": _MINUS, "y": _PLUS, "z": _MINUS},
    "Hz": {"x": _MINUS, "y": _MINUS, "z": _PLUS},
}


def np_axis(axis: str) -> int:
    """Map an axis letter to the numpy axis of the [iz, iy, ix] storage."""
    try:
        return {"x": 2, "y": 1, "z": 0}[axis]
    except KeyError:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}") from None


@dataclass(frozen=True)
class GridSpec:
    """Uniform structured grid: cell counts and cell widths per axis."""

    nx: int
    ny: int
    nz: int
    hx: float
    hy: float
    hz: float

    def __post_init__(self):
        from .sbp import MIN_CELLS

        for name in ("nx", "ny", "nz"):
            n = getattr(self, name)
            if int(n) != n or n < MIN_CELLS:
                raise ValueError(f"{name} must be an integer >= {MIN_CELLS}, got {n}")
        for name in ("hx", "hy", "hz"):
            h = getattr(self, name)
            if not (np.isfinite(h) and h > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {h}")

    def cells(self, axis: str) -> int:
        return {"x": self.nx, "y": self.ny, "z": self.nz}[axis]

    def spacing(self, axis: str) -> float:
        return {"x": self.hx, "y": self.hy, "z": self.hz}[axis]

    def extent(self, axis: str) -> float:
        return self.cells(axis) * self.spacing(axis)

    @property
    def cell_shape(self) -> tuple:
        """Cell-count array shape in [iz, iy, ix] storage order."""
        return (self.nz, self.ny, self.nx)


def component_kinds(component: str) -> dict:
    if component not in _KINDS:
        raise ValueError(f"unknown field component {component!r}, expected one of {COMPONENTS}")
    return _KINDS[component]


def _n_nodes(n_cells: int, kind: NodeGridKind) -> int:
    return n_cells + (1 if kind is NodeGridKind.PLUS else 2)


def component_shape(grid: GridSpec, component: str) -> tuple:
    """Storage shape (nz_nodes, ny_nodes, nx_nodes) of one component."""
    kinds = component_kinds(component)
    return tuple(_n_nodes(grid.cells(ax), kinds[ax]) for ax in ("z", "y", "x"))


def node_coordinates(grid: GridSpec | SbpOperatorPair, component: str, axis: str) -> np.ndarray:
    """Physical node coordinates of a component along one axis."""
    kinds = component_kinds(component)
    pair = build_sbp_pair(grid.cells(axis), grid.spacing(axis))
    return pair.nodes(kinds[axis])


def build_axis_pairs(grid: GridSpec) -> dict:
    """One SBP operator pair per axis, keyed by axis letter."""
    return {ax: build_sbp_pair(grid.cells(ax), grid.spacing(ax)) for ax in AXES}


def norm_weights(grid: GridSpec, component: str, pairs: dict | None = None) -> np.ndarray:
    """Tensor-product quadrature weights on a component's node set.

    Returns the [iz, iy, ix] array of p_z*p_y*p_x products; summing
    ``weights * |field|**2`` integrates the squared field over the box.
    """
    if pairs is None:
        pairs = build_axis_pairs(grid)
    kinds = component_kinds(component)
    ps = {}
    for ax in AXES:
        pair = pairs[ax]
        ps[ax] = pair.p_plus if kinds[ax] is NodeGridKind.PLUS else pair.p_minus
    return ps["z"][:, None, None] * ps["y"][None, :, None] * ps["x"][None, None, :]


@dataclass
class FieldSet:
    """The six field component arrays of one simulation state."""

    grid: GridSpec
    dtype: np.dtype
    data: dict = field(default_factory=dict)

    @classmethod
    def allocate(cls, grid: GridSpec, complex_fields: bool = False) -> "FieldSet":
        dtype = np.dtype(np.complex128 if complex_fields else np.float64)
        data = {c: np.zeros(component_shape(grid, c), dtype=dtype) for c in COMPONENTS}
        return cls(grid=grid, dtype=dtype, data=data)

    def __getitem__(self, component: str) -> np.ndarray:
        return self.data[component]

    def copy(self) -> "FieldSet":
        return FieldSet(self.grid, self.dtype, {c: a.copy() for c, a in self.data.items()})

    def zero(self) -> None:
        for a in self.data.values():
            a[...] = 0

    def max_abs(self, components=COMPONENTS) -> float:
        return max(float(np.max(np.abs(self.data[c]))) if self.data[c].size else 0.0
                   for c in components)


def split_face(face: str) -> tuple:
    """Split a face name like 'y_high' into ('y', 'high')."""
    if face not in FACE_NAMES:
        raise ValueError(f"face must be one of {FACE_NAMES}, got {face!r}")
    axis, side = face.split("_")
    return axis, side


def face_slicer(component: str, face: str) -> tuple:
    """Index tuple selecting a component's node plane on an outer face.

    Both node families place their first node at coordinate 0 and their
    last at the interval end, so the plane index is 0 or -1 for every
    component on every face.
    """
    axis, side = split_face(face)
    component_kinds(component)  # validate name
    idx = 0 if side == "low" else -1
    slicer = [slice(None)] * 3
    slicer[np_axis(axis)] = idx
    return tuple(slicer)


def extract_face(fields: "FieldSet", component: str, face: str) -> np.ndarray:
    """Copy of a component's boundary-plane values on one outer face.

    The returned 2D slab keeps storage order: rows run along the slower
    of the two in-plane axes (z before y before x).
    """
    return np.array(fields[component][face_slicer(component, face)])


def scatter_face_add(fields: "FieldSet", component: str, face: str,
                     values: np.ndarray, scale: float = 1.0) -> None:
    """Add ``scale * values`` onto a component's boundary plane in place."""
    target = fields[component][face_slicer(component, face)]
    values = np.asarray(values)
    if values.shape != target.shape:
        raise ValueError(
            f"face slab shape {values.shape} does not match {component} {face} plane {target.shape}"
        )
    target += scale * values


def plane_cell_slab(arr: np.ndarray, component: str, normal_axis: str,
                    plane_index: int) -> np.ndarray:
    """Sample a component onto the cell-face centres of a constant-coordinate plane.

    The plane sits at plus-grid node ``plane_index`` along ``normal_axis``
    (a cell-boundary plane).  Returned slab is cell-indexed over the two
    transverse axes in storage order.  Along each axis the component is
    either already on the wanted position (plus node on the plane, minus
    node on the centre) or the two straddling nodes are averaged.
    """
    kinds = component_kinds(component)
    if component[-1].lower() == normal_axis:
        raise ValueError(f"{component} is normal to a {normal_axis}-plane, not tangential")
    a = np.moveaxis(arr, np_axis(normal_axis), 0)
    if kinds[normal_axis] is NodeGridKind.PLUS:
        slab = np.array(a[plane_index])
    else:
        # minus nodes straddle the plane at half-cell offsets
        slab = 0.5 * (a[plane_index] + a[plane_index + 1])
    # remaining storage axes, slower first
    remaining = [ax for ax in ("z", "y", "x") if ax != normal_axis]
    for pos, ax in enumerate(remaining):
        if kinds[ax] is NodeGridKind.MINUS:
            # interior minus nodes are already the cell centres
            slab = slab[1:-1] if pos == 0 else slab[:, 1:-1]
        else:
            # plus axis: average edge nodes to the face centre
            slab = (0.5 * (slab[:-1] + slab[1:]) if pos == 0
                    else 0.5 * (slab[:, :-1] + slab[:, 1:]))
    return slab


def yee_component_shape(grid: GridSpec, component: str) -> tuple:
    """Storage shape the same component would have on a Yee grid.

    E components: cell count along their own axis, node count (+1)
    transversally.  H components: the complement.  Used only for the
    storage-overhead accounting.
    """
    kinds = component_kinds(component)
    shape = []
    for ax in ("z", "y", "x"):
        n = grid.cells(ax)
        shape.append(n if kinds[ax] is NodeGridKind.MINUS else n + 1)
    return tuple(shape)


def storage_overhead(grid: GridSpec) -> dict:
    """Extra stored values per component relative to a Yee layout.

    Returns {component: extra_nodes} plus a 'total' entry.  The per
    component counts admit closed forms, e.g. Ex stores
    2*(ny+1)*(nz+1) more values because its minus axis carries two
    extra planes.
    """
    out = {}
    for c in COMPONENTS:
        sbp = int(np.prod(component_shape(grid, c)))
        yee = int(np.prod(yee_component_shape(grid, c)))
        out[c] = sbp - yee
    out["total"] = sum(out[c] for c in COMPONENTS)
    return out
