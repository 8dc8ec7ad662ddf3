"""Scenario files: a flat, sectioned, diff-friendly text format.

A scenario is everything one simulation needs: grid, time stepping,
boundaries, materials, sources, probes, and output requests.  The format
is deliberately primitive - line oriented, ``key = value`` under
``[section]`` headers, ``#`` comments - so files stay readable in a diff
and need no parser dependency.  The first non-blank line must be the
version header ``# fdtd scenario v1``.

Sections and keys (occurrences of starred keys accumulate):

    [grid]      cells = NX NY NZ
                spacing = HX HY HZ              (metres)
    [time]      steps = N
                dt_factor = F                   (times the CFL limit, default 0.99)
                dt = SECONDS                    (explicit; excludes dt_factor)
                allow_unstable_dt = true|false  (default false)
    [boundaries] all|x|y|z|x_low|...|z_high = pec|pmc|periodic
                phase_x|phase_y|phase_z = RADIANS  (periodic axes only)
    [materials] background = EPS MU SIGMA RHO   (default 1 1 0 0)
              * box = X0 X1 Y0 Y1 Z0 Z1 EPS MU SIGMA RHO
              * cylinder_z = CX CY R Z0 Z1 EPS MU SIGMA RHO
                voxel_csv = PATH                (i,j,k,eps_r,mu_r,sigma_e,rho)
    [sources] * point = COMP I J K KIND AMPL WIDTH DELAY [FREQ]
              * block = COMP I0 J0 K0 I1 J1 K1 KIND AMPL WIDTH DELAY [FREQ]
    [probes]  * point = COMP I J K STRIDE NAME
              * flux = AXIS PLANE STRIDE NAME
    [output]    energy_stride = N               (0 disables)
              * snapshot_step = N
                snapshot_components = COMP...   (default Ex Ey Ez)
                snapshot_format = vtk|csv|both  (default vtk)
                spectrum = NAME... | all | none (default all)
                spectrum_window = none|hann     (default hann)
                sparams = INC REF [TRANS]       (flux probe names)
                sar = true|false                (default false)
                seed = N                        (default 0)
                progress = N                    (steps between progress lines)

Parsing reports *all* problems at once: syntax errors carry line
numbers, semantic errors carry ``section.key`` field paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .grids import AXES, COMPONENTS, FACE_NAMES, GridSpec
from .materials import CurrentSource, MaterialGrid, Waveform
from .solver import FluxProbe, PointProbe, SatConfig, cfl_max_dt

MAGIC = "# fdtd scenario v1"

_BOUNDARY_KEYS = ("all", *AXES, *FACE_NAMES)
_WAVEFORMS = ("gaussian", "modulated_gaussian", "sinusoid")


class ScenarioError(ValueError):
    """Carries every validation problem found in one file."""

    def __init__(self, path, errors):
        self.path = str(path)
        self.errors = list(errors)
        lines = "\n".join(f"  - {e}" for e in self.errors)
        super().__init__(f"{self.path}: {len(self.errors)} problem(s)\n{lines}")


@dataclass
class Region:
    """One painted material region, in declaration order."""

    shape: str          # "box" | "cylinder_z"
    geometry: tuple     # box: x0 x1 y0 y1 z0 z1; cylinder: cx cy r z0 z1
    eps_r: float
    mu_r: float
    sigma_e: float
    rho: float


@dataclass
class OutputRequests:
    energy_stride: int = 0
    snapshot_steps: tuple = ()
    snapshot_components: tuple = ("Ex", "Ey", "Ez")
    snapshot_format: str = "vtk"
    spectrum: tuple | str = "all"   # probe names, "all", or "none"
    spectrum_window: str | None = "hann"
    sparams: tuple | None = None    # (incident, reflected[, transmitted])
    sar: bool = False
    seed: int = 0
    progress: int = 0


@dataclass
class Scenario:
    """A parsed, cross-validated simulation description."""

    path: str
    grid: GridSpec
    boundary_kinds: dict
    phases: dict
    background: tuple
    regions: list
    voxel_csv: str | None
    sources: list
    point_probes: list
    flux_probes: list
    n_steps: int
    dt_factor: float | None
    dt_explicit: float | None
    allow_unstable_dt: bool
    outputs: OutputRequests = field(default_factory=OutputRequests)

    def build_materials(self) -> MaterialGrid:
        mat = MaterialGrid.uniform(self.grid, *self.background)
        for r in self.regions:
            props = dict(eps_r=r.eps_r, mu_r=r.mu_r, sigma_e=r.sigma_e, rho=r.rho)
            if r.shape == "box":
                x0, x1, y0, y1, z0, z1 = r.geometry
                mat.add_box(x0, x1, y0, y1, z0, z1, **props)
            else:
                cx, cy, rad, z0, z1 = r.geometry
                mat.add_cylinder_z(cx=cx, cy=cy, radius=rad, z0=z0, z1=z1, **props)
        if self.voxel_csv:
            mat.apply_voxel_csv(Path(self.path).parent / self.voxel_csv)
        mat.validate()
        return mat

    def build_sat(self) -> SatConfig:
        phases = {ax: p for ax, p in self.phases.items() if p}
        return SatConfig.for_boundaries(self.boundary_kinds, phases or None)

    def resolve_dt(self, materials: MaterialGrid | None = None) -> float:
        """Concrete time step; the parser already policed the CFL rule."""
        limit = cfl_max_dt(self.grid, materials)
        if self.dt_explicit is not None:
            return self.dt_explicit
        return (self.dt_factor if self.dt_factor is not None else 0.99) * limit

    @property
    def probes(self) -> list:
        return [*self.point_probes, *self.flux_probes]


# ----------------------------------------------------------------- parsing


def _tokenize(text: str):
    """Yield (line_no, section, key, value) for every key line."""
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            yield no, section, None, None
        elif "=" in line:
            key, val = line.split("=", 1)
            yield no, section, key.strip().lower(), val.strip()
        else:
            yield no, section, None, line  # malformed; reported by caller


def _floats(val, n, errs, where, names=None):
    parts = val.split()
    if len(parts) != n:
        errs.append(f"{where}: expected {n} values, got {len(parts)}")
        return None
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        errs.append(f"{where}: non-numeric value in {val!r}")
        return None


def _ints(val, n, errs, where):
    f = _floats(val, n, errs, where)
    if f is None:
        return None
    if any(v != int(v) for v in f):
        errs.append(f"{where}: expected integers, got {val!r}")
        return None
    return tuple(int(v) for v in f)


def _bool(val, errs, where):
    low = val.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    errs.append(f"{where}: expected true/false, got {val!r}")
    return None


def _material_props(parts, errs, where):
    eps, mu, sig, rho = parts
    if eps <= 0 or mu <= 0:
        errs.append(f"{where}: eps_r and mu_r must be positive")
        return None
    if sig < 0 or rho < 0:
        errs.append(f"{where}: sigma_e and rho must be non-negative")
        return None
    return eps, mu, sig, rho


def _parse_waveform(parts, errs, where):
    kind = parts[0].lower()
    if kind not in _WAVEFORMS:
        errs.append(f"{where}: waveform kind must be one of {_WAVEFORMS}, got {parts[0]!r}")
        return None
    rest = parts[1:]
    want = 4 if kind != "gaussian" else 3
    if len(rest) not in (3, 4) or len(rest) < want:
        errs.append(f"{where}: {kind} needs AMPL WIDTH DELAY"
                    + (" FREQ" if want == 4 else " [FREQ]"))
        return None
    try:
        nums = [float(p) for p in rest]
    except ValueError:
        errs.append(f"{where}: non-numeric waveform parameter in {rest}")
        return None
    freq = nums[3] if len(nums) == 4 else 0.0
    try:
        return Waveform(kind, amplitude=nums[0], width=nums[1], delay=nums[2],
                        frequency=freq)
    except ValueError as exc:
        errs.append(f"{where}: {exc}")
        return None


def parse_scenario(path) -> Scenario:
    """Read and fully validate one scenario file.

    Raises ScenarioError listing every syntax problem (with line
    numbers) and every semantic problem (with section.key paths) found,
    never just the first.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(path, [f"unreadable: {exc}"]) from exc

    errs = []
    first_content = next((ln.strip() for ln in text.splitlines() if ln.strip()), None)
    if first_content != MAGIC:
        errs.append(f"line 1: first line must be {MAGIC!r}")
        raise ScenarioError(path, errs)

    known = {"grid", "time", "boundaries", "materials", "sources", "probes", "output"}
    single: dict = {}
    multi: dict = {"box": [], "cylinder_z": [], "point_src": [], "block": [],
                   "point_probe": [], "flux": [], "snapshot_step": []}

    for no, section, key, val in _tokenize(text):
        if key is None and val is None:        # a [section] header
            if section not in known:
                errs.append(f"line {no}: unknown section [{section}]")
            continue
        if key is None:                         # bare line, no '='
            errs.append(f"line {no}: expected 'key = value', got {val!r}")
            continue
        if section not in known:
            errs.append(f"line {no}: key {key!r} outside any known section")
            continue
        where = f"{section}.{key}"
        slot = _MULTI_KEYS.get((section, key))
        if slot is not None:
            multi[slot].append((no, where, val))
        elif (section, key) in _SINGLE_KEYS:
            if (section, key) in single:
                errs.append(f"line {no}: duplicate key {where}")
            single[(section, key)] = (no, val)
        else:
            errs.append(f"line {no}: unknown key {where}")

    # Semantic checks continue even with syntax errors on other lines so
    # one round trip reports everything fixable at once.

    # [grid]
    cells = spacing = None
    if ("grid", "cells") in single:
        no, val = single[("grid", "cells")]
        cells = _ints(val, 3, errs, "grid.cells")
        if cells and min(cells) < 4:
            errs.append("grid.cells: each axis needs at least 4 cells")
            cells = None
    else:
        errs.append("grid.cells: required key missing")
    if ("grid", "spacing") in single:
        no, val = single[("grid", "spacing")]
        spacing = _floats(val, 3, errs, "grid.spacing")
        if spacing and min(spacing) <= 0:
            errs.append("grid.spacing: spacings must be positive")
            spacing = None
    else:
        errs.append("grid.spacing: required key missing")
    grid = GridSpec(*cells, *spacing) if cells and spacing else None

    # [time]
    n_steps = 0
    if ("time", "steps") in single:
        got = _ints(single[("time", "steps")][1], 1, errs, "time.steps")
        if got is not None:
            n_steps = got[0]
            if n_steps < 0:
                errs.append("time.steps: must be non-negative")
    else:
        errs.append("time.steps: required key missing")
    dt_factor = dt_explicit = None
    if ("time", "dt_factor") in single:
        got = _floats(single[("time", "dt_factor")][1], 1, errs, "time.dt_factor")
        if got:
            dt_factor = got[0]
    if ("time", "dt") in single:
        got = _floats(single[("time", "dt")][1], 1, errs, "time.dt")
        if got:
            dt_explicit = got[0]
    if dt_factor is not None and dt_explicit is not None:
        errs.append("time.dt: give either dt or dt_factor, not both")
    allow_unstable = False
    if ("time", "allow_unstable_dt") in single:
        got = _bool(single[("time", "allow_unstable_dt")][1], errs,
                    "time.allow_unstable_dt")
        allow_unstable = bool(got)
    if dt_factor is not None and dt_factor <= 0:
        errs.append("time.dt_factor: must be positive")
    if dt_explicit is not None and dt_explicit <= 0:
        errs.append("time.dt: must be positive")

    # [boundaries]
    kinds: dict = {}
    phases = {ax: 0.0 for ax in AXES}
    for key in _BOUNDARY_KEYS:
        if ("boundaries", key) in single:
            no, val = single[("boundaries", key)]
            v = val.strip().lower()
            if v not in ("pec", "pmc", "periodic"):
                errs.append(f"boundaries.{key}: must be pec, pmc or periodic, got {val!r}")
            else:
                kinds[key] = v
    for ax in AXES:
        if ("boundaries", f"phase_{ax}") in single:
            got = _floats(single[("boundaries", f"phase_{ax}")][1], 1, errs,
                          f"boundaries.phase_{ax}")
            if got:
                if not math.isfinite(got[0]):
                    errs.append(f"boundaries.phase_{ax}: must be finite")
                else:
                    phases[ax] = got[0]
    faces = {}
    default = kinds.get("all", "pec")
    for ax in AXES:
        for side in ("low", "high"):
            face = f"{ax}_{side}"
            faces[face] = kinds.get(face, kinds.get(ax, default))
    for ax in AXES:
        lo, hi = faces[f"{ax}_low"], faces[f"{ax}_high"]
        if (lo == "periodic") != (hi == "periodic"):
            errs.append(f"boundaries.{ax}: periodic must pair both {ax} faces")
        if phases[ax] and lo != "periodic":
            errs.append(f"boundaries.phase_{ax}: phase given on a non-periodic axis")

    # [materials]
    background = (1.0, 1.0, 0.0, 0.0)
    if ("materials", "background") in single:
        got = _floats(single[("materials", "background")][1], 4, errs,
                      "materials.background")
        if got:
            props = _material_props(got, errs, "materials.background")
            if props:
                background = props
    regions = []
    for no, where, val in multi["box"]:
        got = _floats(val, 10, errs, where)
        if not got:
            continue
        props = _material_props(got[6:], errs, where)
        if props is None:
            continue
        x0, x1, y0, y1, z0, z1 = got[:6]
        if x0 > x1 or y0 > y1 or z0 > z1:
            errs.append(f"{where}: box extents must satisfy lo <= hi")
            continue
        regions.append(Region("box", got[:6], *props))
    for no, where, val in multi["cylinder_z"]:
        got = _floats(val, 9, errs, where)
        if not got:
            continue
        props = _material_props(got[5:], errs, where)
        if props is None:
            continue
        cx, cy, rad, z0, z1 = got[:5]
        if rad <= 0:
            errs.append(f"{where}: radius must be positive")
            continue
        if z0 > z1:
            errs.append(f"{where}: z extents must satisfy z0 <= z1")
            continue
        regions.append(Region("cylinder_z", got[:5], *props))
    voxel_csv = None
    if ("materials", "voxel_csv") in single:
        voxel_csv = single[("materials", "voxel_csv")][1]
        if not (path.parent / voxel_csv).is_file():
            errs.append(f"materials.voxel_csv: no such file {voxel_csv!r}")
            voxel_csv = None

    # [sources]
    sources = []
    for no, where, val in multi["point_src"]:
        parts = val.split()
        if len(parts) < 8:
            errs.append(f"{where}: expected COMP I J K KIND AMPL WIDTH DELAY [FREQ]")
            continue
        comp = _component(parts[0], errs, where)
        idx = _ints(" ".join(parts[1:4]), 3, errs, where)
        wf = _parse_waveform(parts[4:], errs, where)
        if comp and idx and wf:
            sources.append(CurrentSource(comp, idx, wf))
    for no, where, val in multi["block"]:
        parts = val.split()
        if len(parts) < 11:
            errs.append(f"{where}: expected COMP I0 J0 K0 I1 J1 K1 KIND AMPL WIDTH DELAY [FREQ]")
            continue
        comp = _component(parts[0], errs, where)
        lo = _ints(" ".join(parts[1:4]), 3, errs, where)
        hi = _ints(" ".join(parts[4:7]), 3, errs, where)
        wf = _parse_waveform(parts[7:], errs, where)
        if comp and lo and hi and wf:
            sources.append(CurrentSource(comp, (lo, hi), wf))
    for s in sources:
        if s.component.startswith("H"):
            errs.append(f"sources: current sources drive E components, got {s.component}")
    sources = [s for s in sources if s.component.startswith("E")]

    # [probes]
    point_probes, flux_probes, names = [], [], set()
    for no, where, val in multi["point_probe"]:
        parts = val.split()
        if len(parts) != 6:
            errs.append(f"{where}: expected COMP I J K STRIDE NAME")
            continue
        comp = _component(parts[0], errs, where)
        idx = _ints(" ".join(parts[1:4]), 3, errs, where)
        stride = _ints(parts[4], 1, errs, where)
        name = parts[5]
        if name in names:
            errs.append(f"{where}: duplicate probe name {name!r}")
            continue
        if comp and idx and stride:
            if stride[0] < 1:
                errs.append(f"{where}: stride must be >= 1")
                continue
            names.add(name)
            point_probes.append(PointProbe(comp, idx, stride[0], name))
    for no, where, val in multi["flux"]:
        parts = val.split()
        if len(parts) != 4:
            errs.append(f"{where}: expected AXIS PLANE STRIDE NAME")
            continue
        axis = parts[0].lower()
        if axis not in AXES:
            errs.append(f"{where}: axis must be x, y or z, got {parts[0]!r}")
            continue
        plane = _ints(parts[1], 1, errs, where)
        stride = _ints(parts[2], 1, errs, where)
        name = parts[3]
        if name in names:
            errs.append(f"{where}: duplicate probe name {name!r}")
            continue
        if plane and stride:
            if stride[0] < 1:
                errs.append(f"{where}: stride must be >= 1")
                continue
            names.add(name)
            flux_probes.append(FluxProbe(axis, plane[0], stride[0], name))

    # [output]
    out = OutputRequests()
    if ("output", "energy_stride") in single:
        got = _ints(single[("output", "energy_stride")][1], 1, errs, "output.energy_stride")
        if got is not None:
            if got[0] < 0:
                errs.append("output.energy_stride: must be >= 0")
            else:
                out.energy_stride = got[0]
    snap_steps = []
    for no, where, val in multi["snapshot_step"]:
        got = _ints(val, 1, errs, where)
        if got is not None:
            if got[0] < 0 or got[0] > n_steps:
                errs.append(f"{where}: step {got[0]} outside 0..{n_steps}")
            else:
                snap_steps.append(got[0])
    out.snapshot_steps = tuple(sorted(set(snap_steps)))
    if ("output", "snapshot_components") in single:
        comps = single[("output", "snapshot_components")][1].split()
        bad = [c for c in comps if _component(c, [], "") is None]
        if bad:
            errs.append(f"output.snapshot_components: unknown component(s) {bad}")
        else:
            out.snapshot_components = tuple(_component(c, errs, "") for c in comps)
    if ("output", "snapshot_format") in single:
        fmt = single[("output", "snapshot_format")][1].strip().lower()
        if fmt not in ("vtk", "csv", "both"):
            errs.append(f"output.snapshot_format: must be vtk, csv or both, got {fmt!r}")
        else:
            out.snapshot_format = fmt
    if ("output", "spectrum") in single:
        val = single[("output", "spectrum")][1].strip()
        if val.lower() in ("all", "none"):
            out.spectrum = val.lower()
        else:
            wanted = tuple(val.split())
            missing = [w for w in wanted if w not in names]
            if missing:
                errs.append(f"output.spectrum: unknown probe name(s) {missing}")
            else:
                out.spectrum = wanted
    if ("output", "spectrum_window") in single:
        w = single[("output", "spectrum_window")][1].strip().lower()
        if w not in ("none", "hann"):
            errs.append(f"output.spectrum_window: must be none or hann, got {w!r}")
        else:
            out.spectrum_window = None if w == "none" else w
    if ("output", "sparams") in single:
        parts = single[("output", "sparams")][1].split()
        if len(parts) not in (2, 3):
            errs.append("output.sparams: expected INC REF [TRANS] flux probe names")
        else:
            flux_names = {p.name for p in flux_probes}
            missing = [p for p in parts if p not in flux_names]
            if missing:
                errs.append(f"output.sparams: not flux probes: {missing}")
            else:
                out.sparams = tuple(parts)
    if ("output", "sar") in single:
        got = _bool(single[("output", "sar")][1], errs, "output.sar")
        out.sar = bool(got)
    if ("output", "seed") in single:
        got = _ints(single[("output", "seed")][1], 1, errs, "output.seed")
        if got is not None:
            out.seed = got[0]
    if ("output", "progress") in single:
        got = _ints(single[("output", "progress")][1], 1, errs, "output.progress")
        if got is not None:
            if got[0] < 0:
                errs.append("output.progress: must be >= 0")
            else:
                out.progress = got[0]

    # cross-validation that needs the grid
    if grid is not None:
        from .grids import component_shape

        def check_index(comp, idx, where):
            nz, ny, nx = component_shape(grid, comp)
            i, j, k = idx
            if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
                errs.append(f"{where}: index {idx} outside the {comp} node set "
                            f"(shape x={nx}, y={ny}, z={nz})")

        for s in sources:
            w = s.where
            if len(w) == 3 and all(isinstance(v, int) for v in w):
                check_index(s.component, w, "sources.point")
            else:
                check_index(s.component, w[0], "sources.block")
                check_index(s.component, w[1], "sources.block")
                if any(a > b for a, b in zip(w[0], w[1])):
                    errs.append("sources.block: lo index exceeds hi index")
        for p in point_probes:
            check_index(p.component, p.index, f"probes.point({p.name})")
        for p in flux_probes:
            if not 0 <= p.plane_index <= grid.cells(p.axis):
                errs.append(f"probes.flux({p.name}): plane {p.plane_index} outside "
                            f"0..{grid.cells(p.axis)}")

        # CFL policing needs materials; regions are cheap to rasterize once
        if not errs:
            sc = Scenario(str(path), grid, faces, phases, background, regions,
                          voxel_csv, sources, point_probes, flux_probes,
                          n_steps, dt_factor, dt_explicit, allow_unstable, out)
            try:
                mat = sc.build_materials()
            except ValueError as exc:
                errs.append(f"materials: {exc}")
            else:
                limit = cfl_max_dt(grid, mat)
                dt = sc.resolve_dt(mat)
                if dt > limit * (1 + 1e-12) and not allow_unstable:
                    errs.append(
                        f"time: dt {dt:.6e} exceeds the CFL limit {limit:.6e}; "
                        "set allow_unstable_dt = true to run anyway")
                if not errs:
                    return sc

    raise ScenarioError(path, errs)


def _component(token, errs, where):
    comp = token.strip()
    comp = comp[0].upper() + comp[1:].lower() if comp else comp
    if comp not in COMPONENTS:
        errs.append(f"{where}: unknown component {token!r}")
        return None
    return comp


_MULTI_KEYS = {
    ("materials", "box"): "box",
    ("materials", "cylinder_z"): "cylinder_z",
    ("sources", "point"): "point_src",
    ("sources", "block"): "block",
    ("probes", "point"): "point_probe",
    ("probes", "flux"): "flux",
    ("output", "snapshot_step"): "snapshot_step",
}

_SINGLE_KEYS = {
    ("grid", "cells"), ("grid", "spacing"),
    ("time", "steps"), ("time", "dt_factor"), ("time", "dt"),
    ("time", "allow_unstable_dt"),
    *((("boundaries", k)) for k in _BOUNDARY_KEYS),
    *((("boundaries", f"phase_{ax}")) for ax in AXES),
    ("materials", "background"), ("materials", "voxel_csv"),
    ("output", "energy_stride"), ("output", "snapshot_components"),
    ("output", "snapshot_format"), ("output", "spectrum"),
    ("output", "spectrum_window"), ("output", "sparams"),
    ("output", "sar"), ("output", "seed"), ("output", "progress"),
}
