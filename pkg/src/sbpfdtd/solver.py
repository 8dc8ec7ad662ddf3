"""Leapfrog time stepping with weak (SAT) boundary enforcement.

The semi-discrete system is the standard curl pair on the staggered SBP
grids, with materials applied pointwise at the nodes:

    eps dE/dt = curl_h H + SAT_E(H) - J - sigma E
    mu  dH/dt = curl_e E + SAT_H(E)

Each of the six curl pairings (an E component, an H component, and the
axis their derivative acts along) owns one boundary-condition slot per
outer face.  The penalty coefficients that make the discrete energy
rate vanish are fixed by the SBP boundary identity: writing g for the
sign the pairing contributes at the high face, energy neutrality needs
the E-side and H-side penalties to sum to -g at the high face and +g at
the low face.  PEC places the whole penalty on the H update, PMC on the
E update, and the Bloch-periodic closure splits it evenly across both
faces of the pair with phase factors e^{+/- j alpha} linking them.

Time integration is the usual leapfrog: H advances half a step using
E^n, then E advances using H^(n+1/2).  Conductive loss uses the
semi-implicit average of E^n and E^(n+1), so sigma only damps.  The
leapfrog conserves a staggered energy exactly in lossless media, which
is what the energy diagnostics report.

All field sweeps run through :mod:`sbpfdtd.backend`; no operator matrix
is ever materialized.  ``kernel_mode="plain"`` drops the boundary
closures and all SAT terms, leaving the bare two-point interior update
as a cost baseline comparable to a textbook Yee loop.
"""

from __future__ import annotations

import cmath
import enum
import time
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .constants import C0
from .grids import (
    AXES,
    COMPONENTS,
    E_COMPONENTS,
    H_COMPONENTS,
    FACE_NAMES,
    FieldSet,
    GridSpec,
    build_axis_pairs,
    component_kinds,
    component_shape,
    norm_weights,
    np_axis,
    plane_cell_slab,
    split_face,
)
from .materials import CurrentSource, MaterialGrid
from .sbp import NodeGridKind

__all__ = [
    "BoundaryKind",
    "CURL_PAIRS",
    "SatConfig",
    "Simulation",
    "PointProbe",
    "FluxProbe",
    "PointRecord",
    "FluxRecord",
    "EnergySample",
    "RunResult",
    "cfl_max_dt",
]


class BoundaryKind(enum.Enum):
    PEC = "pec"            # perfect electric conductor
    PMC = "pmc"            # perfect magnetic conductor
    PERIODIC = "periodic"  # Bloch-periodic pairing of opposite faces


# The six curl pairings: (E component, H component, derivative axis,
# sign g of the pairing's boundary term at the axis' high face).
CURL_PAIRS = (
    ("Ex", "Hz", "y", +1.0),
    ("Ex", "Hy", "z", -1.0),
    ("Ey", "Hx", "z", +1.0),
    ("Ey", "Hz", "x", -1.0),
    ("Ez", "Hy", "x", +1.0),
    ("Ez", "Hx", "y", -1.0),
)

# Curl terms per updated component: target -> ((source, axis, sign), ...)
_E_CURL = {
    "Ex": (("Hz", "y", +1.0), ("Hy", "z", -1.0)),
    "Ey": (("Hx", "z", +1.0), ("Hz", "x", -1.0)),
    "Ez": (("Hy", "x", +1.0), ("Hx", "y", -1.0)),
}
_H_CURL = {
    "Hx": (("Ey", "z", +1.0), ("Ez", "y", -1.0)),
    "Hy": (("Ez", "x", +1.0), ("Ex", "z", -1.0)),
    "Hz": (("Ex", "y", +1.0), ("Ey", "x", -1.0)),
}


def _normalize_kinds(kinds) -> dict:
    """Accept a single kind, a per-axis map, or a per-face map."""
    if isinstance(kinds, (str, BoundaryKind)):
        kinds = {ax: kinds for ax in AXES}
    out = {}
    for key, val in dict(kinds).items():
        val = val if isinstance(val, BoundaryKind) else BoundaryKind(str(val).lower())
        if key in AXES:
            out[f"{key}_low"] = val
            out[f"{key}_high"] = val
        elif key in FACE_NAMES:
            out[key] = val
        else:
            raise ValueError(f"boundary key must be an axis or face name, got {key!r}")
    missing = [f for f in FACE_NAMES if f not in out]
    if missing:
        raise ValueError(f"boundary kind missing for faces: {missing}")
    return out


@dataclass
class SatConfig:
    """Boundary kinds per face plus the 24 SAT penalty slots.

    ``sigma`` slots scale penalties entering H updates (keyed by the H
    component, the pair axis, and the side); ``chi`` slots enter E
    updates (keyed by the E component).  ``for_boundaries`` fills the
    energy-neutral defaults; the slots stay exposed so tests can flip a
    single sign and watch neutrality break.  ``phases`` holds the Bloch
    phase across the full domain per periodic axis, in radians.
    """

    kinds: dict
    sigma: dict
    chi: dict
    phases: dict = field(default_factory=lambda: {ax: 0.0 for ax in AXES})

    @classmethod
    def for_boundaries(cls, kinds="pec", phases=None) -> "SatConfig":
        kinds = _normalize_kinds(kinds)
        phases = {ax: 0.0 for ax in AXES} | (dict(phases) if phases else {})
        sigma = {}
        chi = {}
        for ec, hc, ax, g in CURL_PAIRS:
            for side, sgn in (("low", +1.0), ("high", -1.0)):
                kind = kinds[f"{ax}_{side}"]
                sigma[(hc, ax, side)] = 0.0
                chi[(ec, ax, side)] = 0.0
                if kind is BoundaryKind.PEC:
                    sigma[(hc, ax, side)] = sgn * g
                elif kind is BoundaryKind.PMC:
                    chi[(ec, ax, side)] = sgn * g
                else:
                    sigma[(hc, ax, side)] = 0.5 * sgn * g
                    chi[(ec, ax, side)] = 0.5 * sgn * g
        cfg = cls(kinds=kinds, sigma=sigma, chi=chi, phases=phases)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        self.kinds = _normalize_kinds(self.kinds)
        for ax in AXES:
            lo, hi = self.kinds[f"{ax}_low"], self.kinds[f"{ax}_high"]
            if (lo is BoundaryKind.PERIODIC) != (hi is BoundaryKind.PERIODIC):
                raise ValueError(f"periodic closure on axis {ax} must pair both faces")
            phase = float(self.phases.get(ax, 0.0))
            if not np.isfinite(phase):
                raise ValueError(f"Bloch phase on axis {ax} must be finite")
            if phase != 0.0 and lo is not BoundaryKind.PERIODIC:
                raise ValueError(f"nonzero Bloch phase on non-periodic axis {ax}")
            self.phases[ax] = phase
        for ec, hc, ax, _ in CURL_PAIRS:
            for side in ("low", "high"):
                for slots, key in ((self.sigma, (hc, ax, side)), (self.chi, (ec, ax, side))):
                    v = float(slots.setdefault(key, 0.0))
                    if not np.isfinite(v):
                        raise ValueError(f"SAT coefficient {key} must be finite")
                    slots[key] = v

    def requires_complex(self) -> bool:
        """True when any Bloch phase factor has an imaginary part."""
        return any(abs(cmath.exp(1j * float(self.phases.get(ax, 0.0))).imag) > 1e-15
                   for ax in AXES
                   if self.kinds.get(f"{ax}_low") is BoundaryKind.PERIODIC)

    def is_periodic(self, axis: str) -> bool:
        return self.kinds[f"{axis}_low"] is BoundaryKind.PERIODIC


def cfl_max_dt(grid: GridSpec, materials: MaterialGrid | None = None, *,
               c_max: float | None = None) -> float:
    """Largest stable leapfrog step: 1 / (c_max sqrt(hx^-2 + hy^-2 + hz^-2)).

    ``c_max`` overrides the wave speed (e.g. a rounded 3e8 m/s); otherwise
    it is the vacuum speed divided by the smallest refractive index of
    ``materials``.
    """
    if c_max is None:
        c_max = C0 if materials is None else C0 / materials.min_refractive_index()
    rad = np.sqrt(grid.hx ** -2 + grid.hy ** -2 + grid.hz ** -2)
    return 1.0 / (c_max * rad)


# ------------------------------------------------------------------- probes

@dataclass(frozen=True)
class PointProbe:
    """Record one component at one node (i, j, k in x, y, z order) every ``stride`` steps."""

    component: str
    index: tuple
    stride: int = 1
    name: str = ""

    def label(self, seq: int) -> str:
        return self.name or f"point{seq}"


@dataclass(frozen=True)
class FluxProbe:
    """Record tangential E/H slabs on a cell-boundary plane for power flow.

    ``plane_index`` is the plus-grid node index along ``axis``.  H is
    averaged between its two surrounding half steps when recorded, so
    products with E refer to the same time level.
    """

    axis: str
    plane_index: int
    stride: int = 1
    name: str = ""

    def label(self, seq: int) -> str:
        return self.name or f"flux{seq}"


@dataclass
class PointRecord:
    probe: PointProbe
    times: np.ndarray
    values: np.ndarray


@dataclass
class FluxRecord:
    """Time series of tangential fields on a plane, cell-indexed.

    ``e1/h1`` and ``e2/h2`` follow the right-handed cyclic order of the
    normal axis (x -> y,z; y -> z,x; z -> x,y), so the power flowing
    along the +normal direction is sum((e1 h2* - e2 h1*) * ds).
    """

    probe: FluxProbe
    times: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    ds: float


@dataclass
class EnergySample:
    step: int
    time: float
    electric: float
    magnetic: float
    terms: dict = field(default_factory=dict)  # per-component energies

    @property
    def total(self) -> float:
        return self.electric + self.magnetic


@dataclass
class RunResult:
    n_steps: int
    dt: float
    wall_time: float
    points: dict
    fluxes: dict
    energy: list
    sar_e2max: np.ndarray | None = None

    def energy_arrays(self):
        t = np.array([s.time for s in self.energy])
        e = np.array([s.total for s in self.energy])
        return t, e


_CYCLIC = {"x": ("y", "z"), "y": ("z", "x"), "z": ("x", "y")}


# --------------------------------------------------------------- simulation

class Simulation:
    """Matrix-free leapfrog FDTD state and update machinery.

    Parameters
    ----------
    grid, materials, sat : the space discretization, cell materials, and
        boundary treatment.
    dt : time step in seconds.  No stability gate is applied here; use
        :func:`cfl_max_dt` to pick a stable value.
    sources : iterable of :class:`CurrentSource`.
    complex_fields : force complex state arrays.  Defaults to whatever
        the SAT configuration requires (Bloch phases need complex).
    kernel_mode : "sbp" for the full scheme, "plain" for the bare
        interior-stencil baseline without closures or penalties.
    """

    def __init__(self, grid: GridSpec, materials: MaterialGrid, sat: SatConfig,
                 dt: float, sources=(), *, complex_fields: bool | None = None,
                 kernel_mode: str = "sbp"):
        if not (np.isfinite(dt) and dt > 0.0):
            raise ValueError(f"dt must be positive and finite, got {dt}")
        if kernel_mode not in ("sbp", "plain"):
            raise ValueError(f"kernel_mode must be 'sbp' or 'plain', got {kernel_mode!r}")
        if materials.grid != grid:
            raise ValueError("materials were built for a different grid")
        sat.validate()
        needs_complex = sat.requires_complex()
        if complex_fields is None:
            complex_fields = needs_complex
        elif needs_complex and not complex_fields:
            raise ValueError("Bloch phases with complex factors need complex_fields=True")

        self.grid = grid
        self.materials = materials
        self.sat = sat
        self.dt = float(dt)
        self.kernel_mode = kernel_mode
        self.complex_fields = bool(complex_fields)
        self.pairs = build_axis_pairs(grid)
        self.fields = FieldSet.allocate(grid, complex_fields)
        self._scratch = {c: np.zeros_like(self.fields[c]) for c in COMPONENTS}
        self.step_index = 0

        # update coefficients; loss enters semi-implicitly so ca <= 1
        self._ca, self._cb, self._ch = {}, {}, {}
        for ec in E_COMPONENTS:
            eps = materials.sample_eps(ec)
            sig = materials.sample_sigma(ec)
            half = sig * self.dt / (2.0 * eps)
            self._ca[ec] = (1.0 - half) / (1.0 + half)
            self._cb[ec] = (self.dt / eps) / (1.0 + half)
        for hc in H_COMPONENTS:
            self._ch[hc] = self.dt / materials.sample_mu(hc)

        self._deriv_plans = {c: self._build_deriv_plans(c) for c in COMPONENTS}
        self._h_sat_plans = self._build_sat_plans(h_side=True)
        self._e_sat_plans = self._build_sat_plans(h_side=False)
        self._source_plans = []
        for src in sources:
            if src.component not in E_COMPONENTS:
                raise ValueError(f"current sources drive E components, got {src.component!r}")
            slicer = src.node_slicer(component_shape(grid, src.component))
            self._source_plans.append((src.component, slicer, src.waveform))

    # ------------------------------------------------------------ plans

    def _build_deriv_plans(self, target: str):
        terms = _E_CURL.get(target) or _H_CURL[target]
        plans = []
        empty = np.zeros((0, 3))
        for src, axis, sign in terms:
            pair = self.pairs[axis]
            n = pair.n_cells
            dst_kind = component_kinds(target)[axis]
            if component_kinds(src)[axis] is dst_kind:
                raise AssertionError("curl pairing must straddle the two node families")
            if dst_kind is NodeGridKind.PLUS:
                n_dst, ioff = n + 1, 0
                top, bot = pair.d_plus_top, pair.d_plus_bot
                lo_full, hi_full, b0 = 2, n_dst - 2, n_dst - 2
                lo_plain, hi_plain = 0, n_dst
            else:
                n_dst, ioff = n + 2, -1
                top, bot = pair.d_minus_top, pair.d_minus_bot
                lo_full, hi_full, b0 = 3, n_dst - 3, n_dst - 3
                lo_plain, hi_plain = 1, n_dst - 1
            c = sign / pair.h
            if self.kernel_mode == "plain":
                plans.append((src, np_axis(axis), lo_plain, hi_plain, ioff, c, empty, empty, 0))
            else:
                plans.append((src, np_axis(axis), lo_full, hi_full, ioff, c,
                              np.ascontiguousarray(sign * top), np.ascontiguousarray(sign * bot), b0))
        return plans

    def _build_sat_plans(self, h_side: bool):
        """Penalty terms entering the H updates (sigma slots) or E updates (chi).

        Keyed by target component.  Plane indices are pre-normalized so
        the kernels take plain nonnegative ints: both node families put
        node 0 on the low face and their last node on the high face.
        """
        plans = {}
        if self.kernel_mode == "plain":
            return plans
        for ec, hc, ax, _g in CURL_PAIRS:
            target, source = (hc, ec) if h_side else (ec, hc)
            slots = self.sat.sigma if h_side else self.sat.chi
            pair = self.pairs[ax]
            axn = np_axis(ax)
            n_t = self.fields[target].shape[axn]
            n_s = self.fields[source].shape[axn]
            w_b = pair.boundary_weight(component_kinds(target)[ax])
            periodic = self.sat.is_periodic(ax)
            alpha = float(self.sat.phases.get(ax, 0.0))
            for side in ("low", "high"):
                coef = slots[(target, ax, side)] / w_b
                if coef == 0.0:
                    continue
                i_dst = 0 if side == "low" else n_t - 1
                i_src = 0 if side == "low" else n_s - 1
                cross = None
                if periodic:
                    # phase-linked mismatch against the opposite face
                    fac = cmath.exp((1j if side == "low" else -1j) * alpha)
                    if not self.complex_fields:
                        fac = fac.real
                    cross = (n_s - 1 - i_src, -coef * fac)
                plans.setdefault(target, []).append((axn, i_dst, source, i_src, coef, cross))
        return plans

    # ---------------------------------------------------------- stepping

    @property
    def time(self) -> float:
        return self.step_index * self.dt

    def update_h(self) -> None:
        """Advance every H component by one step (half-step offset from E)."""
        fields, scratch = self.fields.data, self._scratch
        for hc in H_COMPONENTS:
            acc = scratch[hc]
            acc[...] = 0
            for src, ax, lo, hi, ioff, c, top, bot, b0 in self._deriv_plans[hc]:
                backend.add_derivative(acc, fields[src], ax, lo, hi, ioff, c, top, bot, b0)
            for axn, i_dst, source, i_src, coef, cross in self._h_sat_plans.get(hc, ()):
                backend.sat_face_add(acc, fields[source], axn, i_dst, i_src, coef)
                if cross is not None:
                    backend.sat_face_add(acc, fields[source], axn, i_dst, cross[0], cross[1])
            backend.update_h(fields[hc], self._ch[hc], acc)

    def update_e(self, t_source: float) -> None:
        """Advance every E component; sources are evaluated at ``t_source``."""
        fields, scratch = self.fields.data, self._scratch
        for ec in E_COMPONENTS:
            acc = scratch[ec]
            acc[...] = 0
            for src, ax, lo, hi, ioff, c, top, bot, b0 in self._deriv_plans[ec]:
                backend.add_derivative(acc, fields[src], ax, lo, hi, ioff, c, top, bot, b0)
            for axn, i_dst, source, i_src, coef, cross in self._e_sat_plans.get(ec, ()):
                backend.sat_face_add(acc, fields[source], axn, i_dst, i_src, coef)
                if cross is not None:
                    backend.sat_face_add(acc, fields[source], axn, i_dst, cross[0], cross[1])
            for comp, slicer, waveform in self._source_plans:
                if comp == ec:
                    acc[slicer] -= waveform(t_source)
            backend.update_e(fields[ec], self._ca[ec], self._cb[ec], acc)

    def step(self) -> None:
        """One leapfrog step: H first, then E against the fresh H."""
        self.update_h()
        self.update_e((self.step_index + 0.5) * self.dt)
        self.step_index += 1

    # ------------------------------------------------------------- state

    def state_vector(self) -> np.ndarray:
        """Stacked state [Ex Ey Ez Hx Hy Hz], each raveled x-fastest."""
        return np.concatenate([self.fields[c].ravel() for c in COMPONENTS])

    def load_state_vector(self, vec: np.ndarray) -> None:
        pos = 0
        for c in COMPONENTS:
            a = self.fields[c]
            a[...] = vec[pos:pos + a.size].reshape(a.shape)
            pos += a.size
        if pos != vec.size:
            raise ValueError(f"state vector has {vec.size} entries, expected {pos}")

    def state_size(self) -> int:
        return sum(self.fields[c].size for c in COMPONENTS)

    # --------------------------------------------------------------- run

    def _flux_slabs(self, probe: FluxProbe):
        a1, a2 = _CYCLIC[probe.axis]
        f = self.fields
        return (
            plane_cell_slab(f[f"E{a1}"], f"E{a1}", probe.axis, probe.plane_index),
            plane_cell_slab(f[f"E{a2}"], f"E{a2}", probe.axis, probe.plane_index),
            plane_cell_slab(f[f"H{a1}"], f"H{a1}", probe.axis, probe.plane_index),
            plane_cell_slab(f[f"H{a2}"], f"H{a2}", probe.axis, probe.plane_index),
        )

    def _cell_e2(self) -> np.ndarray:
        """|E|^2 averaged to cell centres (for SAR tracking)."""
        f = self.fields

        def sq(a):
            return (a * a.conj()).real if self.complex_fields else a * a

        ex = sq(f["Ex"])
        ey = sq(f["Ey"])
        ez = sq(f["Ez"])
        exc = 0.25 * (ex[:-1, :-1, 1:-1] + ex[:-1, 1:, 1:-1] + ex[1:, :-1, 1:-1] + ex[1:, 1:, 1:-1])
        eyc = 0.25 * (ey[:-1, 1:-1, :-1] + ey[:-1, 1:-1, 1:] + ey[1:, 1:-1, :-1] + ey[1:, 1:-1, 1:])
        ezc = 0.25 * (ez[1:-1, :-1, :-1] + ez[1:-1, :-1, 1:] + ez[1:-1, 1:, :-1] + ez[1:-1, 1:, 1:])
        return exc + eyc + ezc

    def run(self, n_steps: int, *, probes=(), energy_stride: int = 0,
            track_sar: bool = False, on_step=None) -> RunResult:
        """Step ``n_steps`` times while recording probes and diagnostics.

        Point probes sample after every completed step plus the initial
        state, at t = n dt for n = 0..n_steps.  Flux probes sample
        mid-step so E^n pairs with the average of the two surrounding H
        half-steps, giving records at t = n dt for n < n_steps.  Point
        probes on H components return the stored half-step value (the
        raw leapfrog convention) labelled with the integer-step time.
        ``energy_stride`` > 0 samples the staggered discrete energy
        (exactly conserved in lossless closed boxes).  ``track_sar``
        accumulates the per-cell maximum of cell-centred |E|^2.
        ``on_step(sim, n)`` is called after each completed step.
        """
        if n_steps < 0:
            raise ValueError("n_steps must be non-negative")
        point_probes = [p for p in probes if isinstance(p, PointProbe)]
        flux_probes = [p for p in probes if isinstance(p, FluxProbe)]
        for p in probes:
            if not isinstance(p, (PointProbe, FluxProbe)):
                raise TypeError(f"unknown probe type {type(p).__name__}")
            if p.stride < 1:
                raise ValueError("probe stride must be >= 1")

        pt_data = {p: ([], []) for p in point_probes}  # times, values
        for p in point_probes:
            i, j, k = (int(v) for v in p.index)
            shape = self.fields[p.component].shape
            if not (0 <= i < shape[2] and 0 <= j < shape[1] and 0 <= k < shape[0]):
                raise ValueError(f"probe index {p.index} outside the {p.component} node set")
        fx_data = {p: ([], [], [], [], []) for p in flux_probes}
        fx_stash = {}
        for p in flux_probes:
            if not 0 <= p.plane_index <= self.grid.cells(p.axis):
                raise ValueError(f"flux plane index {p.plane_index} outside axis {p.axis}")
            # plays the role of H^(-1/2); zero for a quiet start
            fx_stash[p] = self._flux_slabs(p)[2:]

        def sample_points(step):
            for p, (ts, vs) in pt_data.items():
                if step % p.stride:
                    continue
                i, j, k = (int(v) for v in p.index)
                ts.append(step * self.dt)
                vs.append(self.fields[p.component][k, j, i])

        energy = []
        weights = None
        if energy_stride:
            from .diagnostics import _energy_weights, _staggered_sample
            weights = _energy_weights(self)

        sar = np.zeros(self.grid.cell_shape) if track_sar else None

        sample_points(0)
        t0 = time.perf_counter()
        for n in range(n_steps):
            want_energy = energy_stride and n % energy_stride == 0
            h_prev = {hc: self.fields[hc].copy() for hc in H_COMPONENTS} if want_energy else None
            self.update_h()
            # mid-step: E = E^n while H = H^(n+1/2); together with the
            # stashed H^(n-1/2) slabs this centres flux records on t = n dt
            if want_energy:
                energy.append(_staggered_sample(self, weights, h_prev, n))
            for p, rec in fx_data.items():
                e1, e2, h1, h2 = self._flux_slabs(p)
                ph1, ph2 = fx_stash[p]
                fx_stash[p] = (h1, h2)
                if n % p.stride:
                    continue
                rec[0].append(n * self.dt)
                rec[1].append(e1)
                rec[2].append(e2)
                rec[3].append(0.5 * (h1 + ph1))
                rec[4].append(0.5 * (h2 + ph2))
            self.update_e((n + 0.5) * self.dt)
            self.step_index += 1
            sample_points(self.step_index)
            if track_sar:
                np.maximum(sar, self._cell_e2(), out=sar)
            if on_step is not None:
                on_step(self, self.step_index)
        wall = time.perf_counter() - t0

        points = {}
        for seq, p in enumerate(point_probes):
            ts, vs = pt_data[p]
            points[p.label(seq)] = PointRecord(p, np.array(ts), np.array(vs))
        fluxes = {}
        for seq, p in enumerate(flux_probes):
            ts, e1, e2, h1, h2 = fx_data[p]
            a1, a2 = _CYCLIC[p.axis]
            ds = self.grid.spacing(a1) * self.grid.spacing(a2)
            fluxes[p.label(seq)] = FluxRecord(p, np.array(ts), np.array(e1), np.array(e2),
                                              np.array(h1), np.array(h2), ds)
        return RunResult(n_steps=n_steps, dt=self.dt, wall_time=wall,
                         points=points, fluxes=fluxes, energy=energy, sar_e2max=sar)
