"""File emitters: CSV traces, VTK snapshots, and the run manifest.

Formats, bit-exactly:

* Point probe:    header ``time,value`` (or ``time,re,im`` for complex
                  runs), one row per sample, ``%.17g`` floats.
* Energy trace:   ``step,time,total,Ex,Ey,Ez,Hx,Hy,Hz``.
* Spectrum:       ``f,re,im,mag`` - frequencies in Hz.
* Plane power:    ``f,re,im,mag`` of the complex power through a plane.
* S-parameters:   ``f,S11,S21,S11_dB,S21_dB``; the dB columns use
                  10*log10 because S11/S21 here are power ratios
                  (20*log10 is available from SParameters for callers
                  who want the amplitude convention).
* SAR:            ``i,j,k,sar`` over cells with nonzero conductivity.
* CSV snapshot:   ``i,j,k,value`` (or ``i,j,k,re,im``), x fastest.
* VTK snapshot:   legacy structured-points ASCII, one scalar per file.
  The writer emits SPACING = h with ORIGIN shifted by -h/2 along axes
  whose node family starts half a cell outside the domain; interior
  nodes land exactly, the two boundary planes render h/2 outside their
  true position (the format has no room for non-uniform spacing).
  Complex fields store their real part.

Every run also writes ``manifest.json``: the resolved parameter echo,
package version, wall time, a peak-memory estimate, and one entry per
file written.  Serial re-runs of the same scenario reproduce all of
these byte-for-byte (the manifest's wall-time field aside).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .grids import COMPONENTS, GridSpec, component_kinds, component_shape
from .sbp import NodeGridKind

_F = "%.17g"


def _fmt(x) -> str:
    return _F % float(x)


def _rows(path: Path, header: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


# ----------------------------------------------------------------- traces

def write_point_probe_csv(path, record) -> None:
    vals = np.asarray(record.values)
    if np.iscomplexobj(vals):
        _rows(Path(path), "time,re,im",
              ((_fmt(t), _fmt(v.real), _fmt(v.imag))
               for t, v in zip(record.times, vals)))
    else:
        _rows(Path(path), "time,value",
              ((_fmt(t), _fmt(v)) for t, v in zip(record.times, vals)))


def read_point_probe_csv(path):
    """Inverse of write_point_probe_csv: (times, values) arrays."""
    raw = np.genfromtxt(path, delimiter=",", names=True)
    if raw.size and "re" in (raw.dtype.names or ()):
        return np.atleast_1d(raw["time"]), np.atleast_1d(raw["re"] + 1j * raw["im"])
    if raw.size == 0:
        return np.zeros(0), np.zeros(0)
    return np.atleast_1d(raw["time"]), np.atleast_1d(raw["value"])


def write_energy_csv(path, samples) -> None:
    comps = list(COMPONENTS)
    _rows(Path(path), "step,time,total," + ",".join(comps),
          ((str(s.step), _fmt(s.time), _fmt(s.total),
            *(_fmt(s.terms.get(c, 0.0)) for c in comps)) for s in samples))


def write_spectrum_csv(path, frequencies, amplitude) -> None:
    amp = np.asarray(amplitude)
    _rows(Path(path), "f,re,im,mag",
          ((_fmt(f), _fmt(a.real), _fmt(a.imag), _fmt(abs(a)))
           for f, a in zip(frequencies, amp)))


def read_power_csv(path):
    raw = np.genfromtxt(path, delimiter=",", names=True)
    if raw.size == 0:
        return np.zeros(0), np.zeros(0, complex)
    return np.atleast_1d(raw["f"]), np.atleast_1d(raw["re"] + 1j * raw["im"])


def write_sparams_csv(path, sp) -> None:
    nan = np.full(len(sp.frequencies), np.nan)
    s21 = sp.s21 if sp.s21 is not None else nan
    d21 = sp.s21_db if sp.s21 is not None else nan
    _rows(Path(path), "f,S11,S21,S11_dB,S21_dB",
          ((_fmt(f), _fmt(a), _fmt(b), _fmt(c), _fmt(d))
           for f, a, b, c, d in zip(sp.frequencies, sp.s11, s21, sp.s11_db, d21)))


def write_sar_csv(path, sar, materials) -> None:
    """Rows only where conductivity is nonzero; elsewhere SAR is identically 0."""
    ii, jj, kk = np.nonzero(np.moveaxis(materials.sigma_e, (0, 1, 2), (2, 1, 0)))
    _rows(Path(path), "i,j,k,sar",
          ((str(i), str(j), str(k), _fmt(sar[k, j, i]))
           for i, j, k in zip(ii, jj, kk)))


# -------------------------------------------------------------- snapshots

def write_csv_snapshot(path, values) -> None:
    arr = np.asarray(values)
    nz, ny, nx = arr.shape
    idx = np.indices((nz, ny, nx)).reshape(3, -1)
    flat = arr.reshape(-1)
    if np.iscomplexobj(arr):
        _rows(Path(path), "i,j,k,re,im",
              ((str(i), str(j), str(k), _fmt(v.real), _fmt(v.imag))
               for (k, j, i), v in zip(idx.T, flat)))
    else:
        _rows(Path(path), "i,j,k,value",
              ((str(i), str(j), str(k), _fmt(v))
               for (k, j, i), v in zip(idx.T, flat)))


def write_vtk_structured_points(path, grid: GridSpec, component: str,
                                values, name: str | None = None) -> None:
    arr = np.asarray(values)
    if arr.shape != component_shape(grid, component):
        raise ValueError(f"snapshot shape {arr.shape} does not match the "
                         f"{component} layout {component_shape(grid, component)}")
    if np.iscomplexobj(arr):
        arr = arr.real
    kinds = component_kinds(component)
    origin = [0.0 if kinds[ax] is NodeGridKind.PLUS else -0.5 * grid.spacing(ax)
              for ax in "xyz"]
    nz, ny, nx = arr.shape
    name = name or component
    with open(path, "w", newline="") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write(f"{name} field snapshot\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {nx} {ny} {nz}\n")
        fh.write(f"ORIGIN {_fmt(origin[0])} {_fmt(origin[1])} {_fmt(origin[2])}\n")
        fh.write(f"SPACING {_fmt(grid.spacing('x'))} {_fmt(grid.spacing('y'))} "
                 f"{_fmt(grid.spacing('z'))}\n")
        fh.write(f"POINT_DATA {arr.size}\n")
        fh.write(f"SCALARS {name} double 1\n")
        fh.write("LOOKUP_TABLE default\n")
        for v in arr.reshape(-1):       # C order = x fastest, VTK's convention
            fh.write("%.12e\n" % v)


# --------------------------------------------------------------- manifest

@dataclass
class RunManifest:
    """What a run did and where it put things.

    ``outputs`` maps relative file name -> {kind, bytes, partial}.  A
    partial output means the run stopped before the file was complete.
    """

    scenario: str
    parameters: dict
    version: str = __version__
    wall_time_s: float = 0.0
    peak_memory_bytes: int = 0
    completed: bool = False
    outputs: dict = field(default_factory=dict)

    def add(self, path, kind: str, partial: bool = False) -> None:
        p = Path(path)
        self.outputs[p.name] = {
            "kind": kind,
            "bytes": p.stat().st_size if p.exists() else 0,
            "partial": bool(partial),
        }

    def write(self, path) -> None:
        doc = {
            "scenario": self.scenario,
            "parameters": self.parameters,
            "version": self.version,
            "wall_time_s": self.wall_time_s,
            "peak_memory_bytes": self.peak_memory_bytes,
            "completed": self.completed,
            "outputs": self.outputs,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def estimate_peak_memory(sim) -> int:
    """Bytes held by the field state, scratch, and coefficient arrays."""
    total = 0
    for comp in COMPONENTS:
        total += sim.fields[comp].nbytes + sim._scratch[comp].nbytes
    for coeff in (sim._ca, sim._cb, sim._ch):
        total += sum(a.nbytes for a in coeff.values())
    return total
