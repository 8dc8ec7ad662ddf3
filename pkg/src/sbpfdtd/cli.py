"""Command-line front end.

Four subcommands:

    verify        self-checks: operator identities, accuracy, energy
                  neutrality of the boundary treatment, and matrix-free
                  vs densely assembled one-step equivalence
    simulate      run a scenario file and write its outputs + manifest
    dispersion    eigenvalue dispersion sweep / angle scan CSVs
    postprocess   spectrum / S-parameters / SAR from recorded CSVs

Exit codes: 0 success, 1 failed checks or runtime failure, 2 usage or
input validation errors.  The output directory resolves, in order, from
--output-dir, $SBPFDTD_OUTPUT_DIR, then the current directory.  The
kernel backend resolves from --backend, then $SBPFDTD_BACKEND, then the
compiled backend when importable.  --threads is accepted and recorded
but execution is serial; outputs never depend on it.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, backend
from .constants import C0
from .diagnostics import plane_power, s_parameters, sar_field, spectrum
from .dense import assemble_semidiscrete, one_step_matrix, weighted_symmetry_residual
from .dispersion import DEFAULT_CELLS, angle_scan, sweep_normal_incidence
from .grids import GridSpec
from .materials import MaterialGrid
from .outputs import (RunManifest, estimate_peak_memory, read_point_probe_csv,
                      read_power_csv, write_csv_snapshot, write_energy_csv,
                      write_point_probe_csv, write_sar_csv, write_sparams_csv,
                      write_spectrum_csv, write_vtk_structured_points)
from .sbp import build_sbp_pair, verify_sbp
from .scenario import ScenarioError, parse_scenario
from .solver import SatConfig, Simulation

OK, FAILED, USAGE = 0, 1, 2


def _outdir(args) -> Path:
    out = getattr(args, "output_dir", None) or os.environ.get("SBPFDTD_OUTPUT_DIR") or "."
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


# ----------------------------------------------------------------- verify

def cmd_verify(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    tol = args.tol
    failures = []

    print(f"operator checks (tolerance {tol:g})")
    print(f"{'n':>4s} {'identity':>12s} {'const':>12s} {'linear':>12s}  result")
    for n in sizes:
        chk = verify_sbp(build_sbp_pair(n, 1.0), tol=tol)
        if not chk.ok:
            failures.append(f"sbp identity/accuracy at n={n}")
        const = max(chk.accuracy_residuals[k] for k in chk.accuracy_residuals if k[1] == 0)
        linear = max(chk.accuracy_residuals[k] for k in chk.accuracy_residuals if k[1] == 1)
        print(f"{n:4d} {chk.identity_residual:12.3e} {const:12.3e} "
              f"{linear:12.3e}  {'pass' if chk.ok else 'FAIL'}")

    grid = GridSpec(4, 4, 4, 0.3, 0.25, 0.2)
    mat = MaterialGrid.uniform(grid)
    cases = [("pec", None), ("pmc", None),
             ("periodic", {"x": 0.4, "y": -1.1, "z": 2.2})]
    for kind, phases in cases:
        sat = SatConfig.for_boundaries(kind, phases)
        if args.perturb:
            key = next(iter(sat.sigma if kind != "pmc" else sat.chi))
            slots = sat.sigma if kind != "pmc" else sat.chi
            slots[key] = -slots[key] if slots[key] else 1.0
        m_e, m_h, w_e, w_h = assemble_semidiscrete(grid, sat)
        res = weighted_symmetry_residual(m_e, m_h, w_e, w_h)
        ok = res <= 1e-12
        if not ok:
            failures.append(f"energy-rate neutrality ({kind})")
        print(f"energy-rate neutrality ({kind}): residual {res:.3e} "
              f"{'pass' if ok else 'FAIL'}")

        dt = 0.5 / (C0 * math.sqrt(sum(grid.spacing(ax) ** -2 for ax in "xyz")))
        lam = one_step_matrix(m_e, m_h, dt)
        sim = Simulation(grid, mat, SatConfig.for_boundaries(kind, phases), dt,
                         complex_fields=kind == "periodic")
        rng = np.random.default_rng(7)
        state = rng.standard_normal(sim.state_size())
        if kind == "periodic":
            state = state + 1j * rng.standard_normal(sim.state_size())
        sim.load_state_vector(state)
        sim.step()
        got = sim.state_vector()
        want = lam @ state
        rel = float(np.max(np.abs(got - want)) / max(np.max(np.abs(want)), 1e-300))
        ok = rel <= 1e-12
        if not ok:
            failures.append(f"matrix-free vs dense one step ({kind})")
        print(f"matrix-free vs dense one step ({kind}): rel {rel:.3e} "
              f"{'pass' if ok else 'FAIL'}")

    if failures:
        print(f"FAILED: {len(failures)} invariant(s): " + "; ".join(failures))
        return FAILED
    print("all checks passed")
    return OK


# --------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    try:
        sc = parse_scenario(args.scenario)
    except ScenarioError as exc:
        print(exc, file=sys.stderr)
        return USAGE

    if args.backend:
        backend.select_backend(args.backend)
    outdir = _outdir(args)
    grid = sc.grid
    mat = sc.build_materials()
    sat = sc.build_sat()
    dt = sc.resolve_dt(mat)
    n_steps = sc.n_steps if args.steps is None else args.steps
    sim = Simulation(grid, mat, sat, dt, sources=sc.sources)

    out = sc.outputs
    manifest = RunManifest(
        scenario=str(Path(args.scenario).resolve()),
        parameters={
            "cells": [grid.cells(ax) for ax in "xyz"],
            "spacing": [grid.spacing(ax) for ax in "xyz"],
            "dt": dt,
            "n_steps": n_steps,
            "boundaries": {f: k for f, k in sc.boundary_kinds.items()},
            "phases": sc.phases,
            "backend": backend.active_backend(),
            "threads": args.threads,
            "seed": out.seed,
            "kernel_mode": "sbp",
        },
    )
    manifest.peak_memory_bytes = estimate_peak_memory(sim)

    snap_steps = set(out.snapshot_steps)

    def snapshot(step):
        for comp in out.snapshot_components:
            stem = f"snap_{comp}_{step:06d}"
            if out.snapshot_format in ("vtk", "both"):
                p = outdir / f"{stem}.vtk"
                write_vtk_structured_points(p, grid, comp, sim.fields[comp])
                manifest.add(p, "snapshot_vtk")
            if out.snapshot_format in ("csv", "both"):
                p = outdir / f"{stem}.csv"
                write_csv_snapshot(p, sim.fields[comp])
                manifest.add(p, "snapshot_csv")

    progress = args.progress if args.progress is not None else out.progress

    def on_step(s, n):
        if n in snap_steps:
            snapshot(n)
        if progress and n % progress == 0:
            print(f"step {n}/{n_steps}  t={n * dt:.6e}s  max|E|="
                  f"{max(s.fields.max_abs(c) for c in ('Ex', 'Ey', 'Ez')):.6e}")

    t0 = time.perf_counter()
    if 0 in snap_steps:
        snapshot(0)
    try:
        result = sim.run(n_steps, probes=sc.probes,
                         energy_stride=out.energy_stride,
                         track_sar=out.sar, on_step=on_step)
    except (ValueError, FloatingPointError) as exc:
        manifest.wall_time_s = time.perf_counter() - t0
        for name in list(manifest.outputs):
            manifest.outputs[name]["partial"] = True
        manifest.write(outdir / "manifest.json")
        print(f"simulation failed: {exc}", file=sys.stderr)
        return FAILED
    manifest.wall_time_s = time.perf_counter() - t0

    for name, rec in result.points.items():
        p = outdir / f"probe_{name}.csv"
        write_point_probe_csv(p, rec)
        manifest.add(p, "point_probe")
    if out.energy_stride:
        p = outdir / "energy.csv"
        write_energy_csv(p, result.energy)
        manifest.add(p, "energy")

    wanted = out.spectrum
    if wanted != "none":
        names = result.points.keys() if wanted == "all" else wanted
        for name in names:
            rec = result.points[name]
            if len(rec.values) < 2:
                continue
            sp = spectrum(rec.values, dt * result.points[name].probe.stride,
                          window=out.spectrum_window)
            p = outdir / f"spectrum_{name}.csv"
            write_spectrum_csv(p, sp.frequencies, sp.amplitude)
            manifest.add(p, "spectrum")
            if sp.peaks:
                best = max(sp.peaks, key=lambda pk: pk.magnitude)
                print(f"spectrum {name}: dominant peak {best.frequency:.6e} Hz")
            else:
                print(f"spectrum {name}: no peaks above the floor")

    powers = {}
    for name, rec in result.fluxes.items():
        if len(rec.times) < 2:
            continue
        freqs, power = plane_power(rec, window=out.spectrum_window)
        powers[name] = (freqs, power)
        p = outdir / f"flux_{name}_power.csv"
        write_spectrum_csv(p, freqs, power)
        manifest.add(p, "plane_power")
    if out.sparams and all(n in powers for n in out.sparams):
        inc = powers[out.sparams[0]]
        ref = powers[out.sparams[1]]
        tra = powers[out.sparams[2]] if len(out.sparams) == 3 else None
        sp = s_parameters(inc[0], inc[1].real, ref[1].real,
                          tra[1].real if tra else None)
        p = outdir / "sparams.csv"
        write_sparams_csv(p, sp)
        manifest.add(p, "sparams")

    if out.sar and result.sar_e2max is not None:
        sar = sar_field(result.sar_e2max, mat)
        p = outdir / "sar.csv"
        write_sar_csv(p, sar, mat)
        manifest.add(p, "sar")

    manifest.completed = True
    manifest.write(outdir / "manifest.json")
    print(f"wrote {len(manifest.outputs)} file(s) + manifest to {outdir} "
          f"in {manifest.wall_time_s:.2f}s")
    return OK


# -------------------------------------------------------------- dispersion

def _ratio(text):
    """Accept plain floats or NUM/DEN fractions like 1/20."""
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _angles(text, fallback_stop):
    if "," in text:
        return [float(t) for t in text.split(",") if t]
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("angle count must be >= 1")
    return list(np.linspace(0.0, fallback_stop, n))


def cmd_dispersion(args) -> int:
    outdir = _outdir(args)
    if args.dt_factor >= 1.0:
        print(f"warning: dt factor {args.dt_factor} is at or beyond the CFL "
              "limit; eigenvalues may leave the unit circle")
    try:
        if args.angle_scan:
            thetas = _angles(args.thetas, 90.0)
            phis = _angles(args.phis, 90.0)
            cells = args.cells or 4
            points = angle_scan(thetas, phis, ratio=args.ratio, cells=cells,
                                dt_factor=args.dt_factor, max_dim=args.max_dim)
            path = outdir / "dispersion_scan.csv"
            with open(path, "w", newline="") as fh:
                fh.write("theta_deg,phi_deg,dispersion,dissipation,global\n")
                for pt in points:
                    e = pt.errors
                    fh.write(f"{pt.theta_deg:.10g},{pt.phi_deg:.10g},"
                             f"{e.dispersion:.17g},{e.dissipation:.17g},"
                             f"{e.global_error:.17g}\n")
        else:
            ratios = [_ratio(t) for t in args.ratios.split(",") if t]
            cells = args.cells or DEFAULT_CELLS
            points = sweep_normal_incidence(ratios, cells_axial=cells,
                                            dt_factor=args.dt_factor,
                                            max_dim=args.max_dim)
            path = outdir / "dispersion_sweep.csv"
            with open(path, "w", newline="") as fh:
                fh.write("k0h_over_2pi,dispersion,dissipation,global\n")
                for pt in points:
                    e = pt.errors
                    fh.write(f"{pt.k0h_over_2pi:.10g},{e.dispersion:.17g},"
                             f"{e.dissipation:.17g},{e.global_error:.17g}\n")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE

    worst = max(pt.unit_circle_dev for pt in points)
    print(f"wrote {path} ({len(points)} point(s)); max | |lambda|-1 | = {worst:.3e}")
    if worst > 1e-6:
        print("stability warning: eigenvalues off the unit circle "
              f"(deviation {worst:.3e})")
        return FAILED if args.dt_factor < 1.0 else OK
    return OK


# ------------------------------------------------------------ postprocess

def cmd_postprocess(args) -> int:
    outdir = _outdir(args)
    if args.what == "spectrum":
        times, values = read_point_probe_csv(args.input)
        if len(times) < 2:
            print("error: record too short for a spectrum", file=sys.stderr)
            return USAGE
        dt = float(times[1] - times[0])
        sp = spectrum(values, dt, window=None if args.window == "none" else args.window,
                      peak_floor=args.peak_floor)
        path = outdir / (Path(args.input).stem + "_spectrum.csv")
        write_spectrum_csv(path, sp.frequencies, sp.amplitude)
        for pk in sp.peaks:
            print(f"peak {pk.frequency:.6e} Hz  magnitude {pk.magnitude:.6e}")
        print(f"wrote {path}")
        return OK

    if args.what == "sparams":
        fi, pi = read_power_csv(args.incident)
        fr, pr = read_power_csv(args.reflected)
        if len(fi) != len(fr) or (len(fi) and np.max(np.abs(fi - fr)) > 1e-9 * fi[-1]):
            print("error: incident/reflected frequency grids differ", file=sys.stderr)
            return USAGE
        pt = None
        if args.transmitted:
            ft, ptc = read_power_csv(args.transmitted)
            if len(ft) != len(fi):
                print("error: transmitted frequency grid differs", file=sys.stderr)
                return USAGE
            pt = ptc.real
        sp = s_parameters(fi, pi.real, pr.real, pt, floor=args.floor)
        path = outdir / "sparams.csv"
        write_sparams_csv(path, sp)
        print(f"wrote {path}")
        return OK

    # SAR: |E|^2 maxima plus a voxel material table -> W/kg per cell
    cells_spec = [int(t) for t in args.cells.split(",")]
    if len(cells_spec) != 3:
        print("error: --cells wants NX,NY,NZ", file=sys.stderr)
        return USAGE
    nx, ny, nz = cells_spec
    grid = GridSpec(nx, ny, nz, 1.0, 1.0, 1.0)
    mat = MaterialGrid.uniform(grid)
    count = mat.apply_voxel_csv(args.voxels)
    raw = np.genfromtxt(args.e2max, delimiter=",", names=True)
    e2 = np.zeros(grid.cell_shape)
    for row in np.atleast_1d(raw):
        e2[int(row["k"]), int(row["j"]), int(row["i"])] = row["value"]
    try:
        sar = sar_field(e2, mat)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    path = outdir / "sar.csv"
    write_sar_csv(path, sar, mat)
    print(f"wrote {path} ({count} voxel override(s))")
    return OK


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sbpfdtd",
        description="Energy-stable staggered-grid FDTD with weak boundaries.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run built-in self checks")
    v.add_argument("--sizes", default="4,8,16,32,64",
                   help="comma-separated interior cell counts (default %(default)s)")
    v.add_argument("--tol", type=float, default=1e-13,
                   help="operator residual tolerance (default %(default)s)")
    v.add_argument("--perturb", action="store_true",
                   help="flip one boundary-penalty coefficient; checks must fail")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="run a scenario file")
    s.add_argument("scenario", help="path to a scenario (.scn) file")
    s.add_argument("--output-dir", "-o", default=None,
                   help="output directory (default $SBPFDTD_OUTPUT_DIR or .)")
    s.add_argument("--threads", type=_positive_int, default=1,
                   help="worker count; accepted for compatibility, execution "
                        "is serial and outputs never depend on it")
    s.add_argument("--steps", type=int, default=None,
                   help="override the scenario's step count")
    s.add_argument("--progress", type=int, default=None,
                   help="print progress every N steps (0 = never)")
    s.add_argument("--backend", choices=["numpy", "numba"], default=None,
                   help="kernel backend (default $SBPFDTD_BACKEND or autodetect)")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("dispersion", help="eigenvalue dispersion analysis")
    d.add_argument("--ratios", default="1/40,1/20,1/10",
                   help="comma-separated k0 h / 2 pi values (default %(default)s)")
    d.add_argument("--angle-scan", action="store_true",
                   help="scan propagation angles at fixed --ratio instead")
    d.add_argument("--ratio", type=float, default=1 / 20,
                   help="resolution for --angle-scan (default 1/20)")
    d.add_argument("--thetas", default="10",
                   help="angle list in degrees, or a count over [0, 90]")
    d.add_argument("--phis", default="10",
                   help="angle list in degrees, or a count over [0, 90]")
    d.add_argument("--cells", type=_positive_int, default=None,
                   help="cells per axis (default: sweep 8, scan 4)")
    d.add_argument("--dt-factor", type=float, default=0.99,
                   help="time step as a fraction of the CFL limit (default %(default)s)")
    d.add_argument("--max-dim", type=_positive_int, default=6000,
                   help="refuse amplification matrices larger than this "
                        "(default %(default)s)")
    d.add_argument("--output-dir", "-o", default=None)
    d.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("postprocess", help="derive spectra/S-params/SAR from CSVs")
    psub = p.add_subparsers(dest="what", required=True)
    ps = psub.add_parser("spectrum", help="DFT of a recorded point probe")
    ps.add_argument("--input", required=True, help="probe CSV (time,value)")
    ps.add_argument("--window", choices=["none", "hann"], default="hann")
    ps.add_argument("--peak-floor", type=float, default=0.05)
    ps.add_argument("--output-dir", "-o", default=None)
    ps.set_defaults(func=cmd_postprocess)
    pp = psub.add_parser("sparams", help="S-parameters from plane-power CSVs")
    pp.add_argument("--incident", required=True)
    pp.add_argument("--reflected", required=True)
    pp.add_argument("--transmitted", default=None)
    pp.add_argument("--floor", type=float, default=0.0,
                    help="incident power below this reports NaN")
    pp.add_argument("--output-dir", "-o", default=None)
    pp.set_defaults(func=cmd_postprocess)
    pa = psub.add_parser("sar", help="SAR from |E|^2 maxima and voxel materials")
    pa.add_argument("--e2max", required=True, help="CSV (i,j,k,value)")
    pa.add_argument("--voxels", required=True,
                    help="CSV (i,j,k,eps_r,mu_r,sigma_e,rho)")
    pa.add_argument("--cells", required=True, help="NX,NY,NZ")
    pa.add_argument("--output-dir", "-o", default=None)
    pa.set_defaults(func=cmd_postprocess)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
