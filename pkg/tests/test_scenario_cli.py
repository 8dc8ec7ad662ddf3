"""Scenario parsing, file writers, and the command line end to end."""

import json
import math
import os

import numpy as np
import pytest

from sbpfdtd import cli
from sbpfdtd.diagnostics import s_parameters
from sbpfdtd.grids import GridSpec, component_shape
from sbpfdtd.materials import MaterialGrid
from sbpfdtd.outputs import (
    RunManifest,
    read_point_probe_csv,
    read_power_csv,
    write_point_probe_csv,
    write_sar_csv,
    write_sparams_csv,
    write_spectrum_csv,
    write_vtk_structured_points,
)
from sbpfdtd.scenario import ScenarioError, parse_scenario
from sbpfdtd.solver import BoundaryKind, PointRecord, PointProbe


GOOD = """\
# fdtd scenario v1
[grid]
cells   = 8 8 8
spacing = 0.01 0.01 0.0125

[time]
steps     = 40
dt_factor = 0.8

[boundaries]
all    = pec
y      = pmc
z_high = pmc

[materials]
background = 1.0 1.0 0.0 0.0
box        = 0.0 0.04 0.0 0.04 0.0 0.05 2.0 1.0 0.0 0.0

[sources]
point = Ey 4 4 4 gaussian 1.0 50e-12 80e-12

[probes]
point = Ey 2 3 4 1 watch
flux  = z 4 1 through

[output]
energy_stride = 10
spectrum      = watch
snapshot_step = 40
snapshot_components = Ey
snapshot_format = vtk
"""


def write_scn(tmp_path, text, name="case.scn"):
    p = tmp_path / name
    p.write_text(text)
    return p


# ------------------------------------------------------------------ parsing

def test_parse_good_scenario(tmp_path):
    sc = parse_scenario(write_scn(tmp_path, GOOD))
    assert sc.grid == GridSpec(8, 8, 8, 0.01, 0.01, 0.0125)
    assert sc.n_steps == 40 and sc.dt_factor == 0.8
    kinds = sc.boundary_kinds
    assert kinds["x_low"] == "pec"
    assert kinds["y_low"] == kinds["y_high"] == "pmc"   # axis overrides all
    assert kinds["z_high"] == "pmc" and kinds["z_low"] == "pec"
    assert len(sc.sources) == 1 and sc.sources[0].component == "Ey"
    assert len(sc.point_probes) == 1 and len(sc.flux_probes) == 1
    assert sc.outputs.energy_stride == 10
    assert sc.outputs.snapshot_steps == (40,)
    assert sc.outputs.snapshot_components == ("Ey",)

    mats = sc.build_materials()
    assert mats.eps_r.max() == 2.0
    assert mats.eps_r[0, 0, 0] == 2.0      # box covers the low corner
    assert mats.eps_r[-1, -1, -1] == 1.0

    dt = sc.resolve_dt(mats)
    from sbpfdtd.solver import cfl_max_dt

    assert dt == pytest.approx(0.8 * cfl_max_dt(sc.grid, mats))

    sat = sc.build_sat()
    assert sat.kinds["y_low"] is BoundaryKind.PMC


def test_missing_magic_line(tmp_path):
    p = write_scn(tmp_path, "[grid]\ncells = 8 8 8\n")
    with pytest.raises(ScenarioError) as ei:
        parse_scenario(p)
    assert len(ei.value.errors) == 1
    assert "line 1" in ei.value.errors[0]


def test_all_problems_reported_at_once(tmp_path):
    bad = """\
# fdtd scenario v1
[grid]
cells   = 8 8
spacing = 0.01 0.01 0.01

[time]
steps = -5

[boundaries]
x_low = periodic
y     = pec
z     = pec
phase_y = 1.0

[sources]
point = Qx 4 4 4 gaussian 1.0 50e-12 80e-12
point = Ex 4 4 gaussian

[probes]
point = Ex 2 2 2 1 twin
point = Ey 2 2 2 1 twin
"""
    with pytest.raises(ScenarioError) as ei:
        parse_scenario(write_scn(tmp_path, bad))
    msgs = "\n".join(ei.value.errors)
    assert len(ei.value.errors) >= 5
    assert "cells" in msgs
    assert "steps" in msgs
    assert "periodic" in msgs          # unpaired periodic face
    assert "phase" in msgs             # phase on a non-periodic axis
    assert "Qx" in msgs
    assert "twin" in msgs              # duplicate probe name


def test_unknown_sections_and_keys_have_line_numbers(tmp_path):
    bad = "# fdtd scenario v1\n[grid]\ncells = 8 8 8\nspacing = 1 1 1\nwat = 7\n\n[nope]\nx = 1\n\n[time]\nsteps = 1\n"
    with pytest.raises(ScenarioError) as ei:
        parse_scenario(write_scn(tmp_path, bad))
    msgs = ei.value.errors
    assert any("line 5" in m for m in msgs)
    assert any("line 7" in m for m in msgs)


def test_cfl_policing(tmp_path):
    hot = GOOD.replace("dt_factor = 0.8", "dt_factor = 1.5")
    with pytest.raises(ScenarioError) as ei:
        parse_scenario(write_scn(tmp_path, hot))
    assert any("allow_unstable_dt" in m for m in ei.value.errors)
    override = hot.replace("[time]", "[time]\nallow_unstable_dt = true")
    sc = parse_scenario(write_scn(tmp_path, override, "hot.scn"))
    assert sc.dt_factor == 1.5 and sc.allow_unstable_dt


def test_probe_index_range_checked(tmp_path):
    bad = GOOD.replace("point = Ey 2 3 4 1 watch", "point = Ey 2 3 99 1 watch")
    with pytest.raises(ScenarioError) as ei:
        parse_scenario(write_scn(tmp_path, bad))
    assert any("99" in m for m in ei.value.errors)


def test_h_sources_rejected(tmp_path):
    bad = GOOD.replace("point = Ey 4 4 4", "point = Hy 4 4 4")
    with pytest.raises(ScenarioError) as ei:
        parse_scenario(write_scn(tmp_path, bad))
    assert any("E components" in m for m in ei.value.errors)


def test_voxel_csv_resolved_relative_to_scenario(tmp_path):
    (tmp_path / "mats").mkdir()
    (tmp_path / "mats" / "v.csv").write_text(
        "i,j,k,eps_r,mu_r,sigma_e,rho\n0,0,0,7.0,1.0,0.0,0.0\n")
    text = GOOD.replace("[materials]", "[materials]\nvoxel_csv = mats/v.csv")
    sc = parse_scenario(write_scn(tmp_path, text))
    mats = sc.build_materials()
    assert mats.eps_r[0, 0, 0] == 7.0


# ------------------------------------------------------------------ writers

def test_probe_csv_roundtrip_preserves_doubles(tmp_path):
    times = np.array([0.0, 1e-12, 2e-12])
    vals = np.array([0.1, -1.0 / 3.0, 1e-300])
    rec = PointRecord(PointProbe("Ex", (0, 0, 0)), times, vals)
    p = tmp_path / "probe.csv"
    write_point_probe_csv(p, rec)
    t2, v2 = read_point_probe_csv(p)
    np.testing.assert_array_equal(t2, times)   # %.17g is lossless
    np.testing.assert_array_equal(v2, vals)
    assert p.read_text().splitlines()[0] == "time,value"


def test_complex_probe_csv(tmp_path):
    rec = PointRecord(PointProbe("Ex", (0, 0, 0)), np.array([0.0, 1.0]),
                      np.array([1 + 2j, -3 - 4j]))
    p = tmp_path / "probe.csv"
    write_point_probe_csv(p, rec)
    assert p.read_text().splitlines()[0] == "time,re,im"
    _, v = read_point_probe_csv(p)
    np.testing.assert_array_equal(v, [1 + 2j, -3 - 4j])


def test_spectrum_csv_roundtrip(tmp_path):
    f = np.array([0.0, 1e9, 2e9])
    a = np.array([1 + 0j, 0.5 - 0.5j, 0.1j])
    p = tmp_path / "spectrum.csv"
    write_spectrum_csv(p, f, a)
    f2, a2 = read_power_csv(p)
    np.testing.assert_array_equal(f2, f)
    np.testing.assert_array_equal(a2, a)


def test_sparams_csv_with_and_without_s21(tmp_path):
    f = np.array([1.0, 2.0])
    sp = s_parameters(f, np.array([1.0, 4.0]), np.array([0.25, 1.0]),
                      np.array([0.75, 3.0]))
    p = tmp_path / "sp.csv"
    write_sparams_csv(p, sp)
    lines = p.read_text().splitlines()
    assert lines[0] == "f,S11,S21,S11_dB,S21_dB"
    row = lines[1].split(",")
    assert float(row[1]) == 0.25
    assert float(row[3]) == pytest.approx(10 * math.log10(0.25))

    sp_refl = s_parameters(f, np.array([1.0, 4.0]), np.array([0.25, 1.0]))
    write_sparams_csv(p, sp_refl)
    row = p.read_text().splitlines()[1].split(",")
    assert row[2] == "nan" and row[4] == "nan"


def test_sar_csv_lists_only_conductive_cells(tmp_path):
    grid = GridSpec(4, 4, 4, 1.0, 1.0, 1.0)
    mats = MaterialGrid.uniform(grid)
    mats.sigma_e[2, 1, 3] = 2.0
    mats.rho[2, 1, 3] = 1000.0
    sar = np.zeros(grid.cell_shape)
    sar[2, 1, 3] = 1e-3
    p = tmp_path / "sar.csv"
    write_sar_csv(p, sar, mats)
    lines = p.read_text().splitlines()
    assert lines[0] == "i,j,k,sar"
    assert len(lines) == 2
    assert lines[1] == "3,1,2,0.001"


def test_vtk_snapshot_layout(tmp_path):
    grid = GridSpec(4, 5, 6, 0.5, 0.25, 0.2)
    shape = component_shape(grid, "Ex")        # (7, 6, 6), x minus
    vals = np.arange(np.prod(shape), dtype=float).reshape(shape)
    p = tmp_path / "snap.vtk"
    write_vtk_structured_points(p, grid, "Ex", vals)
    lines = p.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 2.0"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET STRUCTURED_POINTS"
    assert lines[4] == "DIMENSIONS 6 6 7"
    # minus axis starts half a cell before the wall node
    assert lines[5] == "ORIGIN -0.25 0 0"
    assert lines[6].split()[0] == "SPACING"
    assert [float(v) for v in lines[6].split()[1:]] == [0.5, 0.25, 0.2]
    assert f"POINT_DATA {np.prod(shape)}" in lines[7]
    assert lines[8] == "SCALARS Ex double 1"
    assert lines[9] == "LOOKUP_TABLE default"
    # one value per line, x varying fastest: the ramp steps by 1
    assert float(lines[10]) == 0.0 and float(lines[11]) == 1.0
    assert len(lines) == 10 + np.prod(shape)


def test_manifest_schema(tmp_path):
    m = RunManifest(scenario="case.scn", parameters={"steps": 3},
                    version="0.0.test")
    m.add(tmp_path / "a.csv", "probe")
    (tmp_path / "a.csv").write_text("time,value\n")
    m.wall_time_s = 1.5
    m.completed = True
    out = tmp_path / "manifest.json"
    m.write(out)
    doc = json.loads(out.read_text())
    assert doc["scenario"] == "case.scn"
    assert doc["completed"] is True
    assert doc["outputs"]["a.csv"]["kind"] == "probe"
    assert doc["outputs"]["a.csv"]["partial"] is False
    assert doc["version"] == "0.0.test"


# ---------------------------------------------------------------------- CLI

def test_cli_verify_ok(capsys):
    assert cli.main(["verify", "--sizes", "4,8"]) == 0
    out = capsys.readouterr().out
    assert "identity" in out and "all checks passed" in out


def test_cli_verify_perturb_fails(capsys):
    assert cli.main(["verify", "--sizes", "4", "--perturb"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out


def test_cli_simulate_end_to_end(tmp_path, capsys):
    scn = write_scn(tmp_path, GOOD)
    outdir = tmp_path / "run"
    assert cli.main(["simulate", str(scn), "--output-dir", str(outdir)]) == 0
    names = {p.name for p in outdir.iterdir()}
    assert {"manifest.json", "energy.csv", "probe_watch.csv",
            "spectrum_watch.csv", "flux_through_power.csv",
            "snap_Ey_000040.vtk"} <= names
    doc = json.loads((outdir / "manifest.json").read_text())
    assert doc["completed"] is True
    assert doc["parameters"]["n_steps"] == 40
    listed = set(doc["outputs"])
    assert "manifest.json" not in listed
    assert "energy.csv" in listed
    # energy CSV carries the six per-component columns
    header = (outdir / "energy.csv").read_text().splitlines()[0]
    assert header == "step,time,total,Ex,Ey,Ez,Hx,Hy,Hz"
    t, v = read_point_probe_csv(outdir / "probe_watch.csv")
    assert len(t) == 41


def test_cli_simulate_zero_steps(tmp_path):
    scn = write_scn(tmp_path, GOOD)
    outdir = tmp_path / "zero"
    assert cli.main(["simulate", str(scn), "--output-dir", str(outdir),
                     "--steps", "0"]) == 0
    t, v = read_point_probe_csv(outdir / "probe_watch.csv")
    assert len(t) == 1 and v[0] == 0.0
    doc = json.loads((outdir / "manifest.json").read_text())
    assert doc["completed"] is True and doc["parameters"]["n_steps"] == 0


def test_cli_simulate_reports_all_errors(tmp_path, capsys):
    scn = write_scn(tmp_path, GOOD.replace("cells   = 8 8 8", "cells = 8 8")
                    .replace("steps     = 40", "steps = -1"))
    assert cli.main(["simulate", str(scn)]) == 2
    err = capsys.readouterr().err
    assert "cells" in err and "steps" in err


def test_cli_output_dir_env(tmp_path, monkeypatch):
    scn = write_scn(tmp_path, GOOD)
    monkeypatch.setenv("SBPFDTD_OUTPUT_DIR", str(tmp_path / "envout"))
    assert cli.main(["simulate", str(scn), "--steps", "2"]) == 0
    assert (tmp_path / "envout" / "manifest.json").exists()


def test_cli_backend_flag_matches_default(tmp_path):
    scn = write_scn(tmp_path, GOOD)
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert cli.main(["simulate", str(scn), "--output-dir", str(a),
                     "--steps", "10", "--backend", "numpy"]) == 0
    assert cli.main(["simulate", str(scn), "--output-dir", str(b),
                     "--steps", "10"]) == 0
    ta, va = read_point_probe_csv(a / "probe_watch.csv")
    tb, vb = read_point_probe_csv(b / "probe_watch.csv")
    np.testing.assert_allclose(va, vb, rtol=0, atol=1e-16)


def test_cli_dispersion_sweep(tmp_path, capsys):
    outdir = tmp_path / "disp"
    rc = cli.main(["dispersion", "--ratios", "1/8", "--cells", "4",
                   "--dt-factor", "0.5", "--output-dir", str(outdir)])
    assert rc == 0
    body = (outdir / "dispersion_sweep.csv").read_text().splitlines()
    assert body[0] == "k0h_over_2pi,dispersion,dissipation,global"
    assert len(body) == 2
    out = capsys.readouterr().out
    assert "lambda" in out


def test_cli_dispersion_angle_scan(tmp_path):
    outdir = tmp_path / "scan"
    # trailing comma marks an explicit one-entry angle list, not a count
    rc = cli.main(["dispersion", "--angle-scan", "--thetas", "0,90",
                   "--phis", "0,", "--ratio", "0.125", "--cells", "4",
                   "--dt-factor", "0.5", "--output-dir", str(outdir)])
    assert rc == 0
    lines = (outdir / "dispersion_scan.csv").read_text().splitlines()
    assert lines[0].startswith("theta_deg,phi_deg")
    assert len(lines) == 3


def test_cli_dispersion_cap(tmp_path):
    rc = cli.main(["dispersion", "--ratios", "1/8", "--cells", "12",
                   "--max-dim", "100", "--output-dir", str(tmp_path)])
    assert rc == 2


def test_cli_postprocess_spectrum(tmp_path, capsys):
    dt = 1e-3
    t = np.arange(2048) * dt
    rec = PointRecord(PointProbe("Ex", (0, 0, 0)), t,
                      np.sin(2 * np.pi * 60.0 * t))
    src = tmp_path / "probe.csv"
    write_point_probe_csv(src, rec)
    rc = cli.main(["postprocess", "spectrum", "--input", str(src),
                   "--output-dir", str(tmp_path)])
    assert rc == 0
    f, a = read_power_csv(tmp_path / "probe_spectrum.csv")
    k = int(np.argmax(np.abs(a[1:]))) + 1
    assert f[k] == pytest.approx(60.0, abs=f[1])


def test_cli_postprocess_sparams(tmp_path):
    f = np.linspace(0, 1e9, 9)
    inc = np.full(9, 4.0 + 0j)
    write_spectrum_csv(tmp_path / "inc.csv", f, inc)
    write_spectrum_csv(tmp_path / "ref.csv", f, 0.25 * inc)
    write_spectrum_csv(tmp_path / "tra.csv", f, 0.75 * inc)
    rc = cli.main(["postprocess", "sparams", "--incident",
                   str(tmp_path / "inc.csv"), "--reflected",
                   str(tmp_path / "ref.csv"), "--transmitted",
                   str(tmp_path / "tra.csv"), "--output-dir", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "sparams.csv").read_text().splitlines()
    row = lines[1].split(",")
    assert float(row[1]) == pytest.approx(0.25)
    assert float(row[2]) == pytest.approx(0.75)

    # frequency grids must match between the three spectra
    write_spectrum_csv(tmp_path / "off.csv", f + 1e3, inc)
    rc = cli.main(["postprocess", "sparams", "--incident",
                   str(tmp_path / "inc.csv"), "--reflected",
                   str(tmp_path / "off.csv"), "--output-dir", str(tmp_path)])
    assert rc == 2


def test_cli_postprocess_sar(tmp_path):
    vox = tmp_path / "v.csv"
    vox.write_text("i,j,k,eps_r,mu_r,sigma_e,rho\n1,1,1,1.0,1.0,2.0,1000.0\n")
    e2 = tmp_path / "e2.csv"
    e2.write_text("i,j,k,value\n1,1,1,1.0\n")
    rc = cli.main(["postprocess", "sar", "--voxels", str(vox), "--cells",
                   "4,4,4", "--e2max", str(e2), "--output-dir", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "sar.csv").read_text().splitlines()
    assert lines[1] == "1,1,1,0.001"


def test_cli_usage_errors():
    with pytest.raises(SystemExit) as ei:
        cli.main(["simulate"])              # missing path
    assert ei.value.code == 2
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])
    assert cli.main(["simulate", "/nonexistent/nope.scn"]) == 2
