"""Kernel benchmark: compiled vs reference backend, full vs plain closures.

Times the leapfrog step on a vacuum PEC box for every combination of
kernel backend (numba / numpy) and kernel mode (sbp = boundary-corrected
stencils + penalty terms, plain = interior stencil everywhere, no
boundary work).  The plain mode is the classic second-order staggered
update, so sbp/plain on the same backend measures what the stronger
boundary treatment costs end to end.

The two modes are timed in alternating batches with the order flipped
every pair: on a shared machine the clock speed wanders on second
timescales, and alternation moves both columns together instead of
poisoning whichever mode ran second.  Overheads come from medians.

Run:  python3 benchmarks/bench_backends.py [--cells 100] [--pairs 15]
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from sbpfdtd.backend import available_backends, select_backend
from sbpfdtd.grids import GridSpec
from sbpfdtd.materials import MaterialGrid
from sbpfdtd.solver import SatConfig, Simulation, cfl_max_dt


def build_sim(mode: str, grid, materials, dt, warmup: int) -> Simulation:
    sim = Simulation(grid, materials, SatConfig.for_boundaries("pec"), dt,
                     kernel_mode=mode)
    rng = np.random.default_rng(3)
    for comp in ("Ex", "Ey", "Ez"):
        sim.fields[comp][...] = rng.standard_normal(sim.fields[comp].shape)
    for _ in range(warmup):
        sim.step()
    return sim


def time_backend(backend_name: str, grid, materials, dt, steps: int,
                 warmup: int, pairs: int) -> dict:
    """Per-step samples for both kernel modes, batches interleaved."""
    select_backend(backend_name)
    sims = {mode: build_sim(mode, grid, materials, dt, warmup)
            for mode in ("plain", "sbp")}
    samples = {mode: [] for mode in sims}
    for rep in range(pairs):
        order = ("plain", "sbp") if rep % 2 == 0 else ("sbp", "plain")
        for mode in order:
            sim = sims[mode]
            t0 = time.perf_counter()
            for _ in range(steps):
                sim.step()
            samples[mode].append((time.perf_counter() - t0) / steps)
    return samples


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=100)
    ap.add_argument("--steps", type=int, default=1, help="steps per sample")
    ap.add_argument("--warmup", type=int, default=3)
    ap.add_argument("--pairs", type=int, default=15,
                    help="alternating sample pairs per backend")
    args = ap.parse_args()

    n = args.cells
    grid = GridSpec(n, n, n, 1e-3, 1e-3, 1e-3)
    materials = MaterialGrid.uniform(grid)
    dt = 0.99 * cfl_max_dt(grid, materials)

    print(f"grid {n}^3, {args.steps} step(s)/sample, {args.pairs} pairs, "
          f"warmup {args.warmup}")
    print(f"{'backend':>8s} {'mode':>6s} {'min ms':>10s} {'median ms':>10s}")
    medians = {}
    for backend_name in available_backends():
        samples = time_backend(backend_name, grid, materials, dt,
                               args.steps, args.warmup, args.pairs)
        for mode in ("plain", "sbp"):
            best = min(samples[mode]) * 1e3
            med = statistics.median(samples[mode]) * 1e3
            medians[(backend_name, mode)] = med
            print(f"{backend_name:>8s} {mode:>6s} {best:10.3f} {med:10.3f}")

    for backend_name in available_backends():
        plain = medians[(backend_name, "plain")]
        sbp = medians[(backend_name, "sbp")]
        print(f"{backend_name}: boundary-treatment overhead "
              f"{(sbp / plain - 1.0) * 100.0:+.2f}%")
    if len(available_backends()) > 1:
        speedup = medians[("numpy", "sbp")] / medians[("numba", "sbp")]
        print(f"numba speedup over numpy (sbp mode): {speedup:.1f}x")


if __name__ == "__main__":
    main()
