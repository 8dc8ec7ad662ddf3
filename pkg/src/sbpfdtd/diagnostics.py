"""Energy, spectra, power flow, S-parameters, and SAR post-processing.

The discrete energy uses the material-weighted SBP quadrature:

    U = 1/2 sum_E eps_node |E|^2 p3 + 1/2 sum_H mu_node |H|^2 p3,

with p3 the tensor-product norm weights of each component's node set.
For leapfrog states the magnetic part is evaluated in staggered form,
pairing the half-step values surrounding an integer step; that quantity
is conserved to rounding in lossless closed boxes, so energy traces are
a sharp regression signal rather than a soft one.

Spectra are plain DFTs of probe records with optional Hann windowing.
Peak picking works on local maxima above a relative floor and refines
each peak with the quadratic vertex through its three bins, which
recovers far more frequency resolution than the raw bin width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import E_COMPONENTS, H_COMPONENTS, norm_weights

__all__ = [
    "EnergyBreakdown",
    "field_energy",
    "SpectrumPeak",
    "SpectrumResult",
    "spectrum",
    "plane_power",
    "SParameters",
    "s_parameters",
    "sar_field",
]


# -------------------------------------------------------------------- energy

def _energy_weights(sim) -> dict:
    """Material-times-quadrature weights per component for one simulation."""
    w = {}
    for ec in E_COMPONENTS:
        w[ec] = sim.materials.sample_eps(ec) * norm_weights(sim.grid, ec, sim.pairs)
    for hc in H_COMPONENTS:
        w[hc] = sim.materials.sample_mu(hc) * norm_weights(sim.grid, hc, sim.pairs)
    return w


def _staggered_sample(sim, weights, h_prev, n):
    from .solver import EnergySample

    terms = {}
    for ec in E_COMPONENTS:
        e = sim.fields[ec]
        terms[ec] = 0.5 * float(np.sum(weights[ec] * (e * e.conj()).real))
    for hc in H_COMPONENTS:
        terms[hc] = 0.5 * float(np.sum(weights[hc] * (h_prev[hc].conj() * sim.fields[hc]).real))
    electric = sum(terms[c] for c in E_COMPONENTS)
    magnetic = sum(terms[c] for c in H_COMPONENTS)
    return EnergySample(step=n, time=n * sim.dt, electric=electric,
                        magnetic=magnetic, terms=terms)


@dataclass(frozen=True)
class EnergyBreakdown:
    electric: float
    magnetic: float
    per_component: dict

    @property
    def total(self) -> float:
        return self.electric + self.magnetic


def field_energy(sim) -> EnergyBreakdown:
    """Instantaneous material-weighted energy of a simulation state.

    Uses |H|^2 at its stored half step (not the staggered pairing), so
    this is the right tool for snapshots and the per-component split,
    while the conserved quantity is the staggered trace from ``run``.
    """
    weights = _energy_weights(sim)
    per = {}
    for c, w in weights.items():
        a = sim.fields[c]
        per[c] = 0.5 * float(np.sum(w * (a * a.conj()).real))
    return EnergyBreakdown(
        electric=sum(per[c] for c in E_COMPONENTS),
        magnetic=sum(per[c] for c in H_COMPONENTS),
        per_component=per,
    )


# ------------------------------------------------------------------- spectra

@dataclass(frozen=True)
class SpectrumPeak:
    frequency: float       # quadratically refined [Hz]
    magnitude: float
    bin_index: int
    bin_frequency: float


@dataclass
class SpectrumResult:
    frequencies: np.ndarray
    amplitude: np.ndarray      # complex one-sided DFT (numpy rfft scaling)
    magnitude: np.ndarray
    peaks: list
    n_samples: int
    dt: float
    window: str | None
    detrended: bool
    _record: np.ndarray | None = None   # detrended input, kept for Parseval

    def dominant_peak(self, f_min: float = 0.0, f_max: float = math.inf) -> SpectrumPeak:
        """Strongest refined peak with f_min <= frequency <= f_max."""
        inside = [p for p in self.peaks if f_min <= p.frequency <= f_max]
        if not inside:
            raise ValueError(f"no spectral peak inside [{f_min}, {f_max}] Hz")
        return inside[0]

    def parseval_residual(self) -> float:
        """Relative mismatch of sum|x|^2 against its one-sided DFT form.

        Only meaningful for unwindowed spectra of real records; the
        detrended record is compared when detrending was applied.
        """
        if self.window is not None:
            raise ValueError("Parseval check applies to unwindowed spectra")
        x = self._record
        n = self.n_samples
        p_time = float(np.sum(np.abs(x) ** 2))
        a2 = np.abs(self.amplitude) ** 2
        doubled = np.ones(a2.size)
        doubled[1:] = 2.0
        if n % 2 == 0:
            doubled[-1] = 1.0  # Nyquist bin is unpaired
        p_freq = float(np.sum(doubled * a2)) / n
        return abs(p_time - p_freq) / max(p_time, np.finfo(float).tiny)


def _refine_peak(mag: np.ndarray, k: int, df: float) -> SpectrumPeak:
    if 0 < k < mag.size - 1:
        y0, y1, y2 = mag[k - 1], mag[k], mag[k + 1]
        denom = y0 - 2.0 * y1 + y2
        delta = 0.0 if denom == 0.0 else 0.5 * (y0 - y2) / denom
        delta = float(np.clip(delta, -0.5, 0.5))
    else:
        delta = 0.0
    return SpectrumPeak(frequency=(k + delta) * df, magnitude=float(mag[k]),
                        bin_index=k, bin_frequency=k * df)


def spectrum(values: np.ndarray, dt: float, *, window: str | None = None,
             detrend: bool = True, peak_floor: float = 0.05) -> SpectrumResult:
    """One-sided DFT of an evenly sampled real record.

    ``dt`` is the sample spacing (step times stride for strided probes),
    so the bin width is 1/(n*dt).  ``detrend`` removes the record mean
    first; soft sources leave a static offset in closed cavities that
    would otherwise dominate bin 0.  ``window`` is None or "hann".
    Peaks are interior local maxima of the magnitude at or above
    ``peak_floor`` times the global maximum (bin 0 excluded), refined
    by the quadratic vertex through each triple of bins and sorted by
    magnitude, strongest first.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need a 1D record with at least 2 samples")
    if not (np.isfinite(dt) and dt > 0):
        raise ValueError(f"sample spacing must be positive, got {dt}")
    if detrend:
        x = x - x.mean()
    if window is None:
        w = None
    elif window == "hann":
        w = np.hanning(x.size)
    else:
        raise ValueError(f"window must be None or 'hann', got {window!r}")
    amp = np.fft.rfft(x if w is None else x * w)
    n = x.size
    df = 1.0 / (n * dt)
    freqs = np.arange(amp.size) * df
    mag = np.abs(amp)

    peaks = []
    if mag.size > 2:
        floor = peak_floor * float(mag[1:].max(initial=0.0))
        for k in range(1, mag.size - 1):
            if mag[k] >= floor and mag[k] > mag[k - 1] and mag[k] >= mag[k + 1]:
                peaks.append(_refine_peak(mag, k, df))
        peaks.sort(key=lambda p: -p.magnitude)

    result = SpectrumResult(frequencies=freqs, amplitude=amp, magnitude=mag,
                            peaks=peaks, n_samples=n, dt=float(dt),
                            window=window, detrended=bool(detrend))
    result._record = x
    return result


# --------------------------------------------------------------- plane power

def plane_power(record, window: str | None = None):
    """Spectral power flow through a recorded flux plane.

    Takes a :class:`sbpfdtd.solver.FluxRecord` and returns
    ``(frequencies, complex power P(f))`` where

        P(f) = sum_cells (E1(f) H2(f)* - E2(f) H1(f)*) dS,

    the one-sided DFT Poynting flux along the +normal direction.  The
    real part is the mean power crossing the plane per squared source
    amplitude; ratios of |P| between planes give power S-parameters.
    """
    times = record.times
    if times.size < 2:
        raise ValueError("flux record too short for a spectrum")
    dt = float(times[1] - times[0])
    n = times.size
    if window is None:
        w = np.ones(n)
    elif window == "hann":
        w = np.hanning(n)
    else:
        raise ValueError(f"window must be None or 'hann', got {window!r}")
    wcol = w[:, None, None]

    def f(a):
        return np.fft.rfft(np.asarray(a) * wcol, axis=0)

    e1, e2 = f(record.e1), f(record.e2)
    h1, h2 = f(record.h1), f(record.h2)
    p = np.sum(e1 * h2.conj() - e2 * h1.conj(), axis=(1, 2)) * record.ds
    freqs = np.arange(p.size) / (n * dt)
    return freqs, p


@dataclass
class SParameters:
    """Power-ratio scattering magnitudes versus frequency.

    ``s11 = |P_reflected| / |P_incident|`` and ``s21 = |P_transmitted| /
    |P_incident|`` are ratios of power, not amplitude, so a lossless
    even split reads 0.5 on both.  ``db`` columns therefore use
    10*log10; amplitude-convention readers should halve them.
    """

    frequencies: np.ndarray
    s11: np.ndarray
    s21: np.ndarray | None = None

    @staticmethod
    def _db(ratio: np.ndarray) -> np.ndarray:
        return 10.0 * np.log10(np.maximum(ratio, np.finfo(float).tiny))

    @property
    def s11_db(self) -> np.ndarray:
        return self._db(self.s11)

    @property
    def s21_db(self) -> np.ndarray:
        return self._db(self.s21) if self.s21 is not None else None

    def passive(self, tol: float = 1e-9) -> bool:
        """True when no frequency returns more power than went in.

        NaN entries (floored bins with no usable incident power) carry
        no information and are skipped.
        """
        total = self.s11 + (self.s21 if self.s21 is not None else 0.0)
        return bool(np.all(total[np.isfinite(total)] <= 1.0 + tol))


def s_parameters(frequencies, p_incident, p_reflected, p_transmitted=None,
                 floor: float = 0.0) -> SParameters:
    """Form power S-parameter magnitudes from plane-power spectra.

    Frequencies where |P_incident| <= ``floor`` yield NaN instead of a
    division blow-up; pick a floor from the incident spectrum's noise
    level when post-processing band edges.
    """
    frequencies = np.asarray(frequencies, dtype=float)
    pi = np.abs(np.asarray(p_incident))
    valid = pi > floor
    safe = np.where(valid, pi, 1.0)

    def ratio(p):
        r = np.abs(np.asarray(p)) / safe
        return np.where(valid, r, np.nan)

    s11 = ratio(p_reflected)
    s21 = ratio(p_transmitted) if p_transmitted is not None else None
    return SParameters(frequencies=frequencies, s11=s11, s21=s21)


# ----------------------------------------------------------------------- SAR

def sar_field(e2max_cells: np.ndarray, materials) -> np.ndarray:
    """Point SAR per cell: sigma |E|^2_max / (2 rho) [W/kg].

    ``e2max_cells`` is the per-cell peak of cell-centred |E|^2, as
    accumulated by ``Simulation.run(track_sar=True)``.  Cells with zero
    conductivity report 0 regardless of density; a conductive cell with
    no mass density set is a configuration error.
    """
    sigma = materials.sigma_e
    rho = materials.rho
    e2 = np.asarray(e2max_cells)
    if e2.shape != sigma.shape:
        raise ValueError(f"|E|^2 grid shape {e2.shape} does not match cells {sigma.shape}")
    bad = (sigma > 0.0) & (rho <= 0.0)
    if np.any(bad):
        k, j, i = (int(v[0]) for v in np.nonzero(bad))
        raise ValueError(
            f"SAR needs a positive mass density wherever sigma_e > 0; "
            f"first offending cell (i,j,k) = ({i},{j},{k})"
        )
    out = np.zeros_like(e2, dtype=float)
    np.divide(sigma * e2, 2.0 * rho, out=out, where=sigma > 0.0)
    return out
