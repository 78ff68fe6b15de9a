"""Spectra of OTOC series and the gradient-ratio coherence filter."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# gyromagnetic ratios in rad s^-1 T^-1
GAMMA_1H = 267.5221874e6
GAMMA_31P = 108.394e6
GAMMA_19F = 251.815e6


@dataclass
class Spectrum:
    freqs: np.ndarray
    mags: np.ndarray
    metadata: dict = None

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.mags = np.asarray(self.mags, dtype=float)
        if self.freqs.shape != self.mags.shape:
            raise ValueError("freqs and mags must have the same length")
        if self.metadata is None:
            self.metadata = {}


def uniform_step(t_grid, rtol: float = 1e-9) -> float:
    t = np.asarray(t_grid, dtype=float)
    steps = np.diff(t)
    if steps.size == 0 or steps[0] <= 0 or not np.allclose(steps, steps[0], rtol=rtol, atol=0):
        raise ValueError("time grid is not uniform")
    return float(steps[0])


def fourier_spectrum(series, window: str | None = None, zero_pad: int = 1) -> Spectrum:
    """One-sided DFT magnitude of the mean-removed series.

    Magnitudes are scaled by ``1/len(series)`` so an on-bin cosine of unit
    amplitude shows up as a single bin of height 0.5.  Frequencies are in
    units of J when the time grid is in units of 1/J.

    Parameters
    ----------
    series : OtocSeries
        Anything with ``t_grid`` and ``values`` arrays.
    window : {None, "hann"}
        Optional taper applied after mean removal.
    zero_pad : int
        Transform length as a multiple of the sample count.
    """
    values = np.asarray(series.values, dtype=float)
    n = values.size
    if n < 16:
        raise ValueError(f"need at least 16 samples for a spectrum, got {n}")
    dt = uniform_step(series.t_grid)
    if zero_pad < 1:
        raise ValueError(f"zero_pad must be >= 1, got {zero_pad}")
    x = values - values.mean()
    if window == "hann":
        x = x * np.hanning(n)
    elif window is not None:
        raise ValueError(f"unknown window {window!r}")
    n_fft = n * int(zero_pad)
    mags = np.abs(np.fft.rfft(x, n=n_fft)) / n
    freqs = np.fft.rfftfreq(n_fft, d=dt)
    meta = dict(getattr(series, "metadata", {}) or {})
    meta.update(window=window, zero_pad=int(zero_pad), mean_removed=True)
    return Spectrum(freqs, mags, meta)


def spectral_support(spec: Spectrum, threshold_fraction: float = 0.05, floor: float = 1e-12) -> int:
    """Number of bins above ``threshold_fraction`` of the tallest bin.

    A spectrum whose tallest bin is below ``floor`` is rounding noise and has
    no support.
    """
    if not 0 < threshold_fraction < 1:
        raise ValueError(f"threshold_fraction must lie in (0, 1), got {threshold_fraction}")
    if spec.mags.size == 0:
        raise ValueError("empty spectrum")
    peak = spec.mags.max()
    if peak <= floor:
        return 0
    return int(np.count_nonzero(spec.mags > threshold_fraction * peak))


def gradient_ratio(q: int, gamma_P: float = GAMMA_31P, gamma_H: float = GAMMA_1H) -> float:
    """G1/G2 gradient ratio selecting the order-``q`` combination coherence."""
    if gamma_P == 0:
        raise ValueError("gamma_P must be nonzero")
    return -(gamma_P + (q - 1) * gamma_H) / gamma_P


def time_average(series, lo: float, hi: float) -> float:
    t = np.asarray(series.t_grid)
    sel = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if not sel.any():
        raise ValueError(f"no samples in [{lo}, {hi}]")
    return float(np.mean(np.asarray(series.values)[sel]))


def first_crossing_below(series, level: float) -> float | None:
    """Earliest grid time with value below ``level``, or None."""
    below = np.flatnonzero(np.asarray(series.values) < level)
    return float(series.t_grid[below[0]]) if below.size else None


def max_gap(a, b, lo: float | None = None, hi: float | None = None) -> float:
    """Largest pointwise difference between two series on a shared grid."""
    ta, tb = np.asarray(a.t_grid), np.asarray(b.t_grid)
    if ta.shape != tb.shape or not np.allclose(ta, tb):
        raise ValueError("series are not on the same grid")
    sel = np.ones(ta.shape, dtype=bool)
    if lo is not None:
        sel &= ta >= lo - 1e-12
    if hi is not None:
        sel &= ta <= hi + 1e-12
    return float(np.max(np.abs(np.asarray(a.values)[sel] - np.asarray(b.values)[sel])))
