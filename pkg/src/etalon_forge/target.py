"""Desired transmission profile: keep every M-th resonance of a base comb."""
from __future__ import annotations

import numpy as np

from .errors import DomainError, InsufficientPeaksError
from .spectral import LOBE_DEPTH, MAIN_PEAK_FLOOR, TransmissionProfile, find_peaks, measure_fsr
from . import kernels


def retained_peak(peaks, center: float):
    """Main peak nearest ``center``; ties go to the shorter wavelength."""
    lam = peaks.wavelengths
    dist = np.abs(lam - center)
    return peaks[int(np.flatnonzero(dist == dist.min())[0])]


def enhance_fsr_target(base: TransmissionProfile, factor: int, mask_floor: float = -40.0,
                       rolloff: float = 1.0, center: float | None = None,
                       lobe_depth: float = LOBE_DEPTH) -> TransmissionProfile:
    """Suppress all but the central resonance over a window of ``factor`` base FSRs.

    The result is normalized to a maximum of 1 and sampled on the base grid.
    Inside the retained lobe the mask is 1; it falls off with a raised cosine
    over ``rolloff`` times the lobe's half-maximum width beyond each lobe edge,
    then stays at ``10**(mask_floor/10)``. Anything outside the lobe that
    would still sit above the floor is capped at it.
    """
    factor = int(factor)
    if factor < 1:
        raise DomainError(f"FSR factor must be >= 1, got {factor}")
    if not mask_floor < 0:
        raise DomainError(f"mask floor must be negative dB, got {mask_floor}")
    peaks = find_peaks(base, MAIN_PEAK_FLOOR, lobe_depth)
    if len(peaks) < max(factor, 2):
        raise InsufficientPeaksError(len(peaks), max(factor, 2))
    fsr = measure_fsr(base, MAIN_PEAK_FLOOR, lobe_depth)
    keep = retained_peak(peaks, base.grid.center if center is None else center)

    half = 0.5 * factor * fsr
    lam = base.wavelengths
    if keep.wavelength - half < lam[0] - base.grid.step or keep.wavelength + half > lam[-1] + base.grid.step:
        raise DomainError("base profile does not cover the requested target window")
    sel = (lam >= keep.wavelength - half) & (lam < keep.wavelength + half)
    grid = base.grid.subset(sel)
    y = np.ascontiguousarray(base.intensity[sel])
    k = int(np.argmin(np.abs(grid.wavelengths - keep.wavelength)))
    if factor == 1:
        return TransmissionProfile(grid, y / y.max())

    left, right = kernels.lobe_bounds(y, k, lobe_depth)
    floor = 10.0 ** (mask_floor / 10.0)
    mask = np.full(y.shape, floor)
    mask[left:right + 1] = 1.0
    width = int(np.count_nonzero(y[left:right + 1] >= 0.5 * y[k]))
    ramp = max(1, int(round(rolloff * width)))
    d = np.arange(1, ramp + 1)
    taper = floor + (1.0 - floor) * 0.5 * (1.0 + np.cos(np.pi * d / (ramp + 1)))
    lo = np.arange(left - 1, left - 1 - ramp, -1)
    hi = np.arange(right + 1, right + 1 + ramp)
    mask[lo[lo >= 0]] = taper[lo >= 0]
    mask[hi[hi < y.size]] = taper[hi < y.size]

    peak = y[left:right + 1].max()
    out = y * mask
    outside = np.ones(y.shape, dtype=bool)
    outside[left:right + 1] = False
    out[outside] = np.minimum(out[outside], floor * peak)
    return TransmissionProfile(grid, out / peak)
