"""Spectral grids, transmission profiles and the scalar metrics built on them."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import signal

from . import kernels
from .errors import DomainError, GridMismatchError, InsufficientPeaksError

C_LIGHT = 299_792_458.0
MAIN_PEAK_FLOOR = 0.5
# Minima shallower than this fraction of the peak are passband ripple, not lobe edges.
LOBE_DEPTH = 0.5


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Wavelength samples (metres), strictly increasing."""

    wavelengths: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.wavelengths, dtype=np.float64).ravel()
        if lam.size < 2:
            raise DomainError("a grid needs at least two samples")
        if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise DomainError("grid wavelengths must be positive and finite")
        if not np.all(np.diff(lam) > 0):
            raise DomainError("grid wavelengths must be strictly increasing")
        lam.setflags(write=False)
        object.__setattr__(self, "wavelengths", lam)

    @property
    def count(self) -> int:
        return int(self.wavelengths.size)

    @property
    def span(self) -> float:
        return float(self.wavelengths[-1] - self.wavelengths[0])

    @property
    def center(self) -> float:
        return 0.5 * float(self.wavelengths[-1] + self.wavelengths[0])

    @property
    def step(self) -> float:
        """Mean sample spacing; the resolution quoted for peak positions."""
        return self.span / (self.count - 1)

    @property
    def frequencies(self) -> np.ndarray:
        return C_LIGHT / self.wavelengths

    def __len__(self):
        return self.count

    def same_as(self, other: "SpectralGrid") -> bool:
        return self.count == other.count and np.allclose(
            self.wavelengths, other.wavelengths, rtol=1e-12, atol=0.0)

    def subset(self, sel) -> "SpectralGrid":
        return SpectralGrid(self.wavelengths[sel])


def make_grid(center: float, span: float, count: int) -> SpectralGrid:
    """``count`` samples uniform in optical frequency covering ``center +/- span/2``."""
    if int(count) != count or count < 16:
        raise DomainError(f"grid count must be an integer >= 16, got {count!r}")
    if not span > 0 or not center > 0 or span >= 2 * center:
        raise DomainError(f"degenerate grid: center={center!r}, span={span!r}")
    nu_lo = C_LIGHT / (center + 0.5 * span)
    nu_hi = C_LIGHT / (center - 0.5 * span)
    nu = np.linspace(nu_hi, nu_lo, int(count))
    lam = C_LIGHT / nu
    lam[0] = center - 0.5 * span
    lam[-1] = center + 0.5 * span
    return SpectralGrid(lam)


def phase_period_grid(center: float, unit_length: float, count: int,
                      periods: float = 1.0) -> SpectralGrid:
    """Grid whose unit-delay phase covers ``periods`` full turns in ``count`` equal steps.

    The last sample stops one step short of the end so the samples tile the
    unit circle without repetition when ``periods`` is 1.
    """
    if count < 16:
        raise DomainError(f"grid count must be >= 16, got {count!r}")
    theta_c = 2 * np.pi * unit_length / center
    dtheta = 2 * np.pi * periods / count
    theta = theta_c + dtheta * (np.arange(count) - count // 2)
    return SpectralGrid(np.sort(2 * np.pi * unit_length / theta))


def snap_to_phase(wavelength: float, unit_length: float, period: float,
                  offset: float = 0.5) -> float:
    """Nearest wavelength whose unit-delay phase sits at ``offset`` of a ``period`` cell.

    With ``period = pi * M / x`` and ``offset = 0.5`` this centres a design
    window of ``M`` base FSRs (base cavity ``x``) on the frequency where every
    cavity with a length that is an odd multiple of ``x / M`` resonates.
    """
    theta = 2 * np.pi * unit_length / wavelength
    k = np.round(theta / period - offset)
    return float(2 * np.pi * unit_length / ((k + offset) * period))


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransmissionProfile:
    grid: SpectralGrid
    intensity: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.intensity, dtype=np.float64).ravel()
        if y.shape[0] != self.grid.count:
            raise GridMismatchError(
                f"intensity has {y.shape[0]} samples, grid has {self.grid.count}")
        if not np.all(np.isfinite(y)) or np.any(y < 0):
            raise DomainError("intensity must be finite and nonnegative")
        y.setflags(write=False)
        object.__setattr__(self, "intensity", y)

    @property
    def wavelengths(self) -> np.ndarray:
        return self.grid.wavelengths

    @property
    def passive(self) -> bool:
        """False when some sample exceeds unity (possible for estimated models)."""
        return bool(self.intensity.max() <= 1.0 + 1e-9)

    def normalized(self) -> "TransmissionProfile":
        peak = self.intensity.max()
        if peak <= 0:
            raise DomainError("cannot normalize an all-zero profile")
        return TransmissionProfile(self.grid, self.intensity / peak)

    def window(self, lo: float, hi: float) -> "TransmissionProfile":
        lam = self.grid.wavelengths
        sel = (lam >= lo) & (lam <= hi)
        return TransmissionProfile(self.grid.subset(sel), self.intensity[sel])

    def db(self, floor: float = 1e-30) -> np.ndarray:
        y = self.intensity / self.intensity.max()
        return 10 * np.log10(np.maximum(y, floor))


class Peak(NamedTuple):
    index: int
    wavelength: float
    intensity: float
    left_min: int
    right_min: int


class PeakSet(tuple):
    """Peaks sorted by wavelength."""

    @property
    def wavelengths(self) -> np.ndarray:
        return np.array([p.wavelength for p in self])

    @property
    def indices(self) -> np.ndarray:
        return np.array([p.index for p in self], dtype=np.int64)


def find_peaks(profile: TransmissionProfile, prominence_floor: float = MAIN_PEAK_FLOOR,
               lobe_depth: float | None = None) -> PeakSet:
    """Local maxima whose prominence is at least ``prominence_floor * max``.

    Each peak records its flanking minima: the nearest local minimum on each
    side (the sample range edge if none). With ``lobe_depth`` set, peaks that
    share one lobe (no minimum below ``lobe_depth`` times the peak between
    them) are merged and the highest survives, so a split resonance counts
    once.
    """
    y = profile.intensity
    top = y.max()
    if top <= 0 or np.ptp(y) == 0:
        return PeakSet()
    idx, _ = signal.find_peaks(y, prominence=prominence_floor * top)
    depth = 1.0 if lobe_depth is None else lobe_depth
    peaks = []
    for i in idx:
        left, right = kernels.lobe_bounds(y, int(i), depth)
        peaks.append(Peak(int(i), float(profile.wavelengths[i]), float(y[i]), int(left), int(right)))
    if lobe_depth is not None:
        peaks = _merge_lobes(peaks)
    return PeakSet(peaks)


def _merge_lobes(peaks):
    merged = []
    for p in peaks:
        if merged and p.index <= merged[-1].right_min:
            q = merged[-1]
            best = p if p.intensity > q.intensity else q
            merged[-1] = best._replace(left_min=min(p.left_min, q.left_min),
                                       right_min=max(p.right_min, q.right_min))
        else:
            merged.append(p)
    return merged


def measure_fsr(profile: TransmissionProfile, prominence_floor: float = MAIN_PEAK_FLOOR,
                lobe_depth: float = LOBE_DEPTH) -> float:
    """Mean spacing (metres) of adjacent main peaks.

    Uncertainty is one grid step (``profile.grid.step``).
    """
    peaks = find_peaks(profile, prominence_floor, lobe_depth)
    if len(peaks) < 2:
        raise InsufficientPeaksError(len(peaks), 2)
    lam = peaks.wavelengths
    return float((lam[-1] - lam[0]) / (len(lam) - 1))


def main_lobe(profile: TransmissionProfile, index: int | None = None,
              lobe_depth: float = LOBE_DEPTH) -> tuple[int, int]:
    """Sample range ``[left, right]`` of the lobe around ``index`` (default: global max)."""
    y = profile.intensity
    k = int(np.argmax(y)) if index is None else int(index)
    return kernels.lobe_bounds(y, k, lobe_depth)


def peak_rejection(profile: TransmissionProfile, window=None,
                   lobe_depth: float = LOBE_DEPTH) -> float:
    """Strongest sideband relative to the main peak, in dB (``-inf`` if there is none).

    The main peak is the maximum inside ``window`` (``(lo, hi)`` wavelengths,
    default: whole profile); its lobe runs out to the nearest minima below
    ``lobe_depth`` times the peak, and every other sample in the window counts
    as sideband.
    """
    if window is not None:
        profile = profile.window(*window)
    y = np.ascontiguousarray(profile.intensity)[None, :]
    return float(kernels.rejection_batch(y, lobe_depth)[0])


def _values(p):
    return p.intensity if isinstance(p, TransmissionProfile) else np.asarray(p, dtype=float)


def _check_grids(a, b):
    if isinstance(a, TransmissionProfile) and isinstance(b, TransmissionProfile):
        if not a.grid.same_as(b.grid):
            raise GridMismatchError("profiles are sampled on different grids")
    elif np.shape(_values(a)) != np.shape(_values(b)):
        raise GridMismatchError("sample arrays differ in length")


def mse(a, b) -> float:
    _check_grids(a, b)
    d = _values(a) - _values(b)
    return float(np.mean(d * d))


def fit_percent(measured, modeled) -> float:
    """Normalized-RMSE fit: ``100 * (1 - |y - yhat| / |y - mean(y)|)``. Not symmetric."""
    _check_grids(measured, modeled)
    y = _values(measured)
    yhat = _values(modeled)
    ref = np.linalg.norm(y - y.mean())
    if ref == 0:
        raise DomainError("fit percent undefined for a constant measured signal")
    return float(100.0 * (1.0 - np.linalg.norm(y - yhat) / ref))


# ---------------------------------------------------------------------------
# CSV


def write_profile_csv(path, profile: TransmissionProfile) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("wavelength_nm,intensity\n")
        for lam, y in zip(profile.wavelengths, profile.intensity):
            fh.write(f"{lam * 1e9:.12g},{y:.12g}\n")


def read_profile_csv(path) -> TransmissionProfile:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["wavelength_nm", "intensity"]:
        raise DomainError(f"{path}: expected header 'wavelength_nm,intensity'")
    data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns")
    return TransmissionProfile(SpectralGrid(data[:, 0] * 1e-9), data[:, 1])
