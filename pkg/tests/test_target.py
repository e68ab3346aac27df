import numpy as np
import pytest

from etalon_forge.errors import DomainError, InsufficientPeaksError
from etalon_forge.model import EtalonConfig, evaluate_profile
from etalon_forge.spectral import (PeakSet, Peak, SpectralGrid, TransmissionProfile, find_peaks, make_grid,
                                   measure_fsr)
from etalon_forge.target import enhance_fsr_target, retained_peak
from etalon_forge import kernels


def tile(profile, times):
    """Repeat a window end to end, spacing copies by span + one step."""
    lam = profile.wavelengths
    period = profile.grid.span + profile.grid.step
    w = np.concatenate([lam + i * period for i in range(times)])
    return TransmissionProfile(SpectralGrid(w), np.tile(profile.intensity, times))


def test_identity_for_factor_one(design):
    base, _ = design
    out = enhance_fsr_target(base, 1)
    fsr = measure_fsr(base)
    assert out.grid.span == pytest.approx(fsr, abs=2 * base.grid.step)
    sel = (base.wavelengths >= out.wavelengths[0]) & (base.wavelengths <= out.wavelengths[-1])
    np.testing.assert_allclose(out.intensity, base.intensity[sel] / base.intensity[sel].max())


def test_design_target_single_peak(design):
    _, desired = design
    assert desired.intensity.max() == pytest.approx(1.0)
    assert len(find_peaks(desired, 0.5, 0.5)) == 1
    assert desired.grid.span == pytest.approx(20.16e-12, rel=0.01)
    assert desired.grid.count == 4095


def base_window(base, desired):
    i0 = int(np.searchsorted(base.wavelengths, desired.wavelengths[0]))
    np.testing.assert_allclose(desired.wavelengths, base.wavelengths[i0:i0 + desired.grid.count])
    return base.intensity[i0:i0 + desired.grid.count]


def retained_lobe(base, desired):
    """Lobe bounds as found on the unmasked base samples of the window."""
    src = base_window(base, desired)
    return kernels.lobe_bounds(np.ascontiguousarray(src), int(np.argmax(desired.intensity)), 0.5)


def test_outside_lobe_below_floor(design):
    base, desired = design
    y = desired.intensity
    left, right = retained_lobe(base, desired)
    outside = np.r_[y[:left], y[right + 1:]]
    assert 10 * np.log10(outside.max()) <= -40 + 0.5


def test_lobe_shape_preserved(design):
    base, desired = design
    y = desired.intensity
    src = base_window(base, desired)
    left, right = retained_lobe(base, desired)
    assert right - left > 100
    ref = src[left:right + 1] / src[left:right + 1].max()
    assert np.max(np.abs(y[left:right + 1] - ref) / ref) < 0.01


def test_window_width_is_factor_times_fsr(design):
    base, desired = design
    width = desired.grid.span + desired.grid.step  # half-open [lo, hi)
    assert width == pytest.approx(15 * measure_fsr(base), abs=base.grid.step)


def test_tiled_target_fsr_ratio(design):
    base, desired = design
    ratio = measure_fsr(tile(desired, 3)) / measure_fsr(base)
    step_ratio = desired.grid.step / measure_fsr(base)
    assert ratio == pytest.approx(15, abs=2 * step_ratio + 1e-9)


def test_retained_peak_tie_breaks_short():
    peaks = PeakSet([Peak(1, 1.0, 1.0, 0, 2), Peak(5, 3.0, 1.0, 4, 6)])
    assert retained_peak(peaks, 2.0).wavelength == 1.0
    assert retained_peak(peaks, 2.5).wavelength == 3.0


def test_rejects_bad_factor_and_floor(design):
    base, _ = design
    with pytest.raises(DomainError):
        enhance_fsr_target(base, 0)
    with pytest.raises(DomainError):
        enhance_fsr_target(base, 15, mask_floor=3.0)


def test_too_few_peaks():
    cfg = EtalonConfig.from_reflectivities([0.9, 0.9], [90])
    base = evaluate_profile(cfg, make_grid(1.55e-6, 5e-12, 800))
    with pytest.raises(InsufficientPeaksError):
        enhance_fsr_target(base, 15)


def test_window_must_fit_inside_base(design):
    base, _ = design
    with pytest.raises(DomainError, match="cover"):
        enhance_fsr_target(base, 19)


@pytest.mark.parametrize("floor", [-20.0, -60.0])
def test_floor_parameter(design, floor):
    base, _ = design
    out = enhance_fsr_target(base, 15, mask_floor=floor)
    y = out.intensity
    left, right = retained_lobe(base, out)
    outside = np.r_[y[:left], y[right + 1:]]
    assert 10 * np.log10(outside.max()) <= floor + 1e-9
