import numpy as np
import pytest
from hypothesis import given, strategies as st

from etalon_forge.errors import DomainError, GridMismatchError, InsufficientPeaksError
from etalon_forge.model import EtalonConfig, evaluate_profile
from etalon_forge.spectral import (C_LIGHT, SpectralGrid, TransmissionProfile, find_peaks, fit_percent,
                                   make_grid, measure_fsr, mse, peak_rejection, phase_period_grid,
                                   read_profile_csv, snap_to_phase, write_profile_csv)

LAM = 1.55e-6


def cavity_profile(opl, span_fsr=12, count=6000, R=(0.9, 0.9)):
    x = int(round(opl / 0.01))
    fsr = LAM ** 2 / (2 * opl)
    cfg = EtalonConfig.from_reflectivities(R, [x])
    return evaluate_profile(cfg, make_grid(LAM, span_fsr * fsr, count))


def test_grid_design_window():
    g = make_grid(LAM, 20.16e-12, 4096)
    assert g.count == 4096
    assert g.span == pytest.approx(20.16e-12, rel=1e-9)
    assert g.center == pytest.approx(LAM, rel=1e-12)


def test_grid_small():
    g = make_grid(LAM, 1e-12, 16)
    assert g.count == 16 and np.all(np.diff(g.wavelengths) > 0)


def test_grid_uniform_in_frequency():
    g = make_grid(LAM, 20e-12, 4096)
    np.testing.assert_allclose(np.diff(g.frequencies), np.diff(g.frequencies)[0], rtol=1e-6)


def test_grid_wavelength_step_variation():
    # uniform frequency steps map to wavelength steps growing as lambda^2:
    # relative variation across the span is about 2 * span / lambda
    g = make_grid(LAM, 20e-12, 4096)
    d = np.diff(g.wavelengths)
    variation = (d.max() - d.min()) / d.mean()
    assert variation == pytest.approx(2 * 20e-12 / LAM, rel=1e-2)
    assert variation < 3e-5


@pytest.mark.parametrize("count", [15, 0, 16.5])
def test_grid_rejects_bad_count(count):
    with pytest.raises(DomainError):
        make_grid(LAM, 1e-12, count)


def test_grid_rejects_non_monotonic():
    with pytest.raises(DomainError):
        SpectralGrid(np.array([1.0, 3.0, 2.0]) * 1e-6)


def test_phase_period_grid_covers_one_turn():
    g = phase_period_grid(LAM, 0.01, 64)
    theta = 2 * np.pi * 0.01 / g.wavelengths
    d = np.abs(np.diff(theta))
    np.testing.assert_allclose(d, 2 * np.pi / 64, rtol=1e-9)


def test_snap_to_phase_lands_mid_cell():
    lam = snap_to_phase(LAM, 0.01, np.pi / 6)
    theta = 2 * np.pi * 0.01 / lam
    assert (theta / (np.pi / 6)) % 1 == pytest.approx(0.5, abs=1e-6)
    cell = LAM ** 2 / (2 * np.pi * 0.01) * np.pi / 6
    assert abs(lam - LAM) <= 0.5 * cell * (1 + 1e-6)


def test_profile_validation():
    g = make_grid(LAM, 1e-12, 16)
    with pytest.raises(GridMismatchError):
        TransmissionProfile(g, np.ones(15))
    with pytest.raises(DomainError):
        TransmissionProfile(g, -np.ones(16))
    p = TransmissionProfile(g, np.linspace(0, 2, 16))
    assert not p.passive
    assert p.normalized().intensity.max() == 1.0


def test_find_peaks_single_cavity_matches_analytic_resonances():
    opl = 0.9
    p = cavity_profile(opl)
    peaks = find_peaks(p, 0.5)
    # resonances where 2*x*phase is an odd multiple of pi: nu = c (2k+1) / (4 opl)
    nu = p.grid.frequencies
    k = np.arange(np.ceil(nu.min() * 4 * opl / C_LIGHT), nu.max() * 4 * opl / C_LIGHT + 1)
    odd = k[k % 2 == 1]
    expected = np.sort(C_LIGHT / (odd * C_LIGHT / (4 * opl)))
    # a resonance sitting on the first or last sample is not a local maximum
    lam = p.wavelengths
    expected = expected[(expected > lam[2]) & (expected < lam[-3])]
    assert len(peaks) == len(expected)
    assert np.max(np.abs(peaks.wavelengths - expected)) <= p.grid.step


def test_find_peaks_monotonic_is_empty():
    g = make_grid(LAM, 1e-12, 64)
    assert len(find_peaks(TransmissionProfile(g, np.linspace(0.1, 1, 64)))) == 0


def test_find_peaks_merges_split_lobes():
    g = SpectralGrid(np.linspace(1, 2, 9) * 1e-6)
    y = np.array([0.0, 0.3, 1.0, 0.8, 0.97, 0.2, 0.0, 0.6, 0.0])
    p = TransmissionProfile(g, y)
    assert len(find_peaks(p, 0.1)) == 3
    merged = find_peaks(p, 0.1, lobe_depth=0.5)
    assert [q.index for q in merged] == [2, 7]
    assert (merged[0].left_min, merged[0].right_min) == (0, 6)


@given(st.lists(st.floats(0, 1), min_size=5, max_size=60), st.floats(0.05, 0.95))
def test_find_peaks_exhaustive(values, floor):
    y = np.array(values)
    g = make_grid(LAM, 1e-12, 16) if y.size == 16 else SpectralGrid(np.linspace(1, 2, y.size) * 1e-6)
    found = set(find_peaks(TransmissionProfile(g, y), floor).indices.tolist())
    if np.ptp(y) == 0:
        assert not found
        return
    # a peak is a local maximum (plateaus count once) whose prominence reaches the floor
    for i in found:
        assert y[i] >= y[i - 1] and y[i] >= y[i + 1]
        left = y[:i][::-1]
        right = y[i + 1:]
        lmin = min(left[: np.argmax(left > y[i])] if np.any(left > y[i]) else left)
        rmin = min(right[: np.argmax(right > y[i])] if np.any(right > y[i]) else right)
        assert y[i] - max(lmin, rmin) >= floor * y.max() - 1e-12
    for i in range(1, y.size - 1):
        strict = y[i] > y[i - 1] and y[i] > y[i + 1]
        if strict and y[i] - max(y[:i].min(), y[i + 1:].min()) < floor * y.max() - 1e-12:
            assert i not in found


@pytest.mark.parametrize("opl", [0.3, 0.9, 1.8])
def test_measure_fsr_single_cavity(opl):
    p = cavity_profile(opl)
    assert measure_fsr(p) == pytest.approx(LAM ** 2 / (2 * opl), abs=p.grid.step)


def test_measure_fsr_needs_two_peaks():
    g = make_grid(LAM, 1e-12, 32)
    y = np.exp(-np.linspace(-3, 3, 32) ** 2)
    with pytest.raises(InsufficientPeaksError):
        measure_fsr(TransmissionProfile(g, y))


def test_base_comb_fsr(design):
    base, _ = design
    assert measure_fsr(base) == pytest.approx(1.344e-12, rel=0.01)


def test_peak_rejection_lobe_only_is_sentinel():
    g = make_grid(LAM, 1e-12, 32)
    y = np.zeros(32)
    y[14:19] = [0.2, 0.7, 1.0, 0.7, 0.2]
    assert peak_rejection(TransmissionProfile(g, y)) == -np.inf


def test_peak_rejection_value_and_window():
    g = SpectralGrid(np.linspace(1, 2, 9) * 1e-6)
    y = np.array([0.0, 0.01, 0.0, 0.5, 1.0, 0.5, 0.0, 0.1, 0.0])
    p = TransmissionProfile(g, y)
    assert peak_rejection(p) == pytest.approx(-10.0)
    assert peak_rejection(p, (g.wavelengths[0], g.wavelengths[6])) == pytest.approx(-20.0)


@given(st.lists(st.floats(1e-6, 1), min_size=8, max_size=40), st.floats(1e-3, 1e3))
def test_peak_rejection_scale_invariant(values, scale):
    y = np.array(values)
    g = SpectralGrid(np.linspace(1, 2, y.size) * 1e-6)
    a = peak_rejection(TransmissionProfile(g, y))
    b = peak_rejection(TransmissionProfile(g, y * scale))
    assert a == pytest.approx(b, abs=1e-9) or a == b


def test_mse_definition():
    g = make_grid(LAM, 1e-12, 16)
    p = TransmissionProfile(g, np.linspace(0, 1, 16))
    assert mse(p, p) == 0.0
    assert mse(p, TransmissionProfile(g, p.intensity + 0.1)) == pytest.approx(0.01)
    with pytest.raises(GridMismatchError):
        mse(p, TransmissionProfile(make_grid(LAM, 2e-12, 16), p.intensity))


@given(st.lists(st.floats(0, 1), min_size=4, max_size=30), st.lists(st.floats(0, 1), min_size=4, max_size=30))
def test_mse_symmetric(a, b):
    n = min(len(a), len(b))
    assert mse(np.array(a[:n]), np.array(b[:n])) == mse(np.array(b[:n]), np.array(a[:n]))


def test_fit_percent_definition():
    y = np.array([0.0, 1.0, 0.5, 0.25])
    assert fit_percent(y, y) == 100.0
    assert fit_percent(y, np.full(4, y.mean())) == pytest.approx(0.0)
    z = np.array([0.1, 0.9, 0.5, 0.3])
    assert fit_percent(y, z) != pytest.approx(fit_percent(z, y))
    with pytest.raises(DomainError):
        fit_percent(np.ones(4), y)


def test_profile_csv_round_trip(tmp_path):
    p = cavity_profile(0.3, count=200)
    path = tmp_path / "p.csv"
    write_profile_csv(path, p)
    assert path.read_text().splitlines()[0] == "wavelength_nm,intensity"
    q = read_profile_csv(path)
    np.testing.assert_allclose(q.wavelengths, p.wavelengths, rtol=1e-11)
    np.testing.assert_allclose(q.intensity, p.intensity, rtol=1e-11)


def test_profile_csv_bad_header(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("lambda,I\n1,2\n")
    with pytest.raises(DomainError, match="header"):
        read_profile_csv(path)
