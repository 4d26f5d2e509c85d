import warnings

import numpy as np
import pytest

from spdckit import phasematch as pm
from spdckit.dispersion import phase_mismatch
from spdckit.errors import DomainError, NumericalError
from spdckit.scan import Axis, SpectralScan

from conftest import idler

SINC2_HALF = 1.3915573782515103  # sin(x)^2/x^2 = 1/2


def test_sinc2_exact_at_zero():
    assert pm.sinc2(0.0) == 1.0
    assert pm.sinc2(SINC2_HALF) == pytest.approx(0.5, abs=1e-15)


def test_peak_at_degeneracy(spec, pump):
    T = pm.degeneracy_temperature(spec, pump)
    deg = 2 * pump * 1e9
    grid = np.linspace(deg - 30, deg, 3001)
    grid[-1] = deg
    s = pm.collinear_spectrum(spec.at(temperature=T), pump, grid)
    assert s.argmax() == pytest.approx(deg, abs=0.02)


def test_split_lobes_near_796_824(op_spec, pump):
    s = pm.collinear_spectrum(op_spec, pump, np.linspace(780, 840, 6001))
    lobes = pm.find_lobes(s)
    assert len(lobes) == 2
    centers = sorted(lb.center for lb in lobes)
    assert centers[0] == pytest.approx(796, abs=3)
    assert centers[1] == pytest.approx(824, abs=3)


def test_fwhm_scales_inverse_length(op_spec, pump):
    grid = np.linspace(770, 850, 16001)
    w30 = pm.fwhm(pm.collinear_spectrum(op_spec, pump, grid))[0]
    w10 = pm.fwhm(pm.collinear_spectrum(op_spec.at(length=10e-3), pump, grid))[0]
    assert w10 / w30 == pytest.approx(3.0, rel=0.15)


def test_bad_band_is_domain_error(spec, pump):
    with pytest.raises(DomainError):
        pm.collinear_spectrum(spec, pump, np.linspace(200, 300, 11))


def test_tuning_branches(spec, pump):
    Tdeg = pm.degeneracy_temperature(spec, pump)
    pts = pm.tuning_curve(spec, pump, np.linspace(15, 45, 61))
    below = [p for p in pts if p.temperature < Tdeg - 0.01]
    above = [p for p in pts if p.temperature > Tdeg + 0.01]
    assert below and all(p.degenerate for p in below)
    assert above and not any(p.degenerate for p in above)
    sig = np.array([p.signal_nm for p in above])
    idl = np.array([p.idler_nm for p in above])
    assert np.all(np.diff(sig) < 0) and np.all(np.diff(idl) > 0)
    for p in pts:
        assert p.signal_nm <= p.idler_nm
        assert abs(1 / p.signal_nm + 1 / p.idler_nm - 1 / (pump * 1e9)) * pump * 1e9 < 1e-9


def test_tuning_roots_are_roots(spec, pump):
    for p in pm.tuning_curve(spec, pump, [29.0, 30.0, 33.0, 40.0]):
        ls = p.signal_nm * 1e-9
        assert abs(float(phase_mismatch(spec, pump, ls, idler(pump, ls), p.temperature))) < 1e-6


def test_separation_point_in_window(spec, pump):
    T = pm.separation_temperature(spec, pump, 796e-9)
    assert 25 <= T <= 35
    p = pm.tuning_curve(spec, pump, [T])[0]
    assert p.signal_nm == pytest.approx(796, abs=1e-6)
    assert p.idler_nm == pytest.approx(1 / (1 / 405.143 - 1 / 796), rel=1e-9)


def test_fwhm_sinc2_half_width():
    x = np.linspace(-6, 6, 12001)
    s = SpectralScan.from_raw(Axis("detuning", "rad", x), pm.sinc2(x))
    assert pm.fwhm(s)[0] == pytest.approx(2 * SINC2_HALF, rel=1e-6)


def test_fwhm_two_identical_lobes():
    x = np.linspace(0, 20, 2001)
    y = np.exp(-((x - 5) ** 2)) + np.exp(-((x - 15) ** 2))
    w = pm.fwhm(SpectralScan.from_raw(Axis("x", "nm", x), y))
    assert len(w) == 2 and w[0] == pytest.approx(w[1], rel=1e-9)


@pytest.mark.parametrize("n", [200, 401, 1000])
def test_fwhm_gaussian(n):
    x = np.linspace(790, 802, n)
    w = 2.3
    y = np.exp(-4 * np.log(2) * (x - 796.1) ** 2 / w**2)
    assert pm.fwhm(SpectralScan.from_raw(Axis("wavelength", "nm", x), y))[0] == pytest.approx(w, rel=5e-3)


def test_fwhm_without_peak():
    x = np.linspace(0, 1, 50)
    with pytest.raises(NumericalError, match="no resolvable peak"):
        pm.fwhm(SpectralScan.from_raw(Axis("x", "nm", x), x))


def test_truncated_lobe_warns():
    x = np.linspace(0, 1, 101)
    y = np.exp(-((x - 0.1) ** 2) / 0.05)
    with pytest.warns(RuntimeWarning, match="truncated"):
        pm.fwhm(SpectralScan.from_raw(Axis("x", "nm", x), y))


def test_relabel_invariance(op_spec, pump):
    sig = np.linspace(790, 802, 301) * 1e-9
    a = pm.collinear_intensity(op_spec, pump, sig)
    b = pm.collinear_intensity(op_spec, pump, idler(pump, sig))
    assert np.max(np.abs(a - b)) < 1e-6


def test_zero_angle_column_bit_identical(op_spec, pump):
    lam = np.linspace(785, 835, 501)
    grid = pm.angular_intensity(op_spec, pump, op_spec.temperature, [0.0, 1.0, 5.0], lam)
    assert np.array_equal(grid[0], pm.collinear_intensity(op_spec, pump, lam * 1e-9))


def test_collinear_above_threshold_ring_below(spec, pump):
    Tsep = pm.separation_temperature(spec, pump, 796e-9)
    assert pm.emission_angle_map(spec, pump, Tsep + 1.0).peak_angle_mrad == 0.0
    Tdeg = pm.degeneracy_temperature(spec, pump)
    assert pm.emission_angle_map(spec, pump, Tdeg - 1.5).peak_angle_mrad > 0.0


def test_map_is_normalized(op_spec, pump):
    m = pm.emission_angle_map(op_spec, pump)
    assert m.map.values.max() == 1.0 and m.radial.values.max() == 1.0
    assert m.map.values.shape == (201, 2201)


def test_temperature_intensity_trend(spec, pump):
    Tsep = pm.separation_temperature(spec, pump, 796e-9)
    temps = np.arange(25.0, 36.01, 0.25)
    s = pm.temperature_intensity(spec, pump, temps)
    assert s.values.max() == 1.0
    thr = pm.collinear_threshold(spec, pump, np.arange(26.0, 32.01, 0.1))
    hot = s.values[temps > thr + 0.3]
    assert np.all(np.diff(hot) < 0)
    assert s.argmax() < Tsep


def test_brightness_ridge(spec, pump):
    T_sep = pm.separation_temperature(spec, pump, 796e-9)
    lam = np.linspace(770.0, 850.0, 1601)
    r = pm.brightness_ridge(spec, pump, [25.0, T_sep], wavelengths_nm=lam)
    assert r[1].signal_nm == pytest.approx(796.0, abs=0.05)
    assert r[1].idler_nm == pytest.approx(825.1, abs=0.05)
    assert r[1].angle_mrad == 0.0
    # below degeneracy only side lobes reach the axis and the emission is a ring
    assert np.isnan(r[0].signal_nm) and np.isnan(r[0].idler_nm)
    assert r[0].angle_mrad > 0.0


def test_brightness_ridge_needs_degeneracy(spec, pump):
    with pytest.raises(DomainError):
        pm.brightness_ridge(spec, pump, [29.0], wavelengths_nm=np.linspace(770.0, 800.0, 11))
