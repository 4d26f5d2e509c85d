import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spdckit import overlap as ov
from spdckit.dispersion import CrystalSpec, wavenumber
from spdckit.errors import NumericalError, PreconditionError
from spdckit.phasematch import PUMP_WAVELENGTH, sinc2

from conftest import idler

W = ov.WaistTriple(30e-6, 25e-6)


def test_waist_defaults_and_validation():
    assert ov.WaistTriple(30e-6, 20e-6).w_i == 20e-6
    with pytest.raises(PreconditionError):
        ov.WaistTriple(0.0, 1e-5)


def test_coefficients_match_beam_parameter_expansion(op_spec, pump):
    # D(z) from the q parameters must equal C - A z^2 - i B z
    ls = 796e-9
    T = op_spec.temperature
    k = [wavenumber(op_spec, x, T) for x in (pump, ls, idler(pump, ls))]
    w = (31e-6, 22e-6, 47e-6)
    A, B, C = ov.abc(*k, *w)
    for z in np.linspace(-0.015, 0.015, 7):
        d = ov.denominator(z, *k, *w)
        assert d == pytest.approx(C - A * z * z - 1j * B * z, rel=1e-13)


def test_coefficients_closed_forms(op_spec, pump):
    ls = 796e-9
    li = idler(pump, ls)
    w = ov.WaistTriple(31e-6, 22e-6, 47e-6)
    c = ov.coefficients(op_spec, pump, ls, li, w)
    kp, ks, ki = (float(wavenumber(op_spec, x)) for x in (pump, ls, li))
    wp, ws, wi = w.w_p, w.w_s, w.w_i
    assert c.A == pytest.approx(4 * (kp - ks - ki) / (kp * ks * ki), rel=1e-15)
    assert c.B == pytest.approx(2 * ((wp**2 + ws**2) / ki + (wi**2 + wp**2) / ks
                                     - (ws**2 + wi**2) / kp), rel=1e-14)
    assert c.C == pytest.approx(wp**2 * ws**2 + ws**2 * wi**2 + wi**2 * wp**2, rel=1e-15)


def test_alternative_b_sign_breaks_equivalence(op_spec, pump):
    # with the -(w_i^2+w_p^2)/k_s sign the real form no longer matches the q-form integrand
    ls = 796e-9
    li = idler(pump, ls)
    c = ov.coefficients(op_spec, pump, ls, li, W)
    kp, ks, ki = (float(wavenumber(op_spec, x)) for x in (pump, ls, li))
    wp, ws, wi = W.w_p, W.w_s, W.w_i
    b_alt = 2 * ((wp**2 + ws**2) / ki - (ws**2 + wi**2) / kp - (wi**2 + wp**2) / ks)
    alt = ov.OverlapCoefficients(c.A, b_alt, c.C, c.dPhi)
    good, _ = ov.integral_complex(c, op_spec.length)
    bad, _ = ov.integral_real(alt, op_spec.length)
    assert abs(bad - good) / abs(good) > 1e-3


def test_conjugate_symmetry(op_spec, pump):
    for ls in (794e-9, 796e-9, 797.5e-9):
        phi = ov.overlap_amplitude(op_spec, pump, ls, idler(pump, ls), W)
        assert abs(phi.imag) < 1e-12 * abs(phi)


def test_three_routes_agree(op_spec, pump):
    for ls in np.linspace(792e-9, 800e-9, 9):
        li = idler(pump, ls)
        a = ov.overlap_amplitude(op_spec, pump, ls, li, W)
        b = ov.overlap_amplitude_real(op_spec, pump, ls, li, W)
        c = complex(ov.amplitude_grid(op_spec, pump, ls, W.w_p, W.w_s))
        assert abs(a - b) < 1e-8 * abs(a)
        assert abs(a - c) < 1e-8 * abs(a)


def test_closed_form_degenerate_coefficients():
    L = 0.02
    for dP in (0.0, 150.0, -420.0):
        for B in (0.0, 3e-16):
            c = ov.OverlapCoefficients(0.0, B, 2e-18, dP)
            ref, _ = ov.integral_complex(c, L, rtol=1e-12)
            got = complex(ov.integral_closed(dP, 0.0, B, 2e-18, L))
            assert abs(got - ref) < 1e-9 * abs(ref)


def test_exchange_symmetry_equal_k(spec, pump):
    ls = 2 * pump
    w = ov.WaistTriple(30e-6, 20e-6, 45e-6)
    a = ov.overlap_amplitude(spec, pump, ls, ls, w)
    b = ov.overlap_amplitude(spec, pump, ls, ls, w.swapped())
    assert a == b


def test_exchange_symmetry_796_824(op_spec, pump):
    # both lobes, window edges conjugate to each other so relabeling maps it onto itself
    lam = np.linspace(788.0, idler(pump, 788e-9) * 1e9, 4001)
    a = ov.pair_intensity(op_spec, pump, ov.WaistTriple(30e-6, 20e-6, 45e-6), lam).value
    b = ov.pair_intensity(op_spec, pump, ov.WaistTriple(30e-6, 45e-6, 20e-6), lam).value
    assert abs(a - b) < 1e-6 * a


def test_plane_wave_limit(op_spec, pump):
    w = ov.WaistTriple(1e-3, 1e-3)
    lam = np.linspace(791e-9, 801e-9, 81)
    amp = np.array([ov.overlap_amplitude(op_spec, pump, x, idler(pump, x), w) for x in lam])
    dk = np.array([ov.coefficients(op_spec, pump, x, idler(pump, x), w).dPhi for x in lam])
    got = np.abs(amp) ** 2 / np.max(np.abs(amp) ** 2)
    want = sinc2(dk * op_spec.length / 2)
    assert np.max(np.abs(got - want / want.max())) < 0.01


def test_tolerance_refinement_is_monotone(op_spec, pump):
    ls = 795.3e-9
    li = idler(pump, ls)
    prev = ov.overlap(op_spec, pump, ls, li, W, rtol=1e-6)
    for rtol in (5e-7, 2.5e-7, 1.25e-7, 1e-9):
        cur = ov.overlap(op_spec, pump, ls, li, W, rtol=rtol)
        assert abs(cur.amplitude - prev.amplitude) <= max(prev.error_bound, 1e-15 * abs(prev.amplitude))
        prev = cur


def test_nonconvergence_raises(op_spec, pump, monkeypatch):
    monkeypatch.setattr(ov, "QUAD_LIMIT", 1)
    with pytest.raises(NumericalError) as info:
        ov.overlap(op_spec, pump, 790e-9, idler(pump, 790e-9), W, rtol=1e-13)
    assert info.value.estimate is not None and info.value.error_bound is not None


def test_pair_intensity_grid_convergence(op_spec, pump):
    band = ov.signal_band(op_spec, pump, points=200)
    fine = np.linspace(band[0], band[-1], 399)
    a = ov.pair_intensity(op_spec, pump, W, band).value
    b = ov.pair_intensity(op_spec, pump, W, fine).value
    assert a > 0 and abs(a - b) < 1e-3 * b


def test_pair_intensity_coarse_flag(op_spec, pump):
    with pytest.warns(RuntimeWarning):
        r = ov.pair_intensity(op_spec, pump, W, np.linspace(780, 840, 200))
    assert r.coarse_grid


def test_signal_band_brackets_lobe(op_spec, pump):
    band = ov.signal_band(op_spec, pump)
    assert band.size == 200
    assert band[0] < 796 < band[-1]
    assert 2.0 < band[-1] - band[0] < 3.5


def test_fixed_ws_sweep_falls_for_large_pump(op_spec, pump):
    wp = np.linspace(10e-6, 200e-6, 40)
    s = ov.sweep_pump_waist(op_spec, pump, wp, w_s=10e-6)
    assert s.values.max() == 1.0
    j = int(np.argmax(s.values))
    assert np.all(np.diff(s.values[j:]) < 0)
    assert s.values[-1] < 0.5


@pytest.mark.parametrize("L", [10e-3, 20e-3, 30e-3])
def test_envelope_interior_maximum(spec, pump, L):
    x = ov.operating_point(spec.at(length=L), pump)
    s = ov.sweep_pump_waist(x, pump, np.linspace(5e-6, 80e-6, 30))
    j = int(np.argmax(s.values))
    assert 0 < j < s.values.size - 1


def test_signal_distribution_narrows_with_smaller_pump(op_spec, pump):
    from spdckit.phasematch import find_lobes
    ws = np.geomspace(5e-6, 300e-6, 64)
    s20 = ov.sweep_signal_waist(op_spec, pump, 20e-6, ws)
    s40 = ov.sweep_signal_waist(op_spec, pump, 40e-6, ws)
    assert find_lobes(s20)[0].fwhm < find_lobes(s40)[0].fwhm
    assert s20.metadata["raw_max"] > s40.metadata["raw_max"]


def test_waist_distribution_weights(op_spec, pump):
    s = ov.sweep_signal_waist(op_spec, pump, 30e-6, np.geomspace(5e-6, 300e-6, 64))
    w, wt = ov.waist_distribution(s)
    assert np.all(wt >= 0) and wt.sum() == pytest.approx(1.0, abs=1e-12)


def test_single_component_is_gaussian():
    x = np.linspace(-5e-3, 5e-3, 401)
    prof = ov.superpose(x, [40e-6], [1.0], 796e-9, 0.18)
    wz = 40e-6 * np.sqrt(1 + (0.18 / (np.pi * 40e-6**2 / 796e-9)) ** 2)
    g = np.exp(-2 * x**2 / wz**2)
    assert np.allclose(prof / prof.max(), g, atol=1e-12)


def test_far_field_lorentzian_and_length_trend(spec, pump):
    widths = []
    for L in (10e-3, 20e-3, 30e-3):
        ff = ov.far_field_profile(ov.operating_point(spec.at(length=L), pump), pump, 30e-6, 0.18)
        widths.append(ff.fits["fwhm_mm"])
        if L == 30e-3:
            assert ff.fits["lorentzian"]["ssr"] < ff.fits["gaussian"]["ssr"]
    assert widths[0] > widths[1] > widths[2]


def test_far_field_needs_distance(op_spec, pump):
    with pytest.raises(PreconditionError):
        ov.far_field_profile(op_spec, pump, 30e-6, 0.0)


@settings(max_examples=25, deadline=None)
@given(L=st.floats(5e-3, 40e-3), wp=st.floats(10e-6, 100e-6), ws=st.floats(10e-6, 100e-6),
       wi=st.floats(10e-6, 100e-6), det=st.floats(-3.0, 3.0))
def test_complex_and_real_forms_property(L, wp, ws, wi, det):
    spec = CrystalSpec(length=L, temperature=29.3)
    p = PUMP_WAVELENGTH
    ls = 796e-9 + det * 2.75e-9 * (30e-3 / L)
    w = ov.WaistTriple(wp, ws, wi)
    a = ov.overlap_amplitude(spec, p, ls, idler(p, ls), w)
    b = ov.overlap_amplitude_real(spec, p, ls, idler(p, ls), w)
    assert abs(a - b) < 1e-8 * abs(a)
