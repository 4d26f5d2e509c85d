import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spdckit.dispersion import (LITERATURE_SET, CrystalSpec, Wavevector, grating_vector,
                                load_sellmeier, phase_mismatch, poling_period,
                                refractive_index, wavenumber)
from spdckit.errors import DomainError, PreconditionError
from spdckit.phasematch import degeneracy_temperature

from conftest import idler


def hand_n0(x):
    # two-pole KTP z-axis formula typed in independently of the data files
    return math.sqrt(2.12725 + 1.18431 / (1 - 0.0514852 / x**2)
                     + 0.6603 / (1 - 100.00507 / x**2) - 0.00968956 * x**2)


def test_index_810nm_room_temperature(spec):
    n = float(refractive_index(spec, 810e-9, 25.0))
    assert abs(n - 1.84) < 0.01
    assert n == pytest.approx(1.8445958403566254, rel=1e-12)


def test_literature_set_matches_hand_formula_at_reference():
    lit = CrystalSpec(sellmeier=load_sellmeier(LITERATURE_SET))
    for lam in (0.405143, 0.796, 0.81, 0.8246):
        assert float(refractive_index(lit, lam * 1e-6, 25.0)) == pytest.approx(hand_n0(lam), rel=1e-13)


def test_zero_thermal_terms_give_room_value(spec):
    cold = spec.at(sellmeier=spec.sellmeier.without_thermal())
    for T in (0.0, 25.0, 80.0, 200.0):
        assert float(refractive_index(cold, 810e-9, T)) == hand_n0(0.81)


def test_dn_dT_matches_finite_difference(spec):
    d = 0.01
    for lam in (0.405143e-6, 0.796e-6, 0.8246e-6):
        for T in (20.0, 29.3, 60.0):
            fd = float(refractive_index(spec, lam, T + d) - refractive_index(spec, lam, T))
            slope = float(spec.sellmeier.dn_dT(lam * 1e6, T))
            _, n2 = spec.sellmeier.thermal_terms(lam * 1e6)
            # what remains is the second-order term n2 d^2 plus rounding
            assert abs(fd - d * slope) <= d * d * abs(n2) + 1e-15


def test_out_of_band_wavelength_names_band(spec):
    with pytest.raises(DomainError, match="0.35-1.1"):
        refractive_index(spec, 1.5e-6, 25.0)
    with pytest.raises(DomainError):
        refractive_index(spec, 800e-9, 250.0)


def test_index_real_above_one_over_band(spec):
    lam = np.linspace(0.35e-6, 1.1e-6, 400)
    for T in (0.0, 100.0, 200.0):
        n = refractive_index(spec, lam, T)
        assert np.all(np.isreal(n)) and np.all(n > 1)


def test_wavenumber_decreases_with_wavelength(spec):
    lam = np.linspace(0.35e-6, 1.1e-6, 100)
    assert np.all(np.diff(wavenumber(spec, lam, 29.3)) < 0)


def test_wavevector_consistent(spec):
    k = Wavevector.of(spec, 796e-9)
    assert k.magnitude == 2 * np.pi * k.refractive_index / k.wavelength


def test_poling_period_identity_and_expansion(spec):
    assert poling_period(spec, 25.0) == 3.425e-6
    assert poling_period(spec, 35.0) == pytest.approx(3.425e-6 * (1 + 6.7e-5 + 11e-9 * 100), rel=1e-15)
    flat = spec.at(thermal_expansion=(0.0, 0.0))
    for T in (0.0, 40.0, 180.0):
        assert poling_period(flat, T) == 3.425e-6


def test_alpha_only_expansion(spec):
    s = spec.at(thermal_expansion=(6.7e-6, 0.0))
    assert poling_period(s, 35.0) == pytest.approx(3.425e-6 * (1 + 6.7e-5), rel=1e-15)


def test_swap_symmetry(spec, pump):
    li = idler(pump, 796e-9)
    assert phase_mismatch(spec, pump, 796e-9, li) == phase_mismatch(spec, pump, li, 796e-9)


def test_energy_conservation_enforced(spec, pump):
    with pytest.raises(PreconditionError):
        phase_mismatch(spec, pump, 796e-9, 830e-9)


def test_degeneracy_root_in_window(spec, pump):
    T = degeneracy_temperature(spec, pump)
    assert 20 <= T <= 40
    assert abs(float(phase_mismatch(spec, pump, 2 * pump, 2 * pump, T))) < 1e-3


def test_pump_accepted(spec, pump):
    assert pump == 405.143e-9
    assert np.isfinite(phase_mismatch(spec, pump, 2 * pump, 2 * pump))


def test_grating_term_exact(spec, pump):
    li = idler(pump, 800e-9)
    bulk = wavenumber(spec, pump) - wavenumber(spec, 800e-9) - wavenumber(spec, li)
    dk = phase_mismatch(spec, pump, 800e-9, li)
    assert dk == bulk - 2 * np.pi / poling_period(spec, spec.temperature)
    huge = spec.at(poling_period=1e300)
    assert phase_mismatch(huge, pump, 800e-9, li) == bulk - grating_vector(huge)


@settings(max_examples=50, deadline=None)
@given(st.floats(15.0, 45.0))
def test_mismatch_continuous_in_T(T):
    spec = CrystalSpec()
    p = 405.143e-9
    li = idler(p, 796e-9)
    a = float(phase_mismatch(spec, p, 796e-9, li, T))
    b = float(phase_mismatch(spec, p, 796e-9, li, T + 1e-4))
    assert abs(a - b) < 1.0


def test_load_from_dict_and_path(tmp_path, spec):
    doc = spec.sellmeier.to_dict()
    assert load_sellmeier(doc) == spec.sellmeier
    p = tmp_path / "set.json"
    import json
    p.write_text(json.dumps(doc))
    assert load_sellmeier(str(p)) == spec.sellmeier
    with pytest.raises(DomainError):
        load_sellmeier("no_such_set")


def test_crystal_invariants():
    with pytest.raises(PreconditionError):
        CrystalSpec(length=0.0)
    with pytest.raises(PreconditionError):
        CrystalSpec(poling_period=-1e-6)
