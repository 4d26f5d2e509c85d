"""Collinear spectra, temperature tuning and angular emission of type-0 SPDC.

The pump is a single-frequency CW laser, so every pair obeys
1/lambda_s + 1/lambda_i = 1/lambda_p and all joint spectra reduce to
functions of the signal wavelength alone.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks

from .dispersion import (CrystalSpec, grating_vector, idler_wavelength, mismatch_z,
                         refractive_index, wavenumber)
from .errors import DomainError, NumericalError
from .scan import Axis, SpectralScan

PUMP_WAVELENGTH = 405.143e-9

COARSE_STEP_NM = 0.05
ROOT_BRACKET_NM = 1e-12
LOBE_HEIGHT = 0.5
LOBE_PROMINENCE = 0.1


def sinc2(x):
    """sin(x)^2 / x^2 with the removable singularity filled in."""
    return np.sinc(np.asarray(x) / np.pi) ** 2


def _meta(spec: CrystalSpec, pump: float, **extra) -> dict:
    return {"crystal": spec.to_dict(), "pump_wavelength_m": pump, **extra}


# -- collinear spectrum ------------------------------------------------------------

def collinear_intensity(spec: CrystalSpec, pump: float, signal, T: float | None = None):
    """Un-normalized sinc^2(Delta k L / 2) at signal wavelengths in meters."""
    T = spec.temperature if T is None else T
    signal = np.asarray(signal, dtype=float)
    idler = idler_wavelength(pump, signal)
    k_p = wavenumber(spec, pump, T)
    k_s = wavenumber(spec, signal, T)
    k_i = wavenumber(spec, idler, T)
    dk = mismatch_z(k_p, k_s, k_i, 1.0, 1.0, grating_vector(spec, T))
    return sinc2(dk * spec.length / 2)


def collinear_spectrum(spec: CrystalSpec, pump: float, wavelengths_nm) -> SpectralScan:
    """Normalized collinear pair spectrum on a signal-wavelength grid in nm."""
    grid = np.asarray(wavelengths_nm, dtype=float)
    raw = collinear_intensity(spec, pump, grid * 1e-9)
    return SpectralScan.from_raw(Axis("wavelength", "nm", grid), raw,
                                 metadata=_meta(spec, pump, kind="collinear_spectrum"))


# -- tuning curve ------------------------------------------------------------------

@dataclass(frozen=True)
class TuningPoint:
    temperature: float
    signal_nm: float
    idler_nm: float
    degenerate: bool
    phase_matched: bool = True


def _dk_signal(spec, pump, T):
    k_p = wavenumber(spec, pump, T)
    K = grating_vector(spec, T)

    def f(signal):
        signal = np.asarray(signal, dtype=float)
        return mismatch_z(k_p, wavenumber(spec, signal, T),
                          wavenumber(spec, idler_wavelength(pump, signal), T), 1.0, 1.0, K)
    return f


def collinear_roots(spec: CrystalSpec, pump: float, T: float, band_lo_nm: float = 700.0):
    """Signal wavelengths (m, <= 2 lambda_p) where the collinear mismatch vanishes."""
    f = _dk_signal(spec, pump, T)
    hi = 2 * pump
    n = int(np.ceil((hi * 1e9 - band_lo_nm) / COARSE_STEP_NM))
    grid = np.linspace(hi - n * COARSE_STEP_NM * 1e-9, hi, n + 1)
    vals = f(grid)
    roots = []
    for j in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(brentq(f, grid[j], grid[j + 1], xtol=ROOT_BRACKET_NM * 1e-9))
    roots += [float(g) for g in grid[vals == 0.0]]
    return sorted(roots)


def tuning_curve(spec: CrystalSpec, pump: float, temperatures, band_lo_nm: float = 700.0):
    """Collinear signal/idler wavelengths versus temperature.

    For each temperature the outermost split root below degeneracy is
    reported. If the mismatch at degeneracy is negative there is no
    collinear solution and the point is flagged degenerate and not
    phase matched. A split root beyond ``band_lo_nm`` is reported as not
    phase matched with NaN wavelengths.
    """
    points = []
    deg = 2 * pump * 1e9
    for T in np.asarray(temperatures, dtype=float):
        roots = collinear_roots(spec, pump, T, band_lo_nm)
        at_deg = float(_dk_signal(spec, pump, T)(2 * pump))
        split = [r for r in roots if r < 2 * pump * (1 - 1e-12)]
        if split:
            s = split[-1]
            points.append(TuningPoint(float(T), float(s) * 1e9,
                                      float(idler_wavelength(pump, s)) * 1e9, degenerate=False))
        elif at_deg > 0:
            points.append(TuningPoint(float(T), math.nan, math.nan, degenerate=False,
                                      phase_matched=False))
        else:
            points.append(TuningPoint(float(T), deg, deg, degenerate=True,
                                      phase_matched=at_deg == 0))
    return points


def separation_temperature(spec: CrystalSpec, pump: float, signal: float,
                           bracket=(0.0, 200.0)) -> float:
    """Temperature at which the collinear signal root sits at ``signal`` (m)."""
    idler = idler_wavelength(pump, signal)

    def g(T):
        return float(mismatch_z(wavenumber(spec, pump, T), wavenumber(spec, signal, T),
                                wavenumber(spec, idler, T), 1.0, 1.0, grating_vector(spec, T)))
    a, b = bracket
    ga, gb = g(a), g(b)
    if ga * gb > 0:
        raise NumericalError(f"no collinear phase matching at {signal * 1e9:.3f} nm in {bracket} C")
    if ga == 0.0 or gb == 0.0:
        return a if ga == 0.0 else b
    return brentq(g, a, b, xtol=1e-9)


def degeneracy_temperature(spec: CrystalSpec, pump: float, bracket=(0.0, 200.0)) -> float:
    return separation_temperature(spec, pump, 2 * pump, bracket)


# -- lobes and FWHM ----------------------------------------------------------------

@dataclass(frozen=True)
class Lobe:
    center: float
    height: float
    fwhm: float
    left: float
    right: float


def _crossing(x, y, i, j, level):
    # linear interpolation between samples i and j for y == level
    if y[j] == y[i]:
        return x[i]
    return x[i] + (level - y[i]) * (x[j] - x[i]) / (y[j] - y[i])


def find_lobes(scan: SpectralScan) -> list[Lobe]:
    """Lobes above half the global maximum, tallest first."""
    x, y = scan.x, scan.values
    if scan.axis2 is not None:
        raise ValueError("lobe detection needs a 1-D scan")
    # only interior local maxima count; a maximum sitting on the grid edge is unresolved
    peaks, _ = find_peaks(y, height=LOBE_HEIGHT * y.max(), prominence=LOBE_PROMINENCE)
    if peaks.size == 0:
        raise NumericalError("no resolvable peak")
    lobes = []
    for p in peaks:
        half = y[p] / 2
        i = p
        while i > 0 and y[i - 1] >= half:
            i -= 1
        j = p
        while j < y.size - 1 and y[j + 1] >= half:
            j += 1
        if i == 0 or j == y.size - 1:
            warnings.warn("lobe is truncated by the grid; width measured to the edge",
                          RuntimeWarning, stacklevel=2)
        left = x[0] if i == 0 else _crossing(x, y, i - 1, i, half)
        right = x[-1] if j == y.size - 1 else _crossing(x, y, j, j + 1, half)
        lobes.append(Lobe(float(x[p]), float(y[p]), float(right - left), float(left), float(right)))
    lobes.sort(key=lambda lb: -lb.height)
    return lobes


def fwhm(scan: SpectralScan) -> list[float]:
    """Full widths at half maximum of each detected lobe, tallest lobe first."""
    return [lb.fwhm for lb in find_lobes(scan)]


# -- angular emission --------------------------------------------------------------

@dataclass(frozen=True)
class EmissionMap:
    map: SpectralScan           # axis1: external angle (mrad), axis2: wavelength (nm)
    radial: SpectralScan        # wavelength-integrated profile versus external angle
    peak_angle_mrad: float


def angular_intensity(spec: CrystalSpec, pump: float, T: float, theta_ext_mrad, wavelengths_nm):
    """Un-normalized sinc^2(Delta k_z L/2) on an (angle, wavelength) grid.

    Angles are external; the internal signal angle is theta_ext / n where n
    is the index at degeneracy. The idler angle follows from transverse
    momentum conservation k_s sin(th_s) = k_i sin(th_i).
    """
    theta = np.asarray(theta_ext_mrad, dtype=float) * 1e-3
    signal = np.asarray(wavelengths_nm, dtype=float) * 1e-9
    idler = idler_wavelength(pump, signal)
    n_band = refractive_index(spec, 2 * pump, T)
    th_s = (theta / n_band)[:, None]
    k_p = wavenumber(spec, pump, T)
    k_s = wavenumber(spec, signal, T)[None, :]
    k_i = wavenumber(spec, idler, T)[None, :]
    sin_i = k_s * np.sin(th_s) / k_i
    ok = sin_i <= 1.0
    cos_i = np.sqrt(np.where(ok, 1.0 - sin_i * sin_i, 0.0))
    dkz = mismatch_z(k_p, k_s, k_i, np.cos(th_s), cos_i, grating_vector(spec, T))
    return np.where(ok, sinc2(dkz * spec.length / 2), 0.0)


def radial_profile(raw, wavelengths_nm):
    return np.trapezoid(raw, np.asarray(wavelengths_nm, dtype=float), axis=1)


DEFAULT_THETA_MRAD = np.linspace(0.0, 40.0, 201)
DEFAULT_LAMBDA_NM = np.linspace(760.0, 870.0, 2201)


def emission_angle_map(spec: CrystalSpec, pump: float, T: float | None = None,
                       theta_ext_mrad=DEFAULT_THETA_MRAD,
                       wavelengths_nm=DEFAULT_LAMBDA_NM) -> EmissionMap:
    T = spec.temperature if T is None else T
    theta = np.asarray(theta_ext_mrad, dtype=float)
    lam = np.asarray(wavelengths_nm, dtype=float)
    raw = angular_intensity(spec, pump, T, theta, lam)
    meta = _meta(spec, pump, temperature_C=T)
    ax_t = Axis("external angle", "mrad", theta)
    full = SpectralScan.from_raw(ax_t, raw, Axis("wavelength", "nm", lam),
                                 metadata=dict(meta, kind="emission_angle_map"))
    prof = radial_profile(raw, lam)
    radial = SpectralScan.from_raw(ax_t, prof, metadata=dict(meta, kind="radial_profile"))
    return EmissionMap(full, radial, float(theta[int(np.argmax(prof))]))


def collinear_threshold(spec: CrystalSpec, pump: float, temperatures,
                        theta_ext_mrad=DEFAULT_THETA_MRAD,
                        wavelengths_nm=DEFAULT_LAMBDA_NM) -> float:
    """Lowest grid temperature from which the radial peak stays on axis."""
    temps = np.asarray(temperatures, dtype=float)
    on_axis = np.array([
        emission_angle_map(spec, pump, T, theta_ext_mrad, wavelengths_nm).peak_angle_mrad == 0.0
        for T in temps])
    if not on_axis[-1]:
        raise NumericalError("emission is not collinear anywhere at the top of the grid")
    k = temps.size - 1
    while k > 0 and on_axis[k - 1]:
        k -= 1
    return float(temps[k])


def temperature_intensity(spec: CrystalSpec, pump: float, temperatures,
                          theta_ext_mrad=DEFAULT_THETA_MRAD,
                          wavelengths_nm=DEFAULT_LAMBDA_NM) -> SpectralScan:
    """Total pair intensity within the angular aperture versus temperature.

    The (angle, wavelength) map is integrated over wavelength and over the
    detector area, i.e. with the 2 pi theta solid-angle weight.
    """
    temps = np.asarray(temperatures, dtype=float)
    theta = np.asarray(theta_ext_mrad, dtype=float)
    lam = np.asarray(wavelengths_nm, dtype=float)
    totals = []
    for T in temps:
        prof = radial_profile(angular_intensity(spec, pump, T, theta, lam), lam)
        totals.append(np.trapezoid(2 * np.pi * theta * prof, theta))
    return SpectralScan.from_raw(Axis("temperature", "C", temps), np.array(totals),
                                 metadata=_meta(spec, pump, kind="temperature_intensity"))


@dataclass(frozen=True)
class RidgePoint:
    temperature: float
    signal_nm: float        # brightest collinear wavelength below degeneracy
    idler_nm: float         # brightest collinear wavelength above degeneracy
    angle_mrad: float       # brightest external angle of the radial profile


def brightness_ridge(spec: CrystalSpec, pump: float, temperatures,
                     theta_ext_mrad=DEFAULT_THETA_MRAD,
                     wavelengths_nm=DEFAULT_LAMBDA_NM) -> list[RidgePoint]:
    """Argmax per temperature of the collinear spectrum and of the radial profile.

    The spectrum is split at twice the pump wavelength into a signal and an
    idler side. Values are grid points, no interpolation. A side whose
    maximum sits on the outer grid edge, or stays below half the unit sinc^2
    peak (side lobes only), is reported as NaN.
    """
    theta = np.asarray(theta_ext_mrad, dtype=float)
    lam = np.asarray(wavelengths_nm, dtype=float)
    deg = 2 * pump * 1e9
    lo, hi = lam <= deg, lam >= deg
    if not lo.any() or not hi.any():
        raise DomainError("wavelength grid must straddle degeneracy for a ridge export")
    out = []
    for T in np.asarray(temperatures, dtype=float):
        y = collinear_intensity(spec, pump, lam * 1e-9, T)
        js, ji = int(np.argmax(y[lo])), int(np.argmax(y[hi]))
        prof = radial_profile(angular_intensity(spec, pump, T, theta, lam), lam)
        ys, yi = y[lo], y[hi]
        bad_s = js == 0 or ys[js] < LOBE_HEIGHT
        bad_i = ji == yi.size - 1 or yi[ji] < LOBE_HEIGHT
        out.append(RidgePoint(float(T), math.nan if bad_s else float(lam[lo][js]),
                              math.nan if bad_i else float(lam[hi][ji]),
                              float(theta[int(np.argmax(prof))])))
    return out
