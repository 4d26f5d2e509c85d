"""Collinear Gaussian-mode overlap amplitude, pair intensity and waist sweeps.

The pair amplitude for pump, signal and idler modes with waists w_p, w_s,
w_i at the crystal center is

    phi ~ w_p w_s w_i / sqrt(l_p l_s l_i) * int_{-L/2}^{L/2} e^{i dP z} / D(z) dz

with D(z) = q_s* q_i* + q_p q_i* + q_p q_s* and q_a = w_a^2 + 2 i z / k_a.
Expanding, D = C - A z^2 - i B z where

    A = 4 (k_p - k_s - k_i) / (k_p k_s k_i)
    B = 2 [ (w_p^2 + w_s^2)/k_i + (w_i^2 + w_p^2)/k_s - (w_s^2 + w_i^2)/k_p ]
    C = w_p^2 w_s^2 + w_s^2 w_i^2 + w_i^2 w_p^2

Because D(-z) = conj(D(z)) the integral is real and equals twice the
integral of Re(e^{i dP z}/D) over [0, L/2].

Three independent evaluations are provided: adaptive quadrature of the
complex integrand, weighted (QAWO) quadrature of the real half-range form,
and a closed form via exponential integrals used for dense grids.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import curve_fit
from scipy.special import exp1

from .dispersion import (CrystalSpec, check_energy, grating_vector, idler_wavelength,
                         mismatch_z, wavenumber)
from .errors import NumericalError, PreconditionError
from .phasematch import collinear_spectrum, find_lobes, separation_temperature
from .scan import Axis, SpectralScan

QUAD_RTOL = 1e-9
QUAD_LIMIT = 2000
MIN_LOBE_POINTS = 50
FARFIELD_COMPONENTS = 64
WS_RANGE = (5e-6, 300e-6)


@dataclass(frozen=True)
class WaistTriple:
    """1/e^2 intensity radii (m) at the crystal center. ``w_i`` defaults to ``w_s``."""

    w_p: float
    w_s: float
    w_i: float | None = None

    def __post_init__(self):
        if self.w_i is None:
            object.__setattr__(self, "w_i", self.w_s)
        for name in ("w_p", "w_s", "w_i"):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"waist {name} must be > 0")

    def swapped(self) -> "WaistTriple":
        return WaistTriple(self.w_p, self.w_i, self.w_s)


@dataclass(frozen=True)
class OverlapCoefficients:
    A: float
    B: float
    C: float
    dPhi: float


@dataclass(frozen=True)
class OverlapResult:
    amplitude: complex
    intensity: float
    coefficients: OverlapCoefficients
    error_bound: float = 0.0
    coarse_grid: bool = False
    extra: dict = field(default_factory=dict)


def abc(k_p, k_s, k_i, w_p, w_s, w_i):
    """A, B, C of the quadratic denominator D(z) = C - A z^2 - i B z."""
    A = 4 * (k_p - k_s - k_i) / (k_p * k_s * k_i)
    B = 2 * ((w_p**2 + w_s**2) / k_i + (w_p**2 + w_i**2) / k_s - (w_s**2 + w_i**2) / k_p)
    # grouped so that swapping w_s and w_i is exact in floating point
    C = w_p**2 * (w_s**2 + w_i**2) + w_s**2 * w_i**2
    return A, B, C


def denominator(z, k_p, k_s, k_i, w_p, w_s, w_i):
    """D(z) built directly from the complex beam parameters."""
    q_p = w_p**2 + 2j * z / k_p
    q_s = w_s**2 + 2j * z / k_s
    q_i = w_i**2 + 2j * z / k_i
    return np.conj(q_s) * np.conj(q_i) + q_p * np.conj(q_i) + q_p * np.conj(q_s)


def coefficients(spec: CrystalSpec, pump, signal, idler, waists: WaistTriple,
                 T: float | None = None) -> OverlapCoefficients:
    check_energy(pump, signal, idler)
    T = spec.temperature if T is None else T
    k_p = wavenumber(spec, pump, T)
    k_s = wavenumber(spec, signal, T)
    k_i = wavenumber(spec, idler, T)
    A, B, C = abc(k_p, k_s, k_i, waists.w_p, waists.w_s, waists.w_i)
    dP = mismatch_z(k_p, k_s, k_i, 1.0, 1.0, grating_vector(spec, T))
    return OverlapCoefficients(float(A), float(B), float(C), float(dP))


def prefactor(pump, signal, idler, waists: WaistTriple):
    return waists.w_p * waists.w_s * waists.w_i / np.sqrt(pump * signal * idler)


# -- route 1: complex integrand, full crystal --------------------------------------

def _quad(f, a, b, **kw):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IntegrationWarning)
        val, err = quad(f, a, b, limit=QUAD_LIMIT, **kw)
    if any(issubclass(w.category, IntegrationWarning) for w in caught):
        raise NumericalError("overlap quadrature did not converge",
                             estimate=val, error_bound=err)
    return val, err


def integral_complex(c: OverlapCoefficients, L: float, rtol: float = QUAD_RTOL):
    """int_{-L/2}^{L/2} e^{i dP z} / (C - A z^2 - i B z) dz and its error bound."""
    A, B, C, dP = c.A, c.B, c.C, c.dPhi

    def f(z):
        return np.exp(1j * dP * z) / (C - A * z * z - 1j * B * z)
    re, ere = _quad(lambda z: f(z).real, -L / 2, L / 2, epsrel=rtol, epsabs=0)
    # the imaginary part cancels by symmetry, so its tolerance is set by |re|
    im, eim = _quad(lambda z: f(z).imag, -L / 2, L / 2, epsrel=rtol,
                    epsabs=rtol * max(abs(re), np.finfo(float).tiny))
    return complex(re, im), float(np.hypot(ere, eim))


# -- route 2: real form on [0, L/2] with oscillatory weights -----------------------

def integral_real(c: OverlapCoefficients, L: float, rtol: float = QUAD_RTOL):
    """2 x int_0^{L/2} [(C - A z^2) cos(dP z) - B z sin(dP z)] / |D|^2 dz."""
    A, B, C, dP = c.A, c.B, c.C, c.dPhi

    def mod2(z):
        r = C - A * z * z
        return r * r + (B * z) ** 2

    def even(z):
        return (C - A * z * z) / mod2(z)

    def odd(z):
        return B * z / mod2(z)

    if dP == 0.0:
        v, e = _quad(even, 0.0, L / 2, epsrel=rtol, epsabs=0)
        return 2 * v, 2 * e
    vc, ec = _quad(even, 0.0, L / 2, weight="cos", wvar=dP, epsrel=rtol, epsabs=0)
    vs, es = _quad(odd, 0.0, L / 2, weight="sin", wvar=dP, epsrel=rtol, epsabs=0)
    return 2 * (vc - vs), 2 * (ec + es)


# -- route 3: closed form ----------------------------------------------------------

def _e1_scaled(w):
    """e^w E1(w) for complex w, with the asymptotic series at large |w|."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    big = np.abs(w) > 40
    small = ~big
    out[small] = np.exp(w[small]) * exp1(w[small])
    wb = w[big]
    term = 1 / wb
    s = term.copy()
    for k in range(1, 40):
        term = term * (-k) / wb
        s = s + term
    out[big] = s
    return out


def _seg(kappa, z0, a, b):
    # int_a^b e^{i kappa z} / (z - z0) dz, z0 off the real segment
    kappa, z0 = np.broadcast_arrays(np.asarray(kappa, dtype=float), np.asarray(z0, dtype=complex))
    ua, ub = a - z0, b - z0
    zero = kappa == 0
    k1 = np.where(zero, 1.0, kappa)
    wa, wb = -1j * k1 * ua, -1j * k1 * ub
    osc = -np.exp(1j * k1 * b) * _e1_scaled(wb) + np.exp(1j * k1 * a) * _e1_scaled(wa)
    logs = np.log(np.where(zero, ub, 1.0)) - np.log(np.where(zero, ua, 1.0))
    val = np.where(zero, logs, osc)
    # E1 branch cut crossed between the two endpoints
    cross = (np.sign(ua.real) != np.sign(ub.real)) & (kappa * (-z0.imag) < 0)
    corr = np.exp(np.where(cross, 1j * kappa * z0, 0)) * 2j * np.pi * np.sign(kappa) * np.sign(b - a)
    return val + np.where(cross, corr, 0)


def integral_closed(dP, A, B, C, L):
    """Vectorized closed form of the full-crystal integral."""
    dP, A, B, C = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (dP, A, B, C)))
    a, b = -L / 2, L / 2
    out = np.empty(dP.shape, dtype=complex)
    quadratic = A != 0
    if np.any(quadratic):
        Aq, Bq, Cq, dq = A[quadratic], B[quadratic], C[quadratic], dP[quadratic]
        # roots of A z^2 + i B z - C, computed without cancellation
        disc = np.sqrt(-Bq * Bq + 4 * Aq * Cq + 0j)
        s = np.where(np.real(np.conj(1j * Bq) * disc) >= 0, 1, -1)
        q = -(1j * Bq + s * disc) / 2
        z1 = q / Aq
        z2 = -Cq / q
        out[quadratic] = -(_seg(dq, z1, a, b) - _seg(dq, z2, a, b)) / (Aq * (z1 - z2))
    lin = ~quadratic & (B != 0)
    if np.any(lin):
        out[lin] = _seg(dP[lin], -1j * C[lin] / B[lin], a, b) * 1j / B[lin]
    const = ~quadratic & (B == 0)
    if np.any(const):
        d = dP[const]
        val = np.where(d == 0, L, 2 * np.sin(d * L / 2) / np.where(d == 0, 1.0, d))
        out[const] = val / C[const]
    return out


# -- public amplitude --------------------------------------------------------------

def overlap(spec: CrystalSpec, pump, signal, idler, waists: WaistTriple,
            T: float | None = None, rtol: float = QUAD_RTOL) -> OverlapResult:
    c = coefficients(spec, pump, signal, idler, waists, T)
    val, err = integral_complex(c, spec.length, rtol)
    pre = prefactor(pump, signal, idler, waists)
    amp = complex(pre * val)
    return OverlapResult(amp, abs(amp) ** 2, c, error_bound=float(pre * err))


def overlap_amplitude(spec: CrystalSpec, pump, signal, idler, waists: WaistTriple,
                      T: float | None = None, rtol: float = QUAD_RTOL) -> complex:
    """Complex overlap amplitude (arbitrary units) by adaptive quadrature."""
    return overlap(spec, pump, signal, idler, waists, T, rtol).amplitude


def overlap_amplitude_real(spec: CrystalSpec, pump, signal, idler, waists: WaistTriple,
                           T: float | None = None, rtol: float = QUAD_RTOL) -> float:
    c = coefficients(spec, pump, signal, idler, waists, T)
    val, _ = integral_real(c, spec.length, rtol)
    return float(prefactor(pump, signal, idler, waists) * val)


def amplitude_grid(spec: CrystalSpec, pump, signal, w_p, w_s, w_i=None, T: float | None = None):
    """Closed-form amplitude broadcast over signal wavelengths (m) and waists."""
    T = spec.temperature if T is None else T
    w_i = w_s if w_i is None else w_i
    signal = np.asarray(signal, dtype=float)
    idler = idler_wavelength(pump, signal)
    k_p = wavenumber(spec, pump, T)
    k_s = wavenumber(spec, signal, T)
    k_i = wavenumber(spec, idler, T)
    dP = mismatch_z(k_p, k_s, k_i, 1.0, 1.0, grating_vector(spec, T))
    A, B, C = abc(k_p, k_s, k_i, w_p, w_s, w_i)
    integral = integral_closed(dP, A, B, C, spec.length)
    return w_p * w_s * w_i / np.sqrt(pump * signal * idler) * integral


# -- pair intensity ----------------------------------------------------------------

@dataclass(frozen=True)
class PairIntensity:
    value: float
    coarse_grid: bool
    lobe_points: int


def _lobe_points(y):
    j = int(np.argmax(y))
    half = y[j] / 2
    lo = j
    while lo > 0 and y[lo - 1] >= half:
        lo -= 1
    hi = j
    while hi < y.size - 1 and y[hi + 1] >= half:
        hi += 1
    return hi - lo + 1


def _per_frequency(lam_nm):
    # d(omega) = 2 pi c / lambda^2 d(lambda); constants dropped
    return 1.0 / (np.asarray(lam_nm, dtype=float) * 1e-3) ** 2


def pair_intensity(spec: CrystalSpec, pump, waists: WaistTriple, wavelengths_nm,
                   T: float | None = None) -> PairIntensity:
    """Integral of |phi|^2 over signal frequency, sampled on a wavelength grid (nm).

    The trapezoid rule is applied in wavelength with the Jacobian of the
    frequency measure, so the result is proportional to int |phi|^2 d omega_s.
    """
    lam = np.asarray(wavelengths_nm, dtype=float)
    amp = amplitude_grid(spec, pump, lam * 1e-9, waists.w_p, waists.w_s, waists.w_i, T)
    y = np.abs(amp) ** 2
    n = _lobe_points(y)
    coarse = n < MIN_LOBE_POINTS
    if coarse:
        warnings.warn(f"only {n} grid points across the dominant lobe", RuntimeWarning,
                      stacklevel=2)
    return PairIntensity(float(np.trapezoid(y * _per_frequency(lam), lam)), coarse, n)


def signal_band(spec: CrystalSpec, pump, signal_nm: float = 796.0, points: int = 200,
                T: float | None = None):
    """Grid of ``points`` wavelengths spanning the collinear lobe FWHM at ``signal_nm``.

    This is the pass band of a filter matched to the phase-matching lobe,
    used as the integration window for P_si in all sweeps.
    """
    T = spec.temperature if T is None else T
    probe = np.linspace(signal_nm - 8, signal_nm + 8, 1601)
    scan = collinear_spectrum(spec.at(temperature=T), pump, probe)
    lobe = min(find_lobes(scan), key=lambda lb: abs(lb.center - signal_nm))
    return np.linspace(lobe.left, lobe.right, points)


def operating_point(spec: CrystalSpec, pump, signal_nm: float = 796.0) -> CrystalSpec:
    """Copy of ``spec`` at the temperature that puts the collinear signal at ``signal_nm``."""
    return spec.at(temperature=separation_temperature(spec, pump, signal_nm * 1e-9))


def intensity_map(spec: CrystalSpec, pump, wp_grid, ws_grid, wavelengths_nm):
    """P_si on a (w_p, w_s) grid, w_i = w_s. Returns array (len(wp), len(ws))."""
    lam = np.asarray(wavelengths_nm, dtype=float)
    wp = np.asarray(wp_grid, dtype=float)[:, None, None]
    ws = np.asarray(ws_grid, dtype=float)[None, :, None]
    amp = amplitude_grid(spec, pump, lam[None, None, :] * 1e-9, wp, ws)
    return np.trapezoid(np.abs(amp) ** 2 * _per_frequency(lam), lam, axis=-1)


DEFAULT_WS_GRID = np.geomspace(WS_RANGE[0], WS_RANGE[1], 30)


def sweep_pump_waist(spec: CrystalSpec, pump, wp_grid, w_s: float | None = None,
                     ws_grid=DEFAULT_WS_GRID, wavelengths_nm=None) -> SpectralScan:
    """Normalized P_si versus pump waist.

    With ``w_s`` given the signal/idler waists are held fixed; otherwise
    each pump waist uses the best signal waist on ``ws_grid`` (envelope).
    """
    wp = np.asarray(wp_grid, dtype=float)
    lam = signal_band(spec, pump) if wavelengths_nm is None else np.asarray(wavelengths_nm)
    meta = {"crystal": spec.to_dict(), "pump_wavelength_m": pump,
            "band_nm": [float(lam[0]), float(lam[-1])]}
    if w_s is not None:
        P = intensity_map(spec, pump, wp, [w_s], lam)[:, 0]
        meta.update(kind="pump_waist_fixed_ws", w_s_um=w_s * 1e6)
    else:
        M = intensity_map(spec, pump, wp, ws_grid, lam)
        P = M.max(axis=1)
        meta.update(kind="pump_waist_envelope",
                    optimal_ws_um=(np.asarray(ws_grid)[M.argmax(axis=1)] * 1e6).tolist())
    return SpectralScan.from_raw(Axis("pump waist", "um", wp * 1e6), P, metadata=meta)


def sweep_signal_waist(spec: CrystalSpec, pump, w_p: float, ws_grid,
                       wavelengths_nm=None) -> SpectralScan:
    """Normalized P_si versus signal (= idler) waist at fixed pump waist."""
    ws = np.asarray(ws_grid, dtype=float)
    lam = signal_band(spec, pump) if wavelengths_nm is None else np.asarray(wavelengths_nm)
    P = intensity_map(spec, pump, [w_p], ws, lam)[0]
    meta = {"crystal": spec.to_dict(), "pump_wavelength_m": pump, "kind": "signal_waist",
            "w_p_um": w_p * 1e6, "band_nm": [float(lam[0]), float(lam[-1])]}
    return SpectralScan.from_raw(Axis("signal waist", "um", ws * 1e6), P, metadata=meta)


def waist_distribution(scan: SpectralScan):
    """(w_s in m, weight) pairs from a signal-waist scan, weights P_si dw summing to 1."""
    w = scan.x * 1e-6
    dw = np.gradient(w) if w.size > 1 else np.ones(1)
    weight = scan.values * dw
    return w, weight / weight.sum()


# -- far field ---------------------------------------------------------------------

def gaussian_profile(x, a, w):
    return a * np.exp(-2 * x * x / (w * w))


def lorentzian_profile(x, a, g):
    return a / (1 + (x / g) ** 2)


@dataclass(frozen=True)
class FarField:
    profile: SpectralScan
    fits: dict


def superpose(x, waists, weights, wavelength, distance):
    """Incoherent sum of unit-power Gaussian beams after free propagation."""
    x = np.asarray(x, dtype=float)[:, None]
    w0 = np.asarray(waists, dtype=float)[None, :]
    zr = np.pi * w0**2 / wavelength
    wz = w0 * np.sqrt(1 + (distance / zr) ** 2)
    comp = 2 / (np.pi * wz**2) * np.exp(-2 * x * x / (wz * wz))
    return comp @ np.asarray(weights, dtype=float)


def _fit(model, x, y, p0):
    p, _ = curve_fit(model, x, y, p0=p0, maxfev=20000)
    ssr = float(np.sum((model(x, *p) - y) ** 2))
    return [float(v) for v in p], ssr


DEFAULT_X_MM = np.linspace(-10.0, 10.0, 801)


def far_field_profile(spec: CrystalSpec, pump, w_p: float, distance: float,
                      x_mm=DEFAULT_X_MM, signal_nm: float = 796.0,
                      wavelengths_nm=None) -> FarField:
    """Transverse signal profile at ``distance`` (m) past the crystal.

    The signal-waist distribution at fixed pump waist is sampled on 64
    log-spaced waists; each component propagates as a Gaussian and the
    components add incoherently with weights P_si dw.
    """
    if not distance > 0:
        raise PreconditionError("propagation distance must be > 0")
    ws = np.geomspace(WS_RANGE[0], WS_RANGE[1], FARFIELD_COMPONENTS)
    dist = sweep_signal_waist(spec, pump, w_p, ws, wavelengths_nm)
    w, weight = waist_distribution(dist)
    x = np.asarray(x_mm, dtype=float)
    prof = superpose(x * 1e-3, w, weight, signal_nm * 1e-9, distance)
    scan = SpectralScan.from_raw(
        Axis("transverse position", "mm", x), prof,
        metadata={"crystal": spec.to_dict(), "pump_wavelength_m": pump, "kind": "far_field",
                  "w_p_um": w_p * 1e6, "distance_m": distance})
    y = scan.values
    core = find_lobes(scan)[0]
    hw = core.fwhm / 2
    pg, sg = _fit(gaussian_profile, x, y, [1.0, hw * 1.7])
    pl, sl = _fit(lorentzian_profile, x, y, [1.0, hw])
    fits = {"gaussian": {"amplitude": pg[0], "w_mm": abs(pg[1]), "ssr": sg},
            "lorentzian": {"amplitude": pl[0], "gamma_mm": abs(pl[1]), "ssr": sl},
            "fwhm_mm": core.fwhm}
    return FarField(scan, fits)
