"""Refractive index, wavevectors and quasi-phase-matching mismatch.

All wavelengths crossing this module's API are vacuum wavelengths in meters.
Temperatures are in degrees Celsius. Sellmeier coefficients are stored the
way they are published, i.e. with the wavelength in micrometers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import DomainError, PreconditionError

DEFAULT_SET = "ktp_z_ppktp405"
LITERATURE_SET = "ktp_z_fradkin_emanueli"

_T_RANGE = (0.0, 200.0)
_ENERGY_RTOL = 1e-9


@dataclass(frozen=True)
class SellmeierSet:
    """A named dispersion model for one crystal axis.

    Two room-temperature forms are understood (``coefficients["form"]``):

    ``two_pole``
        n0^2 = A + B/(1 - C/x^2) + D/(1 - E/x^2) - F x^2
    ``sellmeier``
        n0^2 = A + sum_j B_j x^2/(x^2 - C_j) - D x^2

    with x the wavelength in micrometers. The thermal part adds
    n1(x) dT + n2(x) dT^2 where dT = T + offset_C - T_ref and
    n1, n2 are cubic polynomials in 1/x.
    """

    name: str
    axis: str
    coefficients: Mapping[str, Any]
    thermal: Mapping[str, Any]
    valid_band_um: tuple[float, float]
    description: str = ""

    def __post_init__(self):
        lo, hi = self.valid_band_um
        if not 0 < lo < hi:
            raise ValueError(f"bad valid_band_um {self.valid_band_um}")
        form = self.coefficients.get("form")
        if form not in ("two_pole", "sellmeier"):
            raise ValueError(f"unknown Sellmeier form {form!r}")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SellmeierSet":
        thermal = dict(doc.get("thermal") or {})
        thermal.setdefault("T_ref", 25.0)
        thermal.setdefault("n1", [0.0, 0.0, 0.0, 0.0])
        thermal.setdefault("n2", [0.0, 0.0, 0.0, 0.0])
        thermal.setdefault("offset_C", 0.0)
        band = doc["valid_band_um"]
        return cls(
            name=doc["name"],
            axis=doc.get("axis", "z"),
            coefficients=dict(doc["coefficients"]),
            thermal=thermal,
            valid_band_um=(float(band[0]), float(band[1])),
            description=doc.get("description", ""),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "axis": self.axis,
            "description": self.description,
            "coefficients": dict(self.coefficients),
            "thermal": dict(self.thermal),
            "valid_band_um": list(self.valid_band_um),
        }

    def without_thermal(self) -> "SellmeierSet":
        thermal = dict(self.thermal, n1=[0.0] * 4, n2=[0.0] * 4, offset_C=0.0)
        return replace(self, name=self.name + "_no_thermal", thermal=thermal)

    def n_room(self, x_um):
        c = self.coefficients
        x2 = np.asarray(x_um, dtype=float) ** 2
        if c["form"] == "two_pole":
            n2 = (c["A"] + c["B"] / (1 - c["C"] / x2) + c["D"] / (1 - c["E"] / x2)
                  - c["F"] * x2)
        else:
            n2 = c["A"] - c.get("D", 0.0) * x2
            for b, cc in zip(c["B"], c["C"]):
                n2 = n2 + b * x2 / (x2 - cc)
        return np.sqrt(n2)

    def thermal_terms(self, x_um):
        """Return (n1, n2) at wavelength ``x_um``."""
        inv = 1.0 / np.asarray(x_um, dtype=float)
        a = self.thermal["n1"]
        b = self.thermal["n2"]
        n1 = a[0] + inv * (a[1] + inv * (a[2] + inv * a[3]))
        n2 = b[0] + inv * (b[1] + inv * (b[2] + inv * b[3]))
        return n1, n2

    def index(self, x_um, T):
        dT = T + self.thermal["offset_C"] - self.thermal["T_ref"]
        n1, n2 = self.thermal_terms(x_um)
        return self.n_room(x_um) + n1 * dT + n2 * dT * dT

    def dn_dT(self, x_um, T):
        dT = T + self.thermal["offset_C"] - self.thermal["T_ref"]
        n1, n2 = self.thermal_terms(x_um)
        return n1 + 2 * n2 * dT


def load_sellmeier(source: str | Path | Mapping[str, Any] = DEFAULT_SET) -> SellmeierSet:
    """Load a coefficient set by bundled name, JSON file path, or dict."""
    if isinstance(source, Mapping):
        return SellmeierSet.from_dict(source)
    path = Path(source)
    if path.suffix == ".json" and path.exists():
        return SellmeierSet.from_dict(json.loads(path.read_text(encoding="utf-8")))
    bundled = resources.files("spdckit") / "data" / f"{source}.json"
    if not bundled.is_file():
        raise DomainError(f"unknown Sellmeier set {source!r}")
    return SellmeierSet.from_dict(json.loads(bundled.read_text(encoding="utf-8")))


@dataclass(frozen=True)
class CrystalSpec:
    """Geometry, grating and dispersion of a periodically poled crystal.

    Lengths in meters, temperatures in Celsius. ``d_eff`` (pm/V) is carried
    for bookkeeping only; all intensities in the toolkit are relative.
    """

    length: float = 30e-3
    poling_period: float = 3.425e-6
    temperature: float = 29.3
    sellmeier: SellmeierSet = field(default_factory=load_sellmeier)
    thermal_expansion: tuple[float, float] = (6.7e-6, 11e-9)
    d_eff: float = 12.0
    reference_temperature: float = 25.0

    def __post_init__(self):
        if not self.length > 0:
            raise PreconditionError(f"crystal length must be > 0, got {self.length}")
        if not self.poling_period > 0:
            raise PreconditionError(f"poling period must be > 0, got {self.poling_period}")

    def at(self, **changes) -> "CrystalSpec":
        """Copy with some fields replaced, e.g. ``spec.at(temperature=30)``."""
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "length_m": self.length,
            "poling_period_m": self.poling_period,
            "temperature_C": self.temperature,
            "sellmeier": self.sellmeier.name,
            "thermal_expansion": list(self.thermal_expansion),
            "d_eff_pm_per_V": self.d_eff,
            "reference_temperature_C": self.reference_temperature,
        }


@dataclass(frozen=True)
class Wavevector:
    magnitude: float
    wavelength: float
    refractive_index: float

    @classmethod
    def of(cls, spec: CrystalSpec, wavelength: float, T: float | None = None) -> "Wavevector":
        n = float(refractive_index(spec, wavelength, T))
        return cls(2 * np.pi * n / wavelength, wavelength, n)


def _check_band(sset: SellmeierSet, wavelength):
    lo, hi = sset.valid_band_um
    x = np.asarray(wavelength, dtype=float) * 1e6
    if not np.all(np.isfinite(x)) or np.any(x < lo) or np.any(x > hi):
        raise DomainError(
            f"wavelength outside the valid band {lo}-{hi} um of Sellmeier set {sset.name!r}"
        )
    return x


def _check_temperature(T):
    if not np.all((np.asarray(T) >= _T_RANGE[0]) & (np.asarray(T) <= _T_RANGE[1])):
        raise DomainError(f"temperature outside [{_T_RANGE[0]}, {_T_RANGE[1]}] C")


def refractive_index(spec: CrystalSpec, wavelength, T: float | None = None):
    """Extraordinary index n_z at vacuum ``wavelength`` (m) and ``T`` (C)."""
    T = spec.temperature if T is None else T
    _check_temperature(T)
    x = _check_band(spec.sellmeier, wavelength)
    return spec.sellmeier.index(x, T)


def wavenumber(spec: CrystalSpec, wavelength, T: float | None = None):
    """In-crystal wavenumber 2 pi n / lambda in rad/m."""
    return 2 * np.pi * refractive_index(spec, wavelength, T) / np.asarray(wavelength, dtype=float)


def poling_period(spec: CrystalSpec, T: float | None = None) -> float:
    T = spec.temperature if T is None else T
    a, b = spec.thermal_expansion
    dT = T - spec.reference_temperature
    return spec.poling_period * (1 + a * dT + b * dT * dT)


def idler_wavelength(pump: float, signal):
    """Idler vacuum wavelength from energy conservation with a CW pump."""
    return 1.0 / (1.0 / pump - 1.0 / np.asarray(signal, dtype=float))


def check_energy(pump, signal, idler, rtol: float = _ENERGY_RTOL):
    resid = 1.0 / np.asarray(pump) - 1.0 / np.asarray(signal) - 1.0 / np.asarray(idler)
    if np.any(np.abs(resid) > rtol / np.asarray(pump)):
        raise PreconditionError(
            "energy conservation violated: 1/lambda_p != 1/lambda_s + 1/lambda_i "
            f"(max relative residual {np.max(np.abs(resid) * np.asarray(pump)):.3g})"
        )


def mismatch_z(k_p, k_s, k_i, cos_s, cos_i, grating):
    """Longitudinal mismatch k_p - k_s cos(th_s) - k_i cos(th_i) - 2 pi/Lambda.

    Shared by the collinear and angular calculations so that the collinear
    case is reproduced bit for bit at zero angle.
    """
    return k_p - k_s * cos_s - k_i * cos_i - grating


def grating_vector(spec: CrystalSpec, T: float | None = None) -> float:
    return 2 * np.pi / poling_period(spec, T)


def phase_mismatch(spec: CrystalSpec, pump: float, signal, idler, T: float | None = None):
    """Collinear QPM mismatch Delta k in rad/m (vectorized over signal/idler)."""
    check_energy(pump, signal, idler)
    T = spec.temperature if T is None else T
    k_p = wavenumber(spec, pump, T)
    k_s = wavenumber(spec, signal, T)
    k_i = wavenumber(spec, idler, T)
    return mismatch_z(k_p, k_s, k_i, 1.0, 1.0, grating_vector(spec, T))
