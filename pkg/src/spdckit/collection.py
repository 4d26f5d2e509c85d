"""Collection optics, fiber coupling and count-rate arithmetic.

Beams are fundamental Gaussians (optionally with M^2 > 1 through the
embedded-Gaussian rule) propagated with the complex beam parameter q.
Count rates are in counts per second, pump powers in mW, bandwidths in nm.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import PreconditionError

MIN_WAIST = 0.1e-6


def focused_waist(w_in: float, f: float, wavelength: float, m2: float = 1.0) -> float:
    """Waist behind a lens of focal length f for a collimated input of radius w_in."""
    if not (w_in > 0 and f > 0):
        raise PreconditionError("w_in and f must be > 0")
    return m2 * wavelength * f / (math.pi * w_in)


@dataclass(frozen=True)
class GaussianBeam:
    """Gaussian beam; ``waist_position`` is measured from the current reference plane.

    A positive position puts the waist downstream of the plane.
    """

    wavelength: float
    waist_radius: float
    waist_position: float = 0.0
    m2: float = 1.0

    def __post_init__(self):
        if not self.waist_radius > 0:
            raise PreconditionError("waist radius must be > 0")
        if not self.wavelength > 0:
            raise PreconditionError("wavelength must be > 0")
        if not self.m2 >= 1:
            raise PreconditionError("M^2 must be >= 1")

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.waist_radius**2 / (self.m2 * self.wavelength)

    @property
    def q(self) -> complex:
        """Beam parameter at the reference plane."""
        return complex(-self.waist_position, self.rayleigh_range)

    def radius_at(self, z: float) -> float:
        return self.waist_radius * math.sqrt(1 + ((z - self.waist_position) / self.rayleigh_range) ** 2)

    @classmethod
    def from_q(cls, q: complex, wavelength: float, m2: float = 1.0) -> "GaussianBeam":
        zr = q.imag
        if not zr > 0:
            raise PreconditionError("beam parameter has no positive Rayleigh range")
        w0 = math.sqrt(zr * m2 * wavelength / math.pi)
        return cls(wavelength, w0, -q.real, m2)


@dataclass(frozen=True)
class OpticalTrain:
    """Ordered elements, each ("free_space", length) or ("thin_lens", focal_length)."""

    elements: tuple = ()

    def __post_init__(self):
        els = tuple((str(kind), float(v)) for kind, v in self.elements)
        object.__setattr__(self, "elements", els)
        for kind, v in els:
            if kind == "free_space":
                if v < 0:
                    raise PreconditionError("free-space length must be >= 0")
            elif kind == "thin_lens":
                if v == 0:
                    raise PreconditionError("focal length must be nonzero")
            else:
                raise PreconditionError(f"unknown element {kind!r}")

    def __add__(self, other: "OpticalTrain") -> "OpticalTrain":
        return OpticalTrain(self.elements + other.elements)

    @classmethod
    def of(cls, *elements) -> "OpticalTrain":
        return cls(tuple(elements))

    @property
    def length(self) -> float:
        return sum(v for kind, v in self.elements if kind == "free_space")


def space(d: float):
    return ("free_space", d)


def lens(f: float):
    return ("thin_lens", f)


def propagate(beam: GaussianBeam, train: OpticalTrain) -> GaussianBeam:
    """Send ``beam`` through ``train``; the result is referenced to the exit plane."""
    q = beam.q
    for kind, v in train.elements:
        if kind == "free_space":
            q = q + v
        else:
            q = 1 / (1 / q - 1 / v)
    out = GaussianBeam.from_q(q, beam.wavelength, beam.m2)
    if out.waist_radius < MIN_WAIST:
        warnings.warn(f"waist {out.waist_radius:.3g} m is below {MIN_WAIST} m; "
                      "paraxial optics is unreliable here", RuntimeWarning, stacklevel=2)
    return out


def collimated_fiber_mode(mode_radius: float, f_collimator: float, wavelength: float) -> GaussianBeam:
    """Fiber mode sent through a collimator one focal length away (exit plane at the lens)."""
    fiber = GaussianBeam(wavelength, mode_radius)
    return propagate(fiber, OpticalTrain.of(space(f_collimator), lens(f_collimator)))


def collection_train(f_collimator: float, f_prime: float, spacing: float | None = None) -> OpticalTrain:
    """Fiber -> collimator -> lens f' -> crystal center, focal-spaced by default."""
    spacing = f_collimator + f_prime if spacing is None else spacing
    return OpticalTrain.of(space(f_collimator), lens(f_collimator), space(spacing),
                           lens(f_prime), space(f_prime))


def collection_mode_waist(mode_radius: float, f_collimator: float, f_prime: float,
                          wavelength: float, spacing: float | None = None) -> float:
    """Waist of the back-propagated fiber mode near the crystal center."""
    beam = GaussianBeam(wavelength, mode_radius)
    return propagate(beam, collection_train(f_collimator, f_prime, spacing)).waist_radius


def mode_overlap(w_s, w_c):
    """Power overlap of two co-focused, co-aligned fundamental Gaussians."""
    w_s = np.asarray(w_s, dtype=float)
    return (2 * w_s * w_c / (w_s**2 + w_c**2)) ** 2


def coupling_efficiency(waists: Sequence[float], weights: Sequence[float], w_c: float) -> float:
    """Weight-averaged single-mode coupling of a signal-waist distribution."""
    waists = np.asarray(waists, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if waists.size == 0:
        raise PreconditionError("empty waist distribution")
    if waists.shape != weights.shape:
        raise PreconditionError("waists and weights differ in length")
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-9:
        raise PreconditionError("weights must be non-negative and sum to 1")
    if np.any(waists <= 0) or not w_c > 0:
        raise PreconditionError("waists must be > 0")
    return float(np.dot(weights, mode_overlap(waists, w_c)))


# -- count records -----------------------------------------------------------------

@dataclass(frozen=True)
class CountRecord:
    """Measured singles/coincidences with the channel losses they went through."""

    C_s: float
    C_i: float
    C_c: float
    P_p_mW: float = 1.0
    dlambda_nm: float = 1.0
    T_s: float = 1.0
    T_i: float = 1.0
    D_s: float = 1.0
    D_i: float = 1.0
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("C_s", "C_i", "C_c", "P_p_mW", "dlambda_nm"):
            if getattr(self, name) < 0:
                raise PreconditionError(f"{name} must be non-negative")
        for name in ("T_s", "T_i", "D_s", "D_i"):
            if not 0 <= getattr(self, name) <= 1:
                raise PreconditionError(f"{name} must lie in [0, 1]")
        if self.C_c > min(self.C_s, self.C_i):
            raise PreconditionError("coincidences exceed singles")

    def at(self, **changes) -> "CountRecord":
        return replace(self, **changes)


def heralding_efficiency(rec: CountRecord) -> float:
    """C_c / sqrt(C_s C_i)."""
    if rec.C_s == 0 or rec.C_i == 0:
        raise ZeroDivisionError("heralding efficiency needs nonzero singles")
    return rec.C_c / math.sqrt(rec.C_s * rec.C_i)


def heralding_ratio(rec: CountRecord) -> float:
    """C_c / C_s, the single-arm heralding definition."""
    if rec.C_s == 0:
        raise ZeroDivisionError("heralding ratio needs nonzero signal singles")
    return rec.C_c / rec.C_s


@dataclass(frozen=True)
class CouplingEstimate:
    eta_s: float
    eta_i: float
    inconsistent: bool


def decompose_heralding(rec: CountRecord, assume_equal_coupling: bool = True,
                        eta_s: float | None = None, eta_h: float | None = None) -> CouplingEstimate:
    """Coupling efficiencies from eta_h = sqrt(T_s T_i eta_s eta_i D_s D_i).

    With equal coupling both arms get eta_h / sqrt(T_s T_i D_s D_i). Otherwise
    ``eta_s`` must be supplied and eta_i follows. Values above 1 are returned
    with ``inconsistent`` set rather than clipped.
    """
    losses = rec.T_s * rec.T_i * rec.D_s * rec.D_i
    if losses == 0:
        raise PreconditionError("transmissions and detector efficiencies must be > 0")
    eta_h = heralding_efficiency(rec) if eta_h is None else eta_h
    if assume_equal_coupling:
        e_s = e_i = eta_h / math.sqrt(losses)
    else:
        if eta_s is None or not eta_s > 0:
            raise PreconditionError("give eta_s when coupling is not assumed equal")
        e_s = eta_s
        e_i = eta_h**2 / (losses * eta_s)
    return CouplingEstimate(e_s, e_i, e_s > 1 or e_i > 1)


def spectral_brightness(rec: CountRecord) -> float:
    """Coincidence rate per pump power per bandwidth in MHz/mW/nm."""
    if not (rec.P_p_mW > 0 and rec.dlambda_nm > 0):
        raise PreconditionError("pump power and bandwidth must be > 0")
    return rec.C_c * 1e-6 / (rec.P_p_mW * rec.dlambda_nm)


# -- report ------------------------------------------------------------------------

REPORT_COLUMNS = ("label", "L_mm", "wavelengths_nm", "dlambda_nm", "B_MHz_per_mW_nm",
                  "eta_h_i", "eta_h_ii", "fiber", "fidelity_pct")

CSV_FIELDS = ("label", "C_s", "C_i", "C_c", "P_p_mW", "dlambda_nm", "T_s", "T_i", "D_s", "D_i")
OPTIONAL_FIELDS = ("L_mm", "wavelengths_nm", "fiber", "fidelity_pct")


def source_report(records: Iterable[CountRecord]) -> list[dict]:
    """Comparison rows sorted by spectral brightness, brightest first."""
    rows = []
    for rec in records:
        rows.append({
            "label": rec.label,
            "L_mm": rec.meta.get("L_mm", ""),
            "wavelengths_nm": rec.meta.get("wavelengths_nm", ""),
            "dlambda_nm": rec.dlambda_nm,
            "B_MHz_per_mW_nm": spectral_brightness(rec),
            "eta_h_i": heralding_ratio(rec),
            "eta_h_ii": heralding_efficiency(rec),
            "fiber": rec.meta.get("fiber", "SMF") or "SMF",
            "fidelity_pct": rec.meta.get("fidelity_pct", ""),
        })
    rows.sort(key=lambda r: -r["B_MHz_per_mW_nm"])
    return rows


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([_cell(r[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def report_text(rows: list[dict], digits: int = 3) -> str:
    """Aligned plain-text table."""
    def fmt(v):
        return f"{v:.{digits}g}" if isinstance(v, float) else str(v)
    table = [list(REPORT_COLUMNS)] + [[fmt(r[c]) for c in REPORT_COLUMNS] for r in rows]
    widths = [max(len(row[j]) for row in table) for j in range(len(REPORT_COLUMNS))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]
    return "\n".join(lines) + "\n"


def read_records(text: str) -> list[CountRecord]:
    """CountRecords from CSV text with the CSV_FIELDS columns (extras go to meta)."""
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in CSV_FIELDS if c not in (reader.fieldnames or [])]
    if missing:
        raise PreconditionError(f"record CSV lacks columns {missing}")
    out = []
    for row in reader:
        meta = {k: row[k] for k in row if k not in CSV_FIELDS and row[k] not in (None, "")}
        for k in ("L_mm", "fidelity_pct"):
            if k in meta:
                meta[k] = float(meta[k])
        out.append(CountRecord(
            *(float(row[c]) for c in CSV_FIELDS[1:]), label=row["label"], meta=meta))
    return out
