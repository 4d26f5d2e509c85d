"""Run configuration: TOML or JSON documents layered over bundled defaults."""

from __future__ import annotations

import copy
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dispersion import CrystalSpec, load_sellmeier
from .errors import DomainError, SpdcError


class ConfigError(SpdcError, ValueError):
    """Invalid or unreadable run configuration."""


def _defaults() -> dict:
    text = (resources.files("spdckit") / "data" / "default.toml").read_text(encoding="utf-8")
    return tomllib.loads(text)


def merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def read_document(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc


def parse_override(item: str) -> tuple[list[str], Any]:
    """``section.key=value`` with value parsed as a TOML scalar or array."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form section.key=value")
    key, _, raw = item.partition("=")
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.strip().split("."), value


@dataclass(frozen=True)
class SweepAxis:
    lo: float
    hi: float
    points: int
    scale: str = "linear"

    def grid(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.lo, self.hi, self.points)
        return np.linspace(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class RunConfig:
    doc: dict

    @classmethod
    def load(cls, path: str | Path | None = None, overrides=()) -> "RunConfig":
        doc = _defaults()
        if path is not None:
            doc = merge(doc, read_document(path))
        for item in overrides:
            keys, value = parse_override(item)
            node = doc
            for k in keys[:-1]:
                node = node.setdefault(k, {})
                if not isinstance(node, dict):
                    raise ConfigError(f"override {item!r} descends into a scalar")
            node[keys[-1]] = value
        cfg = cls(doc)
        cfg.validate()
        return cfg

    def section(self, name: str) -> dict:
        return self.doc.get(name, {})

    def sweep(self, name: str) -> SweepAxis:
        s = self.doc.get("sweep", {}).get(name)
        if s is None:
            raise ConfigError(f"no sweep axis {name!r}")
        return SweepAxis(float(s["lo"]), float(s["hi"]), int(s["points"]), s.get("scale", "linear"))

    def validate(self):
        for name, s in self.doc.get("sweep", {}).items():
            try:
                ax = self.sweep(name)
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"sweep.{name} is malformed: {exc}") from exc
            if ax.points < 2:
                raise ConfigError(f"sweep.{name}.points must be >= 2")
            if not ax.hi > ax.lo:
                raise ConfigError(f"sweep.{name} needs hi > lo")
            if ax.scale not in ("linear", "log") or (ax.scale == "log" and ax.lo <= 0):
                raise ConfigError(f"sweep.{name}.scale must be linear or log (log needs lo > 0)")
        fmt = self.doc.get("output", {}).get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError("output.format must be csv or json")
        try:
            load_sellmeier(self.section("crystal").get("sellmeier", "ktp_z_ppktp405"))
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def pump_wavelength(self) -> float:
        return float(self.section("pump")["wavelength_nm"]) * 1e-9

    def crystal(self) -> CrystalSpec:
        """CrystalSpec with ``temperature_C = "separation"`` resolved."""
        from .phasematch import separation_temperature

        c = self.section("crystal")
        try:
            spec = CrystalSpec(
                length=float(c["length_mm"]) * 1e-3,
                poling_period=float(c["poling_period_um"]) * 1e-6,
                sellmeier=load_sellmeier(c.get("sellmeier", "ktp_z_ppktp405")),
                thermal_expansion=tuple(float(v) for v in c["thermal_expansion"]),
                d_eff=float(c.get("d_eff_pm_per_V", 12.0)),
                reference_temperature=float(c.get("reference_temperature_C", 25.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"crystal section is malformed: {exc}") from exc
        T = c.get("temperature_C", "separation")
        if T == "separation":
            T = separation_temperature(spec, self.pump_wavelength, float(c["signal_nm"]) * 1e-9)
        elif not isinstance(T, (int, float)):
            raise ConfigError("crystal.temperature_C must be a number or \"separation\"")
        return spec.at(temperature=float(T))
