"""Normalized 1-D/2-D scans and their CSV/JSON encodings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import NumericalError, PreconditionError


@dataclass(frozen=True)
class Axis:
    label: str
    unit: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 1:
            raise PreconditionError(f"axis {self.label!r} must be a non-empty 1-D grid")
        if v.size > 1 and np.any(np.diff(v) <= 0):
            raise PreconditionError(f"axis {self.label!r} must be strictly increasing")

    @property
    def header(self) -> str:
        return f"{self.label} [{self.unit}]"


@dataclass(frozen=True)
class SpectralScan:
    """Sampled relative intensity, normalized so that ``values.max() == 1``.

    ``values`` has shape ``(len(axis1),)`` or ``(len(axis1), len(axis2))``.
    The pre-normalization maximum is kept in ``metadata["raw_max"]`` so that
    callers can put several scans on a common scale.
    """

    axis1: Axis
    values: np.ndarray
    axis2: Axis | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        shape = (self.axis1.values.size,) if self.axis2 is None else (
            self.axis1.values.size, self.axis2.values.size)
        if v.shape != shape:
            raise PreconditionError(f"values shape {v.shape} does not match axes {shape}")
        if np.any(~np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
            raise PreconditionError("scan values must lie in [0, 1]")
        if v.max() != 1.0:
            raise PreconditionError("scan is not normalized to a maximum of 1")

    @classmethod
    def from_raw(cls, axis1: Axis, raw, axis2: Axis | None = None,
                 metadata: dict | None = None) -> "SpectralScan":
        raw = np.asarray(raw, dtype=float)
        peak = float(raw.max()) if raw.size else 0.0
        if not peak > 0 or not np.isfinite(peak):
            raise NumericalError("scan is identically zero; nothing to normalize")
        values = np.clip(raw / peak, 0.0, 1.0)
        values.flat[int(np.argmax(raw))] = 1.0
        meta = dict(metadata or {})
        meta["raw_max"] = peak
        return cls(axis1, values, axis2, meta)

    @property
    def x(self) -> np.ndarray:
        return self.axis1.values

    def argmax(self):
        idx = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        if self.axis2 is None:
            return float(self.axis1.values[idx[0]])
        return float(self.axis1.values[idx[0]]), float(self.axis2.values[idx[1]])

    # -- encodings -----------------------------------------------------------------

    def to_csv(self) -> str:
        lines = []
        if self.axis2 is None:
            lines.append(f"{self.axis1.header},value")
            for a, v in zip(self.axis1.values, self.values):
                lines.append(f"{_fmt(a)},{_fmt(v)}")
        else:
            lines.append(f"{self.axis1.header},{self.axis2.header},value")
            for i, a in enumerate(self.axis1.values):
                for j, b in enumerate(self.axis2.values):
                    lines.append(f"{_fmt(a)},{_fmt(b)},{_fmt(self.values[i, j])}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        axes = [self.axis1] + ([self.axis2] if self.axis2 is not None else [])
        return {
            "axes": [{"label": ax.label, "unit": ax.unit, "values": ax.values.tolist()}
                     for ax in axes],
            "values": self.values.tolist(),
            "metadata": _jsonable(self.metadata),
        }

    def to_json(self) -> str:
        return dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, text: str) -> "SpectralScan":
        doc = json.loads(text)
        axes = [Axis(a["label"], a["unit"], np.array(a["values"])) for a in doc["axes"]]
        return cls(axes[0], np.array(doc["values"]), axes[1] if len(axes) > 1 else None,
                   doc.get("metadata", {}))

    @classmethod
    def from_csv(cls, text: str) -> "SpectralScan":
        rows = [r for r in text.strip().splitlines()]
        header = rows[0].split(",")
        data = np.array([[float(c) for c in r.split(",")] for r in rows[1:]])
        axes = [_parse_header(h) for h in header[:-1]]
        if len(axes) == 1:
            return cls(Axis(*axes[0], data[:, 0]), data[:, 1])
        a1 = np.unique(data[:, 0])
        a2 = np.unique(data[:, 1])
        return cls(Axis(*axes[0], a1), data[:, 2].reshape(a1.size, a2.size),
                   Axis(*axes[1], a2))


def _parse_header(h: str) -> tuple[str, str]:
    label, _, unit = h.partition(" [")
    return label, unit.rstrip("]")


def _fmt(x) -> str:
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(doc: Any) -> str:
    """Deterministic UTF-8 JSON used for every file the toolkit writes."""
    return json.dumps(_jsonable(doc), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def grid_axis(label: str, unit: str, values: Sequence[float]) -> Axis:
    return Axis(label, unit, np.asarray(values, dtype=float))
