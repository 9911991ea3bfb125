"""Scenario files: flat `key = value` text with unit suffixes.

Example::

    # source description
    pump_fwhm  = 2.5 nm
    pm_fwhm    = 0.5 nm
    tilt       = 54.7 deg
    length     = 2.1 mm
    gamma      = 0.193

Numbers carry an optional unit token; lists are comma separated; bare
words configure modes.  Every accessor validates the unit dimension at
parse time and names the offending key in its diagnostic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

__all__ = ["Scenario", "parse_config", "ConfigError"]

_UNIT_SCALES: dict[str, dict[str, float]] = {
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "time": {
        "s": 1.0,
        "ms": 1e-3,
        "us": 1e-6,
        "ns": 1e-9,
        "ps": 1e-12,
        "fs": 1e-15,
    },
    "angle": {"deg": 1.0, "rad": 180.0 / math.pi},
    "angular_frequency": {"rad/s": 1.0},
    "inverse_velocity": {"s/m": 1.0},
    "dimensionless": {"": 1.0},
}

_NUMBER = re.compile(
    r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$"
)


@dataclass(frozen=True)
class _RawValue:
    text: str
    line: int


def parse_config(text: str) -> dict[str, _RawValue]:
    values: dict[str, _RawValue] = {}
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {line_number}: expected 'key = value', got {line!r}"
            )
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(
                f"line {line_number}: expected 'key = value', got {line!r}"
            )
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (line {line_number})")
        values[key] = _RawValue(text=value, line=line_number)
    return values


def _split_number_unit(text: str) -> tuple[float | None, str]:
    parts = text.split()
    if len(parts) not in (1, 2):
        return None, text
    token = parts[0]
    unit = parts[1] if len(parts) == 2 else ""
    if _NUMBER.match(token):
        return float(token), unit
    return None, text


@dataclass
class Scenario:
    """A parsed command invocation: name, parameters, paths, options."""

    command: str
    values: dict[str, _RawValue]
    out_path: Path | None = None
    data_path: Path | None = None
    grid_points: int = 12
    verbose: bool = False
    consumed: set = field(default_factory=set)

    @classmethod
    def from_file(cls, command: str, config_path: Path, **options) -> "Scenario":
        try:
            text = config_path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}")
        return cls(command=command, values=parse_config(text), **options)

    # -- scalar accessors -------------------------------------------------

    def _raw(self, key: str, default, required: bool):
        if key not in self.values:
            if required:
                raise ConfigError(f"missing required key {key!r}")
            return None
        self.consumed.add(key)
        return self.values[key]

    def quantity(
        self,
        key: str,
        kind: str,
        default: float | None = None,
        required: bool = False,
    ) -> float | None:
        """Number with a unit of the given dimension, scaled to base units."""
        raw = self._raw(key, default, required)
        if raw is None:
            return default
        number, unit = _split_number_unit(raw.text)
        if number is None:
            raise ConfigError(f"key {key!r}: not a number: {raw.text!r}")
        scales = _UNIT_SCALES[kind]
        if unit not in scales:
            allowed = ", ".join(u for u in scales if u) or "no unit"
            raise ConfigError(
                f"key {key!r}: unit {unit!r} does not measure {kind} "
                f"(allowed: {allowed})"
            )
        return number * scales[unit]

    def number(
        self, key: str, default: float | None = None, required: bool = False
    ) -> float | None:
        return self.quantity(key, "dimensionless", default, required)

    def integer(
        self, key: str, default: int | None = None, required: bool = False
    ) -> int | None:
        value = self.number(key, None, required)
        if value is None:
            return default
        if value != int(value):
            raise ConfigError(f"key {key!r}: expected an integer")
        return int(value)

    def word(
        self,
        key: str,
        choices: tuple[str, ...],
        default: str | None = None,
        required: bool = False,
    ) -> str | None:
        raw = self._raw(key, default, required)
        if raw is None:
            return default
        if raw.text not in choices:
            raise ConfigError(
                f"key {key!r}: expected one of {', '.join(choices)}; "
                f"got {raw.text!r}"
            )
        return raw.text

    def number_list(
        self, key: str, required: bool = False
    ) -> list[float] | None:
        raw = self._raw(key, None, required)
        if raw is None:
            return None
        items = []
        for token in raw.text.split(","):
            token = token.strip()
            if not _NUMBER.match(token):
                raise ConfigError(
                    f"key {key!r}: list entry {token!r} is not a number"
                )
            items.append(float(token))
        if not items:
            raise ConfigError(f"key {key!r}: empty list")
        return items

    def path(self, key: str, required: bool = False) -> Path | None:
        raw = self._raw(key, None, required)
        if raw is None:
            return None
        return Path(raw.text)

    def unused_keys(self) -> list[str]:
        """Keys the command never read; extras are legal so that one
        scenario file can serve several commands."""
        return sorted(set(self.values) - self.consumed)
