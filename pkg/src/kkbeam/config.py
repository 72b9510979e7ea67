"""Pipeline configuration: sectioned key=value files plus CLI overrides.

Config files are INI-style sections of key=value pairs. Every key is
declared in SCHEMA with a type and default; unknown sections or keys are
rejected, as are malformed values. User-facing units follow the usual
bench conventions (mm, MHz, us, degrees) and are converted to SI on
access. dump_config writes the fully resolved state back out in a
canonical order, so the sidecar written next to every output reproduces
the run exactly.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from . import sampling as smp
from .beamform import BeamformConfig
from .core import AcquisitionParams, ImageGrid, TransducerArray
from .errors import ConfigError
from .simulate import Phantom, Pulse, make_pulse, speckle_phantom, wire_phantom

MM = 1e-3
US = 1e-6
MHZ = 1e6
DEG = math.pi / 180.0

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_list(text: str, convert):
    t = text.strip()
    if not t:
        return ()
    return tuple(convert(part.strip()) for part in t.split(","))


_PARSERS = {
    "int": int,
    "float": float,
    "str": lambda s: s.strip(),
    "bool": _parse_bool,
    "intlist": lambda s: _parse_list(s, int),
    "floatlist": lambda s: _parse_list(s, float),
    "strlist": lambda s: _parse_list(s, str),
}

# section -> key -> (type, default)
SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "array": {
        "num_elements": ("int", 192),
        "pitch_mm": ("float", 0.230),
        "center_frequency_mhz": ("float", 5.2),
        "sampling_frequency_mhz": ("float", 20.83),
        "fractional_bandwidth": ("float", 0.67),
    },
    "acquisition": {
        "sound_speed": ("float", 1540.0),
        "num_transmits": ("int", 15),
        "max_angle_deg": ("float", 24.0),
        "num_samples": ("int", 2048),
        "start_time_us": ("float", 0.0),
    },
    "phantom": {
        "kind": ("str", "point"),
        "point_x_mm": ("float", 0.0),
        "point_z_mm": ("float", 10.0),
        "reflectivity": ("float", 1.0),
        "wire_spacings_mm": ("floatlist", ()),
        "wire_depth_mm": ("float", 20.0),
        "speckle_x0_mm": ("float", -6.0),
        "speckle_x1_mm": ("float", 6.0),
        "speckle_z0_mm": ("float", 8.0),
        "speckle_z1_mm": ("float", 16.0),
        "speckle_density_per_mm2": ("float", 200.0),
        "inclusion_x_mm": ("float", 0.0),
        "inclusion_z_mm": ("float", 11.5),
        "inclusion_radius_mm": ("float", 0.0),
        "noise_rms": ("float", 0.0),
        "geometric_spreading": ("bool", False),
    },
    "sampling": {
        "scheme": ("str", "uniform_vernier"),
        "num_receive": ("int", 19),
        "vernier_offsets": ("intlist", (0,)),
        "explicit_angles_deg": ("floatlist", ()),
        "histogram_bins": ("int", 15),
    },
    "grid": {
        "x0_mm": ("float", -5.13),
        "z0_mm": ("float", 7.0),
        "dx_mm": ("float", 0.057),
        "dz_mm": ("float", 0.037),
        "nx": ("int", 180),
        "nz": ("int", 180),
    },
    "beamform": {
        "method": ("str", "kk"),
        "interpolation": ("str", "linear"),
        "pulse_delay_us": ("float", 0.0),
        "max_rx_angle_deg": ("float", 0.0),
    },
    "compound": {
        "mode": ("str", "none"),
    },
    "metrics": {
        "enabled": ("bool", True),
        "gcnr_enabled": ("bool", False),
        "gcnr_num_bins": ("int", 256),
        "gcnr_inside_x_mm": ("float", 0.0),
        "gcnr_inside_z_mm": ("float", 11.5),
        "gcnr_inside_radius_mm": ("float", 1.2),
        "gcnr_outside_x0_mm": ("float", 2.5),
        "gcnr_outside_z0_mm": ("float", 10.0),
        "gcnr_outside_x1_mm": ("float", 5.0),
        "gcnr_outside_z1_mm": ("float", 13.0),
        "fwhm_enabled": ("bool", False),
        "fwhm_x_mm": ("float", 0.0),
        "fwhm_z_mm": ("float", 10.0),
        "fwhm_window_mm": ("float", 2.0),
    },
    "output": {
        "directory": ("str", "out"),
        "prefix": ("str", "run"),
    },
    "run": {
        "seed": ("int", 0),
        "threads": ("int", 0),
    },
    "bench": {
        "repetitions": ("int", 3),
        "methods": ("strlist", ("das", "kk")),
        "m_list": ("intlist", (21,)),
    },
}

_CHOICES = {
    ("phantom", "kind"): {"none", "point", "wire", "speckle"},
    ("sampling", "scheme"): {"uniform_vernier", "confocal", "explicit"},
    ("beamform", "method"): {"das", "kk", "both"},
    ("beamform", "interpolation"): {"linear", "nearest"},
    ("compound", "mode"): {"none", "coherent", "incoherent"},
}


def _defaults() -> dict:
    return {sec: {k: spec[1] for k, spec in keys.items()} for sec, keys in SCHEMA.items()}


@dataclass(frozen=True)
class PipelineConfig:
    """Fully resolved, validated configuration for every subcommand."""

    values: dict = field(default_factory=_defaults)

    def get(self, section: str, key: str):
        try:
            return self.values[section][key]
        except KeyError:
            raise ConfigError(f"unknown config key {section}.{key}") from None

    # ---- constructors -------------------------------------------------

    @classmethod
    def from_text(cls, text: str, overrides=()) -> "PipelineConfig":
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        raw: dict[str, dict[str, str]] = {
            sec: dict(parser.items(sec)) for sec in parser.sections()
        }
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not section.name=value")
            keypath, _, value = item.partition("=")
            if "." not in keypath:
                raise ConfigError(f"override key {keypath!r} is not section.name")
            sec, _, key = keypath.partition(".")
            raw.setdefault(sec.strip(), {})[key.strip()] = value
        return cls.from_raw(raw)

    @classmethod
    def from_file(cls, path, overrides=()) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_text(f.read(), overrides)

    @classmethod
    def from_raw(cls, raw: dict) -> "PipelineConfig":
        values = _defaults()
        for sec, keys in raw.items():
            if sec not in SCHEMA:
                raise ConfigError(f"unknown config section [{sec}]")
            for key, text in keys.items():
                if key not in SCHEMA[sec]:
                    raise ConfigError(f"unknown config key {sec}.{key}")
                typ = SCHEMA[sec][key][0]
                try:
                    values[sec][key] = _PARSERS[typ](str(text))
                except (ValueError, TypeError) as exc:
                    raise ConfigError(f"bad value for {sec}.{key}: {text!r} ({exc})") from exc
        cfg = cls(values)
        cfg._validate()
        return cfg

    def with_overrides(self, overrides) -> "PipelineConfig":
        return PipelineConfig.from_text(dump_config(self), overrides)

    def _validate(self):
        for (sec, key), allowed in _CHOICES.items():
            v = self.get(sec, key)
            if v not in allowed:
                raise ConfigError(
                    f"{sec}.{key} must be one of {sorted(allowed)}, got {v!r}"
                )
        if self.get("sampling", "scheme") == "explicit":
            n_exp = len(self.get("sampling", "explicit_angles_deg"))
            if n_exp != self.get("sampling", "num_receive"):
                raise ConfigError(
                    "sampling.num_receive must match the explicit angle list length"
                )
        for j in self.get("sampling", "vernier_offsets"):
            if j < 0:
                raise ConfigError("vernier offsets must be nonnegative")

    # ---- typed views ---------------------------------------------------

    @property
    def seed(self) -> int:
        return self.get("run", "seed")

    @property
    def threads(self) -> int:
        return self.get("run", "threads")

    def array(self) -> TransducerArray:
        return TransducerArray(
            num_elements=self.get("array", "num_elements"),
            pitch=self.get("array", "pitch_mm") * MM,
            center_frequency=self.get("array", "center_frequency_mhz") * MHZ,
            sampling_frequency=self.get("array", "sampling_frequency_mhz") * MHZ,
            fractional_bandwidth=self.get("array", "fractional_bandwidth"),
        )

    def acquisition(self) -> AcquisitionParams:
        angles = smp.transmit_angles(
            self.get("acquisition", "num_transmits"),
            self.get("acquisition", "max_angle_deg") * DEG,
        )
        return AcquisitionParams(
            sound_speed=self.get("acquisition", "sound_speed"),
            transmit_angles=angles,
            num_samples=self.get("acquisition", "num_samples"),
            start_time=self.get("acquisition", "start_time_us") * US,
        )

    def grid(self) -> ImageGrid:
        return ImageGrid(
            x0=self.get("grid", "x0_mm") * MM,
            z0=self.get("grid", "z0_mm") * MM,
            dx=self.get("grid", "dx_mm") * MM,
            dz=self.get("grid", "dz_mm") * MM,
            nx=self.get("grid", "nx"),
            nz=self.get("grid", "nz"),
        )

    def pulse(self) -> Pulse:
        return make_pulse(
            self.get("array", "center_frequency_mhz") * MHZ,
            self.get("array", "fractional_bandwidth"),
            self.get("array", "sampling_frequency_mhz") * MHZ,
        )

    def phantom(self) -> Phantom:
        kind = self.get("phantom", "kind")
        if kind == "none":
            return Phantom(np.array([]), np.array([]), np.array([]))
        if kind == "point":
            return Phantom(
                np.array([self.get("phantom", "point_x_mm") * MM]),
                np.array([self.get("phantom", "point_z_mm") * MM]),
                np.array([self.get("phantom", "reflectivity")]),
            )
        if kind == "wire":
            spacings = [s * MM for s in self.get("phantom", "wire_spacings_mm")]
            return wire_phantom(
                spacings,
                self.get("phantom", "wire_depth_mm") * MM,
                self.get("phantom", "reflectivity"),
            )
        region = (
            self.get("phantom", "speckle_x0_mm") * MM,
            self.get("phantom", "speckle_x1_mm") * MM,
            self.get("phantom", "speckle_z0_mm") * MM,
            self.get("phantom", "speckle_z1_mm") * MM,
        )
        radius = self.get("phantom", "inclusion_radius_mm") * MM
        center = (
            self.get("phantom", "inclusion_x_mm") * MM,
            self.get("phantom", "inclusion_z_mm") * MM,
        )
        return speckle_phantom(
            region,
            self.get("phantom", "speckle_density_per_mm2") / MM**2,
            seed=self.seed,
            inclusion_center=center if radius > 0 else None,
            inclusion_radius=radius,
        )

    def receive_set(self, vernier_offset: int | None = None) -> smp.ReceiveAngleSet:
        scheme = self.get("sampling", "scheme")
        n = self.get("acquisition", "num_transmits")
        m = self.get("sampling", "num_receive")
        max_angle = self.get("acquisition", "max_angle_deg") * DEG
        if scheme == "uniform_vernier":
            j = vernier_offset
            if j is None:
                j = self.get("sampling", "vernier_offsets")[0]
            return smp.uniform_vernier_angles(n, m, max_angle, j)
        if scheme == "confocal":
            return smp.confocal_angles(n, m, max_angle)
        angles = [a * DEG for a in self.get("sampling", "explicit_angles_deg")]
        dthi = 2.0 * max_angle / (n - 1)
        return smp.explicit_angles(angles, dthi)

    def beamform_config(self) -> BeamformConfig:
        gate = self.get("beamform", "max_rx_angle_deg")
        return BeamformConfig(
            interpolation=self.get("beamform", "interpolation"),
            pulse_delay=self.get("beamform", "pulse_delay_us") * US,
            max_rx_angle=gate * DEG if gate > 0 else None,
        )


def _format_value(typ: str, value) -> str:
    if typ == "bool":
        return "true" if value else "false"
    if typ.endswith("list"):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: PipelineConfig) -> str:
    """Canonical text form of a resolved config (schema order, all keys)."""
    lines = []
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for key, (typ, _default) in keys.items():
            lines.append(f"{key} = {_format_value(typ, cfg.get(sec, key))}")
        lines.append("")
    return "\n".join(lines)
