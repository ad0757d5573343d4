"""Scenario files: INI-style configuration with a strict schema.

A scenario bundles everything one run needs: pass geometry, optical channel,
source, memory node, chain layout, and Monte Carlo settings.  Keys carry their
units in the name (``altitude_m``, ``repetition_rate_hz``) so there is no unit
inference anywhere.  Unknown sections or keys fail fast with the closest valid
name suggested.  Every key has a default; the bundled ``table1.cfg`` resource
spells out the same baseline explicitly and loading it reproduces the defaults
exactly.

Precedence: built-in defaults, then the config file, then ``--set`` style
overrides, later wins.  The loader tracks which keys the user actually set:
that matters for the memory-loading success probability, which can be given
directly (``node.caps_success_probability``) or derived from
``node.internal_cooperativity`` — a user-set cooperativity replaces the
default probability, while setting both lets the explicit probability win
(with a warning from the node layer).
"""

from __future__ import annotations

import configparser
import difflib
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .channel import ChannelParams
from .mc_oracle import McConfig
from .node import NodeParams, SourceParams
from .orbit import OrbitGeometry
from .repeater import RepeaterConfig

__all__ = [
    "ConfigError",
    "Scenario",
    "bundled_baseline_text",
    "default_scenario",
    "load_scenario",
    "parse_override",
    "sweepable_keys",
]


class ConfigError(ValueError):
    """Malformed or unknown configuration input (a usage error, as opposed to
    a well-formed scenario that fails physical validation)."""


_MISSING = object()

# (converter, default) per key; _MISSING means optional with no default.
_SCHEMA: dict[str, dict[str, tuple[type, object]]] = {
    "orbit": {
        "altitude_m": (float, 1.5e6),
        "link_length_m": (float, 2.5e6),
        "earth_radius_m": (float, 6.378e6),
        "mu_m3_s2": (float, 3.986004418e14),
        "max_zenith_deg": (float, 80.0),
    },
    "channel": {
        "wavelength_m": (float, 780e-9),
        "beam_waist_m": (float, 0.025),
        "beam_quality_m2": (float, 1.0),
        "receiver_radius_m": (float, 1.0),
        "pointing_sigma_rad": (float, 0.5e-6),
        "zenith_transmittance": (float, 0.79),
        "coupling_efficiency": (float, 0.25),
        "sky_spectral_irradiance_w_m2_um_sr": (float, 1.5e-5),
        "field_of_view_sr": (float, 1.0e-8),
        "filter_bandwidth_m": (float, 1.0e-9),
        "coincidence_window_s": (float, 1.0e-9),
        "aperture_interpretation": (str, "literal"),
    },
    "source": {
        "pair_fidelity": (float, 0.998),
        "repetition_rate_hz": (float, 1.0e7),
        "emission_efficiency": (float, 0.9),
        "multiplexing_channels": (int, 100),
        "demux_efficiency": (float, 0.73),
        "direct_repetition_rate_hz": (float, 1.0e9),
    },
    "node": {
        "caps_success_probability": (float, 0.75),
        "internal_cooperativity": (float, _MISSING),
        "caps_fidelity": (float, 0.99),
        "rydberg_gate_fidelity": (float, 0.995),
        "readout_fidelity": (float, 0.999),
        "detection_efficiency": (float, 0.9),
        "spin_decoherence_rate_hz": (float, 0.05),
    },
    "repeater": {
        "nesting_levels": (int, 2),
        "gate_efficiency": (float, 1.0),
        "detector_exponent": (int, 1),
    },
    "mc": {
        "trials": (int, 100_000),
        "seed": (int, 1),
        "time_model": (str, "constant-p"),
    },
}


@dataclass(frozen=True)
class Scenario:
    """Fully resolved run configuration.

    ``resolved`` holds the flat ``section.key -> value`` mapping after all
    overlays, in schema order, for provenance headers on output files.
    """

    geometry: OrbitGeometry
    channel: ChannelParams
    source: SourceParams
    node: NodeParams
    n_levels: int
    gate_efficiency: float
    detector_exponent: int
    mc: McConfig
    resolved: tuple[tuple[str, float | int | str], ...] = field(repr=False)

    def repeater_config(self) -> RepeaterConfig:
        return RepeaterConfig(
            geometry=self.geometry,
            channel=self.channel,
            source=self.source,
            node=self.node,
            n_levels=self.n_levels,
            gate_efficiency=self.gate_efficiency,
            detector_exponent=self.detector_exponent,
        )

    def flat_dict(self) -> dict[str, float | int | str]:
        return dict(self.resolved)

    def with_mc(self, *, trials: int | None = None, seed: int | None = None) -> "Scenario":
        """Copy with Monte Carlo trial count and/or seed overridden (the CLI
        --trials/--seed flags)."""
        mc = self.mc
        if trials is not None:
            mc = replace(mc, trials=trials)
        if seed is not None:
            mc = replace(mc, seed=seed)
        resolved = tuple(
            (k, mc.trials if k == "mc.trials" else mc.seed if k == "mc.seed" else v)
            for k, v in self.resolved
        )
        return replace(self, mc=mc, resolved=resolved)


def _suggest(name: str, candidates) -> str:
    close = difflib.get_close_matches(name, list(candidates), n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def _check_key(section: str, key: str) -> None:
    if section not in _SCHEMA:
        raise ConfigError(
            f"unknown section {section!r}{_suggest(section, _SCHEMA)}; "
            f"valid sections: {', '.join(_SCHEMA)}"
        )
    if key not in _SCHEMA[section]:
        raise ConfigError(
            f"unknown key {key!r} in section {section!r}"
            f"{_suggest(key, _SCHEMA[section])}; valid keys: "
            f"{', '.join(_SCHEMA[section])}"
        )


def _convert(section: str, key: str, raw: str):
    conv, _ = _SCHEMA[section][key]
    if conv is str:
        return raw
    try:
        return conv(raw)
    except ValueError:
        kind = "an integer" if conv is int else "a number"
        raise ConfigError(
            f"value {raw!r} for {section}.{key} is not {kind}"
        ) from None


def parse_override(expr: str) -> tuple[str, str, str]:
    """Split a ``section.key=value`` override expression."""
    lhs, sep, value = expr.partition("=")
    if not sep:
        raise ConfigError(f"override {expr!r} must have the form section.key=value")
    section, dot, key = lhs.strip().partition(".")
    if not dot or not section or not key:
        raise ConfigError(f"override {expr!r} must name a key as section.key")
    return section, key.strip(), value.strip()


def load_scenario(
    path: str | Path | None = None, overrides: tuple[str, ...] = ()
) -> Scenario:
    """Build a scenario from defaults, an optional INI file, and overrides.

    Raises :class:`ConfigError` for unreadable files, malformed syntax,
    unknown sections/keys, or untypeable values; physical-range violations
    surface later as ``ValueError`` from the parameter classes themselves.
    """
    values: dict[tuple[str, str], object] = {}
    for section, keys in _SCHEMA.items():
        for key, (_, default) in keys.items():
            if default is not _MISSING:
                values[(section, key)] = default
    user_set: set[tuple[str, str]] = set()

    if path is not None:
        parser = configparser.ConfigParser(
            interpolation=None, default_section="+defaults-disabled+"
        )
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file {path}: {exc}") from exc
        for section in parser.sections():
            for key, raw in parser.items(section):
                _check_key(section, key)
                values[(section, key)] = _convert(section, key, raw)
                user_set.add((section, key))

    for expr in overrides:
        section, key, raw = parse_override(expr)
        _check_key(section, key)
        values[(section, key)] = _convert(section, key, raw)
        user_set.add((section, key))

    return _assemble(values, user_set)


def _assemble(
    values: dict[tuple[str, str], object], user_set: set[tuple[str, str]]
) -> Scenario:
    def v(section: str, key: str):
        return values[(section, key)]

    geometry = OrbitGeometry(
        altitude_m=v("orbit", "altitude_m"),
        link_length_m=v("orbit", "link_length_m"),
        earth_radius_m=v("orbit", "earth_radius_m"),
        mu_m3_per_s2=v("orbit", "mu_m3_s2"),
        max_zenith_rad=math.radians(v("orbit", "max_zenith_deg")),
    )
    channel = ChannelParams(
        wavelength_m=v("channel", "wavelength_m"),
        beam_waist_m=v("channel", "beam_waist_m"),
        beam_quality_m2=v("channel", "beam_quality_m2"),
        receiver_radius_m=v("channel", "receiver_radius_m"),
        pointing_sigma_rad=v("channel", "pointing_sigma_rad"),
        zenith_transmittance=v("channel", "zenith_transmittance"),
        coupling_efficiency=v("channel", "coupling_efficiency"),
        sky_spectral_irradiance_w_m2_um_sr=v(
            "channel", "sky_spectral_irradiance_w_m2_um_sr"
        ),
        field_of_view_sr=v("channel", "field_of_view_sr"),
        filter_bandwidth_m=v("channel", "filter_bandwidth_m"),
        coincidence_window_s=v("channel", "coincidence_window_s"),
        aperture_interpretation=v("channel", "aperture_interpretation"),
    )
    source = SourceParams(
        pair_fidelity=v("source", "pair_fidelity"),
        repetition_rate_hz=v("source", "repetition_rate_hz"),
        emission_efficiency=v("source", "emission_efficiency"),
        multiplexing_channels=v("source", "multiplexing_channels"),
        demux_efficiency=v("source", "demux_efficiency"),
        direct_repetition_rate_hz=v("source", "direct_repetition_rate_hz"),
    )
    cooperativity = values.get(("node", "internal_cooperativity"))
    caps_explicit: float | None = v("node", "caps_success_probability")
    if cooperativity is not None and ("node", "caps_success_probability") not in user_set:
        # A user-chosen cooperativity replaces the *default* probability
        # outright; only an explicitly set probability competes with it.
        caps_explicit = None
    node = NodeParams(
        caps_fidelity=v("node", "caps_fidelity"),
        rydberg_gate_fidelity=v("node", "rydberg_gate_fidelity"),
        readout_fidelity=v("node", "readout_fidelity"),
        detection_efficiency=v("node", "detection_efficiency"),
        spin_decoherence_rate_hz=v("node", "spin_decoherence_rate_hz"),
        caps_success_probability=caps_explicit,
        internal_cooperativity=cooperativity,
    )
    mc = McConfig(
        trials=v("mc", "trials"),
        seed=v("mc", "seed"),
        time_model=v("mc", "time_model"),
    )
    resolved = tuple(
        (f"{section}.{key}", values[(section, key)])
        for section, keys in _SCHEMA.items()
        for key in keys
        if (section, key) in values
    )
    scenario = Scenario(
        geometry=geometry,
        channel=channel,
        source=source,
        node=node,
        n_levels=v("repeater", "nesting_levels"),
        gate_efficiency=v("repeater", "gate_efficiency"),
        detector_exponent=v("repeater", "detector_exponent"),
        mc=mc,
        resolved=resolved,
    )
    scenario.repeater_config()  # validate the chain-level fields eagerly
    return scenario


def default_scenario() -> Scenario:
    """The baseline parameter set with no file and no overrides."""
    return load_scenario(None)


def sweepable_keys() -> tuple[str, ...]:
    """Physics keys a sensitivity sweep may vary: every real-valued entry in
    the orbit/channel/source/node sections (structural knobs such as nesting
    depth or trial counts are deliberately not sweepable)."""
    return tuple(
        f"{section}.{key}"
        for section in ("orbit", "channel", "source", "node")
        for key, (conv, _) in _SCHEMA[section].items()
        if conv is float
    )


def bundled_baseline_text() -> str:
    """Raw text of the packaged baseline config (identical to the defaults)."""
    return (
        resources.files("satrep.data").joinpath("table1.cfg").read_text()
    )
