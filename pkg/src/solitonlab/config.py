"""Scenario configuration: strict flat key = value files with sections.

Format example:

    [run]
    scenario = soliton-propagation
    T = 20.0
    dt = auto

    [params]
    M = 1.0
    m = 0.5
    v = 1.0

Parsing is strict: unknown sections or keys, duplicate keys, and type
mismatches are errors that carry line numbers. Every schema key has a
documented default (the table below), so a parsed config always echoes the
complete settings; parse(serialize(config)) reproduces the config exactly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any

from .model import PHI_PROFILE_ALIASES, PHI_PROFILES, Family

SCENARIOS = (
    "verify-residuals",
    "soliton-propagation",
    "free-spreading",
    "choquard-stationary",
    "yukawa-oracle",
    "perturbation-stability",
    "param-sweep",
)

# value kinds: how a raw token is coerced and rendered
_FLOAT = "float"
_INT = "int"
_BOOL = "bool"
_STR = "str"
_FLOAT_OR_AUTO = "float?"     # literal "auto" stands for None
_OPT_FLOAT = "optfloat"       # no token for None; key simply absent
_FLOAT_LIST = "floats"        # comma separated, at least one

# SCHEMA[section][key] = (kind, default, allowed values or None)
SCHEMA: dict[str, dict[str, tuple[str, Any, tuple | None]]] = {
    "run": {
        "scenario": (_STR, None, SCENARIOS),
        "T": (_FLOAT_OR_AUTO, None, None),
        "dt": (_FLOAT_OR_AUTO, None, None),
        "stride": (_FLOAT_OR_AUTO, None, None),
        "seed": (_INT, 0, None),
        "mode": (_STR, None, ("coupled", "choquard", "free")),
        "output_dir": (_STR, None, None),
    },
    "params": {
        "M": (_FLOAT, 1.0, None),
        "m": (_FLOAT, 0.5, None),
        "v": (_FLOAT, 1.0, None),
    },
    "soliton": {
        "family": (_STR, "1d_b", None),
        "alpha": (_OPT_FLOAT, None, None),
        "omega": (_OPT_FLOAT, None, None),
        "mu": (_OPT_FLOAT, None, None),
        "gamma": (_FLOAT, 0.0, None),
        "eps": (_FLOAT, 0.0, None),
        "x0": (_FLOAT, 0.0, None),
    },
    "grid": {
        "dim": (_INT, 1, None),
        "n": (_INT, 2048, None),
        "length": (_FLOAT_OR_AUTO, None, None),
    },
    "toggles": {
        "kernel_prefactor": (_STR, "full", ("full", "half")),
        "phi_profile": (_STR, "sech", None),
    },
    "packet": {
        "sigma0": (_FLOAT_OR_AUTO, None, None),
        "k0": (_FLOAT, 0.0, None),
    },
    "perturb": {
        "kind": (_STR, "amplitude_noise",
                 ("amplitude_noise", "phase_noise", "width_rescale")),
        "strength": (_FLOAT, 0.01, None),
    },
    "sweep": {
        "key": (_STR, "params.m", None),
        "values": (_FLOAT_LIST, (0.4, 0.5, 0.6), None),
        "scenario": (_STR, "soliton-propagation", None),
        "workers": (_INT, 4, None),
    },
    "oracle": {
        "n_1d": (_INT, 128, None),
        "n_3d": (_INT, 32, None),
        "cases": (_INT, 3, None),
        "run_3d": (_BOOL, True, None),
    },
}


class ConfigError(ValueError):
    """Configuration problem; message carries the offending line numbers."""


def _coerce(section: str, key: str, raw: str, line: int) -> Any:
    kind, _, allowed = SCHEMA[section][key]
    token = raw.strip()
    where = f"{section}.{key} (line {line})"
    if kind in (_FLOAT, _OPT_FLOAT) or (kind == _FLOAT_OR_AUTO
                                        and token.lower() != "auto"):
        try:
            val = float(token)
        except ValueError:
            raise ConfigError(f"expected a number for {where}, "
                              f"got {token!r}") from None
        if math.isnan(val):
            raise ConfigError(f"{where} must not be NaN")
        return val
    if kind == _FLOAT_OR_AUTO:
        return None
    if kind == _INT:
        try:
            return int(token, 10)
        except ValueError:
            raise ConfigError(f"expected an integer for {where}, "
                              f"got {token!r}") from None
    if kind == _BOOL:
        low = token.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"expected true/false for {where}, got {token!r}")
    if kind == _FLOAT_LIST:
        parts = [p.strip() for p in token.split(",")]
        if not parts or any(not p for p in parts):
            raise ConfigError(f"expected comma separated numbers for {where}")
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"expected comma separated numbers for "
                              f"{where}, got {token!r}") from None
    # strings: normalize spelled-out aliases where the model defines them
    if section == "toggles" and key == "phi_profile":
        token = PHI_PROFILE_ALIASES.get(token, token)
        if token not in PHI_PROFILES:
            raise ConfigError(
                f"{where}: unknown scalar profile {raw.strip()!r}; valid: "
                f"{', '.join(sorted(set(PHI_PROFILES) | set(PHI_PROFILE_ALIASES)))}")
        return token
    if section == "soliton" and key == "family":
        try:
            return Family.parse(token).value
        except ValueError as e:
            raise ConfigError(f"{where}: {e}") from None
    if allowed is not None and token not in allowed:
        raise ConfigError(f"{where}: {token!r} is not one of "
                          f"{', '.join(str(a) for a in allowed)}")
    return token


def _render(kind: str, value: Any) -> str:
    if kind == _FLOAT_OR_AUTO and value is None:
        return "auto"
    if kind == _BOOL:
        return "true" if value else "false"
    if kind == _FLOAT_LIST:
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete settings for one scenario run, defaults filled in."""

    scenario: str
    settings: dict[str, dict[str, Any]] = field(default_factory=dict)

    def get(self, section: str, key: str) -> Any:
        return self.settings[section][key]

    def replace(self, section: str, key: str, value: Any) -> "ScenarioConfig":
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown setting {section}.{key}")
        settings = {s: dict(kv) for s, kv in self.settings.items()}
        settings[section][key] = value
        scenario = value if (section, key) == ("run", "scenario") \
            else self.scenario
        return ScenarioConfig(scenario=scenario, settings=settings)


def default_config(scenario: str) -> ScenarioConfig:
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; valid: "
                          f"{', '.join(SCENARIOS)}")
    settings = {section: {key: spec[1] for key, spec in keys.items()}
                for section, keys in SCHEMA.items()}
    settings["run"]["scenario"] = scenario
    # the stationary point only exists at the matched parameter triple
    if scenario == "choquard-stationary":
        settings["params"].update(M=1.0, m=1.0, v=math.sqrt(2.0 / 3.0))
    # determinism and sweep shape do not need the audit-grade lattice;
    # keep the default runs in seconds
    if scenario == "perturbation-stability":
        settings["grid"]["n"] = 1024
    if scenario == "param-sweep":
        settings["grid"]["n"] = 1024
        settings["run"]["T"] = 10.0
    return ScenarioConfig(scenario=scenario, settings=settings)


_SECTION_RE = re.compile(r"^\[([^\]]+)\]$")


def parse_config(text: str, scenario: str | None = None) -> ScenarioConfig:
    """Strict parse; scenario comes from [run] or the argument (must agree).

    Unknown sections/keys, duplicate keys, type mismatches, and values
    outside their allowed sets are reported with line numbers.
    """
    entries: dict[tuple[str, str], tuple[Any, int]] = {}
    section: str | None = None
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            if section not in SCHEMA:
                raise ConfigError(
                    f"unknown section [{section}] (line {lineno}); valid: "
                    f"{', '.join(sorted(SCHEMA))}")
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value' or '[section]' "
                              f"(line {lineno}): {line!r}")
        if section is None:
            raise ConfigError(f"key outside any section (line {lineno}): "
                              f"{line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in SCHEMA[section]:
            raise ConfigError(
                f"unknown key {key!r} in [{section}] (line {lineno}); "
                f"valid: {', '.join(sorted(SCHEMA[section]))}")
        if (section, key) in entries:
            first_line = entries[(section, key)][1]
            raise ConfigError(f"duplicate key {section}.{key}: first set on "
                              f"line {first_line}, again on line {lineno}")
        entries[(section, key)] = (_coerce(section, key, raw, lineno), lineno)

    named = entries.get(("run", "scenario"))
    if named is not None and scenario is not None \
            and named[0] != scenario:
        raise ConfigError(
            f"scenario mismatch: config names {named[0]!r} (line "
            f"{named[1]}) but {scenario!r} was requested")
    scenario = scenario if scenario is not None else \
        (named[0] if named is not None else None)
    if scenario is None:
        raise ConfigError("missing required key run.scenario (and no "
                          "scenario given on the command line)")

    config = default_config(scenario)
    for (section, key), (value, _) in entries.items():
        if (section, key) == ("run", "scenario"):
            continue
        config.settings[section][key] = value
    return config


def serialize(config: ScenarioConfig) -> str:
    """Complete config text, defaults included; parse() restores it."""
    out = []
    for section, keys in SCHEMA.items():
        lines = []
        for key, (kind, _, _) in keys.items():
            value = config.settings[section][key]
            if value is None and kind != _FLOAT_OR_AUTO:
                continue
            lines.append(f"{key} = {_render(kind, value)}")
        if lines:
            out.append(f"[{section}]")
            out.extend(lines)
            out.append("")
    return "\n".join(out)


def apply_overrides(config: ScenarioConfig,
                    overrides: list[str]) -> ScenarioConfig:
    """Apply repeatable --override section.key=value pairs."""
    for i, text in enumerate(overrides, start=1):
        if "=" not in text or "." not in text.split("=", 1)[0]:
            raise ConfigError(f"override #{i} must look like "
                              f"section.key=value, got {text!r}")
        dotted, _, raw = text.partition("=")
        section, _, key = dotted.strip().partition(".")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"override #{i}: unknown setting "
                              f"{section}.{key}")
        value = _coerce(section, key, raw, 0)
        if (section, key) == ("run", "scenario") \
                and value != config.scenario:
            raise ConfigError(f"override #{i}: scenario cannot be changed "
                              f"by override (subcommand fixes it)")
        config = config.replace(section, key, value)
    return config
