"""Optical scenario: every parameter of the system in one immutable record.

Per-mode vectors are ordered ``(H, V, D, A)`` for Alice's modes and
``(h~, v~, d~, a~)`` for Eve's.  Noise values are raw (physical) background
means at the detector; rescaling for the beamsplitter model happens inside
:class:`qi_spoof.fock.PortParams`.

Scenario files are INI-style text parsed with :mod:`configparser`::

    [source]
    system = qi
    n_bar = 0.004975

    [signal]
    eta = 0.7
    xi = 0.05

A scalar stands for the same value on all four modes.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

from .fock import PortParams, SourceParamsBB84, SourceParamsQI

__all__ = [
    "ALICE_MODES",
    "EVE_MODES",
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "parse_scenario",
    "dump_scenario",
    "shipped_scenario",
]

ALICE_MODES = ("H", "V", "D", "A")
EVE_MODES = ("h", "v", "d", "a")
_INDEX = {m: i for i, m in enumerate(ALICE_MODES)} | {m: i for i, m in enumerate(EVE_MODES)}

Vec4 = tuple[float, float, float, float]


class ScenarioError(ValueError):
    """Invalid scenario content; the message names the offending key."""


def _vec(value) -> Vec4:
    if isinstance(value, (int, float)):
        return (float(value),) * 4
    vals = tuple(float(v) for v in value)
    if len(vals) == 1:
        return vals * 4
    if len(vals) != 4:
        raise ScenarioError(f"expected 1 or 4 values, got {len(vals)}")
    return vals  # type: ignore[return-value]


@dataclass(frozen=True)
class Scenario:
    """All system parameters.

    ``xi`` is the object attenuation on Alice's own return path, ``xi_eve``
    the attenuation of light Eve resends toward Alice.  ``p_real`` and
    ``p_false`` split the interception probability ``p`` between the two
    channels Alice monitors.
    """

    n_bar: float = 4.975e-3
    n_bar_alpha: float | None = None
    system: str = "qi"
    eta_idler: Vec4 = (1.0, 1.0, 1.0, 1.0)
    eta_eve: Vec4 = (1.0, 1.0, 1.0, 1.0)
    eta_signal: Vec4 = (1.0, 1.0, 1.0, 1.0)
    xi: float = 1.0
    xi_eve: float = 1.0
    theta: float = 0.0
    r: float = 0.5
    noise_idler: Vec4 = (0.0, 0.0, 0.0, 0.0)
    noise_eve: Vec4 = (0.0, 0.0, 0.0, 0.0)
    noise_signal: Vec4 = (0.0, 0.0, 0.0, 0.0)
    noise_signal_eve: Vec4 = (0.0, 0.0, 0.0, 0.0)
    p: float = 0.0
    p_real: float = 0.0
    p_false: float = 0.0
    delay_idler_signal: int = 2
    delay_idler_eve: int = 1
    delay_eve_signal: int = 2

    def __post_init__(self) -> None:
        for name in ("eta_idler", "eta_eve", "eta_signal", "noise_idler", "noise_eve",
                     "noise_signal", "noise_signal_eve"):
            try:
                object.__setattr__(self, name, _vec(getattr(self, name)))
            except ScenarioError as exc:
                raise ScenarioError(f"{name}: {exc}") from None
        self.validate()

    def validate(self) -> None:
        if self.system not in ("qi", "bb84"):
            raise ScenarioError(f"system: must be 'qi' or 'bb84', got {self.system!r}")
        if not (self.n_bar >= 0) or math.isinf(self.n_bar):
            raise ScenarioError("n_bar: must be finite and non-negative")
        if self.n_bar_alpha is not None and not (self.n_bar_alpha >= 0):
            raise ScenarioError("n_bar_alpha: must be non-negative")
        for name in ("eta_idler", "eta_eve", "eta_signal"):
            if any(not (0.0 <= v <= 1.0) for v in getattr(self, name)):
                raise ScenarioError(f"{name}: efficiencies must lie in [0, 1]")
        for name in ("noise_idler", "noise_eve", "noise_signal", "noise_signal_eve"):
            if any(not (v >= 0.0) or math.isinf(v) for v in getattr(self, name)):
                raise ScenarioError(f"{name}: noise must be finite and non-negative")
        for name in ("xi", "xi_eve", "r", "p", "p_real", "p_false"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ScenarioError(f"{name}: must lie in [0, 1], got {v!r}")
        if abs(self.p_real + self.p_false - self.p) > 1e-12:
            raise ScenarioError("p_real: p_real + p_false must equal p")
        for name in ("delay_idler_signal", "delay_idler_eve", "delay_eve_signal"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ScenarioError(f"{name}: delays must be non-negative integers")

    # construction helpers

    def replace(self, **changes) -> "Scenario":
        """Copy with fields changed; setting only ``p`` routes it all to the false channel."""
        if "p" in changes and "p_real" not in changes and "p_false" not in changes:
            changes["p_real"] = 0.0
            changes["p_false"] = changes["p"]
        return dataclasses.replace(self, **changes)

    @property
    def qi_source(self) -> SourceParamsQI:
        return SourceParamsQI.from_mean(self.n_bar)

    @property
    def bb84_source(self) -> SourceParamsBB84:
        """Coherent source; when ``n_bar_alpha`` is unset it is chosen fair to ``n_bar``."""
        n_alpha = self.n_bar_alpha
        if n_alpha is None:
            eta = self.eta_idler[0]
            # invert n = na / (2 - eta na + 2 eta na)
            n_alpha = 2.0 * self.n_bar / (1.0 - self.n_bar * eta)
        return SourceParamsBB84.from_mean(n_alpha)

    # detector ports for each optical path

    def idler_port(self, mode: str) -> PortParams:
        i = _INDEX[mode]
        return PortParams(mode, self.eta_idler[i], self.noise_idler[i])

    def alice_port(self, mode: str) -> PortParams:
        """Alice's signal detector receiving her own return light."""
        i = _INDEX[mode]
        return PortParams(mode, self.eta_signal[i] * self.xi, self.noise_signal[i])

    def eve_port(self, mode: str) -> PortParams:
        """Eve's detector for one of her modes ``h, v, d, a``."""
        i = _INDEX[mode]
        return PortParams(mode, self.eta_eve[i], self.noise_eve[i])

    def resend_port(self, mode: str) -> PortParams:
        """Alice's signal detector receiving light resent by Eve."""
        i = _INDEX[mode]
        return PortParams(mode, self.eta_signal[i] * self.xi_eve, self.noise_signal_eve[i])

    @property
    def channel_delays(self) -> tuple[int, int]:
        """(real, false) channel delays in time bins."""
        return self.delay_idler_signal, self.delay_idler_eve + self.delay_eve_signal


# file format

_SCHEMA: dict[str, dict[str, tuple[str, str]]] = {
    "source": {"system": ("system", "str"), "n_bar": ("n_bar", "float"),
               "n_bar_alpha": ("n_bar_alpha", "float")},
    "idler": {"eta": ("eta_idler", "vec")},
    "eve": {"eta": ("eta_eve", "vec"), "xi": ("xi_eve", "float"),
            "theta": ("theta", "float"), "r": ("r", "float")},
    "signal": {"eta": ("eta_signal", "vec"), "xi": ("xi", "float")},
    "noise": {"idler": ("noise_idler", "vec"), "eve": ("noise_eve", "vec"),
              "signal": ("noise_signal", "vec"), "signal_eve": ("noise_signal_eve", "vec")},
    "intrusion": {"p": ("p", "float"), "p_real": ("p_real", "float"),
                  "p_false": ("p_false", "float")},
    "delays": {"idler_to_signal": ("delay_idler_signal", "int"),
               "idler_to_eve": ("delay_idler_eve", "int"),
               "eve_to_signal": ("delay_eve_signal", "int")},
}


def _convert(section: str, key: str, raw: str, kind: str):
    try:
        if kind == "str":
            return raw.strip()
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        parts = [p for p in raw.replace(",", " ").split() if p]
        vals = [float(p) for p in parts]
    except ValueError:
        raise ScenarioError(f"[{section}] {key}: cannot parse {raw!r}") from None
    if len(vals) not in (1, 4):
        raise ScenarioError(f"[{section}] {key}: vectors need 1 or 4 values, got {len(vals)}")
    return tuple(vals)


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse scenario text.  Unknown sections or keys are rejected."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep key case
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ScenarioError(f"{source}: {exc}") from None
    kwargs: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ScenarioError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ScenarioError(f"[{section}] {key}: unknown key")
            name, kind = _SCHEMA[section][key]
            kwargs[name] = _convert(section, key, raw, kind)
    if "p" in kwargs and "p_real" not in kwargs and "p_false" not in kwargs:
        kwargs["p_false"] = kwargs["p"]
    try:
        return Scenario(**kwargs)
    except ScenarioError as exc:
        raise ScenarioError(f"{source}: {exc}") from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), source=str(path))


def _fmt(value) -> str:
    if isinstance(value, tuple):
        if len(set(value)) == 1:
            return repr(value[0])
        return ", ".join(repr(v) for v in value)
    return repr(value) if not isinstance(value, str) else value


def dump_scenario(scenario: Scenario) -> str:
    """Serialise to the text format; parsing the result gives an equal scenario."""
    lines: list[str] = []
    for section, keys in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (name, _kind) in keys.items():
            value = getattr(scenario, name)
            if value is None:
                continue
            lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
    return "\n".join(lines)


def shipped_scenario(name: str) -> Path:
    """Path of a scenario file bundled with the package, e.g. ``"set2"``."""
    from importlib.resources import files

    path = Path(str(files("qi_spoof") / "data" / f"{name}.scenario"))
    if not path.exists():
        raise FileNotFoundError(f"no shipped scenario named {name!r}")
    return path


