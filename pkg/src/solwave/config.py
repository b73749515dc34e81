"""Flat ``key = value`` run configurations with dotted section prefixes.

    # scalar benchmark
    command = solve
    model.name = scalar_quartic_quintic
    grid.n = 3
    grid.r_max = 40
    grid.N = 2000
    sigma.trial.z = 0.6666666666666666
    sigma.trial.R = 12

Values are parsed as int, float, bool (``true``/``false``), comma-separated
float lists, or strings.  ``;`` separates vectors in ``sweep.sigma_set``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError

__all__ = ["RunConfig", "parse_config", "load_config", "COMMANDS"]

COMMANDS = ("check-model", "solve", "sweep", "hylomorphy", "coercivity", "evolve")

# Accepted keys; a trailing ``*`` admits any suffix.
_KNOWN = re.compile(
    r"^(command|seed|"
    r"model\.[A-Za-z_][\w]*|"
    r"grid\.(n|r_max|N)|"
    r"sigma|sigma\.trial\.(z|R|width)|"
    r"solver\.(max_iterations|grad_tolerance|armijo_c|method|b_floor|restarts|restart_noise|polish_iterations)|"
    r"solver\.initial_guess\.(kind|amplitudes|widths|z|R|width|path)|"
    r"audit\.(eta|samples|z_cap|plateau|bumps|uniform_fraction|min_qualifying)|"
    r"sweep\.(sigma_set|probe|probe_step|scale)|"
    r"hylomorphy\.(z|R_list)|"
    r"evolve\.(dt|dt_fraction|T|stride|cfl|r_probe|compare_halved|max_energy_drift|max_charge_drift|max_profile_drift))$"
)


def _value(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if ";" in t:
        return [_value(part) for part in t.split(";") if part.strip()]
    if "," in t:
        return [float(x) for x in t.split(",") if x.strip()]
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


@dataclass
class RunConfig:
    entries: dict
    lines: dict = field(default_factory=dict)
    source: str = "<memory>"
    text: str = ""

    def get(self, key, default=None):
        return self.entries.get(key, default)

    def require(self, key):
        if key not in self.entries:
            raise ConfigurationError(f"{self.source}: missing required field {key!r}")
        return self.entries[key]

    def section(self, prefix: str) -> dict:
        p = prefix + "."
        return {k[len(p):]: v for k, v in self.entries.items() if k.startswith(p)}

    def where(self, key) -> str:
        line = self.lines.get(key)
        return f"{self.source}:{line}" if line else self.source

    @property
    def command(self) -> str:
        return self.require("command")


def parse_config(text: str, source: str = "<memory>") -> RunConfig:
    entries, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if not _KNOWN.match(key):
            raise ConfigurationError(f"{source}:{lineno}: unknown field {key!r}")
        if key in entries:
            raise ConfigurationError(f"{source}:{lineno}: duplicate field {key!r} (first set on line {lines[key]})")
        if not val:
            raise ConfigurationError(f"{source}:{lineno}: field {key!r} has no value")
        try:
            entries[key] = _value(val)
        except ValueError as exc:
            raise ConfigurationError(f"{source}:{lineno}: cannot parse {key!r}: {exc}") from None
        lines[key] = lineno
    cfg = RunConfig(entries, lines, source, text)
    cmd = cfg.command
    if cmd not in COMMANDS:
        raise ConfigurationError(f"{cfg.where('command')}: command must be one of {', '.join(COMMANDS)}, got {cmd!r}")
    return cfg


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file {str(p)!r} does not exist")
    return parse_config(p.read_text(), str(p))
