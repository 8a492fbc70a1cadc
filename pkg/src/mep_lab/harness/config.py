"""Flat ``key = value`` run configuration with '#' comments.

Every key has a default; unknown keys are rejected. ``auto`` amplitudes
resolve to the preset's own defaults.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..eulerian import SolverConfig


class ConfigError(ValueError):
    pass


# key -> (default, parser, doc)
SCHEMA: dict[str, tuple[str, type, str]] = {
    "dimension": ("1", int, "spatial dimension m (1 or 2)"),
    "grid.n": ("256", int, "points per axis (power of two >= 8)"),
    "dt": ("1e-3", float, "time step"),
    "t_end": ("1.0", float, "end time"),
    "model": ("mep", str, "mep | euler_poisson"),
    "solver": ("eulerian", str, "eulerian | lagrangian | compare"),
    "preset": ("analytic", str, "steady | analytic | gaussian | large"),
    "preset.amplitude_n": ("auto", str, "density amplitude (auto = preset default)"),
    "preset.amplitude_v": ("auto", str, "velocity amplitude (auto = preset default)"),
    "output.dir": ("mep_output", str, "output directory"),
    "output.stride": ("100", int, "steps between diagnostics rows and snapshots"),
    "seed": ("0", int, "seed for randomized checks"),
    "blowup.threshold": ("1e6", float, "Sobolev-norm blow-up threshold"),
    "gevrey.s": ("0.5", float, "scale parameter s in (0, 1)"),
    "gevrey.sigma": ("2", int, "Sobolev index sigma of the analytic-class norm"),
    "gevrey.jmax": ("24", int, "derivative-order cap"),
    "compare.tolerance": ("1e-6", float, "max-norm tolerance for the compare subcommand"),
}

CHOICES = {
    "dimension": {1, 2},
    "model": {"mep", "euler_poisson"},
    "solver": {"eulerian", "lagrangian", "compare"},
    "preset": {"steady", "analytic", "gaussian", "large"},
}


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def from_mapping(cls, raw: dict[str, str]) -> "RunConfig":
        merged = {k: default for k, (default, _, _) in SCHEMA.items()}
        for k, v in raw.items():
            if k not in SCHEMA:
                raise ConfigError(f"unknown key {k!r}")
            merged[k] = str(v)
        values = {}
        for k, text in merged.items():
            parser = SCHEMA[k][1]
            try:
                values[k] = parser(text)
            except ValueError:
                raise ConfigError(f"key {k!r}: cannot parse {text!r} as {parser.__name__}") from None
        for k, allowed in CHOICES.items():
            if values[k] not in allowed:
                raise ConfigError(f"key {k!r}: {values[k]!r} not in {sorted(map(str, allowed))}")
        for k in ("preset.amplitude_n", "preset.amplitude_v"):
            if values[k] != "auto":
                try:
                    values[k] = float(values[k])
                except ValueError:
                    raise ConfigError(f"key {k!r}: expected a number or 'auto'") from None
        if not values["dt"] > 0:
            raise ConfigError("key 'dt': must be positive")
        if values["t_end"] < 0:
            raise ConfigError("key 't_end': must be non-negative")
        if values["output.stride"] < 1:
            raise ConfigError("key 'output.stride': must be >= 1")
        n = values["grid.n"]
        if n < 8 or n & (n - 1):
            raise ConfigError("key 'grid.n': must be a power of two >= 8")
        if not 0 < values["gevrey.s"] < 1:
            raise ConfigError("key 'gevrey.s': must lie in (0, 1)")
        if values["gevrey.sigma"] < 2:
            raise ConfigError("key 'gevrey.sigma': must be >= 2")
        if values["solver"] in ("lagrangian", "compare") and values["dimension"] != 1:
            raise ConfigError("the lagrangian solver requires dimension = 1")
        if values["solver"] in ("lagrangian", "compare") and values["model"] != "mep":
            raise ConfigError("the lagrangian solver implements model = mep only")
        return cls(values)

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        return cls.from_mapping(parse_text(text, source))

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
        return cls.from_text(text, str(path))

    def with_overrides(self, **overrides) -> "RunConfig":
        raw = {k: _render(v) for k, v in self.values.items()}
        for k, v in overrides.items():
            raw[k.replace("__", ".")] = _render(v)
        return RunConfig.from_mapping(raw)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            dt=self["dt"],
            t_end=self["t_end"],
            model=self["model"],
            blowup_threshold=self["blowup.threshold"],
            sigma=self["gevrey.sigma"],
            stride=self["output.stride"],
        )

    def render(self) -> str:
        lines = ["# resolved configuration (defaults applied)"]
        for k in SCHEMA:
            lines.append(f"{k} = {_render(self.values[k])}")
        return "\n".join(lines) + "\n"


def _render(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def render_report(pairs: dict) -> str:
    """key = value report text, one entry per line."""
    return "".join(f"{k} = {_render(v)}\n" for k, v in pairs.items())


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        body = line.split("#", 1)[0].strip()
        if body:
            k, v = (p.strip() for p in body.split("=", 1))
            out[k] = v
    return out
