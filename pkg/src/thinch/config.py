"""Flat ``key = value`` experiment configuration with dotted section names.

Values are parsed as JSON when possible (numbers, lists, ``true``/``false``,
quoted strings); anything else is kept as a bare string.  Lines starting
with ``#`` are comments.  Unknown keys are rejected.
"""
from __future__ import annotations

import copy
import json

from .geometry import SurfaceChart, ThicknessProfile
from .potential import Potential
from .pullback import ReferenceGrid

DEFAULTS = {
    "surface.kind": "torus",
    "surface.R": 2.0,
    "surface.a": 1.0,
    "thickness.preset": "constant",
    "thickness.params": [0.0, 1.0],
    "potential.preset": "quartic_double_well",
    "potential.coeffs": None,
    "potential.constants": [0.0, 0.0, 0.0],
    "grid.n1": 48,
    "grid.n2": 24,
    "grid.n3": 8,
    "epsilon": 0.1,
    "bulk.tau": 1e-5,
    "bulk.stabilization": 2.0,
    "bulk.tol_lin": 1e-11,
    "bulk.seed": 0,
    "bulk.T": 1e-3,
    "bulk.snapshot_times": [],
    "surface.tau": 1e-5,
    "surface.stabilization": 2.0,
    "surface.tol_lin": 1e-11,
    "surface.T": 1e-3,
    "oracle.modes": 9,
    "oracle.tau": 1e-6,
    "study.epsilons": [0.2, 0.1, 0.05, 0.025],
    "study.T": 0.5,
    "study.v0": "mode",
    "study.v0_amplitude": 0.1,
    "study.v0_wavenumber": [1, 0],
    "study.alpha": 0.0,
    "study.c_tau": 1000.0,
    "study.tau_cap": 1e-4,
    "study.rate_threshold": 0.8,
    "study.residual_epsilons": [0.2, 0.1, 0.05],
}


class ConfigError(ValueError):
    pass


def _parse_value(text):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "," in text:
        return [_parse_value(part) for part in text.split(",")]
    return text


def parse_config(text):
    """Parse config text into a dict of overrides (no defaults applied)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _parse_value(value)
    return out


class ExperimentConfig:
    """Configuration values merged over :data:`DEFAULTS`."""

    def __init__(self, overrides=None):
        self.values = copy.deepcopy(DEFAULTS)
        for key, value in (overrides or {}).items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown key {key!r}")
            self.values[key] = value

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls(parse_config(fh.read()))

    def __getitem__(self, key):
        return self.values[key]

    def replace(self, **changes):
        """Copy with dotted keys given as ``section__key`` keywords."""
        new = {k.replace("__", "."): v for k, v in changes.items()}
        merged = dict(self.values)
        merged.update(new)
        return ExperimentConfig(merged)

    def chart(self):
        kind = self["surface.kind"]
        if kind == "torus":
            return SurfaceChart.torus(float(self["surface.R"]), float(self["surface.a"]))
        return SurfaceChart(kind)

    def profile(self):
        return ThicknessProfile(self["thickness.preset"], tuple(self["thickness.params"]))

    def potential(self):
        preset = self["potential.preset"]
        if preset == "quartic_double_well":
            return Potential.quartic_double_well()
        if preset == "polynomial":
            if not self["potential.coeffs"]:
                raise ConfigError("potential.coeffs required for a polynomial preset")
            return Potential.from_coeffs(self["potential.coeffs"], *self["potential.constants"])
        raise ConfigError(f"unknown potential preset {preset!r}")

    def grid(self, eps=None):
        return ReferenceGrid(int(self["grid.n1"]), int(self["grid.n2"]), int(self["grid.n3"]),
                             float(self["epsilon"] if eps is None else eps))

    def epsilons(self):
        eps = [float(e) for e in self["study.epsilons"]]
        if len(eps) < 3:
            raise ConfigError("study.epsilons needs at least 3 values")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ConfigError("study.epsilons must be strictly decreasing")
        return eps
