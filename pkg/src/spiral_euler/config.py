"""Flat dotted-key run configuration: parsing, validation, canonical echo."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ParameterError
from .grid_space import AngularSignal, SolverParams

__all__ = ["RunConfig", "load_config", "parse_config_text"]

_DEFAULTS = {
    "mu": None,  # required
    "N": None,  # required
    "p": 1.0,
    "harmonics": 3,
    "grid.points": 257,
    "grid.scale": 1.0,
    "seed": 42,
    "omega.kind": "constant_plus_cos",
    "omega.amplitude": 0.01,
    "omega.harmonic": None,  # defaults to N
    "omega.coeffs": "",
    "target.amplitude": 0.01,
    "target.harmonic": None,
    "solver.tol": 1e-10,
    "solver.max_iter": 100,
    "solver.backend": "chord",
    "solver.epsilon_cap": 0.1,
    "solver.outer_tol": 1e-10,
    "solver.outer_max_iter": 50,
    "output.dir": "out",
    "output.formats": "json,csv,svg",
    "verify.suites": "selfsim,lp,weak,divfree,poisson",
    "reconstruct.t": 1.0,
    "reconstruct.samples": 200,
}

_INT_KEYS = {
    "N",
    "harmonics",
    "grid.points",
    "seed",
    "omega.harmonic",
    "target.harmonic",
    "solver.max_iter",
    "solver.outer_max_iter",
    "reconstruct.samples",
}
_FLOAT_KEYS = {
    "mu",
    "p",
    "grid.scale",
    "omega.amplitude",
    "target.amplitude",
    "solver.tol",
    "solver.epsilon_cap",
    "solver.outer_tol",
    "reconstruct.t",
}


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration with all defaults filled."""

    values: dict
    params: SolverParams = field(compare=False, default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(
            self,
            "params",
            SolverParams(
                mu=self.values["mu"],
                N=self.values["N"],
                p=self.values["p"],
                harmonics=self.values["harmonics"],
                grid_points=self.values["grid.points"],
                grid_scale=self.values["grid.scale"],
            ),
        )

    def __getitem__(self, key: str):
        return self.values[key]

    def omega(self) -> AngularSignal:
        kind = self.values["omega.kind"]
        if kind == "constant_plus_cos":
            return AngularSignal.constant_plus_cosine(
                self.params, self.values["omega.amplitude"], self.values["omega.harmonic"]
            )
        if kind == "coeffs":
            coeffs = {}
            for chunk in self.values["omega.coeffs"].split(","):
                chunk = chunk.strip()
                if not chunk:
                    continue
                n_s, re_s, im_s = chunk.split(":")
                coeffs[int(n_s)] = complex(float(re_s), float(im_s))
            return AngularSignal(self.params, coeffs)
        if kind == "match":
            raise ConfigError("omega.kind = match has no direct angular factor; use solve")
        raise ConfigError(f"unknown omega.kind {kind!r}")

    def target(self) -> AngularSignal:
        from .solver import base_vorticity_factor

        w0 = base_vorticity_factor(self.params.mu)
        h = self.values["target.harmonic"]
        amp = self.values["target.amplitude"] * w0
        return AngularSignal.constant_plus_cosine(self.params, amp, h).plus(
            AngularSignal(self.params, {0: w0 - self.params.base_omega})
        )

    def effective_text(self) -> str:
        """Canonical echo: sorted key = value lines."""
        lines = [f"{k} = {self.values[k]}" for k in sorted(self.values)]
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Hash of the result-relevant configuration.

        The output location does not influence any computed value, so it is
        left out: identical settings give byte-identical artifacts wherever
        they land.
        """
        lines = [
            f"{k} = {self.values[k]}" for k in sorted(self.values) if k != "output.dir"
        ]
        text = "\n".join(lines) + "\n"
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def parse_config_text(text: str, overrides: dict | None = None) -> RunConfig:
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = (lineno, value)

    values = dict(_DEFAULTS)
    for key, (lineno, value) in raw.items():
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    if overrides:
        for key, val in overrides.items():
            if key not in _DEFAULTS:
                raise ConfigError(f"unknown override key {key!r}")
            values[key] = val

    for required in ("mu", "N"):
        if values[required] is None:
            raise ConfigError(f"missing required key {required!r}")
    if values["omega.harmonic"] is None:
        values["omega.harmonic"] = values["N"]
    if values["target.harmonic"] is None:
        values["target.harmonic"] = values["N"]

    try:
        cfg = RunConfig(values=values)
    except ParameterError as exc:
        raise ConfigError(f"invalid parameters: {exc}") from exc
    for key in ("omega.harmonic", "target.harmonic"):
        h = values[key]
        if h % values["N"] != 0 or h == 0:
            raise ConfigError(f"{key} = {h} is not a nonzero multiple of N = {values['N']}")
    if values["omega.kind"] not in ("constant_plus_cos", "coeffs", "match"):
        raise ConfigError(f"omega.kind must be constant_plus_cos, coeffs or match")
    if values["solver.backend"] not in ("chord", "fd"):
        raise ConfigError(f"solver.backend must be chord or fd")
    formats = set(values["output.formats"].split(","))
    if not formats <= {"json", "csv", "svg"}:
        raise ConfigError(f"output.formats must be a subset of json,csv,svg")
    return cfg


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Read and validate a flat key = value configuration file."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"configuration file {path} does not exist")
    return parse_config_text(p.read_text(), overrides)
