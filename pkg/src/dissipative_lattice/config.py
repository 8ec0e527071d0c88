"""Experiment configuration: schema, loading, presets and normalization.

Configs are JSON documents.  Every section rejects unknown keys, and
validation errors name the offending field.  The normalized form (all
defaults filled in, keys sorted, two-space indent) is what gets echoed into
result metadata.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .lattice import Boundary, HubbardParams, JumpFamily, JumpKind, LatticeSpec

EXPERIMENTS: dict[str, str] = {
    "exact": "Exact master-equation trajectory on a fixed-N sector (fidelity, purity, condensate fraction)",
    "darkstate": "Dark-state residuals, Liouvillian kernel dimension and steady-state observables",
    "meanfield": "Per-mode Bogoliubov steady state: damping, energy, squeezing, occupation",
    "depletion": "Condensate depletion under repeated doubling of the lattice size",
    "relax": "Condensate build-up n0(t) and the fitted power-law tail",
    "lowdim-steady": "Steady phase correlations in 1D/2D with exponential or power-law fit",
    "lowdim-evolve": "Correlation dynamics after a quench from a disordered state",
    "eta": "Dissipative preparation of the fermionic doublon condensate",
}


class ConfigError(ValueError):
    """Invalid configuration, with a human-readable diagnostic."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LatticeConfig(_Strict):
    d: int = Field(ge=1, le=3)
    M: int = Field(ge=2)
    a: float = Field(default=1.0, gt=0)
    boundary: Boundary = Boundary.PERIODIC

    def spec(self) -> LatticeSpec:
        return LatticeSpec(self.d, self.M, self.a, self.boundary)


class ParamsConfig(_Strict):
    J: float = Field(default=1.0, gt=0)
    U: float = Field(default=0.0, ge=0)
    kappa: float = Field(default=1.0, gt=0)
    n: float = Field(default=1.0, gt=0)
    n0: float | None = None

    def hubbard(self, **overrides) -> HubbardParams:
        values = self.model_dump()
        values.update(overrides)
        return HubbardParams(**values)


class JumpsConfig(_Strict):
    kind: JumpKind = JumpKind.LINK_BEC
    rates: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _known_rates(self):
        allowed = JumpFamily.rate_names(self.kind)
        unknown = sorted(set(self.rates) - set(allowed))
        if unknown:
            raise ValueError(f"unknown rate(s) {unknown} for {self.kind.value}; allowed: {list(allowed)}")
        if any(v < 0 for v in self.rates.values()):
            raise ValueError("rates must be >= 0")
        return self

    def family(self, default_rate: float) -> JumpFamily:
        return JumpFamily.make(self.kind, default_rate=default_rate, **self.rates)


class TimeGrid(_Strict):
    """Either explicit ``values`` or ``num`` points from ``start`` to ``stop``.

    ``values`` may contain ``"inf"`` for the stationary limit.  ``scale``
    multiplies every time, e.g. ``2/(kappa n)`` to convert ``t kappa n / 2``.
    """

    start: float = 0.0
    stop: float = 50.0
    num: int = Field(default=51, ge=1)
    spacing: Literal["linear", "log"] = "linear"
    values: list[float] | None = None
    scale: Literal["1", "2/(kappa n)"] = "1"

    @field_validator("values", mode="before")
    @classmethod
    def _parse_inf(cls, v):
        if v is None:
            return v
        return [math.inf if isinstance(x, str) and x.lower() in ("inf", "infinity") else x for x in v]

    def grid(self, params: HubbardParams | None = None) -> np.ndarray:
        if self.values is not None:
            t = np.array(self.values, dtype=float)
        elif self.spacing == "log":
            if self.start <= 0:
                raise ConfigError("times.start must be > 0 for log spacing")
            t = np.geomspace(self.start, self.stop, self.num)
        else:
            t = np.linspace(self.start, self.stop, self.num)
        if self.scale == "2/(kappa n)":
            t = t * 2 / (params.kappa * params.n)
        return t


class SeparationGrid(_Strict):
    start: float = 0.0
    stop: float = 64.0
    num: int = Field(default=65, ge=2)
    spacing: Literal["linear", "log"] = "linear"

    def grid(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.num)
        return np.linspace(self.start, self.stop, self.num)


class InitialConfig(_Strict):
    state: Literal["maximally-mixed", "random-pure", "target"] = "maximally-mixed"
    xi: float = Field(default=2.0, gt=0)
    occupation: float | None = None
    anomalous_re: float = 0.0
    anomalous_im: float = 0.0


class QuadratureConfig(_Strict):
    kind: Literal["lattice", "radial"] = "lattice"
    x_max: float = Field(default=512.0, gt=0)


class OutputConfig(_Strict):
    formats: list[Literal["csv", "jsonl"]] = Field(default_factory=lambda: ["csv", "jsonl"])


class ExperimentConfig(_Strict):
    experiment: Literal[
        "exact", "darkstate", "meanfield", "depletion", "relax", "lowdim-steady", "lowdim-evolve", "eta"
    ]
    lattice: LatticeConfig
    params: ParamsConfig = ParamsConfig()
    jumps: JumpsConfig = JumpsConfig()
    N: int = Field(default=2, ge=0)
    times: TimeGrid = TimeGrid()
    separations: SeparationGrid = SeparationGrid()
    initial: InitialConfig = InitialConfig()
    quadrature: QuadratureConfig = QuadratureConfig()
    fit_window: tuple[float, float] | None = None
    front_window: tuple[float, float] | None = None
    doublings: int = Field(default=3, ge=1)
    sweep_U: list[float] | None = None
    sweep_M: list[int] | None = None
    seed: int = 0
    output: OutputConfig = OutputConfig()

    @model_validator(mode="before")
    @classmethod
    def _default_jumps(cls, data):
        if isinstance(data, dict) and data.get("experiment") == "eta" and "jumps" not in data:
            data = {**data, "jumps": {"kind": "eta-fermion"}}
        return data

    @model_validator(mode="after")
    def _consistent(self):
        if self.experiment == "eta" and self.jumps.kind is not JumpKind.ETA_FERMION:
            raise ValueError("experiment 'eta' needs jumps.kind = 'eta-fermion'")
        if self.experiment in ("exact", "darkstate") and self.jumps.kind is JumpKind.ETA_FERMION:
            raise ValueError(f"experiment '{self.experiment}' runs bosons; use experiment 'eta' for eta-fermion")
        return self


def normalized_json(config: ExperimentConfig) -> str:
    """Canonical text of a config: defaults filled, keys sorted, trailing newline."""
    data = config.model_dump(mode="json")
    return json.dumps(_encode(data), sort_keys=True, indent=2) + "\n"


def _encode(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return obj


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"  {loc}: {e['msg']}")
    return "invalid configuration:\n" + "\n".join(lines)


def parse_config(data: dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_validation(err)) from None


def load_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parse JSON text; an empty document counts as ``{}``."""
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{source}:{err.lineno}:{err.colno}: {err.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return data


def load_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
    return load_config_text(text, str(path))


def deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = v
    return out


_FIG2_U = 8 * math.pi / 18

PRESETS: dict[str, dict[str, Any]] = {
    "dark-unique": {
        "experiment": "exact",
        "lattice": {"d": 1, "M": 3, "boundary": "periodic"},
        "params": {"U": 0.0, "kappa": 1.0},
        "N": 2,
        "times": {"start": 0.0, "stop": 50.0, "num": 51},
    },
    "meanfield-modes": {
        "experiment": "meanfield",
        "lattice": {"d": 1, "M": 64},
        "params": {"U": 0.1, "kappa": 0.1},
    },
    "depletion3d": {
        "experiment": "depletion",
        "lattice": {"d": 3, "M": 16},
        "params": {"U": 0.1, "kappa": 1.0},
        "doublings": 1,
    },
    "depletion-lowdim": {
        "experiment": "depletion",
        "lattice": {"d": 1, "M": 16},
        "params": {"U": 0.1, "kappa": 1.0},
        "doublings": 3,
    },
    "relax-tails": {
        "experiment": "relax",
        "lattice": {"d": 1, "M": 512},
        "params": {"U": 0.5, "kappa": 1.0},
        "sweep_U": [0.5, 0.0],
        "times": {"start": 0.01, "stop": 100.0, "num": 600, "spacing": "log"},
    },
    "lowdim-2d": {
        "experiment": "lowdim-steady",
        "lattice": {"d": 2, "M": 128},
        "params": {"U": _FIG2_U, "kappa": 0.01},
        "separations": {"start": 0.0, "stop": 64.0, "num": 65},
    },
    "lowdim-1d": {
        "experiment": "lowdim-steady",
        "lattice": {"d": 1, "M": 1024},
        "params": {"U": 0.1, "kappa": 0.1},
        "separations": {"start": 0.0, "stop": 512.0, "num": 513},
    },
    "fig2": {
        "experiment": "lowdim-evolve",
        "lattice": {"d": 2, "M": 256},
        "params": {"U": _FIG2_U, "kappa": 0.1},
        "quadrature": {"kind": "radial", "x_max": 2500.0},
        "initial": {"xi": 2.0},
        "times": {"values": [0, 10, 100, 1000, 10000, 100000, 1000000, "inf"], "scale": "2/(kappa n)"},
        "separations": {"start": 0.25, "stop": 2500.0, "num": 160, "spacing": "log"},
        "front_window": [200.0, 2.0e7],
    },
    "eta-small": {
        "experiment": "eta",
        "lattice": {"d": 1, "M": 2, "boundary": "open"},
        "params": {"U": 1.0, "kappa": 1.0},
        "jumps": {"kind": "eta-fermion"},
        "N": 1,
        "sweep_M": [2, 3],
        "times": {"start": 0.0, "stop": 100.0, "num": 101},
    },
}
