"""Scenario configuration: JSON schema, parsing with located diagnostics, canonical emission."""
from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError

SCHEMA_VERSION = "1"

Entry = Union[float, tuple[float, float]]
Matrix = list[list[Entry]]


def to_complex_matrix(m: Matrix) -> np.ndarray:
    """Entries are real numbers or [re, im] pairs."""
    rows = [[complex(e[0], e[1]) if isinstance(e, (tuple, list)) else complex(e) for e in row] for row in m]
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValueError("matrix must be square and non-empty")
    return np.array(rows, dtype=complex)


def _check_matrix(m: Matrix) -> Matrix:
    to_complex_matrix(m)
    return m


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class System(_Model):
    dim: int = Field(ge=2)
    hbar_eff: float = Field(default=1.0, gt=0)
    mass: float = Field(default=1.0, gt=0)
    omega0: float = Field(default=1.0, gt=0)


class ConstantForm(_Model):
    form: Literal["constant"]
    h: Matrix
    _m = field_validator("h")(_check_matrix)


class QuenchForm(_Model):
    form: Literal["quench"]
    h0: Matrix
    h1: Matrix
    switch_time: float = Field(default=0.0, ge=0)
    _m = field_validator("h0", "h1")(_check_matrix)


class RampForm(_Model):
    form: Literal["linear_ramp_oscillator"]
    omega1: float = Field(gt=0)


class TableForm(_Model):
    form: Literal["piecewise_table"]
    times: list[float] = Field(min_length=1)
    matrices: list[Matrix] = Field(min_length=1)

    @field_validator("matrices")
    @classmethod
    def _each(cls, v):
        for m in v:
            _check_matrix(m)
        return v


class DriveForm(_Model):
    form: Literal["two_level_drive"]
    base: Matrix
    drive: Matrix
    envelope_times: list[float] = Field(min_length=2)
    envelope_values: list[float] = Field(min_length=2)
    _m = field_validator("base", "drive")(_check_matrix)


HamiltonianForm = Annotated[
    Union[ConstantForm, QuenchForm, RampForm, TableForm, DriveForm], Field(discriminator="form")
]


class CoherentState(_Model):
    kind: Literal["coherent"]
    alpha: tuple[float, float]


class PhasePointState(_Model):
    """Coherent state centred at (x0, p0) in phase space."""

    kind: Literal["coherent_phase_point"]
    x0: float
    p0: float


class FockStateCfg(_Model):
    kind: Literal["fock"]
    n: int = Field(ge=0)


class KetState(_Model):
    kind: Literal["ket"]
    amplitudes: list[Entry] = Field(min_length=1)


class MatrixState(_Model):
    kind: Literal["matrix"]
    matrix: Matrix
    _m = field_validator("matrix")(_check_matrix)


class MixtureComponent(_Model):
    weight: float = Field(ge=0)
    state: "StateSpec"


class MixtureState(_Model):
    kind: Literal["mixture"]
    components: list[MixtureComponent] = Field(min_length=1)

    @model_validator(mode="after")
    def _weights(self):
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mixture weights sum to {total}, expected 1")
        return self


StateSpec = Annotated[
    Union[CoherentState, PhasePointState, FockStateCfg, KetState, MatrixState, MixtureState],
    Field(discriminator="kind"),
]
MixtureComponent.model_rebuild()


class Protocol(_Model):
    tau: Optional[float] = Field(default=None, ge=0)
    steps: Optional[int] = Field(default=None, ge=1)


class DeltaCfg(_Model):
    form: Literal["delta"]
    x0: float
    p0: float


class GaussianCfg(_Model):
    form: Literal["gaussian"]
    x0: float
    p0: float
    sigma_x: float = Field(gt=0)
    sigma_p: float = Field(gt=0)


ClassicalCfg = Annotated[Union[DeltaCfg, GaussianCfg], Field(discriminator="form")]


class Analysis(_Model):
    povms: list[Literal["TPM", "OBS"]] = Field(default_factory=lambda: ["TPM", "OBS"], min_length=1)
    classical: Optional[ClassicalCfg] = None
    n_samples: int = Field(default=10_000, ge=1)
    bin_width: Optional[float] = Field(default=None, gt=0)
    merge_tol: Optional[float] = Field(default=None, gt=0)
    align_tol: Optional[float] = Field(default=None, gt=0)
    seed: int = 0
    max_order: int = Field(default=8, ge=1, le=8)
    max_degree: int = Field(default=4, ge=0, le=4)


class Result1Sweep(_Model):
    kind: Literal["result1"]
    amplitudes: list[float] = Field(min_length=1)
    time_points: int = Field(default=65, ge=2)

    @field_validator("amplitudes")
    @classmethod
    def _positive(cls, v):
        if any(a <= 0 for a in v):
            raise ValueError("drive amplitudes must be positive")
        return v


class Result2Sweep(_Model):
    kind: Literal["result2"]
    hbar_values: list[float] = Field(min_length=1)
    x0: float = 1.0
    p0: float = 1.0
    dense_dim_limit: int = Field(default=2500, ge=2)
    bin_fraction: float = Field(default=0.05, gt=0)

    @field_validator("hbar_values")
    @classmethod
    def _positive(cls, v):
        if any(h <= 0 for h in v):
            raise ValueError("hbar values must be positive")
        return v


SweepSpec = Annotated[Union[Result1Sweep, Result2Sweep], Field(discriminator="kind")]


class ScenarioConfig(_Model):
    schema_version: str
    system: System
    hamiltonian: HamiltonianForm
    state: Optional[StateSpec] = None
    protocol: Protocol = Protocol()
    analysis: Analysis = Analysis()
    sweep: Optional[SweepSpec] = None

    @field_validator("schema_version")
    @classmethod
    def _version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v!r}, expected {SCHEMA_VERSION!r}")
        return v

    @model_validator(mode="after")
    def _dims(self):
        d = self.system.dim
        h = self.hamiltonian
        mats = {
            "constant": lambda: [h.h],
            "quench": lambda: [h.h0, h.h1],
            "piecewise_table": lambda: h.matrices,
            "two_level_drive": lambda: [h.base, h.drive],
            "linear_ramp_oscillator": lambda: [],
        }[h.form]()
        for m in mats:
            if len(m) != d:
                raise ValueError(f"hamiltonian matrix is {len(m)}x{len(m)} but system.dim is {d}")
        if h.form == "piecewise_table" and len(h.times) != len(h.matrices):
            raise ValueError("piecewise_table needs one matrix per time")
        if h.form == "two_level_drive" and len(h.envelope_times) != len(h.envelope_values):
            raise ValueError("envelope_times and envelope_values differ in length")
        if h.form in ("constant", "linear_ramp_oscillator") and self.protocol.tau is None:
            raise ValueError(f"protocol.tau is required for the {h.form} form")
        _check_state_dim(self.state, d)
        return self


def _check_state_dim(state, d: int) -> None:
    if state is None:
        return
    if state.kind == "ket" and len(state.amplitudes) != d:
        raise ValueError(f"ket has {len(state.amplitudes)} amplitudes but system.dim is {d}")
    if state.kind == "matrix" and len(state.matrix) != d:
        raise ValueError(f"state matrix is {len(state.matrix)}x{len(state.matrix)} but system.dim is {d}")
    if state.kind == "fock" and state.n >= d:
        raise ValueError(f"Fock level {state.n} outside truncation {d}")
    if state.kind == "mixture":
        for c in state.components:
            _check_state_dim(c.state, d)


def _line_of(text: str, loc: tuple) -> int | None:
    """Best-effort line number of the innermost named key of ``loc``."""
    keys = [k for k in loc if isinstance(k, str)]
    for key in reversed(keys):
        m = re.search(r'"%s"\s*:' % re.escape(key), text)
        if m:
            return text.count("\n", 0, m.start()) + 1
    return None


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = tuple(err["loc"])
            field = ".".join(str(k) for k in loc) or "<root>"
            line = _line_of(text, loc)
            where = f"{source}:{line}" if line else source
            lines.append(f"{where}: field '{field}': {err['msg']}")
        raise ConfigError("\n".join(lines)) from exc


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config: {exc}") from exc
    return parse_config(text, str(p))


def emit_config(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.model_dump(mode="json", exclude_none=True), indent=2) + "\n"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def config_hash(cfg_or_dict) -> str:
    data = cfg_or_dict.model_dump(mode="json") if isinstance(cfg_or_dict, BaseModel) else cfg_or_dict
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()[:16]


def schema() -> dict:
    return ScenarioConfig.model_json_schema()
