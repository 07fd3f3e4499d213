"""Experiment configuration: TOML files validated against a versioned schema."""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bounds import ALPHA_MAX, beta_max
from .ids import geometric_grid
from .potentials import Indicator, SingleSiteModel, Tabulated, bump_profile
from .randomness import CouplingDistribution, mean_cutoff

SCHEMA_VERSION = 1


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DistributionConfig(_Section):
    kind: Literal["bernoulli", "uniform", "discrete"]
    p: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    values: list[float] = []
    weights: list[float] = []
    lower: Optional[float] = None
    upper: Optional[float] = None

    @model_validator(mode="after")
    def _build(self):
        # surfaces CouplingDistribution's parameter checks as schema errors
        self.build()
        return self

    def build(self) -> CouplingDistribution:
        return CouplingDistribution(
            self.kind, self.p, self.a, self.b, tuple(self.values), tuple(self.weights), self.lower, self.upper
        )


class ModelConfig(_Section):
    kind: Literal["alloy", "smooth_breather", "characteristic_breather", "tabulated"] = "characteristic_breather"
    profile: Literal["indicator", "bump"] = "indicator"
    support: tuple[float, float] = (-0.5, 0.5)
    height: float = 1.0
    csv: Optional[str] = None
    lam_minus: float = 0.0
    lam_plus: float = 1.0

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "tabulated" and not self.csv:
            raise ValueError("tabulated model needs 'csv' (two-column x, f(x) file)")
        if self.kind == "smooth_breather" and not self.lam_minus > 0:
            raise ValueError("smooth_breather needs lam_minus > 0")
        return self

    def build(self) -> SingleSiteModel:
        if self.kind == "characteristic_breather":
            return SingleSiteModel.characteristic_breather()
        if self.kind == "tabulated":
            return SingleSiteModel.tabulated(Tabulated.from_csv(self.csv), self.lam_minus, self.lam_plus)
        prof = bump_profile() if self.profile == "bump" else Indicator(*self.support, height=self.height)
        if self.kind == "alloy":
            return SingleSiteModel.alloy(prof, self.lam_minus, self.lam_plus)
        return SingleSiteModel.smooth_breather(prof, self.lam_minus, self.lam_plus)


class GridConfig(_Section):
    kind: Literal["geometric", "linear", "list"] = "geometric"
    e_max: Optional[float] = None
    ratio: Optional[float] = None
    count: Optional[int] = None
    e_min: Optional[float] = None
    values: list[float] = []

    @model_validator(mode="after")
    def _check(self):
        self.energies()
        return self

    def energies(self) -> np.ndarray:
        if self.kind == "list":
            if not self.values:
                raise ValueError("list grid needs 'values'")
            return np.array(sorted(self.values), dtype=float)
        if self.kind == "geometric":
            if self.e_max is None or self.ratio is None or self.count is None:
                raise ValueError("geometric grid needs e_max, ratio, count")
            return geometric_grid(self.e_max, self.ratio, self.count)
        if self.e_min is None or self.e_max is None or not self.count or self.e_min > self.e_max:
            raise ValueError("linear grid needs e_min <= e_max and count >= 1")
        return np.linspace(self.e_min, self.e_max, self.count)


class IdsSection(_Section):
    L: int = Field(ge=1)
    m: int = Field(default=32, ge=2)
    samples: int = Field(ge=1)
    seed: int = 0
    shift: float = 0.0
    grid: GridConfig


class FitSection(_Section):
    csv: str
    E0: float = 0.0


def _alpha_guard(v: float) -> float:
    if not 0 < v <= ALPHA_MAX:
        raise ValueError(f"alpha must lie in (0, pi^2 = {ALPHA_MAX:.6f}]: larger alpha breaks E2(H0) >= 3 alpha / 4L^2")
    return v


class BoundsSection(_Section):
    alpha: float = 1.0
    L_values: list[int] = Field(default_factory=lambda: list(range(2, 21)))
    samples: int = Field(ge=1)
    seed: int = 0
    m: Optional[int] = Field(default=None, ge=2)

    check_alpha = field_validator("alpha")(_alpha_guard)

    @field_validator("L_values")
    @classmethod
    def _positive(cls, v):
        if not v or min(v) < 1:
            raise ValueError("L_values must be non-empty positive integers")
        return v


class CertifySection(_Section):
    alpha: float = 1.0
    beta: float = Field(gt=0)
    energies: GridConfig
    sharp: bool = False

    check_alpha = field_validator("alpha")(_alpha_guard)


class CheckHypSection(_Section):
    n_lam: int = Field(default=64, ge=16)
    n_x: int = Field(default=64, ge=16)


class LdSection(_Section):
    L_values: list[int]
    samples: int = Field(ge=1)
    seed: int = 0
    threshold: Optional[float] = None


class Config(_Section):
    schema_version: Literal[1] = SCHEMA_VERSION
    distribution: Optional[DistributionConfig] = None
    model: ModelConfig = ModelConfig()
    ids: Optional[IdsSection] = None
    fit: Optional[FitSection] = None
    bounds: Optional[BoundsSection] = None
    certify: Optional[CertifySection] = None
    check_hyp: Optional[CheckHypSection] = Field(default=None, alias="check-hyp")
    ld: Optional[LdSection] = None

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @model_validator(mode="after")
    def _beta_guard(self):
        # a law degenerate at 0 has no beta_max; certify reports it per row instead
        if self.certify is not None and self.distribution is not None and mean_cutoff(self.distribution.build()) > 0:
            bmax = beta_max(self.certify.alpha, self.distribution.build())
            if self.certify.beta > bmax:
                raise ValueError(
                    f"certify.beta = {self.certify.beta} exceeds beta_max = sqrt(alpha E{{min(lambda,1/2)}} / 10) = {bmax:.6f}"
                )
        return self

    def section(self, name: str):
        attr = name.replace("-", "_")
        value = getattr(self, attr)
        if value is None:
            raise ValueError(f"config has no [{name}] section")
        return value

    def resolved(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


def config_hash(subcommand: str, resolved: dict) -> str:
    blob = json.dumps({"subcommand": subcommand, "config": resolved}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(raw: dict, item: str) -> None:
    if "=" not in item:
        raise ValueError(f"override {item!r} is not of the form key=value")
    key, value = item.split("=", 1)
    parts = key.strip().split(".")
    node = raw
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ValueError(f"override {key!r}: {p!r} is not a table")
    node[parts[-1]] = _parse_value(value.strip())


def load_raw(path) -> dict:
    """Read a TOML config, or the ``config`` entry of a run's metadata JSON."""
    path = Path(path)
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        return data["config"] if "config" in data else data
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def load_config(path=None, overrides=(), raw: dict | None = None) -> Config:
    raw = copy.deepcopy(raw) if raw is not None else (load_raw(path) if path else {})
    for item in overrides:
        apply_override(raw, item)
    return Config.model_validate(raw)

