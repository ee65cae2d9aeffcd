"""Run configuration: defaults, JSON file, environment and flag overrides."""

from __future__ import annotations

import json
import math
import os
from collections.abc import Mapping
from datetime import datetime
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal

if TYPE_CHECKING:
    from typing import Self

from platformdirs import user_data_dir
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

APP_NAME = "mls-ecology"
ENV_PREFIX = "MLS_"


class RolloutConfig(BaseModel):
    """Simulation parameters of one rollout."""

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    dt: float = Field(0.1, gt=0)
    T: int = Field(4000, ge=0)
    N_max: int = Field(50, ge=1)
    N_min: int = Field(5, ge=1)
    lam: float = Field(0.3, ge=0, alias="lambda")
    d_b: float = Field(20.0, gt=0)
    q_init: float = Field(50.0, ge=0)  # immortals start in U(-q_init, q_init)^2
    q_max: float = Field(10_000.0, gt=0)
    v_max: float = Field(20.0, gt=0)
    omega_max: float = Field(math.pi / 3, gt=0)
    epsilon: float = Field(0.1, ge=0)
    tau_m: float = Field(0.04, gt=0)
    k_g: float = Field(0.1, ge=0)
    k_e: float = Field(0.2, ge=0)
    k_cs: float = Field(0.004, ge=0)
    k_cu: float = Field(0.04, ge=0)
    gamma: float = Field(0.001, ge=0)
    e_max: float = Field(100.0, gt=0)
    e_g_max: float = Field(4.0, ge=0)
    e_e_max: float = Field(8.0, ge=0)
    e_init_low: float = Field(20.0, ge=0)
    e_init_high: float = Field(50.0, ge=0)
    r: int = Field(11, ge=1)
    d_max: float = Field(300.0, gt=0)
    fov: float = Field(1.5 * math.pi, gt=0, le=2 * math.pi)
    J_init: float = Field(1.0, ge=0)  # immortals' J in U(-J_init, J_init)
    n: int = Field(40, ge=1)
    tau_zbar: float = Field(0.04, gt=0)
    tau_ebar: float = Field(0.04, gt=0)
    eta: float = Field(0.05, ge=0)
    l: int = Field(2, ge=1)
    h: int = Field(16, ge=1)
    e_birth: float = 20.0
    t_birth: int = Field(40, ge=1)
    e_death: float = 2.0
    t_death: int = Field(40, ge=1)
    a_min_old: int = Field(400, ge=0)
    a_max_old: int = Field(600, ge=1)
    mu: float = Field(5.0e-8, ge=0)
    d_spawn: float = Field(20.0, ge=0)
    exchange_mode: Literal["antisymmetric", "net_clip"] = "antisymmetric"
    exchange_positions: Literal["post_move", "pre_move"] = "post_move"

    @field_validator("N_min")
    @classmethod
    def _n_min_fits(cls, value: int, info: ValidationInfo) -> int:
        n_max = info.data.get("N_max")
        if n_max is not None and value > n_max:
            raise ValueError(f"N_min ({value}) must not exceed N_max ({n_max})")
        return value

    @field_validator("e_init_high")
    @classmethod
    def _init_range(cls, value: float, info: ValidationInfo) -> float:
        low = info.data.get("e_init_low")
        if low is not None and value < low:
            raise ValueError(f"e_init_high ({value}) must be >= e_init_low ({low})")
        return value

    @field_validator("e_death")
    @classmethod
    def _death_below_birth(cls, value: float, info: ValidationInfo) -> float:
        e_birth = info.data.get("e_birth")
        if e_birth is not None and value >= e_birth:
            raise ValueError(f"e_death ({value}) must be below e_birth ({e_birth})")
        return value

    @field_validator("a_max_old")
    @classmethod
    def _old_age_window(cls, value: int, info: ValidationInfo) -> int:
        a_min = info.data.get("a_min_old")
        if a_min is not None and value <= a_min:
            raise ValueError(f"a_max_old ({value}) must exceed a_min_old ({a_min})")
        return value

    @property
    def radius(self) -> float:
        return 0.5 * self.d_b


class EvolutionConfig(BaseModel):
    """Group-level CMA-ES settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    M: int = Field(50, ge=2)
    S: int = Field(2, ge=1)
    elite_ratio: float = Field(0.3, gt=0, le=1)
    sigma0: float = Field(0.1, ge=0)
    generations: int = Field(2000, ge=0)
    fixed_scenarios: bool = False
    checkpoint_every: int = Field(50, ge=1)
    eigen_interval: int | None = Field(None, ge=1)  # None: ceil(dim / 10)


class AnalysisConfig(BaseModel):
    """Inference, ablation and smoothing settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    generation_bins: int = Field(5, ge=1)
    step_bins: int = Field(500, ge=1)
    inference_steps: int = Field(30_000, ge=0)
    inference_n_max: int = Field(250, ge=1)
    ablation_steps: int = Field(10_000, ge=0)
    ablation_n_max: int = Field(100, ge=1)
    ablation_noise: float = Field(0.05, ge=0)
    burn_in_steps: int = Field(20_000, ge=0)


class Config(BaseModel):
    """Top-level configuration document."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rollout: RolloutConfig = Field(default_factory=RolloutConfig)
    evolution: EvolutionConfig = Field(default_factory=EvolutionConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)

    def with_overrides(self, section: str, **values: Any) -> Self:
        """Apply non-None overrides to one section, re-validating it."""
        values = {k: v for k, v in values.items() if v is not None}
        if not values:
            return self
        current = getattr(self, section).model_dump(by_alias=True)
        updated = type(getattr(self, section)).model_validate({**current, **values})
        return self.model_copy(update={section: updated})


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, dict[str, str]]:
    """Collect ``MLS_<SECTION>__<FIELD>`` variables into a nested mapping."""
    environ = os.environ if environ is None else environ
    sections = set(Config.model_fields)
    found: dict[str, dict[str, str]] = {}
    for key, value in environ.items():
        if not key.startswith(ENV_PREFIX) or "__" not in key:
            continue
        section, _, name = key[len(ENV_PREFIX) :].partition("__")
        section = section.lower()
        if section not in sections:
            continue
        found.setdefault(section, {})[_field_name(section, name)] = value
    return found


def _field_name(section: str, name: str) -> str:
    """Match an upper-cased env name to the declared field (fields are case-sensitive)."""
    model = Config.model_fields[section].annotation
    assert model is not None
    for field_name, info in model.model_fields.items():
        for candidate in (field_name, info.alias):
            if candidate and candidate.lower() == name.lower():
                return candidate
    return name


def load_config(path: Path | None = None, environ: Mapping[str, str] | None = None) -> Config:
    """Resolve defaults < JSON file < environment."""
    data: dict[str, Any] = json.loads(path.read_text()) if path else {}
    for section, values in env_overrides(environ).items():
        data[section] = {**data.get(section, {}), **values}
    return Config.model_validate(data)


def get_data_dir() -> Path:
    """Get the per-user data directory for mls-ecology."""
    return Path(user_data_dir(APP_NAME))


def default_output_dir(command: str) -> Path:
    """Fresh run directory under the data dir, used when ``--out`` is omitted."""
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    return get_data_dir() / "runs" / f"{command}-{stamp}"
