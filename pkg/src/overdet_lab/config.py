"""
Run configuration: packaged defaults, user files and command-line overrides.

Sources are merged section by section in increasing precedence:
settings.json next to this module, a user .json/.yaml file, then flags.
"""

import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import psutil
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .constants import (
    DEFAULT_AMPLITUDE_CAP,
    DEFAULT_BETA_MARGIN,
    DEFAULT_C4_CAP,
    DEFAULT_N_R,
    DEFAULT_N_THETA,
    DEFAULT_SIGMA_MARGIN,
    DEFAULT_SWEEP_EPSILONS,
    DEFAULT_SWEEP_PS,
    DEFAULT_TWO_STAR,
    SHAPE_PRESETS,
    THREADS_ENV_VAR,
    DefaultTolerances,
    ErrorMessages,
    Limits,
)
from .geometry import BoundaryShape, Mode

logger = logging.getLogger(__name__)

SETTINGS_PATH = Path(__file__).with_name('settings.json')


class ModeSpec(BaseModel):
    model_config = ConfigDict(extra='forbid')
    k: int = Field(..., ge=1)
    a: float = 0.0
    b: float = 0.0


class ShapeSpec(BaseModel):
    """Either a preset family name with an amplitude, or explicit modes."""
    model_config = ConfigDict(extra='forbid')
    preset: Optional[str] = None
    epsilon: float = Field(0.0, ge=0)
    modes: List[ModeSpec] = Field(default_factory=list)

    @field_validator('preset')
    @classmethod
    def validate_preset(cls, v):
        if v is not None and v not in SHAPE_PRESETS:
            raise ValueError(ErrorMessages.UNKNOWN_PRESET.format(
                name=v, choices=", ".join(sorted(SHAPE_PRESETS))))
        return v

    def to_shape(self) -> BoundaryShape:
        if self.preset is not None:
            return BoundaryShape.preset(self.preset, self.epsilon)
        return BoundaryShape(self.epsilon, tuple(Mode(m.k, m.a, m.b) for m in self.modes))


class Resolution(BaseModel):
    model_config = ConfigDict(extra='forbid')
    n_r: int = Field(DEFAULT_N_R, ge=Limits.MIN_N_R, le=Limits.MAX_N_R)
    n_theta: int = Field(DEFAULT_N_THETA, ge=Limits.MIN_N_THETA, le=Limits.MAX_N_THETA)

    @field_validator('n_theta')
    @classmethod
    def validate_even(cls, v):
        if v % 2:
            raise ValueError(ErrorMessages.ODD_N_THETA.format(value=v))
        return v

    def doubled(self) -> "Resolution":
        return Resolution(n_r=min(2 * self.n_r, Limits.MAX_N_R),
                          n_theta=min(2 * self.n_theta, Limits.MAX_N_THETA))


class Tolerances(BaseModel):
    """Pass/fail thresholds. Residuals of fourth and higher derivatives are taken on the core."""
    model_config = ConfigDict(extra='forbid')
    biharmonic_interior: float = Field(DefaultTolerances.BIHARMONIC_INTERIOR, gt=0)
    torsion_interior: float = Field(DefaultTolerances.TORSION_INTERIOR, gt=0)
    boundary_value: float = Field(DefaultTolerances.BOUNDARY_VALUE, gt=0)
    boundary_flux: float = Field(DefaultTolerances.BOUNDARY_FLUX, gt=0)
    pucci_serrin: float = Field(DefaultTolerances.PUCCI_SERRIN, gt=0)
    main_identity: float = Field(DefaultTolerances.MAIN_IDENTITY, gt=0)
    harmonic_form: float = Field(DefaultTolerances.HARMONIC_FORM, gt=0)
    energy_balance: float = Field(DefaultTolerances.ENERGY_BALANCE, gt=0)
    torsion_identity: float = Field(DefaultTolerances.TORSION_IDENTITY, gt=0)
    zero_flux: float = Field(DefaultTolerances.ZERO_FLUX, gt=0)
    lhs_agreement: float = Field(DefaultTolerances.LHS_AGREEMENT, gt=0)
    deficit_identity: float = Field(DefaultTolerances.DEFICIT_IDENTITY, gt=0)
    laplace_q: float = Field(DefaultTolerances.LAPLACE_Q, gt=0)
    bilaplace_q: float = Field(DefaultTolerances.BILAPLACE_Q, gt=0)
    harmonicity: float = Field(DefaultTolerances.HARMONICITY, gt=0)
    gradient_at_z: float = Field(DefaultTolerances.GRADIENT_AT_Z, gt=0)
    mean_value: float = Field(DefaultTolerances.MEAN_VALUE, gt=0)
    gap_reconstruction: float = Field(DefaultTolerances.GAP_RECONSTRUCTION, gt=0)
    inequality: float = Field(DefaultTolerances.INEQUALITY, gt=0)
    certificate: float = Field(DefaultTolerances.CERTIFICATE, gt=0)
    positivity: float = Field(DefaultTolerances.POSITIVITY, gt=0)
    identity_absolute: float = Field(DefaultTolerances.IDENTITY_ABSOLUTE, gt=0)
    invariance: float = Field(DefaultTolerances.INVARIANCE, gt=0)
    core_distance: float = Field(DefaultTolerances.CORE_DISTANCE, gt=0, lt=1)


class Margins(BaseModel):
    model_config = ConfigDict(extra='forbid')
    sigma: float = Field(DEFAULT_SIGMA_MARGIN, ge=0, lt=0.25)
    beta: float = Field(DEFAULT_BETA_MARGIN, ge=0, lt=0.25)


class ClosenessCaps(BaseModel):
    model_config = ConfigDict(extra='forbid')
    amplitude: float = Field(DEFAULT_AMPLITUDE_CAP, gt=0)
    c4: float = Field(DEFAULT_C4_CAP, gt=0)


def _parse_p(value: Union[str, float, int]) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ('inf', 'infinity', '∞'):
            return math.inf
        value = float(value)
    return float(value)


class SweepSettings(BaseModel):
    model_config = ConfigDict(extra='forbid')
    family: str = 'cos2'
    epsilons: List[float] = Field(default_factory=lambda: list(DEFAULT_SWEEP_EPSILONS))
    ps: List[float] = Field(default_factory=lambda: list(DEFAULT_SWEEP_PS))

    @field_validator('ps', mode='before')
    @classmethod
    def parse_ps(cls, v):
        return [_parse_p(p) for p in v]

    @field_validator('ps')
    @classmethod
    def validate_ps(cls, v):
        for p in v:
            if math.isnan(p) or p < Limits.MIN_P:
                raise ValueError(ErrorMessages.INVALID_P.format(p=p))
        return v

    @field_validator('epsilons')
    @classmethod
    def validate_epsilons(cls, v):
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError(ErrorMessages.DECREASING_EPSILONS)
        if any(e <= 0 for e in v):
            raise ValueError("sweep epsilons must be positive")
        return v


class RunConfig(BaseModel):
    """Everything a command needs; invalid values raise pydantic.ValidationError."""
    model_config = ConfigDict(extra='ignore')
    shape: ShapeSpec = Field(default_factory=ShapeSpec)
    resolution: Resolution = Field(default_factory=Resolution)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    margins: Margins = Field(default_factory=Margins)
    caps: ClosenessCaps = Field(default_factory=ClosenessCaps)
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    c_choice: Literal['mean', 'c0', 'midrange'] = 'mean'
    two_star: float = Field(DEFAULT_TWO_STAR, gt=2)
    seed: int = 0
    output_dir: str = 'out'

    @model_validator(mode='after')
    def validate_resolution_covers_shape(self):
        required = 4 * max((m.k for m in self.shape.modes), default=0)
        if self.resolution.n_theta < required:
            raise ValueError(ErrorMessages.UNDER_RESOLVED.format(
                n_theta=self.resolution.n_theta, required=required))
        return self


def merge_sections(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    """Merge `update` into `base` one section deep; unknown sections are ignored."""
    merged = {key: (dict(value) if isinstance(value, dict) else value) for key, value in base.items()}
    for section, values in update.items():
        if section not in merged:
            logger.warning("Ignoring unknown config section '%s'", section)
            continue
        if isinstance(merged[section], dict) and isinstance(values, dict):
            merged[section].update(values)
        else:
            merged[section] = values
    return merged


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    with open(path, 'r', encoding='utf-8') as f:
        if path.suffix.lower() in ('.yaml', '.yml'):
            data = yaml.safe_load(f) or {}
        else:
            data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must contain a mapping")
    return data


def default_settings() -> Dict[str, Any]:
    """Packaged defaults, falling back to the model defaults when the file is absent."""
    defaults = RunConfig().model_dump()
    if SETTINGS_PATH.exists():
        defaults = merge_sections(defaults, read_config_file(SETTINGS_PATH))
    return defaults


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    settings = default_settings()
    if path is not None:
        settings = merge_sections(settings, read_config_file(path))
        logger.info("Loaded config from %s", path)
    if overrides:
        settings = merge_sections(settings, overrides)
    return RunConfig.model_validate(settings)


def resolve_threads() -> int:
    """Worker count from OVERDET_LAB_THREADS (0 = serial), default the physical core count."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is not None and raw.strip():
        threads = int(raw)
        if threads < 0:
            raise ValueError(f"{THREADS_ENV_VAR} must be >= 0, got {threads}")
        return threads
    return psutil.cpu_count(logical=False) or 1
