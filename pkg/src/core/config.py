"""
Checker configuration.

Settings come from a nested JSON file (config/checker_config.json by
default). Command-line flags override individual keys after loading.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, ValidationError

from src.core.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "config" / "checker_config.json"


class SymbolicSettings(BaseModel):
    exp_terms: int = Field(30, ge=1)
    exp_terms_cap: int = Field(240, ge=1)


class SosSettings(BaseModel):
    multiplier_degree: int = Field(2, ge=0)
    multiplier_degree_cap: int = Field(4, ge=0)
    max_products: int = Field(6, ge=0)
    denominator_bounds: List[int] = [10**4, 10**6, 10**9, 2**48]
    prune_tolerance: float = Field(1e-7, gt=0)
    margin_tolerance: float = Field(1e-10, gt=0)
    max_rounds: int = Field(6, ge=1)
    cofactor_degree: int = Field(1, ge=0)


class FalsifySettings(BaseModel):
    budget: int = Field(20000, ge=0)
    box: float = Field(10.0, gt=0)
    max_binary_exponent: int = Field(60, ge=0)
    zero_probability: float = Field(0.2, ge=0, le=1)
    batch: int = Field(2048, ge=1)


class SynthesisSettings(BaseModel):
    slack: float = Field(1e-3, gt=0)
    denominator_bound: int = Field(10**6, ge=1)
    template_degree: int = Field(2, ge=2)
    trace_bound: float = Field(1e3, gt=0)
    truncation_threshold: float = Field(1e-10, ge=0)


class SimulationSettings(BaseModel):
    dt: float = Field(1e-3, gt=0)
    horizon: float = Field(20.0, gt=0)
    bisection_iterations: int = Field(60, ge=1)
    event_tolerance: float = Field(1e-9, gt=0)
    domain_tolerance: float = Field(1e-7, ge=0)
    switch_rate: float = Field(1.0, ge=0)
    hold_steps: int = Field(10, ge=0)
    settle_norm: float = Field(1e-8, ge=0)


class ProbeSettings(BaseModel):
    dt: float = Field(0.01, gt=0)
    horizon: float = Field(20.0, gt=0)
    samples: int = Field(200, ge=1)
    delta_levels: int = Field(12, ge=0)


class OutputSettings(BaseModel):
    directory: str = "data/output"
    plot: bool = False


class CheckerSettings(BaseModel):
    symbolic: SymbolicSettings = SymbolicSettings()
    sos: SosSettings = SosSettings()
    falsify: FalsifySettings = FalsifySettings()
    synthesis: SynthesisSettings = SynthesisSettings()
    simulation: SimulationSettings = SimulationSettings()
    probe: ProbeSettings = ProbeSettings()
    output: OutputSettings = OutputSettings()

    def with_overrides(self, overrides: Dict[str, Any]) -> "CheckerSettings":
        """Return a copy with dotted keys such as 'sos.multiplier_degree' replaced"""
        data = self.model_dump()
        for dotted, value in overrides.items():
            if value is None:
                continue
            section, _, key = dotted.partition(".")
            if section not in data or key not in data[section]:
                raise ConfigError(f"Unknown configuration key: {dotted}")
            data[section][key] = value
        try:
            return CheckerSettings.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration override: {e}") from e


def load_config(path: Optional[Union[str, Path]] = None) -> CheckerSettings:
    """Load settings from JSON; a missing default file falls back to built-in values"""
    explicit = path is not None
    config_path = Path(path) if explicit else DEFAULT_CONFIG_PATH

    if not config_path.exists():
        if explicit:
            raise ConfigError(f"Configuration file not found: {config_path}")
        logger.debug("No configuration file at %s, using defaults", config_path)
        return CheckerSettings()

    try:
        with open(config_path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Could not parse {config_path}: {e}") from e

    try:
        settings = CheckerSettings.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration in {config_path}: {e}") from e

    sos = settings.sos
    if sos.multiplier_degree > sos.multiplier_degree_cap:
        raise ConfigError(
            f"sos.multiplier_degree {sos.multiplier_degree} exceeds cap {sos.multiplier_degree_cap}"
        )
    logger.debug("Loaded configuration from %s", config_path)
    return settings
