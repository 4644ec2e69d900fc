"""
Per-invocation run configuration.

Command-line flags are collected into a RunConfig and folded over the
settings loaded from the JSON configuration file.
"""

from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError

from src.core.config import CheckerSettings, load_config
from src.core.errors import UsageError


class RunConfig(BaseModel):
    command: Literal["check", "verify", "synth", "falsify", "simulate", "probe", "render", "bench", "vcs"]
    model_path: Optional[Path] = None
    candidates: Literal["annotation", "file", "synthesize"] = "annotation"
    candidate_file: Optional[Path] = None
    rule: Optional[str] = None
    seed: int = Field(0, ge=0)
    sos_degree: Optional[int] = Field(None, ge=0)
    falsify_budget: Optional[int] = Field(None, ge=1)
    exp_terms: Optional[int] = Field(None, ge=1)
    out: Optional[Path] = None
    replay: Optional[Path] = None
    region: Optional[str] = None
    attractivity: bool = False
    jobs: int = Field(1, ge=1)
    normalize: bool = False
    config_path: Optional[Path] = None

    def overrides(self) -> Dict[str, Optional[int]]:
        data = {
            "sos.multiplier_degree": self.sos_degree,
            "falsify.budget": self.falsify_budget,
            "symbolic.exp_terms": self.exp_terms,
        }
        if self.sos_degree is not None:
            data["sos.multiplier_degree_cap"] = max(self.sos_degree, CheckerSettings().sos.multiplier_degree_cap)
        if self.exp_terms is not None:
            data["symbolic.exp_terms_cap"] = max(self.exp_terms, CheckerSettings().symbolic.exp_terms_cap)
        return data

    def settings(self) -> CheckerSettings:
        settings = load_config(self.config_path).with_overrides(self.overrides())
        if self.out is not None:
            settings = settings.with_overrides({"output.directory": str(self.out)})
        return settings

    def output_dir(self, settings: CheckerSettings) -> Path:
        return Path(settings.output.directory)


def build_run_config(**values) -> RunConfig:
    """Validate CLI values; bad budgets or paths become usage errors"""
    if values.get("candidate_file") is not None and values.get("candidates", "annotation") == "annotation":
        values["candidates"] = "file"
    try:
        config = RunConfig(**values)
    except ValidationError as e:
        problems: List[str] = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise UsageError("invalid arguments: " + "; ".join(problems)) from e
    if config.candidates == "file" and config.candidate_file is None:
        raise UsageError("--candidates file needs --candidate-file")
    return config
