"""Shared fixtures: corpus paths and parsed models."""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.core.config import CheckerSettings  # noqa: E402
from src.model.model import Diagnostics  # noqa: E402
from src.model.parser import load_model, parse_model  # noqa: E402

CORPUS = ROOT / "data" / "corpus"


def model_from_text(text: str):
    """Parse model text, failing the test with the diagnostics on error"""
    result = parse_model(text)
    if isinstance(result, Diagnostics):
        pytest.fail("; ".join(str(d) for d in result))
    return result


@pytest.fixture
def corpus() -> Path:
    return CORPUS


@pytest.fixture
def load():
    def _load(name: str):
        return load_model(CORPUS / f"{name}.ssm")

    return _load


@pytest.fixture
def settings() -> CheckerSettings:
    return CheckerSettings()


@pytest.fixture
def decay_model():
    return model_from_text(
        """
        system decay {
          kind arbitrary;
          var x;
          mode m { ode { x' = -x } }
          lyapunov : x^2;
        }
        """
    )
