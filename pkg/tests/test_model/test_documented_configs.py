from pathlib import Path

import pytest

from rte_tools.adapter.local_storage import load_json
from rte_tools.model import (
    validate_convergence_config,
    validate_run_config,
    validate_sweep_config,
)


EXAMPLES_DIR = Path(__file__).parents[2] / "docs" / "examples"


@pytest.mark.parametrize(
    "path", sorted((EXAMPLES_DIR / "runs").glob("*.json")), ids=str
)
def test_documented_run_configs(path):
    validate_run_config(load_json(path))


def test_documented_study_configs():
    studies = EXAMPLES_DIR / "studies"
    validate_convergence_config(load_json(studies / "convergence.json"))
    for path in studies.glob("sweep_*.json"):
        validate_sweep_config(load_json(path))
