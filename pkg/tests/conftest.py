from pathlib import Path

import pytest

from ioabm.economy import ModelConstants
from ioabm.synthetic import synthetic4

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def constants_w8() -> ModelConstants:
    return ModelConstants(workers_per_sector=8)


@pytest.fixture(scope="session")
def synthetic_w8(constants_w8):
    """(sam, fixed-point info, params) for the 4-sector table at w8."""
    return synthetic4(constants_w8)


@pytest.fixture(scope="session")
def calibrated_w8(synthetic_w8, constants_w8):
    """One calibrated economy on the synthetic table, shared by read-only
    tests (callers that step it must build their own)."""
    from ioabm.calibration import run_calibration

    sam, info, params = synthetic_w8
    return run_calibration(sam, params, constants_w8, seed=5489)
