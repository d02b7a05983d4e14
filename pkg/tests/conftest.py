import json
import math
from pathlib import Path

import pytest

from beamkam.config import load_config, validate

ROOT = Path(__file__).resolve().parents[1]
NOMINAL = ROOT / "configs" / "nominal.json"


@pytest.fixture(scope="session")
def nominal_path():
    return NOMINAL


@pytest.fixture(scope="session")
def nominal_cfg():
    return load_config(NOMINAL)


@pytest.fixture()
def nominal_raw():
    return json.loads(NOMINAL.read_text())


def linear_raw(eps=1e-4, N=3, v_max=2):
    """psi_0 = cos(theta) + 0.2 sin(2 theta), psi_1 = 0.3, psi_2 = psi_3 = 0 on one angle."""
    return {
        "epsilon": eps, "N": N, "K": 3, "b_schedule": [1], "v_max": v_max,
        "omega": [(math.sqrt(5) - 1) / 2],
        "forcing": [
            {"block": 0, "l": 0, "k": [1], "re": 0.5, "im": 0.0},
            {"block": 0, "l": 0, "k": [-1], "re": 0.5, "im": 0.0},
            {"block": 0, "l": 0, "k": [2], "re": 0.0, "im": -0.1},
            {"block": 0, "l": 0, "k": [-2], "re": 0.0, "im": 0.1},
            {"block": 0, "l": 1, "k": [0], "re": 0.3, "im": 0.0},
        ],
    }


@pytest.fixture()
def linear_cfg():
    return validate(linear_raw())


ACCEPTANCE_LINES: list[str] = []


def report_criterion(number: int, passed: bool, detail: str) -> str:
    """Print and remember one PASS/FAIL line for the acceptance summary."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
