import numpy as np
import pytest

from opendot import build_config, prepare_problem
from opendot.perturbation import EMBEDDED


def small_config(**sections) -> dict:
    """A configuration that runs every stage in a few seconds."""
    data = {
        "scenario": "small",
        "grid": {"n": 2001, "L": 30.0, "n_transverse": 401},
        "solver": {"J": 4},
        "sweep": {"B": [2e-3, 5e-3], "lambda": [0.0]},
        "strong_field": {"B": [1.0], "eps": [0.1, 0.01], "d": [5.0, 10.0], "direct_n": 61},
        "stages": ["validate", "levels", "perturb", "poles", "dispersion", "strongfield"],
    }
    for name, values in sections.items():
        if isinstance(data.get(name), dict) and isinstance(values, dict):
            data[name] = {**data[name], **values}
        else:
            data[name] = values
    return data


@pytest.fixture(scope="session")
def default_cfg():
    return build_config({})


@pytest.fixture(scope="session")
def default_problem(default_cfg):
    s = default_cfg.solver
    return prepare_problem(default_cfg.model, default_cfg.x_grid(), default_cfg.y_grid(), s["J"])


@pytest.fixture(scope="session")
def embedded_level(default_problem, default_cfg):
    levels = default_problem.levels(default_cfg.solver["energy_cap"])
    return next(lv for lv in levels if lv.status == EMBEDDED)


@pytest.fixture(scope="session")
def default_K(embedded_level, default_cfg):
    return min(embedded_level.k_open + 3, default_cfg.solver["J"])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
