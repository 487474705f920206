from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from cabinline.model import LineConfig, RateProfile

FOUR_NU = (0.5, 0.2, 0.3, 0.0)
FOUR_SIGMA = (0.0, 0.04, 0.46, 1.0)
FOUR_MIN_THRESHOLD = 8 / 6.8

DATA = Path(str(resources.files("cabinline") / "data"))


@pytest.fixture
def four_station():
    return LineConfig.from_sigmas(10, 8, FOUR_SIGMA)


@pytest.fixture(scope="session")
def data_dir():
    return DATA


def stationary_profile(total_rate, nu=FOUR_NU):
    return RateProfile.constant([total_rate * v for v in nu])


def zero_profile(n_stations):
    return RateProfile.constant([0.0] * n_stations)


def queue_slopes(trace):
    """Least-squares slope (passengers/s) of each station's queue over the
    second half of the run."""
    t = trace.service_times
    half = t >= t[-1] / 2
    x = t[half] - t[half].mean()
    y = trace.queue_after[half].astype(float)
    return (x @ (y - y.mean(axis=0))) / (x @ x)


ACCEPTANCE_RESULTS: dict = {}


def report(criterion: str, ok: bool, detail: str) -> None:
    """Record an acceptance outcome and print it (visible with ``-s``)."""
    line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
    ACCEPTANCE_RESULTS[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(ACCEPTANCE_RESULTS[key])
