import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_spd(rng: np.random.Generator, p: int, extra: int = 3) -> np.ndarray:
    x = rng.standard_normal((p, p + extra))
    return x @ x.T / (p + extra) + 0.05 * np.eye(p)


def random_correlation(rng: np.random.Generator, p: int, n: int | None = None) -> np.ndarray:
    n = n if n is not None else 2 * p + 2
    y = rng.standard_normal((n, p)) @ rng.standard_normal((p, p))
    return np.corrcoef(y, rowvar=False)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
