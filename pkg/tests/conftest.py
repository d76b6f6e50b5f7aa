import numpy as np
import pytest

from starsync.lindblad import NetworkConfig

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record(criterion: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((criterion, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def net(n_leaves=1, delta=0.0, coupling=0.0, hub_gain=1.0, hub_damp=1.0, leaf_gain=1.0, leaf_damp=1.0):
    return NetworkConfig(n_leaves, delta, coupling, hub_gain, hub_damp, leaf_gain, leaf_damp)
