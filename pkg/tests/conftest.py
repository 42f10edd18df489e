import numpy as np
import pytest

from nonlocal_capillarity.reduction import PhiProfile


def random_profile(rng: np.random.Generator, s: float, harmonics: int = 3) -> PhiProfile:
    """Smooth positive profile with period pi: 1 + sum of small even harmonics."""
    c = rng.uniform(-1, 1, harmonics) * 0.6 / harmonics
    d = rng.uniform(-1, 1, harmonics) * 0.6 / harmonics
    k = 2 * np.arange(1, harmonics + 1)
    base = rng.uniform(0.5, 2.0)

    def phi(t):
        t = np.asarray(t, dtype=float)[..., None]
        return base * (1 + np.sum(c * np.cos(k * t) + d * np.sin(k * t), axis=-1))

    grid = np.arange(1024) * (2 * np.pi / 1024)
    return PhiProfile(s, phi(grid), exact=phi, label="random")


def plateau_profile(s: float, theta0: float) -> PhiProfile:
    """Vanishes on [theta0, pi - theta0] (and its pi-shift), positive elsewhere."""
    c0 = np.cos(theta0)

    def phi(t):
        return np.maximum(0.0, np.abs(np.cos(np.asarray(t, dtype=float))) - c0)

    grid = np.arange(1024) * (2 * np.pi / 1024)
    kinks = (theta0, np.pi - theta0, np.pi + theta0, 2 * np.pi - theta0)
    return PhiProfile(s, phi(grid), exact=phi, kinks=kinks, allow_degenerate=True, label="plateau")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion; returns the pass flag."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        _CRITERIA[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
