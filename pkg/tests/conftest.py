import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))  # make oracles importable

from rodfilm.presets import build, circle, hopf_pair


@pytest.fixture(scope="session")
def circle_system():
    return circle(n=128)


@pytest.fixture(scope="session")
def circle_fine():
    return circle(n=256)


@pytest.fixture(scope="session")
def hopf_system():
    return hopf_pair(n=128)


@pytest.fixture()
def rng():
    return np.random.default_rng(42)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # one visible pass/fail line per acceptance criterion that was attempted
    titles = getattr(config, "_acceptance_titles", None)
    if not titles:
        return
    passed = getattr(config, "_acceptance_passed", set())
    terminalreporter.section("acceptance criteria")
    for num in sorted(titles):
        word = "PASS" if num in passed else "FAIL"
        terminalreporter.write_line(f"{word} criterion {num}: {titles[num]}")


def ring_nodes(n, R=1.0, center=(0.0, 0.0, 0.0), axis="z"):
    """Exact circle nodes used by many geometry tests."""
    s = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    if axis == "z":
        pts = np.stack([R * np.cos(s), R * np.sin(s), np.zeros_like(s)], axis=1)
    else:
        pts = np.stack([R * np.cos(s), np.zeros_like(s), R * np.sin(s)], axis=1)
    return pts + np.asarray(center, dtype=float)
