import math

import numpy as np
import pytest

from ciprop.terrain import EffectiveEarth, TerrainProfile

FLAT_EARTH = EffectiveEarth(math.inf)


def flat_profile(length=1000.0, spacing=30.0, tx_height=30.0, rx_height=30.0):
    d = np.append(np.arange(0.0, length, spacing), length)
    return TerrainProfile(d, np.zeros_like(d), tx_height, rx_height)


def ridge_profile(peak, d1=1000.0, d2=1000.0, tx_height=10.0, rx_height=10.0, spacing=None):
    """Flat ground with one triangular ridge of height ``peak`` at ``d1``."""
    total = d1 + d2
    if spacing is None:
        d = np.array([0.0, d1, total])
    else:
        d = np.union1d(np.append(np.arange(0.0, total, spacing), total), [d1])
    h = np.where(d == d1, peak, 0.0)
    return TerrainProfile(d, h, tx_height, rx_height)


def random_profile(rng, n_min=3, n_max=120):
    n = int(rng.integers(n_min, n_max))
    length = float(rng.uniform(500.0, 40_000.0))
    d = np.sort(rng.uniform(0.0, length, n - 2))
    d = np.unique(np.concatenate(([0.0], d, [length])))
    h = rng.uniform(0.0, 150.0) + np.cumsum(rng.normal(0.0, 8.0, d.size))
    return TerrainProfile(d, h, float(rng.uniform(2.0, 40.0)), float(rng.uniform(1.5, 10.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE = []


def record_criterion(name, ok, detail=""):
    """Log one acceptance criterion; the summary is printed at session end."""
    line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
