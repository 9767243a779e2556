"""Shared fixtures for the capacity test-suite."""

from typing import List

import numpy as np
import pytest

from sidecap.model import ChannelParams, validate


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size Monte Carlo runs (deselect with -m 'not slow')")


def draw_channels(count: int, seed: int, rho_max: float = 0.99) -> List[ChannelParams]:
    """Random non-degenerate channels: variances log-uniform on [0.1, 100], rho uniform on [-rho_max, rho_max]"""
    rng = np.random.default_rng(seed)
    variances = 10.0 ** rng.uniform(-1.0, 2.0, size=(count, 4))
    rhos = rng.uniform(-rho_max, rho_max, size=(count, 2))
    return [
        validate({"p": v[0], "q1": v[1], "q2": v[2], "n": v[3], "rho_xs1": r[0], "rho_s2z": r[1]})
        for v, r in zip(variances, rhos)
    ]


@pytest.fixture
def unit_channel() -> ChannelParams:
    """All variances 1, no correlation"""
    return validate({"p": 1, "q1": 1, "q2": 1, "n": 1, "rho_xs1": 0, "rho_s2z": 0})


@pytest.fixture
def worked_channel() -> ChannelParams:
    """P=4, Q1=Q2=1, N=2, both correlations 0.5: C_D = 0.5 ln 3 at alpha* = 1/3"""
    return validate({"p": 4, "q1": 1, "q2": 1, "n": 2, "rho_xs1": 0.5, "rho_s2z": 0.5})


@pytest.fixture(scope="session")
def random_channels() -> List[ChannelParams]:
    return draw_channels(1000, seed=20240601)
