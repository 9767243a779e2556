#!/usr/bin/env python3
"""End-to-end checks of the capacity results on whole families of channels"""

import io

import numpy as np
import pandas as pd
import pytest

from conftest import draw_channels
from run_capacity import CapacityCommands
from sidecap.capacity import capacity_cd
from sidecap.model import validate
from sidecap.montecarlo import mc_verify
from sidecap.records import ChannelConfig


def test_independent_state_maximizes_capacity():
    """Without noise correlation the best rho_xs1 on a 201-point grid is 0"""
    base = validate({"p": 3.0, "q1": 2.0, "q2": 0.5, "n": 1.5})
    grid = np.linspace(-1.0, 1.0, 201)
    values = [capacity_cd(base.replace(rho_xs1=float(rho))).value for rho in grid]
    assert abs(grid[int(np.argmax(values))]) < 1e-12


def test_noise_correlation_family_ordering():
    """Capacity against SNR rises with rho_s2z at every grid point"""
    commands = CapacityCommands(io.StringIO())
    cfg = ChannelConfig(p=1, q1=1, q2=1, n=1, unit="nats")
    record, code = commands.cmd_sweep(cfg, "snr_db", -10.0, 20.0, 31, ("rho_s2z", [0.0, 0.5, 0.9, 0.99]))
    assert code == 0

    frame = pd.DataFrame(record.results["rows"])
    columns = ["capacity_rho_s2z=0", "capacity_rho_s2z=0.5", "capacity_rho_s2z=0.9", "capacity_rho_s2z=0.99"]
    values = frame[columns].to_numpy(dtype=float)
    assert np.all(np.diff(values, axis=1) > 0)
    assert np.all(np.diff(values, axis=0) > 0)


def test_near_perfect_noise_correlation_value():
    params = validate({"p": 1, "q1": 1, "q2": 1, "n": 1, "rho_s2z": 0.999})
    assert capacity_cd(params).value == pytest.approx(3.108, abs=1e-3)


@pytest.mark.slow
def test_monte_carlo_confirms_closed_forms():
    """Every closed-form quantity passes at 4 standard errors on 10 seeded channels"""
    channels = draw_channels(9, seed=99, rho_max=0.9)
    channels.append(validate({"p": 1, "q1": 1, "q2": 1, "n": 1, "rho_s2z": 0.9}))
    for seed, params in enumerate(channels, start=1):
        report = mc_verify(params, None, 200_000, seed)
        assert report.all_passed, (params, report.failures())
