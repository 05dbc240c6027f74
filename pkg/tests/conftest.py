import sys

import numpy as np
import pytest

from tactsim.environment import RanEnvironment
from tactsim.radio import MACRO, MICRO, BaseStation, ChannelParams, RadioNetwork, default_roster
from tactsim.traffic import RegionGrid, TemporalProfile, TrafficModel


def station(i, kind, x, y, **kw):
    spec = dict(MACRO if kind == "macro" else MICRO)
    spec.update(kind=kind, **kw)
    return BaseStation(id=i, position=(float(x), float(y)), **spec)


def make_env(roster, width=2000.0, height=2000.0, cell=50.0, density=5e-6, unit=250.0,
             varsigma=0.0, profile=None, channel=None):
    profile = profile or TemporalProfile("static", density)
    grid = RegionGrid.uniform(width, height, cell, profile.lambda_mean, 8e5, unit)
    net = RadioNetwork(roster, channel or ChannelParams(), grid)
    return RanEnvironment(net, TrafficModel(grid, profile), varsigma)


@pytest.fixture
def default_env():
    return make_env(default_roster())


@pytest.fixture
def zero_env():
    return make_env(default_roster(), density=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    lines = getattr(sys.modules.get("test_acceptance"), "REPORT", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
