"""Shared fixtures: the benchmark runs are expensive enough (seconds
each) that every full-length trajectory is produced once per session and
shared by all tests that inspect it."""

import numpy as np
import pytest

import tora_asd as ta


@pytest.fixture(scope="session")
def scn1_cfg():
    return ta.get_scenario("paper-1")


@pytest.fixture(scope="session")
def scn2_cfg():
    return ta.get_scenario("paper-2")


@pytest.fixture(scope="session")
def scn1_result(scn1_cfg):
    """Full-length scenario-1 run at the default record stride."""
    return ta.run(scn1_cfg)


@pytest.fixture(scope="session")
def scn2_result(scn2_cfg):
    """Full-length scenario-2 run at the default record stride."""
    return ta.run(scn2_cfg)


@pytest.fixture(scope="session")
def scn1_stride1_result(scn1_cfg):
    """Full-length scenario-1 run recorded at every integration step,
    as required by the recorded-input secondary oracle."""
    cfg = scn1_cfg.with_overrides(record_stride=1)
    traj, report = ta.run(cfg)
    return cfg, traj, report


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
