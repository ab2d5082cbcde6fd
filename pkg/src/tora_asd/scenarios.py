"""Built-in benchmark scenarios.

Both drive the rotor angle to r = 0.5 rad against a sinusoidal
disturbance on the cart, with identical plant, observer, and controller
parameters; only the exosystem differs.

* ``paper-1`` — single-frequency disturbance F_d(t) = 0.02 sin(2t).
* ``paper-2`` — two-frequency disturbance
  F_d(t) = 0.02 sin(2t) + 0.02 sin(1.5t); nothing changes in the
  controller setup except (S, C_d, w0) and the dimensions that follow
  from them.
"""

from __future__ import annotations

import math

import numpy as np

from .plant import ExoSystem
from .simulation import ScenarioConfig

_COMMON = dict(
    epsilon=0.2,
    r=0.5,
    a=1.0,
    K=np.array([0.0, -0.2, -1.0, -2.0]),
    l1=10.0,
    l2=10.0,
    b=1.5 * (1.0 - 1.0 / math.pi),
    x0=np.zeros(4),
    duration=1500.0,
    step=1e-3,
    record_stride=100,
)


def paper_1() -> ScenarioConfig:
    """Single-frequency disturbance: w' = [[0,2],[-2,0]] w, F_d = w1."""
    return ScenarioConfig(
        exo=ExoSystem(
            S=np.array([[0.0, 2.0], [-2.0, 0.0]]),
            C_d=np.array([1.0, 0.0]),
            w0=np.array([0.0, 0.02]),
        ),
        name="paper-1",
        **_COMMON,
    )


def paper_2() -> ScenarioConfig:
    """Two-frequency disturbance: S = diag(S1, S2) at frequencies 2 and 1.5."""
    S = np.zeros((4, 4))
    S[:2, :2] = np.array([[0.0, 2.0], [-2.0, 0.0]])
    S[2:, 2:] = np.array([[0.0, 1.5], [-1.5, 0.0]])
    return ScenarioConfig(
        exo=ExoSystem(
            S=S,
            C_d=np.array([1.0, 0.0, 1.0, 0.0]),
            w0=np.array([0.0, 0.02, 0.0, 0.02]),
        ),
        name="paper-2",
        **_COMMON,
    )


BUILTIN_SCENARIOS = {
    "paper-1": paper_1,
    "paper-2": paper_2,
}


def get_scenario(name: str) -> ScenarioConfig:
    try:
        factory = BUILTIN_SCENARIOS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_SCENARIOS))
        raise KeyError(f"unknown scenario {name!r}; built-ins: {known}") from None
    return factory()
