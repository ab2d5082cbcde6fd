"""Additive state decomposition of the TORA tracking problem.

A zero term eps*(y + a*ydot) - eps*(y + a*ydot) is added to the cart
acceleration so the plant splits into a stable LTI skeleton plus a small
nonlinear remainder:

    x' = A x + B v + d + varphi,     A = A0 + B K^T + eps*D (C + a B)^T

with B = e4, C = e3 (output read-out), D = e2 (disturbance channel),
H = (0, eps, 0, 1), the new control v = u - K^T x - c(x3)*F_d_hat, the
lumped external input d = phi(r, 0) + D*F_d, the observer residual
varphi = (0, 0, 0, c(x3)*(F_d_hat - F_d)), and the nonlinearity

    phi(y, ydot) = (0, eps*sin(y) - eps*(y + a*ydot), 0, 0).

The state is then decomposed additively, x = x_p + x_s, into a primary
LTI system that carries every external signal (reference and
disturbance) and a secondary nonlinear system with zero initial state
and a zero equilibrium:

    x_p' = A x_p + B v_p + d + varphi,                    x_p(0) = x(0)
    x_s' = A x_s + B v_s + phi(y_p + y_s, y_p' + y_s') - phi(r, 0),
                                                          x_s(0) = 0

with v = v_p + v_s.  Tracking/rejection is solved on the primary system,
stabilization on the secondary one, and the two controls simply add.

:func:`verify_additive_decomposition` implements the generic construction
for any pair (original vector field, chosen primary vector field): the
secondary system is *defined* as the difference of the two fields, so the
sum x_p + x_s reproduces the original trajectory identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import OdeFunction, rk4_integrate
from .plant import coupling_coefficient, _epsilon_of

A0 = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0],
    ]
)
B = np.array([0.0, 0.0, 0.0, 1.0])
C = np.array([0.0, 0.0, 1.0, 0.0])
D = np.array([0.0, 1.0, 0.0, 0.0])


def build_A(K, epsilon, a: float) -> np.ndarray:
    """Assemble A = A0 + B K^T + eps*D (C + a B)^T."""
    eps = _epsilon_of(epsilon)
    if not a > 0.0:
        raise ValueError(f"filter constant a must be positive, got {a}")
    K = np.asarray(K, dtype=float).reshape(4)
    return A0 + np.outer(B, K) + eps * np.outer(D, C + a * B)


@dataclass(frozen=True)
class SystemMatrices:
    """The LTI skeleton (A0, A, B, C, D, H) with gain K and filter constant a."""

    K: np.ndarray
    a: float
    epsilon: float
    A: np.ndarray = None
    H: np.ndarray = None

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float).reshape(4)
        eps = _epsilon_of(self.epsilon)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "A", build_A(K, eps, self.a))
        object.__setattr__(self, "H", np.array([0.0, eps, 0.0, 1.0]))

    # The constant blocks are shared, read-only module arrays.
    @property
    def A0(self) -> np.ndarray:
        return A0

    @property
    def B(self) -> np.ndarray:
        return B

    @property
    def C(self) -> np.ndarray:
        return C

    @property
    def D(self) -> np.ndarray:
        return D


def build_matrices(K, epsilon, a: float = 1.0) -> SystemMatrices:
    return SystemMatrices(K=K, a=a, epsilon=epsilon)


def phi(y: float, ydot: float, epsilon, a: float) -> np.ndarray:
    """Nonlinear remainder phi(y, ydot) = (0, eps*sin y - eps*(y + a*ydot), 0, 0)."""
    eps = _epsilon_of(epsilon)
    return np.array([0.0, eps * math.sin(y) - eps * (y + a * ydot), 0.0, 0.0])


def external_input(F_d: float, mats: SystemMatrices, r: float) -> np.ndarray:
    """Lumped external input d = phi(r, 0) + D*F_d of the primary system."""
    return phi(r, 0.0, mats.epsilon, mats.a) + D * F_d


def residual_input(
    x3: float, F_d: float, F_d_hat: float, epsilon
) -> np.ndarray:
    """Observer residual varphi = (0, 0, 0, c(x3)*(F_d_hat - F_d))."""
    c = coupling_coefficient(x3, epsilon)
    return np.array([0.0, 0.0, 0.0, c * (F_d_hat - F_d)])


def primary_dynamics(
    x_p, v_p: float, F_d: float, varphi, mats: SystemMatrices, r: float
) -> np.ndarray:
    """Primary (LTI) subsystem: x_p' = A x_p + B v_p + d + varphi."""
    x_p = np.asarray(x_p, dtype=float).reshape(4)
    varphi = np.asarray(varphi, dtype=float).reshape(4)
    return mats.A @ x_p + B * v_p + external_input(F_d, mats, r) + varphi


def secondary_dynamics(
    x_s, v_s: float, y_p: float, ydot_p: float, mats: SystemMatrices, r: float
) -> np.ndarray:
    """Secondary (nonlinear) subsystem in compact phi-difference form.

    x_s' = A x_s + B v_s + phi(y_p + y_s, ydot_p + ydot_s) - phi(r, 0)
    with y_s = x3s and ydot_s = x4s read from the secondary state.
    """
    x_s = np.asarray(x_s, dtype=float).reshape(4)
    eps, a = mats.epsilon, mats.a
    return (
        mats.A @ x_s
        + B * v_s
        + phi(y_p + x_s[2], ydot_p + x_s[3], eps, a)
        - phi(r, 0.0, eps, a)
    )


def secondary_coupling_g(
    x3s: float, y_p: float, ydot_p: float, epsilon, a: float, r: float
) -> float:
    """Primary-to-secondary coupling g = eps*sin(y_p + x3s) - eps*sin(r + x3s)
    - eps*(y_p + a*ydot_p - r).  Vanishes once y_p -> r and ydot_p -> 0."""
    eps = _epsilon_of(epsilon)
    return (
        eps * math.sin(y_p + x3s)
        - eps * math.sin(r + x3s)
        - eps * (y_p + a * ydot_p - r)
    )


def secondary_dynamics_expanded(
    x_s, v_s: float, y_p: float, ydot_p: float, mats: SystemMatrices, r: float
) -> np.ndarray:
    """Secondary subsystem written out componentwise.

    x1s' = x2s
    x2s' = -x1s + eps*sin(x3s + r) - eps*sin(r) + g
    x3s' = x4s
    x4s' = v_s + K^T x_s

    Algebraically identical to :func:`secondary_dynamics`; kept as an
    independent cross-check of the compact form.
    """
    x_s = np.asarray(x_s, dtype=float).reshape(4)
    eps = mats.epsilon
    g = secondary_coupling_g(x_s[2], y_p, ydot_p, eps, mats.a, r)
    return np.array(
        [
            x_s[1],
            -x_s[0] + eps * math.sin(x_s[2] + r) - eps * math.sin(r) + g,
            x_s[3],
            v_s + float(mats.K @ x_s),
        ]
    )


def verify_additive_decomposition(
    original: OdeFunction,
    primary: OdeFunction,
    x0,
    x_p0,
    horizon: float,
    step: float = 1e-3,
) -> float:
    """Numerically certify an additive decomposition x = x_p + x_s.

    Given the original field f and a chosen primary field f_p of the same
    dimension, the secondary system is defined by the difference

        x_s' = f(t, x_p + x_s) - f_p(t, x_p),    x_s(0) = x0 - x_p0,

    which makes x_p + x_s satisfy the original equation exactly.  All
    three systems are integrated on one RK4 grid and the maximum of
    ||x - (x_p + x_s)|| over the grid is returned; anything above the
    integrator's own error scale signals an inconsistent split.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    x_p0 = np.asarray(x_p0, dtype=float).reshape(-1)
    if x0.shape != x_p0.shape:
        raise ValueError("x0 and x_p0 must have the same dimension")
    n = x0.size

    def combined(t, z):
        x, x_p, x_s = z[:n], z[n : 2 * n], z[2 * n :]
        fp = primary(t, x_p)
        return np.concatenate([original(t, x), fp, original(t, x_p + x_s) - fp])

    n_steps = max(1, int(round(horizon / step)))
    z0 = np.concatenate([x0, x_p0, x0 - x_p0])
    _, states = rk4_integrate(combined, 0.0, z0, step, n_steps)
    defect = states[:, :n] - states[:, n : 2 * n] - states[:, 2 * n :]
    return float(np.max(np.linalg.norm(defect, axis=1)))
