"""Tracking and stabilizing controllers for the decomposed TORA loop.

Three pieces combine into the composite law
``u = K^T x + v_p + v_s + c(x3)*F_d_hat``:

* **Internal-model tracking controller** (primary subsystem).  With the
  filtered error e_p = x3p + a*x4p - r, the controller

      xi' = S_a xi + L1 e_p,        v_p = L2^T x_p + L3^T xi

  embeds the exosystem (plus an integrator for the constant reference)
  through S_a = diag(0, S).  :func:`proposition1_gains` builds the
  closed-form gain family

      L1 = (1, C_d)^T,  L2 = -(1/a)C - B - (1/a)H - K,  L3 = -(1/a)L1,

  and certifies max Re lambda(A_a) < 0 on the assembled closed-loop
  matrix A_a = [[S_a, L1 (C+aB)^T], [B L3^T, A + B L2^T]] before
  returning.  At a = 1 this family gives L2 = 0 and L3 = -L1.

* **Backstepping stabilizer** (secondary subsystem).  The virtual
  controller x3s = -b*atan(x2s) would make the cart energy
  0.5*(x1s^2 + x2s^2) decrease, so the change of variables

      x3s' = x3s + b*atan(x2s)
      psi  = b*q/(1 + x2s^2),  q = -x1s + eps*sin(x3s + r) - eps*sin(r)
      x4s' = x3s' + x4s + psi

  and the control v_s = x3s' - 2*x4s' - K^T x_s - psi_dot turn the rotor
  pair into the cascade
  (x3s')' = -x3s' + x4s' + b*g/(1+x2s^2),
  (x4s')' = -x4s' + b*g/(1+x2s^2), driven only by the decaying coupling
  g from the primary subsystem.  psi_dot is the full time derivative of
  psi along the secondary flow, including the g-dependent part of x2s';
  g is evaluated from the primary output estimate (zero once the primary
  output has converged, and exactly zero when no estimate is supplied).

* **Composite law** adding both controls to the stabilizing state
  feedback and the disturbance-compensation term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decomposition import B, C, SystemMatrices, secondary_coupling_g
from .numerics import max_real_eig
from .plant import (
    ConfigurationError,
    ExoSystem,
    UNIT_FREQUENCY_MESSAGE,
    coupling_coefficient,
    split_unit_frequency,
    unit_frequency_present,
)


@dataclass(frozen=True)
class PrimaryGains:
    """Internal-model gains plus the certified stability margin of A_a."""

    S_a: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    L3: np.ndarray
    margin: float

    def __post_init__(self):
        S_a = np.atleast_2d(np.asarray(self.S_a, dtype=float))
        L1 = np.asarray(self.L1, dtype=float).reshape(-1)
        L2 = np.asarray(self.L2, dtype=float).reshape(4)
        L3 = np.asarray(self.L3, dtype=float).reshape(-1)
        if S_a.shape != (L1.size, L1.size) or L3.size != L1.size:
            raise ValueError("S_a, L1, L3 dimensions are inconsistent")
        object.__setattr__(self, "S_a", S_a)
        object.__setattr__(self, "L1", L1)
        object.__setattr__(self, "L2", L2)
        object.__setattr__(self, "L3", L3)

    @property
    def n_xi(self) -> int:
        return self.L1.size


def build_A_a(gains: PrimaryGains, mats: SystemMatrices) -> np.ndarray:
    """Closed-loop matrix of the primary subsystem with its controller.

    A_a = [[S_a, L1 (C + aB)^T], [B L3^T, A + B L2^T]]
    """
    n = gains.n_xi
    A_a = np.zeros((n + 4, n + 4))
    A_a[:n, :n] = gains.S_a
    A_a[:n, n:] = np.outer(gains.L1, C + mats.a * B)
    A_a[n:, :n] = np.outer(B, gains.L3)
    A_a[n:, n:] = mats.A + np.outer(B, gains.L2)
    return A_a


def proposition1_gains(
    exo: ExoSystem,
    mats: SystemMatrices,
    *,
    allow_unit_frequency: bool = False,
    unit_frequency_tol: float = 1e-6,
) -> PrimaryGains:
    """Closed-form internal-model gains, certified Hurwitz before return.

    Exosystem components at frequency 1 (drift eigenvalues at +/-j) make
    the gain family singular and are rejected; with
    ``allow_unit_frequency`` they are instead projected out of the
    internal model (that disturbance component is left uncompensated,
    the observer still tracks the full exosystem).
    """
    if unit_frequency_present(exo.S, unit_frequency_tol):
        if not allow_unit_frequency:
            raise ConfigurationError(UNIT_FREQUENCY_MESSAGE)
        exo, _ = split_unit_frequency(exo, unit_frequency_tol)

    a = mats.a
    m = exo.m
    S_a = np.zeros((m + 1, m + 1))
    S_a[1:, 1:] = exo.S
    L1 = np.concatenate([[1.0], exo.C_d])
    L2 = -(1.0 / a) * C - B - (1.0 / a) * mats.H - mats.K
    L3 = -(1.0 / a) * L1

    gains = PrimaryGains(S_a=S_a, L1=L1, L2=L2, L3=L3, margin=0.0)
    margin = max_real_eig(build_A_a(gains, mats))
    if not margin < 0.0:
        raise ConfigurationError(
            f"internal-model synthesis failed: max Re eig(A_a) = {margin:.6g} "
            ">= 0 for the assembled closed-loop matrix"
        )
    return PrimaryGains(
        S_a=S_a, L1=L1, L2=L2, L3=L3, margin=float(margin)
    )


def filtered_error(x_p, r: float, a: float) -> float:
    """e_p = (C + aB)^T x_p - r = x3p + a*x4p - r."""
    x_p = np.asarray(x_p, dtype=float).reshape(4)
    return float(x_p[2] + a * x_p[3] - r)


def primary_controller(
    xi, x_p_hat, r: float, gains: PrimaryGains, a: float
) -> tuple[np.ndarray, float]:
    """Internal-model update and primary control: (xi', v_p)."""
    xi = np.asarray(xi, dtype=float).reshape(gains.n_xi)
    x_p_hat = np.asarray(x_p_hat, dtype=float).reshape(4)
    e_p = filtered_error(x_p_hat, r, a)
    xi_dot = gains.S_a @ xi + gains.L1 * e_p
    v_p = float(gains.L2 @ x_p_hat) + float(gains.L3 @ xi)
    return xi_dot, v_p


def b_upper_bound(r: float) -> float:
    """Admissible upper bound 2*(1 - 2|r|/pi) for the atan gain b."""
    if not abs(r) < math.pi / 2:
        raise ConfigurationError(
            f"reference angle must lie strictly in (-pi/2, pi/2), got {r}"
        )
    return 2.0 * (1.0 - 2.0 * abs(r) / math.pi)


def validate_b(b: float, r: float) -> float:
    bound = b_upper_bound(r)
    if not 0.0 < b < bound:
        raise ConfigurationError(
            f"backstepping gain b = {b} outside the admissible range "
            f"(0, {bound:.7g}) for r = {r}"
        )
    return float(b)


@dataclass(frozen=True)
class BacksteppingIntermediates:
    x3s_prime: float
    x4s_prime: float
    psi: float
    psi_dot: float
    g: float
    g_prime: float


def backstepping_intermediates(
    x_s,
    r: float,
    b: float,
    epsilon,
    y_p: float | None = None,
    ydot_p: float | None = None,
    a: float = 1.0,
) -> BacksteppingIntermediates:
    """Change-of-variables quantities for the backstepping design.

    With sigma = 1/(1 + x2s^2) and q = -x1s + eps*sin(x3s + r) -
    eps*sin(r):

        x3s' = x3s + b*atan(x2s)
        psi  = b*sigma*q
        x4s' = x3s' + x4s + psi
        psi_dot = -2b*x2s*sigma^2*q*(q + g) + b*sigma*q_dot,
                  q_dot = -x2s + eps*cos(x3s + r)*x4s

    psi_dot is the exact derivative of psi along the secondary flow:
    sigma_dot = -2*x2s*sigma^2*x2s_dot with x2s_dot = q + g.  The
    coupling g (and the transformed residual g') defaults to zero when
    no primary output estimate is supplied, matching the converged
    primary subsystem.
    """
    x_s = np.asarray(x_s, dtype=float).reshape(4)
    x1s, x2s, x3s, x4s = x_s
    eps = float(epsilon.epsilon) if hasattr(epsilon, "epsilon") else float(epsilon)

    if y_p is None or ydot_p is None:
        g = 0.0
    else:
        g = secondary_coupling_g(x3s, y_p, ydot_p, eps, a, r)

    sigma = 1.0 / (1.0 + x2s * x2s)
    q = -x1s + eps * math.sin(x3s + r) - eps * math.sin(r)
    q_dot = -x2s + eps * math.cos(x3s + r) * x4s
    x3s_prime = x3s + b * math.atan(x2s)
    psi = b * sigma * q
    x4s_prime = x3s_prime + x4s + psi
    psi_dot = -2.0 * b * x2s * sigma * sigma * q * (q + g) + b * sigma * q_dot

    base = r - b * math.atan(x2s)
    g_prime = eps * math.sin(base + x3s_prime) - eps * math.sin(base) + g

    return BacksteppingIntermediates(
        x3s_prime=float(x3s_prime),
        x4s_prime=float(x4s_prime),
        psi=float(psi),
        psi_dot=float(psi_dot),
        g=float(g),
        g_prime=float(g_prime),
    )


def backstepping_vs(
    x_s_hat,
    r: float,
    b: float,
    K,
    epsilon,
    y_p: float | None = None,
    ydot_p: float | None = None,
    a: float = 1.0,
) -> float:
    """Stabilizing control v_s = x3s' - 2*x4s' - K^T x_s - psi_dot."""
    x_s_hat = np.asarray(x_s_hat, dtype=float).reshape(4)
    K = np.asarray(K, dtype=float).reshape(4)
    ints = backstepping_intermediates(x_s_hat, r, b, epsilon, y_p, ydot_p, a)
    return float(
        ints.x3s_prime - 2.0 * ints.x4s_prime - K @ x_s_hat - ints.psi_dot
    )


def composite_control(
    x,
    xi,
    x_p_hat,
    x_s_hat,
    F_d_hat: float,
    gains: PrimaryGains,
    mats: SystemMatrices,
    r: float,
    b: float,
) -> float:
    """Composite law u = K^T x + v_p + v_s + c(x3)*F_d_hat."""
    x = np.asarray(x, dtype=float).reshape(4)
    x_p_hat = np.asarray(x_p_hat, dtype=float).reshape(4)
    _, v_p = primary_controller(xi, x_p_hat, r, gains, mats.a)
    v_s = backstepping_vs(
        x_s_hat,
        r,
        b,
        mats.K,
        mats.epsilon,
        y_p=float(x_p_hat[2]),
        ydot_p=float(x_p_hat[3]),
        a=mats.a,
    )
    c = coupling_coefficient(x[2], mats.epsilon)
    return float(mats.K @ x) + v_p + v_s + c * F_d_hat
