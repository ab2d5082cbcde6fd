"""TORA/RTAC plant dynamics, the disturbance exosystem, and configuration
validation.

The plant is the dimensionless translational-oscillator-with-rotational-
actuator in its normalized state-space form

    x1' = x2
    x2' = -x1 + eps*sin(x3) + F_d
    x3' = x4
    x4' = u - c(x3)*F_d,      c(x3) = eps*cos(x3) / (1 - eps^2 cos^2(x3))

with cart displacement x1, rotor angle x3 (the tracked output), control
torque u, and a matched/unmatched disturbance pair driven by the scalar
F_d.  The coupling constant eps lies strictly inside (0, 1), which keeps
the denominator of c bounded away from zero.

The disturbance is produced by a marginally stable autonomous LTI
exosystem w' = S w, F_d = C_d^T w with skew-symmetric S, so F_d is a sum
of sinusoids (plus a constant if S is singular).  Admissibility of a
configuration - skewness, observability of (C_d^T, S), the unit-frequency
restriction, and the parameter ranges - is checked by
:func:`validate_configuration`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import observability_rank


class ConfigurationError(ValueError):
    """A configuration failed one of the admissibility gates."""


@dataclass(frozen=True)
class PlantParams:
    """Normalized coupling between the rotor and the cart oscillator."""

    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError(
                f"epsilon must lie strictly in (0, 1), got {self.epsilon}"
            )


@dataclass(frozen=True)
class ReferenceParams:
    """Constant rotor-angle set point, restricted to (-pi/2, pi/2)."""

    r: float

    def __post_init__(self):
        if not abs(self.r) < math.pi / 2:
            raise ConfigurationError(
                f"reference angle must lie strictly in (-pi/2, pi/2), got {self.r}"
            )


@dataclass(frozen=True)
class ExoSystem:
    """Autonomous disturbance generator w' = S w, F_d = C_d^T w."""

    S: np.ndarray
    C_d: np.ndarray
    w0: np.ndarray

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.S, dtype=float))
        C_d = np.asarray(self.C_d, dtype=float).reshape(-1)
        w0 = np.asarray(self.w0, dtype=float).reshape(-1)
        if S.shape[0] != S.shape[1]:
            raise ConfigurationError(f"S must be square, got shape {S.shape}")
        if C_d.size != S.shape[0] or w0.size != S.shape[0]:
            raise ConfigurationError(
                "C_d and w0 must match the dimension of S "
                f"(S is {S.shape[0]}x{S.shape[0]}, C_d has {C_d.size}, "
                f"w0 has {w0.size})"
            )
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "C_d", C_d)
        object.__setattr__(self, "w0", w0)

    @property
    def m(self) -> int:
        return self.S.shape[0]


def _epsilon_of(eps) -> float:
    value = eps.epsilon if isinstance(eps, PlantParams) else float(eps)
    if not 0.0 < value < 1.0:
        raise ConfigurationError(
            f"epsilon must lie strictly in (0, 1), got {value}"
        )
    return value


def coupling_coefficient(x3: float, epsilon) -> float:
    """Multiplier c(x3) of the disturbance in the rotor-rate equation.

    c(x3) = eps*cos(x3) / (1 - eps^2 cos^2(x3)); since 0 < eps < 1 the
    denominator is at least 1 - eps^2 > 0, so c is smooth and bounded by
    eps / (1 - eps^2) in magnitude.
    """
    eps = _epsilon_of(epsilon)
    c = math.cos(x3)
    return eps * c / (1.0 - eps * eps * c * c)


def tora_dynamics(x, u: float, F_d: float, epsilon) -> np.ndarray:
    """Right-hand side of the normalized TORA equations."""
    eps = _epsilon_of(epsilon)
    x = np.asarray(x, dtype=float).reshape(4)
    if not (np.all(np.isfinite(x)) and math.isfinite(u) and math.isfinite(F_d)):
        raise ValueError("non-finite plant input")
    return np.array(
        [
            x[1],
            -x[0] + eps * math.sin(x[2]) + F_d,
            x[3],
            u - coupling_coefficient(x[2], eps) * F_d,
        ]
    )


def exo_dynamics(w, exo: ExoSystem) -> np.ndarray:
    """Exosystem drift w' = S w."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != exo.m:
        raise ValueError(f"exostate has length {w.size}, expected {exo.m}")
    return exo.S @ w


def disturbance_output(w, exo: ExoSystem) -> float:
    """Disturbance read-out F_d = C_d^T w."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != exo.m:
        raise ValueError(f"exostate has length {w.size}, expected {exo.m}")
    return float(exo.C_d @ w)


UNIT_FREQUENCY_MESSAGE = (
    "exosystem has a frequency component at +/-1 (eigenvalues at +/-j): a "
    "disturbance like sin(t) cannot be compensated by the internal model; "
    "remove that block or enable the unit-frequency override to leave it "
    "uncompensated"
)


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[ValidationCheck, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> tuple[ValidationCheck, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def raise_on_failure(self):
        if not self.passed:
            msgs = "; ".join(f"{c.name}: {c.detail}" for c in self.failures)
            raise ConfigurationError(f"configuration rejected ({msgs})")

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }


def unit_frequency_present(S, tol: float = 1e-6) -> bool:
    """True if the skew-symmetric drift S has eigenvalues within tol of +/-j."""
    lam = np.linalg.eigvals(np.atleast_2d(np.asarray(S, dtype=float)))
    return bool(
        np.any(np.abs(lam - 1j) < tol) or np.any(np.abs(lam + 1j) < tol)
    )


def validate_configuration(
    exo: ExoSystem,
    epsilon,
    r,
    *,
    allow_unit_frequency: bool = False,
    unit_frequency_tol: float = 1e-6,
) -> ValidationReport:
    """Run the admissibility checks for a plant + exosystem + reference.

    Checks, in order: skew-symmetry of S, observability of (C_d^T, S),
    absence of unit-frequency exosystem modes (waived when
    ``allow_unit_frequency`` is set, in which case that component is left
    uncompensated by the controller), epsilon in (0, 1), and the reference
    angle inside (-pi/2, pi/2).  Returns a per-check report; callers that
    want an exception use ``report.raise_on_failure()``.
    """
    checks: list[ValidationCheck] = []

    skew_defect = float(np.max(np.abs(exo.S + exo.S.T))) if exo.m else 0.0
    checks.append(
        ValidationCheck(
            "exosystem_skew_symmetric",
            skew_defect < 1e-12,
            f"max |S + S^T| = {skew_defect:.3e}",
        )
    )

    rank = observability_rank(exo.C_d, exo.S)
    checks.append(
        ValidationCheck(
            "exosystem_observable",
            rank == exo.m,
            f"observability rank {rank} of {exo.m}",
        )
    )

    has_unit = unit_frequency_present(exo.S, unit_frequency_tol)
    if has_unit and allow_unit_frequency:
        checks.append(
            ValidationCheck(
                "exosystem_unit_frequency",
                True,
                "unit-frequency component present; override enabled, the "
                "internal model will not compensate it",
            )
        )
    else:
        checks.append(
            ValidationCheck(
                "exosystem_unit_frequency",
                not has_unit,
                UNIT_FREQUENCY_MESSAGE if has_unit else "no eigenvalues at +/-j",
            )
        )

    eps_val = eps_detail = None
    try:
        eps_val = _epsilon_of(epsilon)
    except ConfigurationError as exc:
        eps_detail = str(exc)
    checks.append(
        ValidationCheck(
            "epsilon_range",
            eps_val is not None,
            f"epsilon = {eps_val}" if eps_val is not None else eps_detail,
        )
    )

    r_val = float(r.r if isinstance(r, ReferenceParams) else r)
    checks.append(
        ValidationCheck(
            "reference_range",
            abs(r_val) < math.pi / 2,
            f"r = {r_val} (must be inside (-pi/2, pi/2))",
        )
    )

    return ValidationReport(tuple(checks))


def split_unit_frequency(
    exo: ExoSystem, tol: float = 1e-6
) -> tuple[ExoSystem, int]:
    """Project the exosystem onto its non-unit-frequency part.

    S^2 is symmetric negative semidefinite with eigenvalues -omega^2 whose
    eigenspaces are S-invariant, so an orthonormal eigenbasis of S^2 splits
    the exosystem into frequency blocks.  Blocks with |omega - 1| <= tol
    are dropped; the remainder is returned in the projected coordinates
    together with the number of dropped dimensions.  The projected drift is
    re-skewed to remove rounding asymmetry.

    The reduced system is used to build the internal model when the
    unit-frequency override is enabled; the true disturbance (and the
    disturbance observer) keep the full exosystem.
    """
    if exo.m == 0:
        return exo, 0
    vals, vecs = np.linalg.eigh(exo.S @ exo.S)
    freqs = np.sqrt(np.clip(-vals, 0.0, None))
    keep = np.abs(freqs - 1.0) > tol
    dropped = int(np.count_nonzero(~keep))
    P = vecs[:, keep]
    S_red = P.T @ exo.S @ P
    S_red = 0.5 * (S_red - S_red.T)
    return (
        ExoSystem(S=S_red, C_d=P.T @ exo.C_d, w0=P.T @ exo.w0),
        dropped,
    )
