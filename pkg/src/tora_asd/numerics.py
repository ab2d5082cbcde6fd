"""Small dense-matrix numerics: eigenvalue real-part bounds, observability
rank, and a fixed-step classic Runge-Kutta integrator.

Everything in this module is a pure function of its inputs.  The matrices
that show up in this package are tiny (at most (m+5) x (m+5) for an
exosystem of dimension m), so plain LAPACK-backed dense routines are the
right tool; no sparsity or large-scale concerns apply.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

# A right-hand side f(t, state) -> d(state)/dt, with the output the same
# length as the input.  Must be deterministic: repeated evaluation at the
# same (t, state) bit-agrees, which is what makes whole runs reproducible.
OdeFunction = Callable[[float, np.ndarray], np.ndarray]


class NumericalBlowupError(RuntimeError):
    """A derivative or state became non-finite during integration."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


def _square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def max_real_eig(M) -> float:
    """Largest real part over the eigenvalues of a square real matrix.

    This is the stability functional used throughout: a matrix is Hurwitz
    iff max_real_eig(M) < 0, and the returned value is the (negated)
    stability margin.  Eigenvalues come from LAPACK's QR/Schur iteration
    via ``numpy.linalg.eigvals``; for the well-conditioned sub-16x16
    matrices used here the result is accurate to far better than 1e-6.

    Raises:
        ValueError: non-square or non-finite input.
        RuntimeError: the eigenvalue iteration failed to converge.
    """
    M = _square(M)
    try:
        lam = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(
            f"eigenvalue iteration did not converge for {M.shape[0]}x"
            f"{M.shape[1]} matrix (norm {np.linalg.norm(M):.3e}): {exc}"
        ) from exc
    return float(np.max(lam.real))


def observability_rank(C_out, S_drift, tol: float = 1e-9) -> int:
    """Rank of the observability matrix of the pair (C_out^T, S_drift).

    Stacks [C^T; C^T S; ...; C^T S^(n-1)] and counts singular values above
    ``tol`` relative to the largest one.  A zero read-out gives rank 0.
    """
    C = np.asarray(C_out, dtype=float).reshape(-1)
    S = _square(S_drift)
    n = S.shape[0]
    if C.size != n:
        raise ValueError(
            f"read-out length {C.size} does not match drift dimension {n}"
        )
    rows = np.empty((n, n))
    row = C.copy()
    for i in range(n):
        rows[i] = row
        row = row @ S
    sv = np.linalg.svd(rows, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > tol * sv[0]))


def rk4_step(f: OdeFunction, t: float, state: np.ndarray, h: float) -> np.ndarray:
    """One classic fourth-order Runge-Kutta step from t to t + h.

    Local error O(h^5).  Each stage derivative is checked for finiteness so
    a diverging closed loop fails loudly with the time of the blowup
    instead of silently filling trajectories with NaNs.
    """
    if not h > 0.0:
        raise ValueError(f"step size must be positive, got {h}")
    state = np.asarray(state, dtype=float)
    k1 = np.asarray(f(t, state), dtype=float)
    k2 = np.asarray(f(t + 0.5 * h, state + 0.5 * h * k1), dtype=float)
    k3 = np.asarray(f(t + 0.5 * h, state + 0.5 * h * k2), dtype=float)
    k4 = np.asarray(f(t + h, state + h * k3), dtype=float)
    for k in (k1, k2, k3, k4):
        if k.shape != state.shape:
            raise ValueError(
                f"derivative shape {k.shape} does not match state {state.shape}"
            )
        if not np.all(np.isfinite(k)):
            raise NumericalBlowupError(
                f"non-finite derivative at t = {t:.6g}", t=t
            )
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(
    f: OdeFunction,
    t0: float,
    state0: np.ndarray,
    h: float,
    n_steps: int,
    record_stride: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate with rk4_step over a uniform grid, recording every
    ``record_stride``-th node (the initial state is always recorded).

    Returns (times, states) with states[i] the state at times[i].
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if record_stride < 1:
        raise ValueError("record_stride must be a positive integer")
    state = np.asarray(state0, dtype=float).copy()
    n_rec = n_steps // record_stride + 1
    times = np.empty(n_rec)
    states = np.empty((n_rec, state.size))
    times[0] = t0
    states[0] = state
    i_rec = 1
    t = t0
    for step in range(1, n_steps + 1):
        state = rk4_step(f, t, state, h)
        t = t0 + step * h
        if step % record_stride == 0:
            times[i_rec] = t
            states[i_rec] = state
            i_rec += 1
    return times, states
