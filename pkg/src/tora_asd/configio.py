"""Config, trajectory, and report serialization.

Configs and reports are YAML documents (human-writable, commentable);
trajectories are CSV with a fixed column order

    t, x1..x4, y, e, u, F_d, F_d_hat, v_p, v_s, e_p,
    xi_1..xi_{n_xi}, xs_hat_1..4, xp_hat_1..4, w_1..w_m

and every number in scientific notation with 10 significant digits, so
identical runs serialize byte-identically.  All writers go through a
write-temp-then-rename step: a crashed run never leaves a truncated
file behind.
"""

from __future__ import annotations

import os
import tempfile
from contextlib import contextmanager

import numpy as np
import yaml

from .plant import ConfigurationError
from .simulation import RunReport, ScenarioConfig, Trajectory

CSV_NUMBER_FORMAT = "%.9e"


@contextmanager
def _atomic_writer(path: str):
    """Open a temp file in the target directory; rename over on success."""
    path = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(
        dir=os.path.dirname(path), prefix=f".{os.path.basename(path)}.tmp-"
    )
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            yield f
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def load_config(path: str) -> ScenarioConfig:
    """Parse a YAML scenario config; unknown keys are rejected."""
    with open(path, "r") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(
            f"{path}: expected a mapping of configuration keys, "
            f"got {type(data).__name__}"
        )
    return ScenarioConfig.from_dict(data)


def save_config(cfg: ScenarioConfig, path: str) -> None:
    with _atomic_writer(path) as f:
        yaml.safe_dump(cfg.to_dict(), f, sort_keys=False)


def trajectory_columns(traj: Trajectory) -> tuple[list[str], np.ndarray]:
    """CSV header names and the matching data matrix, in the fixed order."""
    n_xi, m = traj.layout.n_xi, traj.layout.m
    names = ["t", "x1", "x2", "x3", "x4", "y", "e", "u", "F_d", "F_d_hat",
             "v_p", "v_s", "e_p"]
    names += [f"xi_{i + 1}" for i in range(n_xi)]
    names += [f"xs_hat_{i + 1}" for i in range(4)]
    names += [f"xp_hat_{i + 1}" for i in range(4)]
    names += [f"w_{i + 1}" for i in range(m)]
    data = np.column_stack([
        traj.times, traj.x, traj.y, traj.e, traj.u, traj.F_d, traj.F_d_hat,
        traj.v_p, traj.v_s, traj.e_p, traj.xi, traj.xs_hat, traj.xp_hat,
        traj.w,
    ])
    return names, data


def write_trajectory_csv(traj: Trajectory, path: str) -> None:
    names, data = trajectory_columns(traj)
    with _atomic_writer(path) as f:
        np.savetxt(
            f,
            data,
            fmt=CSV_NUMBER_FORMAT,
            delimiter=",",
            newline="\n",
            header=",".join(names),
            comments="",
        )


def write_report(report: RunReport, path: str) -> None:
    with _atomic_writer(path) as f:
        yaml.safe_dump(report.to_dict(), f, sort_keys=False)
