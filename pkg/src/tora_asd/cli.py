"""Command-line front end.

Two verbs:

* ``check`` — run every configuration gate (exosystem admissibility,
  Hurwitz tests on A and A_a, backstepping-gain range) and print
  pass/fail per gate with the computed stability margins.  Nonzero exit
  status when any gate fails.
* ``run`` — integrate the closed loop and write the trajectory CSV and
  a YAML run report; prints the final tracking error and settling time.

Configurations come either from a YAML file (``--config``) or from a
built-in scenario (``--scenario paper-1`` / ``paper-2``).
"""

from __future__ import annotations

import argparse
import sys

import yaml

from .configio import (
    load_config,
    save_config,
    write_report,
    write_trajectory_csv,
)
from .control import b_upper_bound, proposition1_gains, validate_b
from .numerics import NumericalBlowupError, max_real_eig
from .plant import ConfigurationError, validate_configuration
from .scenarios import BUILTIN_SCENARIOS, get_scenario
from .simulation import ScenarioConfig, run as run_simulation


def _resolve_config(args) -> ScenarioConfig:
    if (args.config is None) == (args.scenario is None):
        raise ConfigurationError(
            "exactly one of --config PATH or --scenario NAME is required"
        )
    if args.config is not None:
        cfg = load_config(args.config)
    else:
        try:
            cfg = get_scenario(args.scenario)
        except KeyError as exc:
            raise ConfigurationError(str(exc.args[0])) from None
    if args.allow_unit_frequency:
        cfg = cfg.with_overrides(allow_unit_frequency=True)
    return cfg


def _gate_rows(cfg: ScenarioConfig) -> tuple[list[dict], dict]:
    """Evaluate every gate independently; collect margins where computable."""
    rows = []
    margins = {}
    report = validate_configuration(
        cfg.exo, cfg.epsilon, cfg.r,
        allow_unit_frequency=cfg.allow_unit_frequency,
    )
    for c in report.checks:
        rows.append({"name": c.name, "passed": c.passed, "detail": c.detail})

    try:
        mats = cfg.matrices()
    except ConfigurationError as exc:
        margins["margin_A"] = None
        margins["margin_A_a"] = None
        rows.append({"name": "A_hurwitz", "passed": False, "detail": str(exc)})
        rows.append({
            "name": "A_a_hurwitz",
            "passed": False,
            "detail": "not evaluated: system matrices invalid",
        })
    else:
        margin_A = max_real_eig(mats.A)
        margins["margin_A"] = float(margin_A)
        rows.append({
            "name": "A_hurwitz",
            "passed": bool(margin_A < 0.0),
            "detail": f"max Re eig(A) = {margin_A:.6g}",
        })

        try:
            gains = proposition1_gains(
                cfg.exo, mats, allow_unit_frequency=cfg.allow_unit_frequency
            )
            margins["margin_A_a"] = float(gains.margin)
            rows.append({
                "name": "A_a_hurwitz",
                "passed": True,
                "detail": f"max Re eig(A_a) = {gains.margin:.6g}",
            })
        except ConfigurationError as exc:
            margins["margin_A_a"] = None
            rows.append(
                {"name": "A_a_hurwitz", "passed": False, "detail": str(exc)}
            )

    try:
        validate_b(cfg.b, cfg.r)
        rows.append({
            "name": "b_range",
            "passed": True,
            "detail": f"b = {cfg.b:.7g} in (0, {b_upper_bound(cfg.r):.7g})",
        })
    except ConfigurationError as exc:
        rows.append({"name": "b_range", "passed": False, "detail": str(exc)})

    return rows, margins


def cmd_check(args) -> int:
    cfg = _resolve_config(args)
    rows, margins = _gate_rows(cfg)
    label = cfg.name or args.config or "configuration"
    print(f"checking {label}")
    for row in rows:
        status = "PASS" if row["passed"] else "FAIL"
        print(f"  [{status}] {row['name']}: {row['detail']}")
    passed = all(r["passed"] for r in rows)
    print("all gates passed" if passed else "configuration rejected")
    if args.report is not None:
        payload = {"passed": passed, "checks": rows, **margins}
        with open(args.report, "w", newline="\n") as f:
            yaml.safe_dump(payload, f, sort_keys=False)
    return 0 if passed else 2


def cmd_run(args) -> int:
    cfg = _resolve_config(args)
    traj, report = run_simulation(
        cfg,
        duration=args.duration,
        step=args.step,
        record_stride=args.stride,
    )
    write_trajectory_csv(traj, args.out)
    write_report(report, args.report)
    print(f"wrote {len(traj)} samples to {args.out}")
    print(f"wrote run report to {args.report}")
    print(f"final tracking error |y(T) - r| = {report.final_error:.6e}")
    if report.horizon_too_short:
        print("horizon too short: only the initial sample was recorded")
    elif report.settling_time is None:
        print(
            "settling time: not reached within the horizon "
            f"(tolerance {report.settling_tolerance:g})"
        )
    else:
        print(
            f"settling time ({report.settling_tolerance:g} tolerance): "
            f"{report.settling_time:.1f}"
        )
    return 0


def cmd_export_scenario(args) -> int:
    """Write a built-in scenario as an editable YAML config."""
    cfg = get_scenario(args.scenario)
    save_config(cfg, args.out)
    print(f"wrote {args.scenario} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tora-asd",
        description=(
            "Additive-state-decomposition tracking control of the TORA "
            "benchmark: configuration checking and closed-loop simulation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", metavar="PATH", help="YAML scenario config")
        p.add_argument(
            "--scenario",
            metavar="NAME",
            help=f"built-in scenario ({', '.join(sorted(BUILTIN_SCENARIOS))})",
        )
        p.add_argument(
            "--allow-unit-frequency",
            action="store_true",
            help=(
                "accept exosystems with a frequency-1 component; that "
                "component is left uncompensated by the internal model"
            ),
        )

    p_check = sub.add_parser(
        "check", help="validate a configuration and print stability margins"
    )
    add_common(p_check)
    p_check.add_argument(
        "--report", metavar="PATH",
        help="also write the gate results as YAML",
    )
    p_check.set_defaults(func=cmd_check)

    p_run = sub.add_parser(
        "run", help="simulate the closed loop and write trajectory + report"
    )
    add_common(p_run)
    p_run.add_argument("--duration", type=float, help="horizon in time units")
    p_run.add_argument("--step", type=float, help="RK4 step size")
    p_run.add_argument(
        "--stride", type=int, help="record every Nth integration step"
    )
    p_run.add_argument(
        "--out", metavar="PATH", default="trajectory.csv",
        help="trajectory CSV path (default: %(default)s)",
    )
    p_run.add_argument(
        "--report", metavar="PATH", default="report.yaml",
        help="run-report YAML path (default: %(default)s)",
    )
    p_run.set_defaults(func=cmd_run)

    p_export = sub.add_parser(
        "export-scenario", help="write a built-in scenario as a YAML config"
    )
    p_export.add_argument("--scenario", required=True, metavar="NAME")
    p_export.add_argument(
        "--out", metavar="PATH", default="scenario.yaml",
        help="output path (default: %(default)s)",
    )
    p_export.set_defaults(func=cmd_export_scenario)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalBlowupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
