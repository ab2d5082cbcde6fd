import math

import numpy as np
import pytest

from tora_asd.numerics import rk4_integrate
from tora_asd.plant import (
    ConfigurationError,
    ExoSystem,
    PlantParams,
    ReferenceParams,
    coupling_coefficient,
    disturbance_output,
    exo_dynamics,
    split_unit_frequency,
    tora_dynamics,
    validate_configuration,
)

SCN1_EXO = ExoSystem(
    S=np.array([[0.0, 2.0], [-2.0, 0.0]]),
    C_d=np.array([1.0, 0.0]),
    w0=np.array([0.0, 0.02]),
)


class TestCouplingCoefficient:
    def test_vanishes_at_quarter_turn(self):
        assert coupling_coefficient(math.pi / 2, 0.2) == pytest.approx(0.0, abs=1e-16)

    def test_at_zero_angle(self):
        assert coupling_coefficient(0.0, 0.2) == pytest.approx(0.2 / 0.96, rel=1e-12)

    def test_odd_symmetry_at_pi(self):
        assert coupling_coefficient(math.pi, 0.2) == pytest.approx(
            -0.2 / 0.96, rel=1e-12
        )

    def test_accepts_plant_params(self):
        assert coupling_coefficient(0.0, PlantParams(0.2)) == pytest.approx(
            0.2 / 0.96
        )

    def test_denominator_bounded_away_from_zero(self):
        eps = 0.9
        for x3 in np.linspace(-math.pi, math.pi, 721):
            value = coupling_coefficient(x3, eps)
            assert abs(value) <= eps / (1.0 - eps * eps) + 1e-12

    def test_epsilon_range_enforced(self):
        for bad in (0.0, 1.0, -0.3, 1.2):
            with pytest.raises(ConfigurationError):
                coupling_coefficient(0.0, bad)


class TestToraDynamics:
    def test_origin_is_equilibrium(self):
        assert np.array_equal(
            tora_dynamics(np.zeros(4), 0.0, 0.0, 0.2), np.zeros(4)
        )

    def test_quarter_turn_decouples_disturbance(self):
        dx = tora_dynamics(np.array([0.0, 0.0, math.pi / 2, 0.0]), 1.0, 0.0, 0.2)
        assert dx == pytest.approx([0.0, 0.2, 0.0, 1.0], abs=1e-12)

    def test_disturbed_cart(self):
        dx = tora_dynamics(np.array([1.0, 0.0, 0.0, 0.0]), 0.0, 0.5, 0.2)
        assert dx == pytest.approx([0.0, -0.5, 0.0, -0.5 * 0.2 / 0.96], rel=1e-9)

    def test_affine_in_control_and_disturbance(self, rng):
        for _ in range(50):
            x = rng.normal(size=4)
            u1, u2, F_d = rng.normal(size=3)
            # the control enters slot 4 alone; with no disturbance the
            # difference is exact in floating point
            bump = tora_dynamics(x, u1, 0.0, 0.2) - tora_dynamics(x, 0.0, 0.0, 0.2)
            assert np.array_equal(bump, np.array([0.0, 0.0, 0.0, u1]))
            # general superposition in (u, F_d) holds to rounding error
            lhs = (
                tora_dynamics(x, u1 + u2, 0.0, 0.2)
                - tora_dynamics(x, u1, F_d, 0.2)
                - tora_dynamics(x, u2, -F_d, 0.2)
                + tora_dynamics(x, 0.0, 0.0, 0.2)
            )
            assert lhs == pytest.approx(np.zeros(4), abs=1e-13)

    def test_non_finite_input_rejected(self):
        with pytest.raises(ValueError):
            tora_dynamics(np.array([np.nan, 0, 0, 0]), 0.0, 0.0, 0.2)
        with pytest.raises(ValueError):
            tora_dynamics(np.zeros(4), math.inf, 0.0, 0.2)


class TestExosystem:
    def test_scenario_1_drift_and_output(self):
        w = np.array([0.0, 0.02])
        assert exo_dynamics(w, SCN1_EXO) == pytest.approx([0.04, 0.0], abs=1e-15)
        assert disturbance_output(w, SCN1_EXO) == 0.0

    def test_zero_state(self):
        assert np.array_equal(exo_dynamics(np.zeros(2), SCN1_EXO), np.zeros(2))
        assert disturbance_output(np.zeros(2), SCN1_EXO) == 0.0

    def test_closed_form_sine(self):
        # w' = S w from (0, 0.02) gives F_d(t) = 0.02 sin(2t)
        n = int(round(math.pi / 4 / 1e-3))
        h = (math.pi / 4) / n
        times, states = rk4_integrate(
            lambda t, w: SCN1_EXO.S @ w, 0.0, SCN1_EXO.w0, h, n
        )
        F_d = states @ SCN1_EXO.C_d
        assert F_d[-1] == pytest.approx(0.02, abs=1e-10)
        assert np.allclose(F_d, 0.02 * np.sin(2.0 * times), atol=1e-10)

    def test_norm_conservation_long_run(self):
        _, states = rk4_integrate(
            lambda t, w: SCN1_EXO.S @ w, 0.0, SCN1_EXO.w0, 1e-3, 200_000,
            record_stride=100,
        )
        norms = np.linalg.norm(states, axis=1)
        assert np.max(np.abs(norms - norms[0])) < 1e-6

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            exo_dynamics(np.zeros(3), SCN1_EXO)
        with pytest.raises(ConfigurationError):
            ExoSystem(S=np.eye(2), C_d=np.ones(3), w0=np.zeros(2))


class TestValidateConfiguration:
    def test_scenario_1_passes(self):
        report = validate_configuration(SCN1_EXO, 0.2, 0.5)
        assert report.passed
        assert [c.name for c in report.checks] == [
            "exosystem_skew_symmetric",
            "exosystem_observable",
            "exosystem_unit_frequency",
            "epsilon_range",
            "reference_range",
        ]

    def test_unit_frequency_rejected(self):
        exo = ExoSystem(
            S=np.array([[0.0, 1.0], [-1.0, 0.0]]),
            C_d=np.array([1.0, 0.0]),
            w0=np.zeros(2),
        )
        report = validate_configuration(exo, 0.2, 0.0)
        assert not report.passed
        (failure,) = report.failures
        assert failure.name == "exosystem_unit_frequency"
        assert "sin(t)" in failure.detail
        with pytest.raises(ConfigurationError):
            report.raise_on_failure()

    def test_unit_frequency_override(self):
        exo = ExoSystem(
            S=np.array([[0.0, 1.0], [-1.0, 0.0]]),
            C_d=np.array([1.0, 0.0]),
            w0=np.zeros(2),
        )
        report = validate_configuration(exo, 0.2, 0.0, allow_unit_frequency=True)
        assert report.passed
        assert "will not compensate" in report.checks[2].detail

    def test_not_skew_symmetric(self):
        exo = ExoSystem(
            S=np.array([[0.0, 2.0], [0.0, 0.0]]),
            C_d=np.array([1.0, 0.0]),
            w0=np.zeros(2),
        )
        report = validate_configuration(exo, 0.2, 0.0)
        assert any(
            not c.passed and c.name == "exosystem_skew_symmetric"
            for c in report.checks
        )

    def test_unobservable_pair(self):
        exo = ExoSystem(
            S=np.array([[0.0, 2.0], [-2.0, 0.0]]),
            C_d=np.zeros(2),
            w0=np.zeros(2),
        )
        report = validate_configuration(exo, 0.2, 0.0)
        assert any(
            not c.passed and c.name == "exosystem_observable"
            for c in report.checks
        )

    def test_parameter_ranges(self):
        report = validate_configuration(SCN1_EXO, 1.2, 2.0)
        failed = {c.name for c in report.failures}
        assert failed == {"epsilon_range", "reference_range"}


class TestReferenceAndParams:
    def test_reference_range(self):
        ReferenceParams(0.5)
        with pytest.raises(ConfigurationError):
            ReferenceParams(math.pi / 2)

    def test_plant_params_range(self):
        PlantParams(0.2)
        with pytest.raises(ConfigurationError):
            PlantParams(1.0)


class TestSplitUnitFrequency:
    def test_no_unit_component_is_identity(self):
        reduced, dropped = split_unit_frequency(SCN1_EXO)
        assert dropped == 0
        assert reduced.m == 2
        # same spectrum up to orthogonal change of basis
        assert sorted(np.linalg.eigvals(reduced.S).imag) == pytest.approx(
            [-2.0, 2.0], abs=1e-12
        )

    def test_unit_block_is_removed(self):
        S = np.zeros((4, 4))
        S[:2, :2] = [[0.0, 1.0], [-1.0, 0.0]]
        S[2:, 2:] = [[0.0, 2.0], [-2.0, 0.0]]
        exo = ExoSystem(
            S=S, C_d=np.array([1.0, 0.0, 1.0, 0.0]),
            w0=np.array([0.0, 0.01, 0.0, 0.02]),
        )
        reduced, dropped = split_unit_frequency(exo)
        assert dropped == 2
        assert reduced.m == 2
        freqs = np.abs(np.linalg.eigvals(reduced.S).imag)
        assert freqs == pytest.approx([2.0, 2.0], abs=1e-12)
        # the projected system stays skew-symmetric
        assert np.max(np.abs(reduced.S + reduced.S.T)) < 1e-14
