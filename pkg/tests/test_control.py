import math

import numpy as np
import pytest

from tora_asd.control import (
    b_upper_bound,
    backstepping_intermediates,
    backstepping_vs,
    build_A_a,
    composite_control,
    filtered_error,
    primary_controller,
    proposition1_gains,
    validate_b,
)
from tora_asd.decomposition import build_matrices, secondary_dynamics
from tora_asd.numerics import max_real_eig, observability_rank, rk4_integrate
from tora_asd.plant import ConfigurationError, ExoSystem

K1 = np.array([0.0, -0.2, -1.0, -2.0])
SCN1_EXO = ExoSystem(
    S=np.array([[0.0, 2.0], [-2.0, 0.0]]),
    C_d=np.array([1.0, 0.0]),
    w0=np.array([0.0, 0.02]),
)


def scn1_mats():
    return build_matrices(K1, 0.2, 1.0)


class TestFilteredError:
    def test_on_target(self):
        assert filtered_error(np.array([0.0, 0.0, 0.5, 0.0]), 0.5, 1.0) == 0.0

    def test_position_plus_rate(self):
        assert filtered_error(
            np.array([0.0, 0.0, 0.6, 0.1]), 0.5, 1.0
        ) == pytest.approx(0.2, abs=1e-15)

    def test_insensitive_to_cart_states(self):
        assert filtered_error(np.array([7.0, -3.0, 0.5, 0.0]), 0.5, 1.0) == 0.0


class TestProposition1Gains:
    def test_scenario_1_gain_values(self):
        gains = proposition1_gains(SCN1_EXO, scn1_mats())
        assert np.array_equal(gains.L1, np.array([1.0, 1.0, 0.0]))
        assert np.all(gains.L2 == 0.0)
        assert np.array_equal(gains.L3, -gains.L1)
        expected_S_a = np.zeros((3, 3))
        expected_S_a[1:, 1:] = SCN1_EXO.S
        assert np.array_equal(gains.S_a, expected_S_a)

    def test_L2_cancellation_structure(self):
        # K = (0, -eps, -1, -2) with a = 1 makes -C - B - H - K vanish
        eps = 0.37
        mats = build_matrices(np.array([0.0, -eps, -1.0, -2.0]), eps, 1.0)
        gains = proposition1_gains(SCN1_EXO, mats)
        assert np.all(gains.L2 == 0.0)

    def test_scenario_1_margin_regression(self):
        gains = proposition1_gains(SCN1_EXO, scn1_mats())
        assert gains.margin == pytest.approx(-0.0186184, abs=1e-6)
        assert gains.margin == max_real_eig(build_A_a(gains, scn1_mats()))

    def test_assembled_A_a_shape(self):
        gains = proposition1_gains(SCN1_EXO, scn1_mats())
        A_a = build_A_a(gains, scn1_mats())
        assert A_a.shape == (7, 7)
        # xi block feels the filtered-error read-out C + aB
        assert np.array_equal(A_a[:3, 3:], np.outer(gains.L1, [0, 0, 1, 1]))

    def test_unit_frequency_rejected(self):
        exo = ExoSystem(
            S=np.array([[0.0, 1.0], [-1.0, 0.0]]),
            C_d=np.array([1.0, 0.0]),
            w0=np.zeros(2),
        )
        with pytest.raises(ConfigurationError):
            proposition1_gains(exo, scn1_mats())

    def test_unit_frequency_override_projects_model(self):
        S = np.zeros((4, 4))
        S[:2, :2] = [[0.0, 1.0], [-1.0, 0.0]]
        S[2:, 2:] = [[0.0, 2.0], [-2.0, 0.0]]
        exo = ExoSystem(
            S=S, C_d=np.array([1.0, 0.0, 1.0, 0.0]),
            w0=np.array([0.0, 0.01, 0.0, 0.02]),
        )
        gains = proposition1_gains(exo, scn1_mats(), allow_unit_frequency=True)
        # internal model keeps integrator + the non-unit frequency block only
        assert gains.n_xi == 3
        assert gains.margin < 0.0

    def test_randomized_admissible_family_is_hurwitz(self, rng):
        # the synthesis must certify every admissible draw; a failure here
        # points at the gain formulas or the assembly, not at the draw
        for _ in range(100):
            m = 2 * int(rng.integers(1, 3))
            S = np.zeros((m, m))
            C_d = np.zeros(m)
            for blk in range(m // 2):
                while True:
                    omega = rng.uniform(0.2, 3.0)
                    if abs(omega - 1.0) > 0.15:
                        break
                S[2 * blk, 2 * blk + 1] = omega
                S[2 * blk + 1, 2 * blk] = -omega
                C_d[2 * blk] = rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 2.0)
            exo = ExoSystem(S=S, C_d=C_d, w0=np.zeros(m))
            assert observability_rank(C_d, S) == m
            a = rng.uniform(0.5, 2.0)
            eps = rng.uniform(0.05, 0.9)
            K = np.array([0.0, -eps, -1.0, -2.0])
            gains = proposition1_gains(exo, build_matrices(K, eps, a))
            assert gains.margin < 0.0


class TestPrimaryController:
    def test_converged(self):
        gains = proposition1_gains(SCN1_EXO, scn1_mats())
        xi_dot, v_p = primary_controller(
            np.zeros(3), np.array([0.0, 0.0, 0.5, 0.0]), 0.5, gains, 1.0
        )
        assert np.array_equal(xi_dot, np.zeros(3))
        assert v_p == 0.0

    def test_error_drives_internal_model(self):
        gains = proposition1_gains(SCN1_EXO, scn1_mats())
        xi_dot, v_p = primary_controller(
            np.zeros(3), np.zeros(4), 0.5, gains, 1.0
        )
        assert xi_dot == pytest.approx([-0.5, -0.5, 0.0], abs=1e-15)
        assert v_p == 0.0

    def test_internal_model_state_feeds_back(self):
        gains = proposition1_gains(SCN1_EXO, scn1_mats())
        _, v_p = primary_controller(
            np.array([1.0, 0.0, 0.0]), np.zeros(4), 0.0, gains, 1.0
        )
        assert v_p == pytest.approx(-1.0, abs=1e-15)


class TestBacksteppingRange:
    def test_bound_at_zero_reference(self):
        assert b_upper_bound(0.0) == pytest.approx(2.0)

    def test_bound_at_half_radian(self):
        assert b_upper_bound(0.5) == pytest.approx(1.3633802, abs=1e-7)

    def test_scenario_gain_accepted(self):
        assert validate_b(1.5 * (1.0 - 1.0 / math.pi), 0.5) == pytest.approx(
            1.0225352, abs=1e-7
        )

    def test_out_of_range_rejected(self):
        # the interval is open at both ends
        for bad in (0.0, -0.1, b_upper_bound(0.5), 2.0):
            with pytest.raises(ConfigurationError):
                validate_b(bad, 0.5)


class TestBacksteppingIntermediates:
    def test_equilibrium_all_zero(self):
        ints = backstepping_intermediates(np.zeros(4), 0.5, 1.0, 0.2)
        assert (
            ints.x3s_prime, ints.x4s_prime, ints.psi, ints.psi_dot,
            ints.g, ints.g_prime,
        ) == (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def test_equilibrium_with_converged_primary(self):
        ints = backstepping_intermediates(
            np.zeros(4), 0.5, 1.0, 0.2, y_p=0.5, ydot_p=0.0
        )
        assert ints.g == 0.0
        assert ints.g_prime == 0.0
        assert ints.psi_dot == 0.0

    def test_pure_cart_rate(self):
        ints = backstepping_intermediates(
            np.array([0.0, 1.0, 0.0, 0.0]), 0.0, 1.0, 0.2
        )
        assert ints.x3s_prime == pytest.approx(math.pi / 4, abs=1e-12)
        assert ints.psi == 0.0
        assert ints.x4s_prime == pytest.approx(math.pi / 4, abs=1e-12)
        assert ints.psi_dot == pytest.approx(-0.5, abs=1e-12)

    def test_pure_cart_offset(self):
        ints = backstepping_intermediates(
            np.array([1.0, 0.0, 0.0, 0.0]), 0.5, 1.0, 0.2
        )
        assert ints.x3s_prime == 0.0
        assert ints.psi == pytest.approx(-1.0, abs=1e-15)
        assert ints.x4s_prime == pytest.approx(-1.0, abs=1e-15)
        assert ints.psi_dot == 0.0

    def test_psi_dot_is_exact_time_derivative(self):
        # integrate the secondary system under its own control with a
        # decaying synthetic primary output; central differences of the
        # recorded psi must match the reported psi_dot to O(h^2)
        mats = scn1_mats()
        r, b, eps, a = 0.5, 1.0, mats.epsilon, mats.a

        def y_p(t):
            return r + 0.3 * math.exp(-0.2 * t) * math.sin(1.3 * t)

        def ydot_p(t):
            return 0.3 * math.exp(-0.2 * t) * (
                1.3 * math.cos(1.3 * t) - 0.2 * math.sin(1.3 * t)
            )

        def f(t, x_s):
            v_s = backstepping_vs(
                x_s, r, b, mats.K, eps, y_p=y_p(t), ydot_p=ydot_p(t), a=a
            )
            return secondary_dynamics(x_s, v_s, y_p(t), ydot_p(t), mats, r)

        h = 1e-3
        times, states = rk4_integrate(f, 0.0, np.zeros(4), h, 20_000)
        psi = np.empty(len(times))
        psi_dot = np.empty(len(times))
        for i, (t, x_s) in enumerate(zip(times, states)):
            ints = backstepping_intermediates(
                x_s, r, b, eps, y_p=y_p(t), ydot_p=ydot_p(t), a=a
            )
            psi[i] = ints.psi
            psi_dot[i] = ints.psi_dot
        central = (psi[2:] - psi[:-2]) / (2.0 * h)
        assert np.max(np.abs(central - psi_dot[1:-1])) < 5e-6

    def test_transformed_slope_identity(self, rng):
        # d/dt (x3s + b*atan(x2s)) along the secondary flow equals
        # -x3s' + x4s' + b*g/(1 + x2s^2) pointwise, for any state and
        # any primary output values
        mats = scn1_mats()
        r, b, eps, a = 0.5, 1.0, mats.epsilon, mats.a
        for _ in range(200):
            x_s = rng.normal(size=4)
            y_p_val, ydot_p_val = rng.normal(size=2)
            ints = backstepping_intermediates(
                x_s, r, b, eps, y_p=y_p_val, ydot_p=ydot_p_val, a=a
            )
            v_s = backstepping_vs(
                x_s, r, b, mats.K, eps, y_p=y_p_val, ydot_p=ydot_p_val, a=a
            )
            dx_s = secondary_dynamics(x_s, v_s, y_p_val, ydot_p_val, mats, r)
            sigma = 1.0 / (1.0 + x_s[1] ** 2)
            lhs = dx_s[2] + b * sigma * dx_s[1]
            rhs = -ints.x3s_prime + ints.x4s_prime + b * sigma * ints.g
            assert lhs == pytest.approx(rhs, abs=1e-12)


class TestBacksteppingVs:
    def test_equilibrium(self):
        assert backstepping_vs(np.zeros(4), 0.5, 1.0, K1, 0.2) == 0.0

    def test_pure_cart_rate(self):
        v_s = backstepping_vs(
            np.array([0.0, 1.0, 0.0, 0.0]), 0.0, 1.0, np.zeros(4), 0.2
        )
        assert v_s == pytest.approx(math.pi / 4 - math.pi / 2 + 0.5, abs=1e-12)

    def test_pure_cart_offset(self):
        v_s = backstepping_vs(
            np.array([1.0, 0.0, 0.0, 0.0]), 0.5, 1.0, np.zeros(4), 0.2
        )
        assert v_s == pytest.approx(2.0, abs=1e-12)


class TestCompositeControl:
    def test_global_zero_at_zero_reference(self):
        mats = scn1_mats()
        gains = proposition1_gains(SCN1_EXO, mats)
        u = composite_control(
            np.zeros(4), np.zeros(3), np.zeros(4), np.zeros(4), 0.0,
            gains, mats, 0.0, 1.0,
        )
        assert u == 0.0

    def test_zero_initial_state_at_half_radian(self):
        mats = scn1_mats()
        gains = proposition1_gains(SCN1_EXO, mats)
        u = composite_control(
            np.zeros(4), np.zeros(3), np.zeros(4), np.zeros(4), 0.0,
            gains, mats, 0.5, 1.0,
        )
        assert u == 0.0

    def test_converged_structure(self):
        # with x_s_hat = 0 and e_p = 0, u reduces to state feedback plus
        # the internal-model output plus disturbance compensation
        mats = scn1_mats()
        gains = proposition1_gains(SCN1_EXO, mats)
        x = np.array([0.0, 0.0, 0.5, 0.0])
        xi = np.array([0.7, -0.3, 0.4])
        F_d_hat = 0.025
        u = composite_control(
            x, xi, x, np.zeros(4), F_d_hat, gains, mats, 0.5, 1.0
        )
        c = 0.2 * math.cos(0.5) / (1.0 - 0.04 * math.cos(0.5) ** 2)
        expected = float(mats.K @ x) + float(gains.L3 @ xi) + c * F_d_hat
        assert u == pytest.approx(expected, abs=1e-15)
