"""Equation-level tests: EMF forms, the three RHS formulations, scaling."""

import math

import numpy as np
import pytest

from rfbdyn import (BatteryParams, CircuitParams, DimensionlessParams,
                    dimensionless_rhs, jacobian, nernst_dimensionless,
                    nernst_emf, nernst_slope, nondimensionalize,
                    second_order_rhs, state_rhs)
from rfbdyn.errors import DomainError
from rfbdyn.model import (cell_rate_from_state, char_poly_coeffs,
                          tank_from_cell_rate, to_dimensionless_series)
from rfbdyn.params import CALIBRATED_E_E0

B = BatteryParams()
C = CircuitParams()


def dparams(w_L_per_min=0.100):
    return nondimensionalize(B, C, w_L_per_min / 60.0)


class TestNernstEmf:
    def test_half_charge_gives_reference_emf_exactly(self):
        assert nernst_emf(B.c_max / 2.0, B) == B.E_e0

    def test_zero_volt_crossing_at_tiny_fixed_point_concentration(self):
        # the EMF vanishes at the rest concentration of the calibrated model
        assert abs(nernst_emf(B.c_max * 3.51e-12, B)) < 1e-6

    def test_three_quarter_charge_hand_evaluation(self):
        # independent arithmetic: E = E_e0 + (2RT/F) ln 3 at c_c = 3 c_max/4
        b = BatteryParams(E_e0=1.40)
        expected = 1.40 + (2.0 * 8.314462618 * 307.0 / 96485.33212) * math.log(3.0)
        assert nernst_emf(1.275, b) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(1.458, abs=1e-3)

    def test_strictly_increasing(self):
        c = np.linspace(1e-6, B.c_max - 1e-6, 500)
        e = nernst_emf(c, B)
        assert np.all(np.diff(e) > 0)

    @pytest.mark.parametrize("bad", [0.0, -0.1, 1.70, 2.0])
    def test_domain_errors(self, bad):
        with pytest.raises(DomainError):
            nernst_emf(bad, B)

    def test_prefactor_override_scales_log_term(self):
        b = BatteryParams(nernst_prefactor=2 * B.thermal_voltage)
        base = nernst_emf(0.4, B) - B.E_e0
        assert nernst_emf(0.4, b) - b.E_e0 == pytest.approx(2 * base, rel=1e-12)


class TestNernstDimensionless:
    def test_midpoint_is_one(self):
        assert nernst_dimensionless(0.5, 0.3) == 1.0

    def test_vanishes_at_rest_concentration(self):
        # one-line root evaluation: eps solving 1 + eps ln(x/(1-x)) = 0
        x1 = 3.51e-12
        eps = -1.0 / math.log(x1 / (1.0 - x1))
        assert eps == pytest.approx(0.03791, abs=5e-6)
        assert abs(nernst_dimensionless(x1, eps)) < 1e-4

    def test_antisymmetry_about_half(self):
        x1 = 3.51e-12
        eps = -1.0 / math.log(x1 / (1.0 - x1))
        assert nernst_dimensionless(1.0 - x1, eps) == pytest.approx(2.0, abs=1e-4)

    def test_exactness_against_dimensional_form(self):
        # N(x1) * E_e0 must reproduce the dimensional EMF to machine precision
        rng = np.random.default_rng(42)
        eps = B.thermal_voltage / B.E_e0
        x1 = rng.uniform(0.0, 1.0, 1000) * (1 - 2e-9) + 1e-9
        lhs = nernst_dimensionless(x1, eps) * B.E_e0
        rhs = nernst_emf(B.c_max * x1, B)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.5, 1.5])
    def test_domain_errors(self, bad):
        with pytest.raises(DomainError):
            nernst_dimensionless(bad, 0.05)


class TestNernstSlope:
    def test_midpoint_value(self):
        assert nernst_slope(0.5, 0.03) == pytest.approx(4 * 0.03, rel=1e-14)

    def test_value_near_bifurcation_concentration(self):
        assert nernst_slope(5.72e-4, 0.03791) == pytest.approx(66.3, rel=5e-3)

    def test_symmetry(self):
        # 1 - (1 - x) does not round back to x, hence the 1e-12 slack
        for x in (1e-4, 0.2, 0.49):
            assert nernst_slope(x, 0.1) == pytest.approx(nernst_slope(1 - x, 0.1), rel=1e-12)

    def test_matches_centered_finite_difference(self):
        eps = 0.03791410964213599
        for x1 in (1e-6, 1e-4, 0.01, 0.3, 0.5, 0.9):
            s = 1e-8 * x1 * (1 - x1)
            fd = (nernst_dimensionless(x1 + s, eps)
                  - nernst_dimensionless(x1 - s, eps)) / (2 * s)
            assert nernst_slope(x1, eps) == pytest.approx(fd, rel=1e-6)


class TestStateRhs:
    def test_uniform_rest_state(self):
        dcc, dct, di = state_rhs(0.125, 0.125, 0.0, B, C, 0.100 / 60.0)
        assert dcc == 0.0 and dct == 0.0
        assert di == pytest.approx(nernst_emf(0.125, B) / C.L_ind, rel=1e-14)

    def test_no_flow_isolates_tank(self):
        dcc, dct, _ = state_rhs(0.5, 0.4, 3.0, B, C, 0.0)
        assert dct == 0.0
        assert dcc == pytest.approx(-3.0 / (B.alpha_c * B.F), rel=1e-14)

    def test_switch_on_current_slope_hand_evaluation(self):
        # di/dt at t=0 is the full EMF across the inductor
        _, _, di = state_rhs(0.125, 0.125, 0.0, B, C, 0.100 / 60.0)
        emf_hand = CALIBRATED_E_E0 + (2 * 8.314462618 * 307 / 96485.33212) \
            * math.log(0.125 / (1.70 - 0.125))
        assert di == pytest.approx(emf_hand / C.L_ind, rel=1e-12)

    def test_ion_content_changes_at_reaction_rate(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            cc = rng.uniform(1e-6, 1.69)
            ct = rng.uniform(1e-6, 1.69)
            i = rng.uniform(-30, 30)
            w = rng.uniform(0, 0.01)
            dcc, dct, _ = state_rhs(cc, ct, i, B, C, w)
            total = B.alpha_c * dcc + B.alpha_t * dct
            assert total == pytest.approx(-i / B.F, rel=1e-12, abs=1e-18)


class TestSecondOrderRhs:
    def test_quiescent_state(self):
        cc = 0.3
        dcc, dv, di = second_order_rhs(cc, 0.0, 0.0, B, C, 0.001)
        emf = nernst_emf(cc, B)
        assert dcc == 0.0
        assert dv == pytest.approx(-emf / (B.alpha_c * B.F * C.L_ind), rel=1e-14)
        assert di == pytest.approx(emf / C.L_ind, rel=1e-14)

    def test_consistent_with_differentiated_first_order_form(self):
        # d(dc_c/dt)/dt from the first-order system equals the second-order dv
        rng = np.random.default_rng(11)
        w = 0.100 / 60.0
        for _ in range(100):
            cc = rng.uniform(1e-4, 1.6)
            ct = rng.uniform(1e-4, 1.6)
            i = rng.uniform(-10, 30)
            v = cell_rate_from_state(cc, ct, i, B, w)
            dcc1, dct1, di1 = state_rhs(cc, ct, i, B, C, w)
            dcc2, dv2, di2 = second_order_rhs(cc, v, i, B, C, w)
            assert di2 == pytest.approx(di1, rel=1e-12)
            assert dcc2 == pytest.approx(dcc1, rel=1e-12, abs=1e-16)
            dv_chain = (w / B.alpha_c) * (dct1 - dcc1) - di1 / (B.alpha_c * B.F)
            assert dv2 == pytest.approx(dv_chain, rel=1e-12, abs=1e-16)

    def test_no_flow_locks_dv_to_current_slope(self):
        _, dv, di = second_order_rhs(0.2, 0.05, 4.0, B, C, 0.0)
        assert dv == pytest.approx(-di / (B.alpha_c * B.F), rel=1e-14)

    def test_tank_recovery_roundtrip(self):
        w = 0.05 / 60.0
        v = cell_rate_from_state(0.4, 0.9, 12.0, B, w)
        assert tank_from_cell_rate(0.4, v, 12.0, B, w) == pytest.approx(0.9, rel=1e-12)


class TestNondimensionalize:
    def test_zero_flow(self):
        d0 = nondimensionalize(B, C, 0.0)
        d1 = nondimensionalize(B, C, 0.001)
        assert d0.beta == 0.0 and d0.gamma == 0.0
        assert d0.delta == d1.delta and d0.epsilon == d1.epsilon

    def test_slow_time_scale_prediction_with_round_values(self):
        # -W t_hat / alpha_t at the reference flow lands on the reported
        # slow eigenvalue with round (E_e0, L, r1+r2) values
        b = BatteryParams(E_e0=1.40)
        c = CircuitParams(r1=0.025, r2=0.025, L_ind=0.1)
        d = nondimensionalize(b, c, 0.050 / 60.0)
        assert -(0.050 / 60.0) * d.t_hat / b.alpha_t == pytest.approx(-3.17e-2, rel=0.01)
        assert -d.gamma / d.delta == pytest.approx(-3.17e-2, rel=0.01)

    def test_linear_in_flow(self):
        d1 = dparams(0.05)
        d2 = dparams(0.10)
        assert d2.beta == pytest.approx(2 * d1.beta, rel=1e-13)
        assert d2.gamma == pytest.approx(2 * d1.gamma, rel=1e-13)
        assert d2.delta == d1.delta and d2.epsilon == d1.epsilon

    def test_exact_identities(self):
        d = dparams()
        assert d.delta == d.t_hat_prime / d.t_hat
        assert d.epsilon == B.thermal_voltage / B.E_e0
        assert d.c_hat == B.c_max
        assert d.i_hat == B.E_e0 / C.r_total


class TestDimensionlessRhs:
    def test_rest_state_is_stationary(self):
        d = dparams()
        eps = d.epsilon
        # the rest concentration that produced the calibrated epsilon
        x1s = 1.0 / (1.0 + math.exp(1.0 / eps))
        dx = dimensionless_rhs(x1s, 0.0, 0.0, d)
        assert max(abs(v) for v in dx) < 1e-10
        dx_lit = dimensionless_rhs(3.51e-12, 0.0, 0.0, d)
        assert max(abs(v) for v in dx_lit) < 1e-10

    def test_fast_nullcline_freezes_current(self):
        d = dparams()
        for x1 in (1e-6, 1e-4, 0.3):
            n = nernst_dimensionless(x1, d.epsilon)
            _, _, dx3 = dimensionless_rhs(x1, 0.7, n, d)
            assert dx3 == 0.0

    def test_generic_point_hand_substitution(self):
        d = dparams()
        x1, x2, x3 = 2e-4, -1.5e-3, 0.64
        n = 1.0 + d.epsilon * math.log(x1 / (1.0 - x1))
        dx1, dx2, dx3 = dimensionless_rhs(x1, x2, x3, d)
        assert dx1 == x2
        assert dx2 == pytest.approx(-d.beta * x2 + (1 - d.gamma) * x3 - n, rel=1e-14)
        assert dx3 == pytest.approx((-x3 + n) / d.delta, rel=1e-14)


class TestJacobian:
    def test_fixed_entries(self):
        d = dparams()
        a = jacobian(1e-4, d)
        assert a[0, 0] == 0.0 and a[0, 2] == 0.0 and a[0, 1] == 1.0
        assert a[2, 1] == 0.0
        assert a[1, 1] == -d.beta
        assert a[2, 2] == pytest.approx(-1.0 / d.delta, rel=1e-15)

    def test_unit_gamma_kills_current_coupling(self):
        d = dparams()
        d1 = DimensionlessParams(beta=d.beta, gamma=1.0, delta=d.delta,
                                 epsilon=d.epsilon, c_hat=d.c_hat, t_hat=d.t_hat,
                                 i_hat=d.i_hat, t_hat_prime=d.t_hat_prime)
        assert jacobian(1e-4, d1)[1, 2] == 0.0

    def test_determinant_cofactor_oracle(self):
        d = dparams()
        for x1 in (1e-6, 1e-3, 0.2):
            m = jacobian(x1, d)
            det = (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
                   - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
                   + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
            f = nernst_slope(x1, d.epsilon)
            assert det == pytest.approx(-f * d.gamma / d.delta, rel=1e-12)

    def test_characteristic_polynomial_coefficients(self):
        d = dparams()
        for x1 in (1e-8, 1e-4, 0.4):
            m = jacobian(x1, d)
            a, b, c = char_poly_coeffs(x1, d)
            trace = m[0, 0] + m[1, 1] + m[2, 2]
            assert trace == pytest.approx(-a, rel=1e-12)
            minors = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
                      + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
                      + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
            assert minors == pytest.approx(b, rel=1e-12)


class TestVariableMap:
    def test_rhs_forms_agree_under_scaling(self):
        # mapping a physical state through the scales and differentiating
        # must reproduce the dimensionless flow
        w = 0.100 / 60.0
        d = dparams(0.100)
        rng = np.random.default_rng(3)
        for _ in range(50):
            cc = rng.uniform(1e-5, 1.6)
            ct = rng.uniform(1e-5, 1.6)
            i = rng.uniform(-5, 30)
            tau, x1, x2, x3 = to_dimensionless_series(
                np.array([0.0]), np.array([cc]), np.array([ct]), np.array([i]),
                B, d, w)
            dx = dimensionless_rhs(float(x1[0]), float(x2[0]), float(x3[0]), d)
            dcc, dct, di = state_rhs(cc, ct, i, B, C, w)
            v = cell_rate_from_state(cc, ct, i, B, w)
            dv = second_order_rhs(cc, v, i, B, C, w)[1]
            assert dx[0] == pytest.approx(dcc * d.t_hat / d.c_hat, rel=1e-11, abs=1e-14)
            assert dx[1] == pytest.approx(dv * d.t_hat ** 2 / d.c_hat, rel=1e-10, abs=1e-12)
            assert dx[2] == pytest.approx(di * d.t_hat / d.i_hat, rel=1e-11, abs=1e-14)
