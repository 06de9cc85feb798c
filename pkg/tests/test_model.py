import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from periwave import (
    MicroPotential,
    Side,
    VKind,
    bond_force_f,
    check_hypotheses,
    dispersion,
    eval_v,
    micro_w,
    n_ell,
    sound_speed_c0,
)
from periwave.errors import DomainError
from periwave.model import kernel_integral

finite = st.floats(-5.0, 5.0, allow_nan=False)
bond = st.floats(0.01, 1.0).flatmap(lambda x: st.sampled_from([x, -x]))


class TestEvalV:
    def test_silling_tension(self, silling):
        assert eval_v(silling, 1.0) == pytest.approx(0.5, rel=1e-15)

    def test_silling_compression(self, silling):
        # 0.5 * 1 * (1 + 1/3)
        assert eval_v(silling, -1.0) == pytest.approx(2.0 / 3.0, rel=1e-15)

    @pytest.mark.parametrize("order", [0, 1])
    def test_vanishes_at_origin(self, silling, silling_sym, quadratic, order):
        for pot in (silling, silling_sym, quadratic):
            assert eval_v(pot, 0.0, order) == 0.0

    def test_symmetrized_second_derivative(self, silling_sym):
        # d^2/ds^2 (s^2/2 + |s|^3/6) = 1 + |s|
        assert eval_v(silling_sym, -2.0, 2) == pytest.approx(3.0, rel=1e-15)

    def test_second_derivative_continuous_at_kink(self, silling):
        assert eval_v(silling, 0.0, 2) == 1.0
        assert eval_v(silling, -1e-12, 2) == pytest.approx(1.0, abs=1e-11)

    def test_invalid_order(self, silling):
        with pytest.raises(ValueError):
            eval_v(silling, 0.1, 3)

    def test_symmetrized_formula(self, silling_sym):
        s = np.linspace(-3, 3, 61)
        np.testing.assert_allclose(eval_v(silling_sym, s), 0.5 * s**2 * (1 + np.abs(s) / 3), rtol=1e-14)

    def test_original_formula(self, silling):
        s = np.linspace(-3, 3, 61)
        ref = np.where(s < 0, 0.5 * s**2 * (1 - s / 3), 0.5 * s**2)
        np.testing.assert_allclose(eval_v(silling, s), ref, rtol=1e-14)


class TestMicroW:
    def test_unit_bond(self, silling):
        assert micro_w(silling, 1.0, 1.0) == pytest.approx(0.5)

    def test_compressed_half_bond(self, silling):
        assert micro_w(silling, -0.5, 0.5) == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_zero_elongation(self, silling):
        assert micro_w(silling, 0.0, 0.3) == 0.0

    @pytest.mark.parametrize("xi", [0.0, 1.5, -1.01])
    def test_bond_domain(self, silling, xi):
        with pytest.raises(DomainError):
            micro_w(silling, 0.1, xi)


class TestBondForce:
    def test_compressive_force_law(self, silling):
        # F(s) = s - s^2/2 for s < 0
        assert bond_force_f(silling, -1.0, 1.0) == pytest.approx(-1.5, rel=1e-15)

    def test_zero(self, silling):
        assert bond_force_f(silling, 0.0, 0.4) == 0.0

    def test_antisymmetry_spot(self, silling):
        assert bond_force_f(silling, -0.3, -0.7) == pytest.approx(-bond_force_f(silling, 0.3, 0.7), abs=1e-16)

    @given(eta=finite, xi=bond)
    def test_antisymmetry(self, eta, xi):
        pot = MicroPotential.silling(1.0)
        assert bond_force_f(pot, -eta, -xi) + bond_force_f(pot, eta, xi) == pytest.approx(0.0, abs=1e-13)

    @given(eta=finite, xi=bond)
    def test_matches_force_law(self, eta, xi):
        pot = MicroPotential.silling(1.0)
        s = eta / xi
        F = s - s * s / 2 if s < 0 else s
        assert bond_force_f(pot, eta, xi) == pytest.approx(F * math.copysign(1.0, xi), rel=1e-12, abs=1e-14)

    @settings(max_examples=50)
    @given(eta=st.floats(0.05, 3.0).flatmap(lambda x: st.sampled_from([x, -x])), xi=st.floats(0.05, 1.0))
    def test_derivative_of_bond_energy(self, eta, xi):
        pot = MicroPotential.silling(1.0)
        d = 1e-6 * max(abs(eta), 1.0)
        fd = (micro_w(pot, eta + d, xi) - micro_w(pot, eta - d, xi)) / (2 * d)
        assert bond_force_f(pot, eta, xi) == pytest.approx(fd, rel=1e-6, abs=1e-9)


class TestConstruction:
    def test_symmetrized_is_even(self, silling, silling_sym):
        assert not silling.is_even
        assert silling_sym.is_even
        assert silling_sym.v_kind is VKind.SILLING_SYMMETRIZED
        assert silling_sym.superquadratic_side is Side.BOTH

    def test_mismatched_curvature_rejected(self):
        with pytest.raises(DomainError):
            MicroPotential.custom((0, 0, 0.5), (0, 0, 1.0))

    def test_bad_exponents_rejected(self):
        with pytest.raises(DomainError):
            MicroPotential(gamma1=2.0, gamma2=1.0)

    def test_from_config(self):
        pot = MicroPotential.from_config({"kind": "silling_symmetrized", "delta": 2.0})
        assert pot.delta == 2.0 and pot.is_even

    def test_from_config_unknown_key(self):
        with pytest.raises(KeyError, match="dleta"):
            MicroPotential.from_config({"kind": "quadratic", "dleta": 1.0})

    def test_immutable(self, silling):
        with pytest.raises(AttributeError):
            silling.delta = 2.0


class TestLinearQuantities:
    def test_c0_unit_horizon(self, silling):
        assert sound_speed_c0(silling) == pytest.approx(math.sqrt(0.5), rel=1e-12)

    def test_c0_double_horizon(self):
        assert sound_speed_c0(MicroPotential.silling(2.0)) == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_c0_degenerate(self):
        pot = MicroPotential.custom((0, 0, 0, 1.0), (0, 0, 0, -1.0))
        assert sound_speed_c0(pot) == 0.0

    @pytest.mark.parametrize("ell,expected", [(0.0, 0.5), (0.6, 0.32), (0.999999, 0.5 * (1 - 0.999999**2))])
    def test_n_ell(self, silling, ell, expected):
        assert n_ell(silling, ell) == pytest.approx(expected, rel=1e-9)

    def test_n_ell_domain(self, silling):
        with pytest.raises(DomainError):
            n_ell(silling, 1.0)

    def test_dispersion_at_zero(self, silling):
        c0 = sound_speed_c0(silling)
        assert dispersion(silling, 0.0) == (0.0, c0, c0)

    def test_dispersion_subsonic_unit_wavenumber(self, silling):
        w, ph, gr = dispersion(silling, 1.0)
        c0 = sound_speed_c0(silling)
        assert 0 < w < c0 and ph < c0 and gr < c0

    def test_dispersion_closed_form(self, silling):
        # omega^2 = 4 int_0^1 sin^2(k xi/2)/xi dxi for Silling
        k = 3.0
        ref, _ = integrate.quad(lambda x: 4 * math.sin(k * x / 2) ** 2 / x, 0, 1, epsrel=1e-13)
        assert dispersion(silling, k)[0] == pytest.approx(math.sqrt(ref), rel=1e-10)

    def test_group_velocity_is_derivative(self, silling):
        k, d = 2.0, 1e-5
        fd = (dispersion(silling, k + d)[0] - dispersion(silling, k - d)[0]) / (2 * d)
        assert dispersion(silling, k)[2] == pytest.approx(fd, rel=1e-7)

    def test_negative_wavenumber(self, silling):
        with pytest.raises(ValueError):
            dispersion(silling, -1.0)

    @given(st.floats(1e-2, 50.0))
    @settings(max_examples=40, deadline=None)
    def test_velocities_below_c0(self, k):
        pot = MicroPotential.silling(1.0)
        c0 = sound_speed_c0(pot)
        _, ph, gr = dispersion(pot, k)
        assert ph < c0 and gr < c0

    def test_long_wave_limit_quadratic(self, silling):
        c0 = sound_speed_c0(silling)
        e1 = c0 - dispersion(silling, 0.02)[1]
        e2 = c0 - dispersion(silling, 0.01)[1]
        assert e1 / e2 == pytest.approx(4.0, rel=1e-2)


class TestHypotheses:
    def test_silling(self, silling):
        rep = check_hypotheses(silling)
        assert rep.all_ok
        assert rep.h2_integral_2 == pytest.approx(1.0, rel=1e-10)
        assert rep.h2_integral_1 == pytest.approx(1.0, rel=1e-10)
        assert any("below 1" in n for n in rep.notes)

    def test_quadratic_superquadratic_with_equality(self, quadratic):
        s = np.linspace(-4, 4, 33)
        for lam in (1.5, 2.0, 4.0):
            np.testing.assert_allclose(quadratic.v(lam * s), lam**2 * quadratic.v(s), rtol=1e-14)
        assert check_hypotheses(quadratic).h1_superquadratic_ok

    def test_divergent_integral_flagged(self):
        pot = MicroPotential.custom((0, 0, 0.5), (0, 0, 0.5), m_exponent=2.0, k_exponent=1.0)
        rep = check_hypotheses(pot)
        assert math.isinf(rep.h2_integral_1)
        assert not rep.h2_ok
        # oracle: the cut-off integral keeps growing as the cutoff shrinks
        cut = [kernel_integral(lambda x: x**3 / x**6, eps, 1.0) for eps in (1e-1, 1e-2, 1e-3)]
        assert cut[0] < cut[1] < cut[2] and cut[2] > 1e5

    def test_subquadratic_detected(self):
        # V = s^2/2 - s^4/100 loses superquadraticity
        pot = MicroPotential.custom((0, 0, 0.5, 0, -0.01), (0, 0, 0.5, 0, -0.01), superquadratic_side=Side.BOTH)
        rep = check_hypotheses(pot)
        assert not rep.h1_superquadratic_ok

    def test_report_serializable(self, silling):
        d = check_hypotheses(silling).to_dict()
        assert set(d) >= {"h1_convex_ok", "h2_integral_1", "h2_integral_2", "notes"}

    @given(st.floats(-1e3, 1e3))
    def test_symmetrized_above_quadratic(self, s):
        pot = MicroPotential.silling(1.0, symmetrized=True)
        assert eval_v(pot, s) >= 0.5 * eval_v(pot, 0.0, 2) * s * s * (1 - 1e-15)
