import math

import numpy as np
import pytest

import stefan_front as sf
from stefan_front.errors import DomainError, ParameterError, RangeError


class TestArrhenius:
    def test_anchor_at_zero_is_exact(self, baseline_kinetics):
        kin = baseline_kinetics
        assert sf.g_eval(kin, 0.0) == -kin.v0

    def test_v0_closed_form(self, baseline_kinetics):
        kin = baseline_kinetics
        assert kin.v0 == 2.0 * np.exp(1.0 / -1.0)

    def test_asymptote(self, baseline_kinetics):
        # g -> -V0 as u -> inf
        assert abs(sf.g_eval(baseline_kinetics, 1e6) - (-2.0)) < 1e-3

    def test_point_value(self, baseline_kinetics):
        # g(1) = -2 exp(-1/2)
        assert sf.g_eval(baseline_kinetics, 1.0) == pytest.approx(
            -1.2130613194252668, abs=1e-14)

    def test_domain_error(self, baseline_kinetics):
        with pytest.raises(DomainError):
            sf.g_eval(baseline_kinetics, -0.5)
        with pytest.raises(DomainError):
            sf.g_prime(baseline_kinetics, -1.0)


class TestInverse:
    def test_endpoint(self, baseline_kinetics):
        assert sf.g_inv(baseline_kinetics, -baseline_kinetics.v0) == 0.0

    def test_round_trip(self, baseline_kinetics):
        for u in (0.1, 1.0, 5.0):
            back = sf.g_inv(baseline_kinetics, sf.g_eval(baseline_kinetics, u))
            assert abs(back - u) < 1e-10

    def test_residual(self, baseline_kinetics):
        v = -1.3
        u = sf.g_inv(baseline_kinetics, v)
        assert abs(sf.g_eval(baseline_kinetics, u) - v) < 1e-12

    def test_inverse_of_point_value(self, baseline_kinetics):
        assert sf.g_inv(baseline_kinetics, -1.2130613194252668) == pytest.approx(
            1.0, abs=1e-12)

    def test_range_error(self, baseline_kinetics):
        with pytest.raises(RangeError):
            sf.g_inv(baseline_kinetics, -2.5)
        with pytest.raises(RangeError):
            sf.g_inv(baseline_kinetics, -0.1)


class TestSensitivity:
    def test_finite_difference_oracle(self, baseline_kinetics):
        kin = baseline_kinetics
        h = 1e-6
        fd = (sf.g_inv(kin, -1.0 + h) - sf.g_inv(kin, -1.0 - h)) / (2 * h)
        nu = sf.nu_eval(kin, -1.0)
        assert abs(-fd - nu) / nu < 1e-5

    def test_positivity_sweep(self, baseline_kinetics):
        kin = baseline_kinetics
        V = np.linspace(-kin.V0 + 0.01, -kin.v0, 100)
        assert np.all(sf.nu_eval(kin, V) > 0)

    def test_chain_rule(self, baseline_kinetics):
        kin = baseline_kinetics
        for u in (0.5, 1.0, 2.0):
            v = sf.g_eval(kin, u)
            assert abs(sf.nu_eval(kin, v) * sf.g_prime(kin, u) + 1.0) < 1e-8

    def test_singular_at_upper_speed(self, baseline_kinetics):
        with pytest.raises(RangeError):
            sf.nu_eval(baseline_kinetics, -baseline_kinetics.V0)
        with pytest.raises(RangeError):
            sf.nu_eval(baseline_kinetics, -baseline_kinetics.V0 - 0.1)


class TestSlope:
    def test_finite_difference(self, baseline_kinetics):
        kin = baseline_kinetics
        h = 1e-6
        fd = (sf.g_eval(kin, 1.0 + h) - sf.g_eval(kin, 1.0 - h)) / (2 * h)
        assert abs(fd - sf.g_prime(kin, 1.0)) / abs(fd) < 1e-5

    def test_negative_everywhere(self, baseline_kinetics):
        u = np.linspace(0.0, 50.0, 500)
        assert np.all(sf.g_prime(baseline_kinetics, u) < 0)

    def test_flat_tail(self, baseline_kinetics):
        assert abs(sf.g_prime(baseline_kinetics, 1e4)) < 1e-4

    def test_bounded_by_lip(self, baseline_kinetics):
        kin = baseline_kinetics
        u = np.linspace(0.0, 100.0, 10_000)
        assert np.max(np.abs(sf.g_prime(kin, u))) <= kin.lip_g * (1 + 1e-12)


class TestAuditInvariants:
    def test_range_on_audit_grid(self, baseline_kinetics):
        kin = baseline_kinetics
        g = sf.g_eval(kin, np.linspace(0.0, 100.0, 10_000))
        assert np.all(g >= -kin.V0) and np.all(g <= -kin.v0)

    def test_monotone_on_audit_grid(self, baseline_kinetics):
        g = sf.g_eval(baseline_kinetics, np.linspace(0.0, 100.0, 10_000))
        assert np.all(np.diff(g) < 0)

    def test_nu0_is_grid_minimum_at_slow_end(self, baseline_kinetics):
        # for |A/u_inf| < 2 the sensitivity increases with |V|, so the
        # minimum sits at the anchored slow end -v0
        kin = baseline_kinetics
        assert kin.nu0_argmin_speed == -kin.v0
        assert kin.nu0 == pytest.approx(sf.nu_eval(kin, -kin.v0), rel=1e-12)

    def test_construction_rejects_bad_params(self):
        with pytest.raises(ParameterError):
            sf.arrhenius(V0=2.0, A=1.0, u_inf=0.5)   # u_inf must be < 0
        with pytest.raises(ParameterError):
            sf.arrhenius(V0=-1.0, A=1.0, u_inf=-1.0)


class TestTableFamily:
    def make(self):
        base = sf.arrhenius(V0=2.0, A=1.0, u_inf=-1.0)
        u = np.linspace(0.0, 30.0, 600)
        return sf.from_table(u, sf.g_eval(base, u), V0=2.0), base

    def test_matches_source_inside_table(self):
        tab, base = self.make()
        u = np.linspace(0.0, 25.0, 77)
        assert np.max(np.abs(sf.g_eval(tab, u) - sf.g_eval(base, u))) < 1e-6

    def test_monotone_tail_extension(self):
        tab, _ = self.make()
        g = sf.g_eval(tab, np.linspace(25.0, 200.0, 300))
        assert np.all(np.diff(g) < 0)
        assert np.all(g > -2.0)

    def test_rejects_non_monotone_table(self):
        u = np.array([0.0, 1.0, 2.0])
        g = np.array([-0.7, -0.5, -0.9])  # not decreasing
        with pytest.raises(ParameterError):
            sf.from_table(u, g, V0=2.0)

    def test_inverse_consistency(self):
        tab, _ = self.make()
        v = -1.1
        assert abs(sf.g_eval(tab, sf.g_inv(tab, v)) - v) < 1e-12


class TestCustomFamily:
    def test_wraps_callable(self):
        kin = sf.custom(lambda u: -1.0 - u / (1.0 + u), V0=2.0)
        assert kin.v0 == 1.0
        assert sf.g_eval(kin, 1.0) == pytest.approx(-1.5)
        assert abs(sf.g_inv(kin, -1.5) - 1.0) < 1e-10
