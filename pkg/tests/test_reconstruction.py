import math

import numpy as np
import pytest
from scipy.integrate import quad

import stefan_front as sf
from stefan_front.errors import CoverageError, TimeOrderError
from tests.conftest import make_params


def constant_history(dt, n, v_const=-1.0):
    v = np.full(n + 1, v_const)
    s = v_const * np.arange(n + 1) * dt
    return sf.FrontHistory(dt=dt, v=v, s=s, boundary_temp=np.zeros(n + 1))


class TestT2:
    def test_zero_data(self, baseline_params):
        u0 = sf.GridField.zero(baseline_params.grid)
        out = sf.t2_apply(u0, 1.0, 0.5, -1.0)
        assert np.max(np.abs(out.values)) == 0.0

    def test_gaussian_closed_form(self):
        grid = sf.SpatialGrid.uniform(40.0, 0.02)
        u0 = sf.GridField.from_function(grid, lambda x: np.exp(-x * x / 4.0))
        out = sf.t2_apply(u0, 1.0, 0.5, 0.0)
        expected = (math.exp(-0.5) * np.sqrt(0.5)
                    * np.exp(-grid.x ** 2 / 8.0))
        assert np.max(np.abs(out.values - expected)) < 1e-6

    def test_linearity(self, baseline_params):
        grid = baseline_params.grid
        u0 = sf.GridField.from_function(grid, lambda x: np.exp(-x * x / 9.0))
        a = -2.5
        one = sf.t2_apply(u0, 0.7, 0.1, -0.4)
        scaled = sf.t2_apply(a * u0, 0.7, 0.1, -0.4)
        assert np.max(np.abs(scaled.values - a * one.values)) < 1e-12

    def test_sup_decay_factor(self, baseline_params):
        # |T2 u0|_0 <= (e/2) exp(-gamma t) |u0|_0
        rng = np.random.default_rng(2)
        grid = baseline_params.grid
        gamma, t = 0.1, 2.0
        w0 = sf.WeightSpec(0.0)
        for _ in range(10):
            c = rng.uniform(-10, 10, size=3)
            wd = rng.uniform(1, 5, size=3)
            a = rng.uniform(0.2, 2.0, size=3)
            u0 = sf.GridField.from_function(
                grid, lambda x: sum(ai * np.exp(-((x - ci) / wi) ** 2)
                                    for ai, ci, wi in zip(a, c, wd)))
            out = sf.t2_apply(u0, t, gamma, -1.0)
            bound = (math.e / 2.0) * math.exp(-gamma * t) * sf.c_alpha_norm(u0, w0)
            assert sf.c_alpha_norm(out, w0) <= bound

    def test_needs_positive_time(self, baseline_params):
        u0 = sf.GridField.zero(baseline_params.grid)
        with pytest.raises(TimeOrderError):
            sf.t2_apply(u0, 0.0, 0.1, 0.0)


class TestT1:
    def test_empty_history_gives_zero(self, baseline_params):
        hist = constant_history(1e-3, 0)
        out = sf.t1_apply(hist, 0.0, 0.1, baseline_params.grid)
        assert np.max(np.abs(out.values)) == 0.0

    def test_constant_history_against_quadrature(self):
        dt = 1e-3
        hist = constant_history(dt, 1000, -1.0)
        grid = sf.SpatialGrid.uniform(20.0, 0.1)
        out = sf.t1_apply(hist, 1.0, 0.0, grid)
        for k, x_t in ((0, 0.0), (20, 2.0), (-30, -3.0)):
            x_lab = -1.0 + x_t
            exact = quad(lambda tau: math.exp(-(x_lab + tau) ** 2 / (4 * (1 - tau)))
                         / math.sqrt(4 * math.pi * (1 - tau)),
                         0.0, 1.0, limit=400, epsabs=1e-12, epsrel=1e-12)[0]
            idx = grid.i0_right + k if k >= 0 else grid.i0_left + k
            assert out.values[idx] == pytest.approx(exact, abs=1e-6)

    def test_positive_field(self, baseline_params, baseline_tw):
        hist = sf.run(baseline_params, baseline_tw.profile, 0.5)
        out = sf.t1_apply(hist, 0.5, baseline_params.gamma, baseline_params.grid)
        assert np.min(out.values) >= 0.0

    def test_coverage_error(self, baseline_params):
        hist = constant_history(1e-3, 100)
        with pytest.raises(CoverageError):
            sf.t1_apply(hist, 0.5, 0.1, baseline_params.grid)

    def test_sup_bound(self, baseline_params, baseline_tw):
        # |T1|_alpha <= V0/sqrt(gamma) with 5% slack
        table = sf.compute_constants(baseline_params)
        hist = sf.run(baseline_params, baseline_tw.profile, 1.0)
        out = sf.t1_apply(hist, 1.0, baseline_params.gamma, baseline_params.grid)
        alpha = 0.5 * table.alpha_min  # 0.0125; L-rule satisfied on L=40? no
        nrm = sf.c_alpha_norm(out, sf.WeightSpec(0.0))
        assert nrm <= table.absorb_radius * 1.05


class TestReconstruct:
    def test_time_zero_identity(self, baseline_params, baseline_tw):
        hist = sf.run(baseline_params, baseline_tw.profile, 0.01)
        rec = sf.reconstruct(baseline_tw.profile, hist, 0.0, baseline_params.gamma)
        assert np.array_equal(rec.values, baseline_tw.profile.values)

    def test_boundary_consistency(self, baseline_params, baseline_tw):
        hist = sf.run(baseline_params, baseline_tw.profile, 0.5)
        rec = sf.reconstruct(baseline_tw.profile, hist, 0.5, baseline_params.gamma)
        kin = baseline_params.kinetics
        expected = sf.g_inv(kin, float(hist.v[-1]))
        assert abs(rec.value_at_interface() - expected) < 1e-8

    def test_nonnegative(self, baseline_params, baseline_tw):
        hist = sf.run(baseline_params, baseline_tw.profile, 0.5)
        rec = sf.reconstruct(baseline_tw.profile, hist, 0.5, baseline_params.gamma)
        assert np.min(rec.values) >= -1e-8

    def test_jump_matches_velocity_under_refinement(self, baseline_kinetics):
        errs = []
        for dt, dx in ((4e-3, 0.08), (2e-3, 0.04), (1e-3, 0.02)):
            params = make_params(baseline_kinetics, gamma=0.1, L=40.0,
                                 dx=dx, dt=dt)
            tw = sf.traveling_wave(params)
            hist = sf.run(params, tw.profile, 1.0)
            rec = sf.reconstruct(tw.profile, hist, 1.0, 0.1)
            d = sf.derivative_field(rec)
            errs.append(abs(d.jump_at_zero - float(hist.v[-1])))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders >= 1.0)

    def test_boundary_temp_matches_field(self, baseline_params, baseline_tw):
        # history boundary temperature vs independently reconstructed field
        hist = sf.run(baseline_params, baseline_tw.profile, 0.25)
        rec = sf.reconstruct(baseline_tw.profile, hist, 0.25, baseline_params.gamma)
        assert abs(rec.value_at_interface() - hist.boundary_temp[-1]) < 1e-6
