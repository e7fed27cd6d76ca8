"""Distributed SINR adaptation: equilibria, convergence, utilities."""

import csv

import numpy as np
import pytest

from conftest import random_gain_matrix
from twotier.channel import GainMatrix
from twotier.feasibility import SinrTargets, achieved_sinr, is_feasible, solve_centralized
from twotier.game import (GameParams, femto_equilibrium_sinr, interference,
                          interference_vector, power_update, run_to_equilibrium,
                          trace_to_csv, update_target_vector, utility_cellular,
                          utility_femto)


def fm_instance(rng, n=5):
    """Feasible instance with weak coupling and bounded own/cross gain ratios.

    g_ii / g_0i stays within [2, 10] so the price term in the working target
    collapses under a huge reward steepness, while the normalized cross
    gains are small enough that 20-25 dB targets stay well inside the
    feasible region (rho < 0.5).
    """
    g00 = 1e-5
    own = np.full(n + 1, 1e-8)
    own[0] = g00
    raw = own[:, None] * 10.0 ** rng.uniform(-6.0, -4.0, size=(n + 1, n + 1))
    raw[np.arange(n + 1), np.arange(n + 1)] = own
    raw[0, 1:] = 1e-8 / rng.uniform(2.0, 10.0, size=n)   # g_ii / g_0i in [2, 10]
    gm = GainMatrix.from_raw(raw)
    targets = SinrTargets.from_db(20.0, rng.uniform(22.0, 25.0, size=n))
    feasible, rho = is_feasible(targets, gm)
    assert feasible and rho < 0.5
    return gm, targets


class TestInterference:
    def test_zero_powers_give_noise(self, rng):
        gm = random_gain_matrix(rng, 3)
        assert interference(1, np.zeros(4), gm, sigma2=1e-13) == 1e-13

    def test_two_user_arithmetic(self):
        raw = np.array([[1.0, 1e-12], [1e-12, 1.0]])
        gm = GainMatrix.from_raw(raw)
        assert interference(0, np.array([0.0, 1.0]), gm, 1e-13) == pytest.approx(1.1e-12)

    def test_matches_definition(self, rng):
        gm = random_gain_matrix(rng, 5)
        p = rng.uniform(0, 1, size=6)
        vec = interference_vector(p, gm, 1e-14)
        for i in range(6):
            manual = sum(p[j] * gm.raw[i, j] for j in range(6) if j != i) + 1e-14
            assert vec[i] == pytest.approx(manual, rel=1e-12)
        assert np.all(vec >= 1e-14)


class TestEquilibriumSinr:
    def test_balanced_price_recovers_target(self):
        raw = np.array([[1e-8, 2e-9], [1e-10, 2e-9]])
        gm = GainMatrix.from_raw(raw)
        # a * g_11 == b * g_01 -> ln term vanishes
        params = GameParams(a=1.0, b=gm.raw[1, 1] / gm.raw[0, 1])
        gamma = femto_equilibrium_sinr(gm, np.array([7.0]), params)
        assert gamma[0] == pytest.approx(7.0, rel=1e-12)

    def test_excess_maximized_at_e_ratio(self):
        g_own, g_cross, b = 5e-9, 1e-9, 1.0
        a_star = np.e * b * g_cross / g_own
        raw = np.array([[1e-8, g_cross], [1e-10, g_own]])
        gm = GainMatrix.from_raw(raw)
        target = np.array([4.0])
        best = femto_equilibrium_sinr(gm, target, GameParams(a=a_star, b=b))[0]
        assert best - 4.0 == pytest.approx(1.0 / a_star, rel=1e-12)
        for a in np.logspace(np.log10(a_star) - 2, np.log10(a_star) + 2, 41):
            other = femto_equilibrium_sinr(gm, target, GameParams(a=a, b=b))[0]
            assert other <= best + 1e-12

    def test_fm_limit_approaches_target(self):
        raw = np.array([[1e-8, 1e-9], [1e-10, 5e-9]])
        gm = GainMatrix.from_raw(raw)
        gamma = femto_equilibrium_sinr(gm, np.array([6.0]), GameParams(a=1e9, b=1.0))
        assert gamma[0] == pytest.approx(6.0, rel=1e-7)

    def test_negative_part_clamps_to_zero(self):
        raw = np.array([[1e-8, 1e-6], [1e-10, 1e-9]])  # heavy cross-tier price
        gm = GainMatrix.from_raw(raw)
        gamma = femto_equilibrium_sinr(gm, np.array([0.5]), GameParams(a=1.0, b=1e4))
        assert gamma[0] == 0.0

    def test_invisible_femtocell_rejected(self):
        raw = np.array([[1e-8, 0.0], [1e-10, 5e-9]])
        gm = GainMatrix.from_raw(raw)
        with pytest.raises(ValueError, match="femtocell 1"):
            femto_equilibrium_sinr(gm, np.array([2.0]), GameParams())

    def test_excess_monotone_in_gain_ratio(self, rng):
        # equal coefficients and targets: better-protected femtocells gain more
        gm = random_gain_matrix(rng, 8)
        params = GameParams(a=0.5, b=2.0)
        gamma = femto_equilibrium_sinr(gm, np.full(8, 3.0), params)
        ratio = np.diag(gm.raw)[1:] / gm.raw[0, 1:]
        order = np.argsort(ratio)
        assert np.all(np.diff(gamma[order]) >= -1e-12)


class TestPowerUpdate:
    def test_fixed_point_is_stationary(self, rng):
        gm, targets = fm_instance(rng)
        params = GameParams(a=2.0, b=1.0, max_iter=20000, conv_tol=1e-14)
        sigma2 = 1e-10
        state, converged, _ = run_to_equilibrium(gm, targets, params, sigma2)
        assert converged
        tvec = update_target_vector(gm, targets, params)
        once_more = power_update(state.p, gm, tvec, params, sigma2)
        assert np.max(np.abs(once_more - state.p) / state.p) < 1e-12

    def test_zero_power_start_is_safe(self, rng):
        gm, targets = fm_instance(rng)
        params = GameParams()
        tvec = update_target_vector(gm, targets, params)
        p = power_update(np.zeros(gm.raw.shape[0]), gm, tvec, params, 1e-10)
        assert np.all(np.isfinite(p)) and np.all(p > 0)

    def test_infeasible_cellular_rails_at_pmax(self):
        raw = np.array([[1e-9, 5e-10], [5e-10, 1e-9]])
        gm = GainMatrix.from_raw(raw)
        targets = SinrTargets(100.0, np.array([100.0]))  # far beyond the budget
        params = GameParams(a=1e6, b=1.0, p_max=1.0, max_iter=2000)
        state, _, _ = run_to_equilibrium(gm, targets, params, sigma2=1e-12)
        assert state.p[0] == pytest.approx(1.0)
        assert state.sinr[0] < 100.0


class TestRunToEquilibrium:
    def test_fm_surrogate_matches_centralized(self, rng):
        gm, targets = fm_instance(rng)
        sigma2 = 1e-10
        params = GameParams(a=1e6, b=1.0, p_max=1e6, max_iter=50000, conv_tol=1e-13)
        state, converged, _ = run_to_equilibrium(gm, targets, params, sigma2)
        assert converged
        p_star = solve_centralized(targets, gm, sigma2)
        assert np.max(np.abs(state.p - p_star) / p_star) < 1e-6

    def test_initialization_independence(self, rng):
        gm, targets = fm_instance(rng)
        sigma2 = 1e-10
        params = GameParams(a=3.0, b=0.5, max_iter=50000, conv_tol=1e-13)
        hot, c1, _ = run_to_equilibrium(gm, targets, params, sigma2)
        cold, c2, _ = run_to_equilibrium(gm, targets, params, sigma2,
                                         p0=np.full(gm.raw.shape[0], 1e-9))
        assert c1 and c2
        assert np.max(np.abs(hot.p - cold.p) / hot.p) < 1e-6

    def test_cellular_only_closed_form(self):
        gm = GainMatrix.from_raw(np.array([[2e-9]]))
        sigma2 = 1e-12
        targets = SinrTargets(50.0, np.zeros(0))  # no femtocells
        params = GameParams(p_max=1.0)
        state, converged, _ = run_to_equilibrium(gm, targets, params, sigma2)
        assert converged
        assert state.p[0] == pytest.approx(min(50.0 * sigma2 / 2e-9, 1.0), rel=1e-9)

    def test_stationarity_of_interior_equilibria(self, rng):
        # first-order condition: a e^{-a (gamma-Gamma)} g_ii == b g_0i
        gm, targets = fm_instance(rng)
        sigma2 = 1e-10
        params = GameParams(a=1.5, b=1.0, p_max=1e9, max_iter=50000, conv_tol=1e-13)
        state, converged, _ = run_to_equilibrium(gm, targets, params, sigma2)
        assert converged
        a, b = params.coefficient_arrays(gm.n_femto)
        for i in range(1, gm.n_femto + 1):
            lhs = a[i - 1] * np.exp(-a[i - 1] * (state.sinr[i] - targets.gamma_f[i - 1]))
            lhs *= gm.raw[i, i]
            rhs = b[i - 1] * gm.raw[0, i]
            assert lhs == pytest.approx(rhs, rel=1e-8)

    def test_reports_nonconvergence(self, rng):
        gm, targets = fm_instance(rng)
        params = GameParams(max_iter=2, conv_tol=1e-16)
        _, converged, iters = run_to_equilibrium(gm, targets, params, 1e-10)
        assert not converged and iters == 2


class TestStandardInterferenceFunction:
    def test_axioms_on_sampled_points(self, rng):
        gm, targets = fm_instance(rng)
        params = GameParams(a=1.0, b=1.0, p_max=0.5)
        tvec = update_target_vector(gm, targets, params)
        sigma2 = 1e-10
        n1 = gm.raw.shape[0]
        for _ in range(200):
            p1 = rng.uniform(0, 0.5, size=n1)
            p2 = p1 * rng.uniform(0.0, 1.0, size=n1)
            alpha = rng.uniform(1.001, 5.0)
            f1 = power_update(p1, gm, tvec, params, sigma2)
            f2 = power_update(p2, gm, tvec, params, sigma2)
            assert np.all(f1 > 0)                                  # positivity
            assert np.all(f1 >= f2 - 1e-18)                        # monotonicity
            fa = power_update(alpha * p1, gm, tvec, params, sigma2)
            assert np.all(alpha * f1 > fa)                         # scalability


class TestUtilities:
    def test_cellular_utility_peaks_on_target(self):
        assert utility_cellular(5.0, 5.0) == 0.0
        assert utility_cellular(4.0, 5.0) < 0.0
        assert utility_cellular(6.0, 5.0) < 0.0

    def test_femto_utility_zero_at_target_and_zero_power(self):
        raw = np.array([[1e-8, 1e-9], [1e-10, 5e-9]])
        gm = GainMatrix.from_raw(raw)
        params = GameParams(a=1.0, b=1.0)
        # zero power yields gamma = 0; with target 0 the reward term vanishes
        u = utility_femto(1, np.array([0.0, 0.0]), gm, np.array([0.0]), params, 1e-12)
        assert u == pytest.approx(0.0, abs=1e-15)

    def test_femto_utility_concave_in_own_power(self, rng):
        # a small enough that the reward curvature stays resolvable across
        # the sampled power window around the on-target power
        gm, targets = fm_instance(rng)
        params = GameParams(a=0.01, b=1.0)
        sigma2 = 1e-10
        p = rng.uniform(0.01, 0.5, size=gm.raw.shape[0])
        i = 2
        i_level = sum(p[j] * gm.raw[i, j] for j in range(len(p)) if j != i) + sigma2
        p_center = targets.gamma_f[i - 1] * i_level / gm.raw[i, i]
        h = 1e-3 * p_center

        def u(pi):
            q = p.copy()
            q[i] = pi
            return utility_femto(i, q, gm, targets, params, sigma2)

        for pi in np.linspace(0.3 * p_center, 1.7 * p_center, 9):
            second = (u(pi + h) - 2 * u(pi) + u(pi - h)) / h ** 2
            assert second < 0

    def test_unilateral_deviation_never_helps(self, rng):
        gm, targets = fm_instance(rng)
        sigma2 = 1e-10
        params = GameParams(a=1.0, b=1.0, p_max=1.0, max_iter=50000, conv_tol=1e-13)
        state, converged, _ = run_to_equilibrium(gm, targets, params, sigma2)
        assert converged
        for i in range(1, gm.n_femto + 1):
            u_star = utility_femto(i, state.p, gm, targets, params, sigma2)
            for p_dev in rng.uniform(0.0, params.p_max, size=40):
                q = state.p.copy()
                q[i] = p_dev
                assert utility_femto(i, q, gm, targets, params, sigma2) <= u_star + 1e-9

    def test_index_bounds(self, rng):
        gm = random_gain_matrix(rng, 2)
        with pytest.raises(ValueError):
            utility_femto(0, np.zeros(3), gm, np.ones(2), GameParams(), 1e-12)
        with pytest.raises(ValueError):
            utility_femto(3, np.zeros(3), gm, np.ones(2), GameParams(), 1e-12)


class TestTraceExport:
    def test_trace_csv(self, tmp_path, rng):
        gm, targets = fm_instance(rng, n=2)
        trace = []
        run_to_equilibrium(gm, targets, GameParams(max_iter=50), 1e-10, trace=trace)
        path = tmp_path / "trace.csv"
        trace_to_csv(trace, gm, 1e-10, path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["# schema: adapt-trace.v1"]
        assert rows[1] == ["iter", "user_id", "p_w", "sinr_db"]
        assert len(rows) == 2 + len(trace) * 3


class TestGameParams:
    def test_coefficient_broadcast(self):
        a, b = GameParams(a=2.0, b=[1.0, 3.0]).coefficient_arrays(2)
        assert np.allclose(a, [2.0, 2.0]) and np.allclose(b, [1.0, 3.0])

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            GameParams(a=0.0).coefficient_arrays(2)
        with pytest.raises(ValueError):
            GameParams(p_max=-1.0).coefficient_arrays(2)
