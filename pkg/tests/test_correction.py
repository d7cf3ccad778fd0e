"""Shelf correction: stationary profiles, the model problem, and the residual of u_approx."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gkdvlab.adiabatic import constant_trajectory, integrate_adiabatic, t_epsilon
from gkdvlab.correction import (
    ApproximateSolution,
    ShelfCoefficients,
    assemble_ac,
    build_f1_components,
    cutoff_asharp,
    cutoff_eta,
    grid_norms,
    residual_scaling_fit,
    shelf_b_coefficient,
    solve_model_problem,
)
from gkdvlab.potential import make_default_potential, make_potential
from gkdvlab.soliton import Grid1D, ModelConstants, eval_q, integral_q, trapezoid

SQRT2PI = 4.442882938158366


@pytest.fixture(scope="module")
def gentle():
    return make_default_potential(1.0)


@pytest.fixture(scope="module")
def traj_m3(gentle):
    mc = ModelConstants(3, 0.1)
    return integrate_adiabatic(mc, gentle, 0.05, t_end=1.05 * t_epsilon(0.1, 0.05))


@pytest.mark.parametrize("m", [2, 3, 4])
def test_forcing_orthogonal_to_q(m):
    mc = ModelConstants(m)
    grid = Grid1D(-30.0, 30.0, 8192)
    ft, fh = build_f1_components(mc, grid.nodes)
    q = eval_q(mc, grid.nodes)
    assert abs(trapezoid(ft * q, grid)) < 1e-10
    assert abs(trapezoid(fh * q, grid)) < 1e-10


@pytest.mark.parametrize("m", [2, 3, 4])
def test_beta_closed_forms(m, profiles_by_m):
    prof = profiles_by_m[m]
    iq = integral_q(ModelConstants(m))
    assert prof.beta_tilde == pytest.approx(-3.0 * iq / (2 * (m + 3)), abs=1e-10)
    assert prof.beta_hat == pytest.approx(iq / (2 * (5 - m)), abs=1e-10)
    assert prof.beta_tilde < 0.0
    assert prof.beta_hat > 0.0


def test_beta_tilde_m3_value(profiles_m3):
    assert profiles_m3.beta_tilde == pytest.approx(-SQRT2PI / 4.0, abs=1e-10)


def test_model_problem_zero_forcing():
    mc = ModelConstants(3)
    grid = Grid1D(-15.0, 15.0, 1024)
    sol = solve_model_problem(mc, np.zeros(grid.n), grid)
    assert sol.beta == 0.0
    assert sol.delta == 0.0
    assert np.max(np.abs(sol.a_full)) < 1e-12


@pytest.mark.parametrize("m", [2, 3, 4])
def test_model_problem_residual_at_4096(m):
    mc = ModelConstants(m)
    grid = Grid1D(-15.0, 15.0, 4096)
    for f in build_f1_components(mc, grid.nodes):
        sol = solve_model_problem(mc, f, grid)
        assert sol.residual_norm() < 1e-6


def test_model_problem_far_field_limits():
    mc = ModelConstants(3)
    grid = Grid1D(-15.0, 15.0, 4096)
    ft, _ = build_f1_components(mc, grid.nodes)
    sol = solve_model_problem(mc, ft, grid)
    # oracle: A(-inf) = -2 beta_tilde = +sqrt(2) pi / 2 for m=3
    assert sol.far_field("left") == pytest.approx(np.sqrt(2.0) * np.pi / 2.0, abs=1e-4)
    assert sol.far_field("right") == pytest.approx(0.0, abs=1e-4)
    assert sol.far_field("left") == pytest.approx(-2.0 * sol.beta, abs=1e-4)


def test_model_problem_gauge_invariance():
    # the solution is unique modulo Q'; shifting by alpha Q' leaves the residual unchanged
    mc = ModelConstants(3)
    grid = Grid1D(-15.0, 15.0, 4096)
    ft, _ = build_f1_components(mc, grid.nodes)
    sol = solve_model_problem(mc, ft, grid)
    from dataclasses import replace
    from gkdvlab.soliton import eval_dq
    shifted = replace(sol, a_full=sol.a_full + 0.1 * eval_dq(mc, grid.nodes))
    assert abs(shifted.residual_norm() - sol.residual_norm()) < 1e-7


def test_model_problem_rejects_nonorthogonal_forcing():
    mc = ModelConstants(3)
    grid = Grid1D(-15.0, 15.0, 1024)
    q = eval_q(mc, grid.nodes)
    with pytest.raises(ValueError):
        solve_model_problem(mc, q.copy(), grid)  # int Q*Q > 0


def test_shelf_coefficients_decay(gentle, traj_m3, profiles_m3):
    mc = ModelConstants(3, 0.1)
    coeffs = ShelfCoefficients(mc, gentle, profiles_m3, 0.05, traj_m3)
    te = t_epsilon(0.1, 0.05)
    b0, h0 = coeffs.b_of_t(0.0), coeffs.h_of_t(0.0)
    assert b0 < 0.0 and h0 > 0.0
    assert coeffs.beta_tilde == profiles_m3.beta_tilde
    # the exponential bound on |b| + |h| needs the endpoints to sit in the true
    # medium tails, which at desk-scale eps requires a steep profile
    steep = make_default_potential(10.0)
    traj_s = integrate_adiabatic(mc, steep, 0.05, t_end=1.02 * te)
    coeffs_s = ShelfCoefficients(mc, steep, profiles_m3, 0.05, traj_s)
    b0s, h0s = coeffs_s.b_of_t(0.0), coeffs_s.h_of_t(0.0)
    assert abs(coeffs_s.b_of_t(-te)) < 1e-6 * abs(b0s)
    assert abs(coeffs_s.h_of_t(-te)) < 1e-6 * h0s
    assert abs(coeffs_s.b_of_t(te)) < 1e-4 * abs(b0s)


def test_assemble_ac_limits_and_plateau(gentle, traj_m3, profiles_m3):
    mc = ModelConstants(3, 0.1)
    st_mid = traj_m3.state(0.0)
    y = np.array([-300.0, -150.0, 400.0])
    ac = assemble_ac(mc, gentle, profiles_m3, 0.05, st_mid.c, st_mid.rho, y)
    b = shelf_b_coefficient(mc, gentle, profiles_m3, 0.05, st_mid.c, st_mid.rho)
    plateau = -2.0 * np.sqrt(st_mid.c) * b
    assert plateau > 0.0  # beta_tilde < 0 and a' > 0 make the left shelf an elevation
    assert ac[0] == pytest.approx(plateau, rel=1e-10)
    assert ac[1] == pytest.approx(plateau, rel=1e-10)
    assert abs(ac[2]) < 1e-12


def test_assemble_ac_lambda_zero_drops_hat_component(gentle, profiles_m3):
    mc0 = ModelConstants(3, 0.0)
    y = np.linspace(-30, 10, 401)
    ac = assemble_ac(mc0, gentle, profiles_m3, 0.05, 1.2, 5.0, y)
    pref = float(gentle.da(0.25)) / float(gentle.a(0.25)) ** 1.5 * 1.2 ** (0.5 - 0.5)
    expected = pref * 1.2 ** (1.0 / 2 - 0.5) * profiles_m3.eval_a_tilde(np.sqrt(1.2) * y)
    np.testing.assert_allclose(ac, expected, atol=1e-14)


def test_assemble_ac_vanishes_outside_interaction(profiles_m3):
    mc = ModelConstants(3, 0.1)
    steep = make_default_potential(10.0)
    te = t_epsilon(0.1, 0.05)
    traj = integrate_adiabatic(mc, steep, 0.05, t_end=1.02 * te)
    y = np.linspace(-50, 50, 101)
    st = traj.state(-te)
    ac = assemble_ac(mc, steep, profiles_m3, 0.05, st.c, st.rho, y)
    st0 = traj.state(0.0)
    ac0 = assemble_ac(mc, steep, profiles_m3, 0.05, st0.c, st0.rho, y)
    assert np.max(np.abs(ac)) < 1e-6 * np.max(np.abs(ac0))


def test_ac_not_square_integrable(gentle, traj_m3, profiles_m3):
    # the uncut shelf has a plateau: int_{-L}^{0} A_c^2 grows linearly in L
    mc = ModelConstants(3, 0.1)
    st = traj_m3.state(0.0)
    vals = []
    for length in (50.0, 100.0, 200.0):
        y = np.linspace(-length, 0.0, 4001)
        ac = assemble_ac(mc, gentle, profiles_m3, 0.05, st.c, st.rho, y)
        vals.append(np.trapezoid(ac ** 2, y))
    assert vals[1] / vals[0] == pytest.approx(2.0, rel=0.1)
    assert vals[2] / vals[1] == pytest.approx(2.0, rel=0.1)


@given(s=st.floats(-5.0, 5.0))
@settings(max_examples=80, deadline=None)
def test_cutoff_eta_bounds(s):
    val = float(cutoff_eta(s))
    assert 0.0 <= val <= 1.0
    d = 1e-6
    slope = (cutoff_eta(s + d) - cutoff_eta(s - d)) / (2 * d)
    assert -1e-9 <= slope <= 1.0
    if s <= -1.0:
        assert val == 0.0
    if s >= 1.0:
        assert val == 1.0


def test_cutoff_asharp_support_and_identity_region(gentle, traj_m3, profiles_m3):
    mc = ModelConstants(3, 0.1)
    eps = 0.05
    st = traj_m3.state(0.0)
    y = np.array([-4.0 / eps, -3.0 / eps, -1.0 / eps, 0.0, 10.0])
    ac = assemble_ac(mc, gentle, profiles_m3, eps, st.c, st.rho, y)
    sharp = cutoff_asharp(ac, eps, y)
    assert sharp[0] == 0.0
    assert sharp[1] == 0.0
    assert sharp[2] == pytest.approx(ac[2], rel=1e-12)
    assert sharp[3] == pytest.approx(ac[3], rel=1e-12)
    with pytest.raises(ValueError):
        cutoff_asharp(ac, 0.0, y)


def test_correction_norm_scalings(gentle, profiles_m3):
    # ||eps A_#||_L2 ~ eps^{1/2} (plateau of width O(1/eps)); H1 ratio stable within x2
    mc = ModelConstants(3, 0.1)
    h1_ratios, l2_vals, eps_list = [], [], (0.1, 0.05, 0.025)
    for eps in eps_list:
        traj = integrate_adiabatic(mc, gentle, eps, t_end=1.02 * t_epsilon(0.1, eps))
        approx = ApproximateSolution(mc, gentle, eps, traj, profiles_m3)
        grid = approx.default_grid(0.0)
        w = approx.correction_field(0.0, grid.nodes)
        norms = grid_norms(w, grid)
        h1_ratios.append(norms["h1"] / np.sqrt(eps))
        l2_vals.append(norms["l2"])
    assert max(h1_ratios) / min(h1_ratios) < 2.0
    slope = np.polyfit(np.log(eps_list), np.log(l2_vals), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.1)


def test_residual_exact_traveling_wave(profiles_m3):
    # constant medium, u_approx = exact soliton at c=1.3: S sits at the discretization floor
    mc = ModelConstants(3, 0.1)
    pot = make_potential("constant", a_plus=1.0)
    traj = constant_trajectory(mc, pot, 0.05, c0=1.3, rho0=0.0, t_span=(-5.0, 5.0))
    approx = ApproximateSolution(mc, pot, 0.05, traj, profiles_m3)
    res = approx.residual(2.0)
    assert res["l2"] < 1e-8


def test_residual_leading_order_is_eps_f1(gentle, profiles_m3):
    # without the correction, S = eps F_1 + O(eps^2)
    mc = ModelConstants(3, 0.1)
    ratios = []
    for eps in (0.1, 0.05):
        traj = integrate_adiabatic(mc, gentle, eps, t_end=1.02 * t_epsilon(0.1, eps))
        approx = ApproximateSolution(mc, gentle, eps, traj, profiles_m3,
                                     include_correction=False)
        grid = approx.default_grid(0.0)
        s = approx.residual(0.0, grid=grid)["field"]
        diff = s - eps * approx.f1_field(0.0, grid.nodes)
        ratios.append(np.sqrt(grid.h * np.sum(diff ** 2)) / eps ** 2)
    assert ratios[0] == pytest.approx(ratios[1], rel=0.25)


def test_residual_scaling_slopes(gentle, profiles_m3):
    mc = ModelConstants(3, 0.1)
    by_eps, by_eps_nc = {}, {}
    for eps in (0.1, 0.05):
        traj = integrate_adiabatic(mc, gentle, eps, t_end=1.02 * t_epsilon(0.1, eps))
        approx = ApproximateSolution(mc, gentle, eps, traj, profiles_m3)
        by_eps[eps] = approx
        by_eps_nc[eps] = approx.without_correction()
    assert 1.2 < residual_scaling_fit(by_eps, n_times=11)["slope"] < 1.8
    assert 0.8 < residual_scaling_fit(by_eps_nc, n_times=11)["slope"] < 1.2


def test_travel_diagnostic_order_eps(gentle, profiles_m3):
    # || u_t + (c - lambda) u_x || = O(eps): the profile translates almost rigidly
    mc = ModelConstants(3, 0.1)
    vals = []
    for eps in (0.1, 0.05):
        traj = integrate_adiabatic(mc, gentle, eps, t_end=1.02 * t_epsilon(0.1, eps))
        approx = ApproximateSolution(mc, gentle, eps, traj, profiles_m3)
        vals.append(approx.travel_diagnostic(0.0)["h1"])
    assert vals[0] / vals[1] == pytest.approx(2.0, rel=0.35)


def test_almost_eigenrelation_order_eps(gentle, profiles_m3):
    # u_xx - lambda u + a_eps u^m = (c - lambda) u + O_L2(eps) at mid-interaction
    from gkdvlab.soliton import spectral_derivative
    mc = ModelConstants(3, 0.1)
    vals = []
    for eps in (0.1, 0.05):
        traj = integrate_adiabatic(mc, gentle, eps, t_end=1.02 * t_epsilon(0.1, eps))
        approx = ApproximateSolution(mc, gentle, eps, traj, profiles_m3)
        grid = approx.default_grid(0.0)
        st = traj.state(0.0)
        u = approx.field(0.0, grid.nodes)
        a_eps = np.asarray(gentle.a(eps * grid.nodes), dtype=float)
        lhs = spectral_derivative(u, grid, 2) - mc.lam * u + a_eps * u ** mc.m
        resid = lhs - (st.c - mc.lam) * u
        vals.append(np.sqrt(grid.h * np.sum(resid ** 2)))
    assert vals[0] / vals[1] == pytest.approx(2.0, rel=0.35)


def test_endpoint_closeness_steep_medium(profiles_m3):
    steep = make_default_potential(10.0)
    mc = ModelConstants(3, 0.1)
    h1_plus = []
    for eps in (0.1, 0.05):
        traj = integrate_adiabatic(mc, steep, eps, t_end=1.02 * t_epsilon(0.1, eps))
        approx = ApproximateSolution(mc, steep, eps, traj, profiles_m3)
        rep = approx.endpoint_report()
        if eps == 0.05:
            assert rep["h1_minus"] < 1e-6
        h1_plus.append(rep["h1_plus"])
    assert h1_plus[1] < h1_plus[0]


def test_endpoint_critical_lambda_unit_soliton():
    # lambda = lambda0: c == 1 and c_inf = 1, so both endpoint profiles are unit solitons
    from gkdvlab.correction import CorrectionProfiles
    steep = make_default_potential(10.0)
    mc = ModelConstants(3, 1.0 / 3.0)
    profiles = CorrectionProfiles.build(mc)
    traj = integrate_adiabatic(mc, steep, 0.05, t_end=1.02 * t_epsilon(mc.lam, 0.05))
    approx = ApproximateSolution(mc, steep, 0.05, traj, profiles)
    rep = approx.endpoint_report()
    assert rep["c_infinity"] == 1.0
    assert rep["h1_minus"] < 1e-5
    assert rep["h1_plus"] < 1e-5
