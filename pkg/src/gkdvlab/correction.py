"""First-order correction to the modulated soliton: the dispersive shelf.

Improving the modulated-soliton ansatz R = Q_{c(eps t)}(y) / a^{1/(m-1)}(eps rho)
by a term eps A_c requires solving (L A_c)' = F_1 with the forcing produced by
the slow parameter drift.  Separating time and space reduces this to two
stationary problems (L0 Atilde)' = F1tilde, (L0 Ahat)' = F1hat with

    F1tilde = p Lambda Q - Q/(m-1) + (y Q^m)',
    F1hat   = Q/(m-1) - 4/(5-m) Lambda Q,

both orthogonal to Q.  Bounded solutions have the structure
A = beta (phi - 1 - V0) + A1 with beta = (1/2) int F and A1 decaying, so they
tend to 0 ahead of the soliton and to the plateau -2 beta behind it: the shelf.
Since the plateau never decays in y, A_c is not square integrable; a smooth
cutoff eta(eps y + 2) produces the usable correction A_# supported on
y >= -3/eps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.sparse.linalg import spsolve

from .adiabatic import AdiabaticTrajectory, t_epsilon
from .potential import PotentialSpec
from .soliton import (
    Grid1D,
    ModelConstants,
    apply_l0_phi,
    eval_dq,
    eval_dqc,
    eval_lambda_qc,
    eval_phi,
    eval_q,
    eval_qc,
    eval_v0,
    solve_c_infinity,
    spectral_derivative,
)


def cutoff_eta(s):
    """Quintic smoothstep: 0 for s <= -1, 1 for s >= 1, with 0 <= eta' <= 15/16."""
    s = np.asarray(s, dtype=float)
    t = np.clip(0.5 * (s + 1.0), 0.0, 1.0)
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def build_f1_components(constants: ModelConstants, y: np.ndarray):
    """Stationary forcings (F1tilde, F1hat); both are even-side combinations in class Y."""
    m = constants.m
    y = np.asarray(y, dtype=float)
    q = eval_q(constants, y)
    dq = eval_dq(constants, y)
    lam_q = eval_lambda_qc(constants, 1.0, y)
    y_qm_prime = q ** m + m * y * q ** (m - 1) * dq
    f_tilde = constants.p * lam_q - q / (m - 1) + y_qm_prime
    f_hat = q / (m - 1) - 4.0 / (5.0 - m) * lam_q
    return f_tilde, f_hat


@dataclass(frozen=True)
class ModelProblemSolution:
    """Bounded solution of (L0 A)' = F with A(+inf) = 0 and A(-inf) = -2 beta."""

    constants: ModelConstants
    grid: Grid1D
    f: np.ndarray
    beta: float
    delta: float          # always -beta: the normalization that kills A at +inf
    a_full: np.ndarray    # A = beta phi + delta + a_y1
    a_y1: np.ndarray      # decaying part of A
    multiplier: float     # Lagrange multiplier of the bordered solve (~0)

    def far_field(self, side: str, width: float = 1.0) -> float:
        """Grid average of A over the outermost ``width`` units on one side."""
        x = self.grid.nodes
        if side == "left":
            mask = x <= x[0] + width
        elif side == "right":
            mask = x >= x[-1] - width
        else:
            raise ValueError("side must be 'left' or 'right'")
        return float(np.mean(self.a_full[mask]))

    def residual_field(self) -> np.ndarray:
        """(L0 A)' - F by finite differences on the interior of the grid."""
        return _fd_model_residual(self.constants, self.grid, self.a_full, self.f)

    def residual_norm(self) -> float:
        r = self.residual_field()
        return float(np.sqrt(self.grid.h * np.sum(r * r)))


def _fd_second_derivative_matrix(n: int, h: float, order: int):
    from scipy.sparse import diags
    if order == 2:
        stencil = {-1: 1.0, 0: -2.0, 1: 1.0}
        mat = diags([np.full(n - abs(o), w / h ** 2) for o, w in stencil.items()],
                    list(stencil)).tolil()
    elif order == 4:
        stencil = {-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}
        mat = diags([np.full(n - abs(o), w / (12.0 * h ** 2)) for o, w in stencil.items()],
                    list(stencil)).tolil()
        # fall back to the 3-point stencil next to the Dirichlet edge rows
        for j in (1, n - 2):
            mat.rows[j] = [j - 1, j, j + 1]
            mat.data[j] = [1.0 / h ** 2, -2.0 / h ** 2, 1.0 / h ** 2]
    else:
        raise ValueError("order must be 2 or 4")
    # first and last rows are overwritten by Dirichlet conditions downstream
    return mat


def _fd_first_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """4th-order centered first derivative; one-sided 2nd order at the edges."""
    out = np.empty_like(values)
    out[2:-2] = (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1] - values[4:]) / (12 * h)
    out[1] = (values[2] - values[0]) / (2 * h)
    out[-2] = (values[-1] - values[-3]) / (2 * h)
    out[0] = (-3 * values[0] + 4 * values[1] - values[2]) / (2 * h)
    out[-1] = (3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * h)
    return out


def _cumulative_integral(values: np.ndarray, h: float) -> np.ndarray:
    """Cumulative trapezoid from the left edge with Euler-Maclaurin endpoint correction."""
    cum = np.concatenate(([0.0], np.cumsum(0.5 * h * (values[1:] + values[:-1]))))
    fp = _fd_first_derivative(values, h)
    return cum - (h * h / 12.0) * (fp - fp[0])


def _fd_model_residual(constants: ModelConstants, grid: Grid1D, a_full: np.ndarray,
                       f: np.ndarray) -> np.ndarray:
    m = constants.m
    h = grid.h
    n = grid.n
    q = eval_q(constants, grid.nodes)
    d2 = np.zeros(n)
    d2[2:-2] = (-a_full[:-4] + 16 * a_full[1:-3] - 30 * a_full[2:-2]
                + 16 * a_full[3:-1] - a_full[4:]) / (12 * h ** 2)
    lv = -d2 + a_full - m * q ** (m - 1) * a_full
    r = _fd_first_derivative(lv, h) - f
    r[:4] = 0.0
    r[-4:] = 0.0
    return r


def solve_model_problem(constants: ModelConstants, f: np.ndarray, grid: Grid1D, *,
                        orthogonality_tol: float = 1e-8,
                        fd_order: int = 4) -> ModelProblemSolution:
    """Solve (L0 A)' = F for even decaying F with int F Q = 0.

    Writing A = beta phi + delta (1 + V0) + A1 reduces the problem to
    L0 A1 = H - beta (L0 phi + 1) with H the primitive of F vanishing at -inf.
    The decaying part A1 is obtained from a bordered finite-difference system:
    Dirichlet values at the edges, one Lagrange-multiplier row enforcing
    int A1 Q' = 0 and one column spanning the kernel direction Q'.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != grid.nodes.shape:
        raise ValueError("forcing shape does not match grid")
    x = grid.nodes
    h = grid.h
    n = grid.n
    q = eval_q(constants, x)
    dq = eval_dq(constants, x)

    fq = h * np.sum(f * q)
    scale = h * np.sum(np.abs(f) * q) + 1e-300
    if abs(fq) > orthogonality_tol * max(1.0, scale):
        raise ValueError(f"int F Q = {fq:.3e} violates the solvability condition")

    beta = 0.5 * h * np.sum(f)
    big_h = _cumulative_integral(f, h)
    rhs = big_h - beta * (apply_l0_phi(constants, x) + 1.0)

    m = constants.m
    from scipy.sparse import bmat, csc_matrix, diags

    op = (-_fd_second_derivative_matrix(n, h, fd_order)
          + diags(1.0 - m * q ** (m - 1))).tolil()
    b = np.zeros(n + 1)
    b[:n] = rhs
    edge = (0, 1, n - 2, n - 1)
    for j in edge:
        op.rows[j] = [j]
        op.data[j] = [1.0]
        b[j] = 0.0
    kernel_col = dq.copy()
    kernel_col[list(edge)] = 0.0
    sys = bmat([[op.tocsc(), csc_matrix(kernel_col[:, None])],
                [csc_matrix(h * dq[None, :]), None]], format="csc")
    sol = spsolve(sys, b)
    a1 = sol[:n]
    mu = float(sol[n])

    v0 = eval_v0(constants, x)
    phi = eval_phi(constants, 1.0, x)
    a_full = beta * phi - beta * (1.0 + v0) + a1
    a_y1 = a_full - beta * phi + beta  # the (OC3) decaying part: A - beta phi - delta
    return ModelProblemSolution(constants=constants, grid=grid, f=f, beta=beta,
                                delta=-beta, a_full=a_full, a_y1=a_y1, multiplier=mu)


@dataclass(frozen=True)
class CorrectionProfiles:
    """Stationary shelf profiles Atilde, Ahat and their decaying parts, with evaluators."""

    constants: ModelConstants
    grid: Grid1D
    f_tilde: np.ndarray
    f_hat: np.ndarray
    beta_tilde: float
    beta_hat: float
    a_tilde: np.ndarray
    a_hat: np.ndarray
    a_tilde_y1: np.ndarray
    a_hat_y1: np.ndarray
    _spline_tilde: object
    _spline_hat: object

    @classmethod
    def build(cls, constants: ModelConstants, n: int = 16384,
              half_width: float = 30.0, fd_order: int = 4) -> "CorrectionProfiles":
        # wide so the |y| e^{-|y|}-tailed quadratures reach 1e-10, fine so the
        # finite-difference residual sits well below 1e-6
        grid = Grid1D(-half_width, half_width, n)
        f_tilde, f_hat = build_f1_components(constants, grid.nodes)
        sol_t = solve_model_problem(constants, f_tilde, grid, fd_order=fd_order)
        sol_h = solve_model_problem(constants, f_hat, grid, fd_order=fd_order)
        # quintic splines of the decaying parts keep resampled values smooth enough
        # for spectral differentiation on coarser simulation grids
        sp_t = make_interp_spline(grid.nodes, sol_t.a_y1, k=5)
        sp_h = make_interp_spline(grid.nodes, sol_h.a_y1, k=5)
        return cls(constants=constants, grid=grid, f_tilde=f_tilde, f_hat=f_hat,
                   beta_tilde=sol_t.beta, beta_hat=sol_h.beta,
                   a_tilde=sol_t.a_full, a_hat=sol_h.a_full,
                   a_tilde_y1=sol_t.a_y1, a_hat_y1=sol_h.a_y1,
                   _spline_tilde=sp_t, _spline_hat=sp_h)

    def _eval(self, which: str, y):
        """A(y) = beta (phi(y) - 1) + A1(y), with A1 spline-extended by zero."""
        y = np.asarray(y, dtype=float)
        beta = self.beta_tilde if which == "tilde" else self.beta_hat
        spline = self._spline_tilde if which == "tilde" else self._spline_hat
        lo, hi = self.grid.nodes[0], self.grid.nodes[-1]
        inside = (y >= lo) & (y <= hi)
        vals = beta * (np.tanh(0.5 * (self.constants.m - 1) * y) - 1.0)
        out = np.where(inside, vals + spline(np.clip(y, lo, hi)), vals)
        return out

    def eval_a_tilde(self, y):
        return self._eval("tilde", y)

    def eval_a_hat(self, y):
        return self._eval("hat", y)


def shelf_b_coefficient(constants: ModelConstants, potential: PotentialSpec,
                        profiles: CorrectionProfiles, epsilon: float,
                        c: float, rho: float) -> float:
    """b = a'(eps rho) c^{1/(m-1)-1} (beta_tilde + lambda beta_hat / c) / a^{m/(m-1)}(eps rho)."""
    m = constants.m
    r = epsilon * rho
    a_m = float(potential.a(r)) ** (m / (m - 1.0))
    return float(potential.da(r)) / a_m * c ** (1.0 / (m - 1) - 1.0) \
        * (profiles.beta_tilde + constants.lam * profiles.beta_hat / c)


def shelf_h_coefficient(constants: ModelConstants, potential: PotentialSpec,
                        epsilon: float, rho: float) -> float:
    """h = a'(eps rho) / a^{m/(m-1)}(eps rho)."""
    m = constants.m
    r = epsilon * rho
    return float(potential.da(r)) / float(potential.a(r)) ** (m / (m - 1.0))


@dataclass(frozen=True)
class ShelfCoefficients:
    """Time profiles of the shelf amplitude; exponentially small outside the interaction."""

    constants: ModelConstants
    potential: PotentialSpec
    profiles: CorrectionProfiles
    epsilon: float
    trajectory: AdiabaticTrajectory

    @property
    def beta_tilde(self) -> float:
        return self.profiles.beta_tilde

    @property
    def beta_hat(self) -> float:
        return self.profiles.beta_hat

    def b_of_t(self, t: float) -> float:
        st = self.trajectory.state(t)
        return shelf_b_coefficient(self.constants, self.potential, self.profiles,
                                   self.epsilon, st.c, st.rho)

    def h_of_t(self, t: float) -> float:
        st = self.trajectory.state(t)
        return shelf_h_coefficient(self.constants, self.potential, self.epsilon, st.rho)


def assemble_ac(constants: ModelConstants, potential: PotentialSpec,
                profiles: CorrectionProfiles, epsilon: float,
                c: float, rho: float, y: np.ndarray) -> np.ndarray:
    """Shelf field A_c(y) = (a'/a^{m/(m-1)}) c^{1/(m-1)-1/2} [Atilde + (lambda/c) Ahat](sqrt(c) y).

    Vanishes ahead of the soliton and flattens to the plateau -2 sqrt(c) b behind it.
    """
    m = constants.m
    r = epsilon * rho
    pref = float(potential.da(r)) / float(potential.a(r)) ** (m / (m - 1.0)) \
        * c ** (1.0 / (m - 1) - 0.5)
    z = np.sqrt(c) * np.asarray(y, dtype=float)
    vals = profiles.eval_a_tilde(z)
    if constants.lam != 0.0:
        vals = vals + (constants.lam / c) * profiles.eval_a_hat(z)
    return pref * vals


def cutoff_asharp(ac_values: np.ndarray, epsilon: float, y: np.ndarray) -> np.ndarray:
    """A_# = eta(eps y + 2) A_c: zero for y <= -3/eps, untouched for y >= -1/eps."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return cutoff_eta(epsilon * np.asarray(y, dtype=float) + 2.0) * np.asarray(ac_values)


# ---------------------------------------------------------------------------
# the approximate solution and its residual
# ---------------------------------------------------------------------------

def grid_norms(field: np.ndarray, grid: Grid1D) -> dict:
    """Discrete L2, H1, H2 norms with spectral derivatives."""
    h = grid.h
    d1 = spectral_derivative(field, grid, 1)
    d2 = spectral_derivative(field, grid, 2)
    l2sq = h * np.sum(field ** 2)
    h1sq = l2sq + h * np.sum(d1 ** 2)
    h2sq = h1sq + h * np.sum(d2 ** 2)
    return {"l2": float(np.sqrt(l2sq)), "h1": float(np.sqrt(h1sq)),
            "h2": float(np.sqrt(h2sq)), "linf": float(np.max(np.abs(field)))}


@dataclass(frozen=True)
class ApproximateSolution:
    """Modulated soliton plus cut-off shelf: u_approx(t, x) = R + eps A_#(eps t; x - rho)."""

    constants: ModelConstants
    potential: PotentialSpec
    epsilon: float
    trajectory: AdiabaticTrajectory
    profiles: CorrectionProfiles
    include_correction: bool = True

    @classmethod
    def build(cls, constants: ModelConstants, potential: PotentialSpec, epsilon: float,
              trajectory: AdiabaticTrajectory | None = None,
              profiles: CorrectionProfiles | None = None,
              include_correction: bool = True) -> "ApproximateSolution":
        from .adiabatic import integrate_adiabatic
        if trajectory is None:
            te = t_epsilon(constants.lam, epsilon)
            trajectory = integrate_adiabatic(constants, potential, epsilon, t_end=1.05 * te)
        if profiles is None:
            profiles = CorrectionProfiles.build(constants)
        return cls(constants=constants, potential=potential, epsilon=epsilon,
                   trajectory=trajectory, profiles=profiles,
                   include_correction=include_correction)

    def without_correction(self) -> "ApproximateSolution":
        return replace(self, include_correction=False)

    def shelf_coefficients(self) -> ShelfCoefficients:
        return ShelfCoefficients(self.constants, self.potential, self.profiles,
                                 self.epsilon, self.trajectory)

    def _shape_factor(self, rho: float) -> float:
        """a^{1/(m-1)}(eps rho): the slowly varying amplitude factor of the soliton."""
        return float(self.potential.a(self.epsilon * rho)) ** (1.0 / (self.constants.m - 1))

    def soliton_field(self, t: float, x: np.ndarray) -> np.ndarray:
        st = self.trajectory.state(t)
        y = np.asarray(x, dtype=float) - st.rho
        return eval_qc(self.constants, st.c, y) / self._shape_factor(st.rho)

    def correction_field(self, t: float, x: np.ndarray) -> np.ndarray:
        """eps A_#(eps t; y) sampled at x."""
        if not self.include_correction:
            return np.zeros_like(np.asarray(x, dtype=float))
        st = self.trajectory.state(t)
        y = np.asarray(x, dtype=float) - st.rho
        ac = assemble_ac(self.constants, self.potential, self.profiles, self.epsilon,
                         st.c, st.rho, y)
        return self.epsilon * cutoff_asharp(ac, self.epsilon, y)

    def field(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.soliton_field(t, x) + self.correction_field(t, x)

    def soliton_field_dt(self, t: float, x: np.ndarray) -> np.ndarray:
        """Exact time derivative of R via the modulation chain rule."""
        mc = self.constants
        st = self.trajectory.state(t)
        y = np.asarray(x, dtype=float) - st.rho
        dc_dt = self.trajectory.c_prime(t)
        rho_dot = st.c - mc.lam
        r = self.epsilon * st.rho
        atil, datil = self.potential.power_derivatives(1.0 / (mc.m - 1), r)[:2]
        lam_q = eval_lambda_qc(mc, st.c, y)
        dqc = eval_dqc(mc, st.c, y)
        qc = eval_qc(mc, st.c, y)
        return (dc_dt * lam_q - rho_dot * dqc) / atil \
            - qc * self.epsilon * rho_dot * datil / atil ** 2

    def field_dt(self, t: float, x: np.ndarray, dt: float = 1e-4) -> np.ndarray:
        """R_t analytically plus a centered time difference for the correction part."""
        out = self.soliton_field_dt(t, x)
        if self.include_correction:
            out = out + (self.correction_field(t + dt, x)
                         - self.correction_field(t - dt, x)) / (2.0 * dt)
        return out

    def default_grid(self, t: float, pad: float = 45.0, target_h: float = 0.04) -> Grid1D:
        """Window containing the soliton, the cut shelf, and decayed margins."""
        st = self.trajectory.state(t)
        left = st.rho - 3.0 / self.epsilon - pad
        right = st.rho + pad
        n = 1 << int(np.ceil(np.log2((right - left) / target_h)))
        return Grid1D(left, right, n)

    def residual(self, t: float, grid: Grid1D | None = None, dt: float = 1e-4) -> dict:
        """S[u] = u_t + (u_xx - lambda u + a_eps u^m)_x on the grid, with norms."""
        mc = self.constants
        if grid is None:
            grid = self.default_grid(t)
        x = grid.nodes
        u = self.field(t, x)
        a_eps = np.asarray(self.potential.a(self.epsilon * x), dtype=float)
        flux = spectral_derivative(u, grid, 2) - mc.lam * u + a_eps * u ** mc.m
        s = self.field_dt(t, x, dt=dt) + spectral_derivative(flux, grid, 1)
        norms = grid_norms(s, grid)
        norms["field"] = s
        norms["grid"] = grid
        return norms

    def f1_field(self, t: float, x: np.ndarray) -> np.ndarray:
        """Leading forcing F_1(eps t; y): the residual of the bare modulated soliton is eps F_1 + O(eps^2)."""
        mc = self.constants
        st = self.trajectory.state(t)
        y = np.asarray(x, dtype=float) - st.rho
        r = self.epsilon * st.rho
        atil = self._shape_factor(st.rho)
        a_prime = float(self.potential.da(r))
        dc_dt = self.trajectory.c_prime(t)
        qc = eval_qc(mc, st.c, y)
        dqc_arr = eval_dqc(mc, st.c, y)
        lam_q = eval_lambda_qc(mc, st.c, y)
        y_qm_prime = qc ** mc.m + mc.m * y * qc ** (mc.m - 1) * dqc_arr
        return (dc_dt / self.epsilon) * lam_q / atil + (a_prime / atil ** mc.m) * (
            -(st.c - mc.lam) * qc / (mc.m - 1) + y_qm_prime)

    def travel_diagnostic(self, t: float, grid: Grid1D | None = None) -> dict:
        """Norms of u_t + (c - lambda) u_x: the profile is almost rigidly translating."""
        if grid is None:
            grid = self.default_grid(t)
        st = self.trajectory.state(t)
        x = grid.nodes
        u = self.field(t, x)
        drift = self.field_dt(t, x) + (st.c - self.constants.lam) \
            * spectral_derivative(u, grid, 1)
        return grid_norms(drift, grid)

    def endpoint_report(self, pad: float = 45.0, target_h: float = 0.02) -> dict:
        """H1 distances to the limiting solitons at t = -T_eps and t = +T_eps."""
        mc = self.constants
        te = t_epsilon(mc.lam, self.epsilon)
        c_inf = solve_c_infinity(mc, mc.lam)

        def h1_distance(t, reference):
            st = self.trajectory.state(t)
            grid = Grid1D(st.rho - 3.0 / self.epsilon - pad, st.rho + pad,
                          1 << int(np.ceil(np.log2((3.0 / self.epsilon + 2 * pad) / target_h))))
            diff = self.field(t, grid.nodes) - reference(grid.nodes)
            return grid_norms(diff, grid)["h1"]

        st_minus = self.trajectory.state(-te)
        st_plus = self.trajectory.state(min(te, self.trajectory.t_end))
        dist_minus = h1_distance(-te, lambda x: eval_q(mc, x - st_minus.rho))
        nu = 2.0 ** (-1.0 / (mc.m - 1))
        dist_plus = h1_distance(st_plus.t,
                                lambda x: nu * eval_qc(mc, c_inf, x - st_plus.rho))
        return {"h1_minus": dist_minus, "h1_plus": dist_plus,
                "rho_minus": st_minus.rho, "rho_plus": st_plus.rho, "c_infinity": c_inf}


def residual_scaling_fit(approx_by_eps: dict, n_times: int = 21) -> dict:
    """max_t ||S||_L2 per epsilon and the log-log slope across the sweep."""
    eps_list = sorted(approx_by_eps)
    maxima = []
    for eps in eps_list:
        approx = approx_by_eps[eps]
        te = t_epsilon(approx.constants.lam, eps)
        times = np.linspace(-te, min(te, approx.trajectory.t_end), n_times)
        maxima.append(max(approx.residual(t)["l2"] for t in times))
    slope = float(np.polyfit(np.log(eps_list), np.log(maxima), 1)[0])
    return {"epsilons": eps_list, "max_l2": maxima, "slope": slope}
