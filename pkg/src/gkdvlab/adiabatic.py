"""Reduced modulation dynamics (c, rho) of the soliton crossing the medium.

The scaling c(eps t) and the center rho(t) obey

    dc/dt  = eps p c (c - lambda/lambda0) (a'/a)(eps rho),   c(-eps T_eps) = 1,
    drho/dt = c - lambda,                                    rho(-T_eps) = -(1-lambda) T_eps,

whose exact first integral pins c against the traversed fraction of the medium:

    c^{lambda0} (c - lambda/lambda0)^{1-lambda0}
        = (1 - lambda/lambda0)^{1-lambda0} * a^p(eps rho(t)) / a^p(-eps (1-lambda) T_eps).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .potential import PotentialSpec
from .soliton import ModelConstants, solve_c_infinity


def t_epsilon(lam: float, epsilon: float) -> float:
    """Interaction time T_eps = eps^{-1 - 1/100} / (1 - lambda)."""
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lambda must lie in [0, 1), got {lam}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return epsilon ** (-1.01) / (1.0 - lam)


@dataclass(frozen=True)
class AdiabaticState:
    t: float
    c: float
    rho: float


@dataclass(frozen=True)
class AdiabaticTrajectory:
    """Dense modulation trajectory with callable interpolants for c(t) and rho(t)."""

    constants: ModelConstants
    potential: PotentialSpec
    epsilon: float
    t: np.ndarray
    c: np.ndarray
    rho: np.ndarray
    c_of_t: Callable
    rho_of_t: Callable
    t_start: float
    t_end: float

    def state(self, t: float) -> AdiabaticState:
        return AdiabaticState(t=t, c=float(self.c_of_t(t)), rho=float(self.rho_of_t(t)))

    def c_prime(self, t: float) -> float:
        """dc/dt from the right-hand side (exact given the trajectory)."""
        mc = self.constants
        st = self.state(t)
        r = self.epsilon * st.rho
        ratio = float(self.potential.da(r)) / float(self.potential.a(r))
        return self.epsilon * mc.p * st.c * (st.c - mc.lam / mc.lambda0) * ratio

    def states(self) -> list[AdiabaticState]:
        return [AdiabaticState(float(tt), float(cc), float(rr))
                for tt, cc, rr in zip(self.t, self.c, self.rho)]


def integrate_adiabatic(constants: ModelConstants, spec: PotentialSpec, epsilon: float,
                        t_end: float | None = None, *, rtol: float = 1e-10,
                        atol: float = 1e-12, n_samples: int = 2001,
                        fixed_step: float | None = None) -> AdiabaticTrajectory:
    """Integrate the modulation system from -T_eps; adaptive RK45 by default.

    ``fixed_step`` switches to a classical fixed-step RK4 loop, used for
    step-refinement convergence studies of the first integral.
    """
    mc = constants
    lam = mc.lam
    if lam > mc.lambda0 + 1e-15:
        raise ValueError(f"lambda={lam} exceeds lambda0={mc.lambda0}")
    te = t_epsilon(lam, epsilon)
    if t_end is None:
        t_end = te
    if t_end < -te:
        raise ValueError("t_end precedes the start time -T_eps")

    lam_ratio = lam / mc.lambda0

    def rhs(t, y):
        c, rho = y
        r = epsilon * rho
        ratio = float(spec.da(r)) / float(spec.a(r))
        return (epsilon * mc.p * c * (c - lam_ratio) * ratio, c - lam)

    y0 = (1.0, -(1.0 - lam) * te)
    t_eval = np.linspace(-te, t_end, n_samples)

    if fixed_step is not None:
        ts = [-te]
        ys = [np.array(y0)]
        t, y = -te, np.array(y0)
        while t < t_end - 1e-12:
            h = min(fixed_step, t_end - t)
            k1 = np.array(rhs(t, y))
            k2 = np.array(rhs(t + h / 2, y + h / 2 * k1))
            k3 = np.array(rhs(t + h / 2, y + h / 2 * k2))
            k4 = np.array(rhs(t + h, y + h * k3))
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
            ts.append(t)
            ys.append(y)
        ts = np.array(ts)
        ys = np.array(ys)
        c_of_t = _linear_interpolant(ts, ys[:, 0])
        rho_of_t = _linear_interpolant(ts, ys[:, 1])
        return AdiabaticTrajectory(mc, spec, epsilon, ts, ys[:, 0], ys[:, 1],
                                   c_of_t, rho_of_t, -te, t_end)

    sol = solve_ivp(rhs, (-te, t_end), y0, method="RK45", rtol=rtol, atol=atol,
                    t_eval=t_eval, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"modulation ODE integration failed: {sol.message}")
    c_arr, rho_arr = sol.y
    if np.any(c_arr < 1.0 - 1e-8) or np.any(c_arr > 2.0 ** (4.0 / (5 - mc.m)) + 1e-8):
        raise RuntimeError("scaling left its admissible band [1, 2^{4/(5-m)}]")
    dense = sol.sol
    c_of_t = lambda t: dense(np.asarray(t, dtype=float))[0]
    rho_of_t = lambda t: dense(np.asarray(t, dtype=float))[1]
    return AdiabaticTrajectory(mc, spec, epsilon, t_eval, c_arr, rho_arr,
                               c_of_t, rho_of_t, -te, t_end)


def _linear_interpolant(ts, vals):
    return lambda t: np.interp(np.asarray(t, dtype=float), ts, vals)


def constant_trajectory(constants: ModelConstants, spec: PotentialSpec, epsilon: float,
                        c0: float, rho0: float, t_span: tuple) -> AdiabaticTrajectory:
    """Trivial trajectory c == c0, rho = rho0 + (c0 - lambda) t; for controls and exact waves."""
    t = np.linspace(t_span[0], t_span[1], 33)
    lam = constants.lam
    c_of_t = lambda tt: np.full_like(np.asarray(tt, dtype=float), c0)
    rho_of_t = lambda tt: rho0 + (c0 - lam) * np.asarray(tt, dtype=float)
    return AdiabaticTrajectory(constants, spec, epsilon, t, c_of_t(t), rho_of_t(t),
                               c_of_t, rho_of_t, t_span[0], t_span[1])


def first_integral_values(traj: AdiabaticTrajectory) -> np.ndarray:
    """LHS - RHS of the first integral at the trajectory's sample times."""
    mc = traj.constants
    lam0 = mc.lambda0
    lam_ratio = mc.lam / lam0
    te = t_epsilon(mc.lam, traj.epsilon)
    a_start = float(traj.potential.a(-traj.epsilon * (1.0 - mc.lam) * te))
    lhs = traj.c ** lam0 * (traj.c - lam_ratio) ** (1.0 - lam0)
    a_vals = np.asarray(traj.potential.a(traj.epsilon * traj.rho), dtype=float)
    rhs = (1.0 - lam_ratio) ** (1.0 - lam0) * (a_vals / a_start) ** mc.p
    return lhs - rhs


def first_integral_residual(traj: AdiabaticTrajectory) -> float:
    """max |LHS - RHS| over the trajectory samples."""
    return float(np.max(np.abs(first_integral_values(traj))))


def exit_bounds_check(traj: AdiabaticTrajectory, *, slack: float = 1e-9) -> dict:
    """Position bracket at t = T_eps: (1-lambda) T_eps <= rho <= (2 c_inf - lambda - 1) T_eps."""
    mc = traj.constants
    te = t_epsilon(mc.lam, traj.epsilon)
    if traj.t_end < te - 1e-9:
        raise ValueError("trajectory does not reach T_eps")
    rho_te = float(traj.rho_of_t(te))
    c_inf = solve_c_infinity(mc, mc.lam)
    lower = (1.0 - mc.lam) * te
    upper = (2.0 * c_inf - mc.lam - 1.0) * te
    tol = slack * te
    return {
        "rho_at_te": rho_te,
        "lower": lower,
        "upper": upper,
        "lower_ok": rho_te >= lower - tol,
        "upper_ok": rho_te <= upper + tol,
        "lower_margin": rho_te - lower,
        "upper_margin": upper - rho_te,
        "c_infinity": c_inf,
    }
