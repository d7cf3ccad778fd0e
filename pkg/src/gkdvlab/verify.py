"""Closed-form identity suite: every check is named and reports its residual.

The suite covers the profile family (equation residual, kernel and inverse
identities, the auxiliary even profile), the quadrature identities of the
scaled soliton, the limit-scaling root, the stationary shelf problems, and the
medium hypotheses.  It is the engine of the ``verify`` CLI subcommand and of
the mutation tests: every check consumes freshly built profiles, so corrupting
an evaluator upstream makes the corresponding residual blow up.
"""

from __future__ import annotations

import time

import numpy as np

from .correction import build_f1_components, cutoff_eta, solve_model_problem
from .potential import PotentialSpec, verify_hypotheses
from .soliton import (
    Grid1D,
    ModelConstants,
    SolitonProfile,
    apply_linearized,
    eval_phi,
    eval_q,
    identity_relative_errors,
    integral_q,
    scaling_equation,
    soliton_identities,
    solve_c_infinity,
    symmetric_grid,
    trapezoid,
)


def _check(name: str, value: float, tol: float) -> dict:
    return {"name": name, "value": float(value), "tolerance": float(tol),
            "passed": bool(value < tol)}


def run_verify(potential: PotentialSpec | None = None, *,
               model_problem_n: int = 4096) -> dict:
    """Run every closed-form check; returns {'passed': bool, 'checks': [...], ...}."""
    start = time.perf_counter()
    checks = []

    for m in (2, 3, 4):
        mc = ModelConstants(m)
        prof = SolitonProfile.build(mc, 1.0)
        checks.append(_check(f"soliton_ode_residual_m{m}", prof.ode_residual(), 1e-8))
        kernel = np.max(np.abs(apply_linearized(prof, prof.dq)))
        checks.append(_check(f"linearized_kernel_m{m}", kernel, 1e-6))
        inverse = np.max(np.abs(apply_linearized(prof, prof.lam_q) + prof.q))
        checks.append(_check(f"linearized_inverse_m{m}", inverse, 1e-6))
        v0_res = np.max(np.abs(apply_linearized(prof, prof.v0) - m * prof.q ** (m - 1)))
        checks.append(_check(f"auxiliary_v0_residual_m{m}", v0_res, 1e-6))

        worst = 0.0
        for c in (0.5, 1.0, 2.0, 4.0):
            errs = identity_relative_errors(soliton_identities(mc, c))
            worst = max(worst, max(errs.values()))
        checks.append(_check(f"scaled_integral_identities_m{m}", worst, 1e-10))

        c0 = solve_c_infinity(mc, 0.0)
        checks.append(_check(f"limit_scaling_lambda0_root_m{m}",
                             abs(scaling_equation(c0, 0.0, mc)), 1e-12))
        checks.append(_check(f"limit_scaling_endpoints_m{m}",
                             abs(c0 - 2.0 ** mc.p)
                             + abs(solve_c_infinity(mc, mc.lambda0) - 1.0), 1e-12))
        lams = np.linspace(0.0, mc.lambda0, 11)
        roots = np.array([solve_c_infinity(mc, la) for la in lams])
        checks.append(_check(f"limit_scaling_monotone_m{m}",
                             float(np.max(np.diff(roots))), 0.0 + 1e-15))

        grid = symmetric_grid(mc, 1.0, n=8192)
        ft, fh = build_f1_components(mc, grid.nodes)
        q = eval_q(mc, grid.nodes)
        checks.append(_check(f"forcing_orthogonality_tilde_m{m}",
                             abs(trapezoid(ft * q, grid)), 1e-10))
        checks.append(_check(f"forcing_orthogonality_hat_m{m}",
                             abs(trapezoid(fh * q, grid)), 1e-10))
        iq = integral_q(mc)
        checks.append(_check(f"shelf_beta_tilde_m{m}",
                             abs(0.5 * trapezoid(ft, grid) + 3.0 * iq / (2 * (m + 3))),
                             1e-10))
        checks.append(_check(f"shelf_beta_hat_m{m}",
                             abs(0.5 * trapezoid(fh, grid) - iq / (2 * (5 - m))), 1e-10))

        mp_grid = Grid1D(-15.0, 15.0, model_problem_n)
        ft_mp, _ = build_f1_components(mc, mp_grid.nodes)
        try:
            sol = solve_model_problem(mc, ft_mp, mp_grid)
            residual = sol.residual_norm()
            far = abs(sol.far_field("left") + 2 * sol.beta) + abs(sol.far_field("right"))
        except ValueError:
            residual = far = float("inf")  # solvability precondition violated
        checks.append(_check(f"model_problem_residual_m{m}", residual, 1e-6))
        checks.append(_check(f"model_problem_far_field_m{m}", far, 2e-4))

    # dispersion function: odd, unit limits, exponentially flat tails
    mc3 = ModelConstants(3)
    phi_tail = abs(eval_phi(mc3, 1.0, 40.0) - 1.0) + abs(eval_phi(mc3, 1.0, -40.0) + 1.0)
    checks.append(_check("dispersion_function_limits", phi_tail, 1e-12))
    s = np.linspace(-3.0, 3.0, 2001)
    eta = cutoff_eta(s)
    eta_viol = max(float(np.max(-eta)), float(np.max(eta - 1.0)),
                   float(np.max(np.abs(np.diff(eta) / (s[1] - s[0])))) - 1.0)
    checks.append(_check("cutoff_bounds", max(eta_viol, 0.0), 1e-12))

    if potential is not None:
        report = verify_hypotheses(potential, 3)
        checks.append(_check("medium_hypotheses", 0.0 if report["passed"] else 1.0, 0.5))

    passed = all(c["passed"] for c in checks)
    return {
        "passed": passed,
        "n_checks": len(checks),
        "n_failed": sum(not c["passed"] for c in checks),
        "elapsed_seconds": time.perf_counter() - start,
        "checks": checks,
    }
