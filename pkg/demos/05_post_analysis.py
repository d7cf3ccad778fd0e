"""Confronting a simulation with the modulation-theory predictions.

A mid-interaction snapshot is decomposed into a fitted soliton plus residual by
Newton iteration on the two orthogonality conditions.  The residual behind the
soliton is then compared with the predicted shelf eps A_c: same sign (an
elevation, since beta_tilde < 0 and a' > 0), comparable size.  The integral
budget splits int u = int Q into the outgoing-soliton share kappa_m and the
tail share 1 - kappa_m.
"""

import numpy as np

from gkdvlab.adiabatic import t_epsilon
from gkdvlab.analysis import fit_modulation, kappa_m, l1_budget, shelf_compare
from gkdvlab.correction import CorrectionProfiles
from gkdvlab.potential import make_default_potential
from gkdvlab.solver import SimConfig, initialize_soliton, run
from gkdvlab.soliton import Grid1D, ModelConstants, integral_q, solve_c_infinity

mc = ModelConstants(3, 0.1)
pot = make_default_potential(2.0)
eps = 0.1
te = t_epsilon(mc.lam, eps)

config = SimConfig(constants=mc, potential=pot, epsilon=eps,
                   grid=Grid1D(-88.0, 40.0, 4096), dt=2e-3,
                   t_start=-te, t_end=0.0, snapshot_dt=te / 2,
                   boundary_tol=1e-2)
print(f"running the first half of the interaction (eps = {eps})...")
result = run(config, initialize_soliton(config))

u = result.final_state.u
fit = fit_modulation(u, config.grid, mc, pot, eps, phase="interaction")
print(f"fitted scaling c2 = {fit.c2:.6f}, center rho2 = {fit.rho2:.3f} "
      f"({fit.iterations} Newton steps)")
print(f"orthogonality residuals: {fit.resid_q:.2e}, {fit.resid_yq:.2e}")

profiles = CorrectionProfiles.build(mc)
rep = shelf_compare(u, config.grid, fit, mc, pot, profiles, eps)
print()
print(f"trailing window y in [{rep['window'][0]:.1f}, {rep['window'][1]:.1f}]:")
print(f"  measured residual norm {rep['measured_norm']:.3e}, "
      f"predicted shelf norm {rep['ref_norm']:.3e}")
print(f"  relative L2 distance {rep['rel_error']:.3f}, "
      f"sign agreement {100 * rep['sign_agreement']:.0f}% "
      f"(sign of the mean: {rep['mean_sign']:+.0f})")

c_inf = solve_c_infinity(mc, mc.lam)
budget = l1_budget(u, config.grid, fit, mc, c_inf)
print()
print(f"integral budget: total = {budget['total']:.6f} (= int Q = "
      f"{integral_q(mc):.6f}, conserved)")
print(f"  outgoing-soliton share kappa_m = {kappa_m(mc, c_inf):.6f}")
print(f"  predicted tail share (1 - kappa_m) int Q = {budget['tail_predicted']:.6f}")
