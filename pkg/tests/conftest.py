"""Shared fixtures: correction profiles and the long simulation runs.

The PDE runs back several acceptance criteria at once, so they are built once
per session.  Setting GKDVLAB_TEST_CACHE to a directory caches them on disk
between sessions (a development convenience; results are deterministic either
way).
"""

import os
import pickle
from pathlib import Path

import pytest

from gkdvlab.soliton import ModelConstants
from gkdvlab.correction import CorrectionProfiles


def _cached(name, builder):
    cache_dir = os.environ.get("GKDVLAB_TEST_CACHE", "")
    if not cache_dir:
        return builder()
    path = Path(cache_dir) / f"{name}.pkl"
    if path.exists() and path.stat().st_size > 0:
        with open(path, "rb") as fh:
            return pickle.load(fh)
    obj = builder()
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "wb") as fh:
        pickle.dump(obj, fh)
    tmp.replace(path)
    return obj


@pytest.fixture(scope="session")
def profiles_m3():
    return CorrectionProfiles.build(ModelConstants(3))


@pytest.fixture(scope="session")
def profiles_by_m():
    return {m: CorrectionProfiles.build(ModelConstants(m)) for m in (2, 3, 4)}


# ---------------------------------------------------------------------------
# simulation fixtures for the acceptance criteria (m=3, lambda=0.1 scenarios)
# ---------------------------------------------------------------------------

SIM_M = 3
SIM_LAMBDA = 0.1
SIM_STEEPNESS = 2.0  # keeps the start/end media offsets small at desk-scale eps


def _interaction_run(epsilon, n, x_min, x_max, t_end_factor=3.0, dt=2e-3,
                     snapshot_dt=0.5):
    from gkdvlab.potential import make_default_potential
    from gkdvlab.solver import SimConfig, initialize_soliton, run
    from gkdvlab.soliton import Grid1D
    from gkdvlab.adiabatic import t_epsilon

    mc = ModelConstants(SIM_M, SIM_LAMBDA)
    pot = make_default_potential(SIM_STEEPNESS)
    te = t_epsilon(SIM_LAMBDA, epsilon)
    # wrap-around radiation from the desk-scale initial medium offset reaches the
    # edges at the 1e-3 level; the measured maximum is asserted in the acceptance
    config = SimConfig(
        constants=mc, potential=pot, epsilon=epsilon,
        grid=Grid1D(x_min, x_max, n), dt=dt,
        t_start=-te, t_end=t_end_factor * te,
        snapshot_dt=snapshot_dt, boundary_tol=2e-2,
    )
    state = initialize_soliton(config)
    return run(config, state)


@pytest.fixture(scope="session")
def run_eps05():
    """m=3, lambda=0.1, eps=0.05, n=16384, [-T_eps, 3 T_eps]."""
    return _cached("run_eps05", lambda: _interaction_run(0.05, 16384, -160.0, 224.0))


@pytest.fixture(scope="session")
def run_eps025():
    """m=3, lambda=0.1, eps=0.025, n=16384, [-T_eps, 3 T_eps]."""
    return _cached("run_eps025", lambda: _interaction_run(0.025, 16384, -288.0, 288.0))


@pytest.fixture(scope="session")
def run_eps1_half():
    """m=3, lambda=0.1, eps=0.1, stopped at t=0 (mid-interaction shelf snapshot)."""
    return _cached("run_eps1_half",
                   lambda: _interaction_run(0.1, 4096, -88.0, 40.0, t_end_factor=0.0))


@pytest.fixture(scope="session")
def run_control():
    """Constant medium a == 2 control: exact traveling wave, same duration as run_eps025."""
    def build():
        from gkdvlab.potential import make_potential
        from gkdvlab.solver import SimConfig, SimState, run
        from gkdvlab.soliton import Grid1D, eval_qc, solve_c_infinity
        from gkdvlab.adiabatic import t_epsilon

        mc = ModelConstants(SIM_M, SIM_LAMBDA)
        pot = make_potential("constant", a_plus=2.0)
        te = t_epsilon(SIM_LAMBDA, 0.025)
        c_inf = solve_c_infinity(mc, SIM_LAMBDA)
        grid = Grid1D(-60.0, 340.0, 8192)
        config = SimConfig(constants=mc, potential=pot, epsilon=0.025, grid=grid,
                           dt=2e-3, t_start=-te, t_end=3.0 * te, snapshot_dt=0.5,
                           boundary_tol=1e-6)
        u0 = 2.0 ** (-1.0 / (mc.m - 1)) * eval_qc(mc, c_inf, grid.nodes - 0.0)
        state = SimState.from_field(config, -te, u0)
        return run(config, state)

    return _cached("run_control", build)
