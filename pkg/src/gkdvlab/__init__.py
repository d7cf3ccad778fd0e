"""gkdvlab: soliton dynamics of generalized KdV equations in a slowly varying medium.

Library layout:

* :mod:`gkdvlab.soliton`    -- exact profiles, linearized operator, limit scaling
* :mod:`gkdvlab.potential`  -- the medium a(.) and its hypothesis checker
* :mod:`gkdvlab.adiabatic`  -- the reduced (c, rho) modulation dynamics
* :mod:`gkdvlab.correction` -- the dispersive-shelf correction and residual
* :mod:`gkdvlab.solver`     -- pseudospectral time-domain solver with trackers
* :mod:`gkdvlab.analysis`   -- modulation fits, budgets, and monitors
* :mod:`gkdvlab.config`     -- scenario files
* :mod:`gkdvlab.cli`        -- verify / adiabatic / correction / simulate / analyze / sweep
"""

__version__ = "0.1.0"

from .soliton import (  # noqa: F401
    Grid1D,
    ModelConstants,
    SolitonProfile,
    apply_linearized,
    eval_lambda_qc,
    eval_phi,
    eval_q,
    eval_qc,
    eval_v0,
    integral_q,
    integral_q2,
    mass_q,
    quadratic_form,
    soliton_identities,
    solve_c_infinity,
)
from .potential import PotentialSpec, eval_a_eps, make_default_potential, make_potential  # noqa: F401
from .adiabatic import (  # noqa: F401
    AdiabaticState,
    AdiabaticTrajectory,
    exit_bounds_check,
    first_integral_residual,
    integrate_adiabatic,
    t_epsilon,
)
from .correction import (  # noqa: F401
    ApproximateSolution,
    CorrectionProfiles,
    ShelfCoefficients,
    assemble_ac,
    build_f1_components,
    cutoff_asharp,
    solve_model_problem,
)
from .solver import (  # noqa: F401
    InvariantRecord,
    SimConfig,
    SimState,
    initialize_soliton,
    mass_derivative_check,
    run,
    step,
)
from .analysis import (  # noqa: F401
    ModulationFit,
    fit_modulation,
    kappa_m,
    l1_budget,
    shelf_compare,
)
from .config import ConfigError, Scenario, parse_config, parse_config_text  # noqa: F401
