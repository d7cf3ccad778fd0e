"""Traveling-wave profiles of the generalized KdV equation and their linearized operator.

The family Q_c(x) = c^{1/(m-1)} Q(sqrt(c) x), with Q'' - Q + Q^m = 0, is known in
closed form for every integer power m:

    Q(x) = [ (m+1) / (2 cosh^2((m-1)x/2)) ]^{1/(m-1)}.

Everything in this module is derived from that closed form: derivatives, the
scaling generator Lambda Q_c, the dispersion function phi = -Q'/Q, the auxiliary
even profile V0 with L0 V0 = m Q^{m-1}, quadrature identities, the quadratic
form of the linearized operator, and the limit-scaling root solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma


@dataclass(frozen=True)
class ModelConstants:
    """Nonlinearity power m and damping-transport coefficient lambda.

    Derived constants: lambda0 = (5-m)/(m+3) is the critical damping at which
    the soliton energy vanishes, p = 4/(m+3) drives the scaling ODE, and
    theta = 1/(m-1) - 1/4 is the mass-scaling exponent.
    """

    m: int
    lam: float = 0.0

    def __post_init__(self):
        if self.m not in (2, 3, 4):
            raise ValueError(f"m must be 2, 3 or 4, got {self.m}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")

    @property
    def lambda0(self) -> float:
        return (5.0 - self.m) / (self.m + 3.0)

    @property
    def p(self) -> float:
        return 4.0 / (self.m + 3.0)

    @property
    def theta(self) -> float:
        return 1.0 / (self.m - 1.0) - 0.25


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic-convention grid: nodes x_min + j*h, j = 0..n-1, h = (x_max-x_min)/n."""

    x_min: float
    x_max: float
    n: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 8:
            raise ValueError(f"n must be >= 8, got {self.n}")
        if self.x_max <= self.x_min:
            raise ValueError("x_max must exceed x_min")
        h = (self.x_max - self.x_min) / self.n
        nodes = self.x_min + h * np.arange(self.n)
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers matching numpy.fft.rfft of a real field on this grid."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.h)

    def is_power_of_two(self) -> bool:
        return self.n & (self.n - 1) == 0


def symmetric_grid(constants: ModelConstants, c: float = 1.0, n: int = 4096,
                   min_half_width: float = 40.0) -> Grid1D:
    """Grid wide enough that Q_c truncation sits below 1e-14 (half-width >= 40/sqrt(c))."""
    half = max(min_half_width / np.sqrt(c), min_half_width / 2.0)
    return Grid1D(-half, half, n)


# ---------------------------------------------------------------------------
# closed-form profile evaluations
# ---------------------------------------------------------------------------

def eval_q(constants: ModelConstants, x):
    """Ground soliton Q(x); even, positive, decaying like e^{-|x|}."""
    m = constants.m
    k = 0.5 * (m - 1)
    # |argument| capped at 350: beyond that the profile underflows to 0 anyway
    s = np.clip(k * np.asarray(x, dtype=float), -350.0, 350.0)
    return ((m + 1) / (2.0 * np.cosh(s) ** 2)) ** (1.0 / (m - 1))


def eval_dq(constants: ModelConstants, x):
    """Q'(x) = -tanh((m-1)x/2) Q(x); odd."""
    k = 0.5 * (constants.m - 1)
    x = np.asarray(x, dtype=float)
    return -np.tanh(k * x) * eval_q(constants, x)


def eval_d2q(constants: ModelConstants, x):
    """Q''(x) from the closed form (equals Q - Q^m by the profile equation)."""
    m = constants.m
    k = 0.5 * (m - 1)
    x = np.asarray(x, dtype=float)
    t = np.tanh(k * x)
    s2 = 1.0 - t * t
    return (t * t - k * s2) * eval_q(constants, x)


def _check_c(c: float):
    if not c > 0:
        raise ValueError(f"scaling c must be positive, got {c}")


def eval_qc(constants: ModelConstants, c: float, x):
    """Scaled soliton Q_c(x) = c^{1/(m-1)} Q(sqrt(c) x)."""
    _check_c(c)
    return c ** (1.0 / (constants.m - 1)) * eval_q(constants, np.sqrt(c) * np.asarray(x, dtype=float))


def eval_dqc(constants: ModelConstants, c: float, x):
    _check_c(c)
    return c ** (1.0 / (constants.m - 1) + 0.5) * eval_dq(constants, np.sqrt(c) * np.asarray(x, dtype=float))


def eval_d2qc(constants: ModelConstants, c: float, x):
    _check_c(c)
    return c ** (1.0 / (constants.m - 1) + 1.0) * eval_d2q(constants, np.sqrt(c) * np.asarray(x, dtype=float))


def eval_lambda_qc(constants: ModelConstants, c: float, x):
    """Scaling generator Lambda Q_c = d/dc Q_c = (1/c)[Q_c/(m-1) + x Q_c'/2]."""
    _check_c(c)
    x = np.asarray(x, dtype=float)
    return (eval_qc(constants, c, x) / (constants.m - 1) + 0.5 * x * eval_dqc(constants, c, x)) / c


def eval_phi(constants: ModelConstants, c: float, x):
    """Dispersion function phi_c = -Q_c'/Q_c = sqrt(c) tanh((m-1) sqrt(c) x / 2); odd, limits +-sqrt(c)."""
    _check_c(c)
    k = 0.5 * (constants.m - 1)
    rc = np.sqrt(c)
    return rc * np.tanh(k * rc * np.asarray(x, dtype=float))


def eval_dphi(constants: ModelConstants, c: float, x):
    k = 0.5 * (constants.m - 1)
    rc = np.sqrt(c)
    s = np.clip(k * rc * np.asarray(x, dtype=float), -350.0, 350.0)
    return c * k / np.cosh(s) ** 2


def apply_l0_phi(constants: ModelConstants, x):
    """Closed form of L0 phi = phi [1 - (3m-1)/2 sech^2((m-1)x/2)]; odd, limits +-1."""
    m = constants.m
    k = 0.5 * (m - 1)
    x = np.asarray(x, dtype=float)
    t = np.tanh(k * x)
    return t * (1.0 - 0.5 * (3 * m - 1) * (1.0 - t * t))


def eval_v0(constants: ModelConstants, x, *, _aux_n: int = 16384):
    """Even profile V0 with L0 V0 = m Q^{m-1}.

    Closed forms: -2 Lambda Q for m = 2 (the multiple follows from
    L0(Lambda Q) = -Q) and -Q^2 for m = 3.  For m = 4 the inner integral of Q^2
    has no elementary antiderivative and is evaluated by trapezoid with an
    Euler-Maclaurin endpoint correction on an auxiliary grid.
    """
    m = constants.m
    x = np.asarray(x, dtype=float)
    if m == 2:
        return -2.0 * eval_lambda_qc(constants, 1.0, x)
    if m == 3:
        return -eval_q(constants, x) ** 2
    q = eval_q(constants, x)
    dq = eval_dq(constants, x)
    return (dq * _integral_q2_from_zero(constants, x, n=_aux_n) - 2.0 * q ** 3) / 3.0


def _cum_q2(constants: ModelConstants, xs: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid of Q^2 along uniform nodes with Euler-Maclaurin correction.

    The h^2/12 endpoint correction keeps the cumulative integral O(h^4), which
    matters because V0 is later differentiated spectrally.
    """
    f = eval_q(constants, xs) ** 2
    h = xs[1] - xs[0]
    cum = np.concatenate(([0.0], np.cumsum(0.5 * h * (f[1:] + f[:-1]))))
    fp = 2.0 * eval_q(constants, xs) * eval_dq(constants, xs)
    cum -= (h * h / 12.0) * (fp - fp[0])
    return cum


def _integral_q2_from_zero(constants: ModelConstants, x, n: int = 16384):
    """int_0^x Q^2, evaluated without interpolation kinks.

    Uniform ascending input arrays get the cumulative integral computed on their
    own nodes; anything else is served by a cubic spline on an auxiliary grid.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1 and x.size >= 8:
        d = np.diff(x)
        if d[0] > 0 and np.allclose(d, d[0], rtol=1e-12, atol=0.0) and x[0] < 0.0 < x[-1]:
            cum = _cum_q2(constants, x)
            from scipy.interpolate import CubicSpline
            return cum - CubicSpline(x, cum)(0.0)
    half = 45.0
    xs = np.linspace(-half, half, n + 1)
    cum = _cum_q2(constants, xs)
    cum -= cum[n // 2]
    from scipy.interpolate import CubicSpline
    xq = np.clip(x, -half, half)
    return CubicSpline(xs, cum)(xq)


# ---------------------------------------------------------------------------
# closed-form integrals of Q
# ---------------------------------------------------------------------------

def integral_q(constants: ModelConstants) -> float:
    """int Q dx via the Beta-function value of int sech^alpha."""
    m = constants.m
    a_amp = ((m + 1) / 2.0) ** (1.0 / (m - 1))
    alpha = 2.0 / (m - 1)
    k = 0.5 * (m - 1)
    return a_amp / k * np.sqrt(np.pi) * _gamma(alpha / 2) / _gamma((alpha + 1) / 2)


def integral_q2(constants: ModelConstants) -> float:
    """int Q^2 dx."""
    m = constants.m
    a_amp = ((m + 1) / 2.0) ** (1.0 / (m - 1))
    alpha = 2.0 / (m - 1)
    k = 0.5 * (m - 1)
    return a_amp ** 2 / k * np.sqrt(np.pi) * _gamma(alpha) / _gamma(alpha + 0.5)


def mass_q(constants: ModelConstants) -> float:
    """M[Q] = (1/2) int Q^2 (the half convention is used throughout)."""
    return 0.5 * integral_q2(constants)


def energy1_q(constants: ModelConstants) -> float:
    """E_1[Q] = (lambda - lambda0) M[Q] (Pohozaev identities for the profile equation)."""
    return (constants.lam - constants.lambda0) * mass_q(constants)


def energy1_qc_exact(constants: ModelConstants, c: float) -> float:
    """E_1[Q_c] = (1/2) c^{2 theta} (lambda - lambda0 c) int Q^2, exact for every lambda.

    At lambda = 0 this reduces to c^{2 theta + 1} E_1[Q]; the lambda mass term
    scales with c^{2 theta} rather than c^{2 theta + 1}, so the two expressions
    differ once lambda > 0 and c != 1.
    """
    _check_c(c)
    th = constants.theta
    return 0.5 * c ** (2 * th) * (constants.lam - constants.lambda0 * c) * integral_q2(constants)


# ---------------------------------------------------------------------------
# sampled profiles and the linearized operator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolitonProfile:
    """Q_c and companions sampled on a grid, plus the scaling parameter."""

    constants: ModelConstants
    c: float
    grid: Grid1D
    q: np.ndarray
    dq: np.ndarray
    d2q: np.ndarray
    lam_q: np.ndarray
    phi: np.ndarray
    v0: np.ndarray

    @classmethod
    def build(cls, constants: ModelConstants, c: float = 1.0,
              grid: Grid1D | None = None) -> "SolitonProfile":
        _check_c(c)
        if grid is None:
            grid = symmetric_grid(constants, c)
        x = grid.nodes
        return cls(
            constants=constants,
            c=c,
            grid=grid,
            q=eval_qc(constants, c, x),
            dq=eval_dqc(constants, c, x),
            d2q=eval_d2qc(constants, c, x),
            lam_q=eval_lambda_qc(constants, c, x),
            phi=eval_phi(constants, c, x),
            v0=eval_v0(constants, x),
        )

    def ode_residual(self) -> float:
        """max |D^2 Q_c - c Q_c + Q_c^m| with a spectral second derivative (grid-adequacy check)."""
        d2 = spectral_derivative(self.q, self.grid, order=2)
        return float(np.max(np.abs(d2 - self.c * self.q + self.q ** self.constants.m)))

    def export_csv(self, path):
        """Full-precision CSV of x, Q_c, Q_c', Lambda Q_c, phi_c, V0."""
        header = "x,Qc,dQc,LambdaQc,phic,V0"
        data = np.column_stack([self.grid.nodes, self.q, self.dq, self.lam_q, self.phi, self.v0])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def spectral_derivative(w: np.ndarray, grid: Grid1D, order: int = 1) -> np.ndarray:
    """Fourier derivative on the grid treated as periodic."""
    k = grid.wavenumbers()
    what = np.fft.rfft(w)
    return np.fft.irfft((1j * k) ** order * what, n=grid.n)


def apply_linearized(profile: SolitonProfile, w: np.ndarray) -> np.ndarray:
    """L w = -w'' + c w - m Q_c^{m-1} w with a spectral second derivative.

    The kernel is spanned by Q_c' and L(Lambda Q_c) = -Q_c.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != profile.grid.nodes.shape:
        raise ValueError(f"field shape {w.shape} does not match grid ({profile.grid.n},)")
    d2 = spectral_derivative(w, profile.grid, order=2)
    m = profile.constants.m
    return -d2 + profile.c * w - m * profile.q ** (m - 1) * w


def quadratic_form(profile: SolitonProfile, w: np.ndarray) -> float:
    """B[w, w] = int (w_x^2 + c w^2 - m Q_c^{m-1} w^2) by trapezoid quadrature."""
    w = np.asarray(w, dtype=float)
    if w.shape != profile.grid.nodes.shape:
        raise ValueError(f"field shape {w.shape} does not match grid ({profile.grid.n},)")
    wx = spectral_derivative(w, profile.grid, order=1)
    m = profile.constants.m
    integrand = wx ** 2 + profile.c * w ** 2 - m * profile.q ** (m - 1) * w ** 2
    return float(profile.grid.h * np.sum(integrand))


def trapezoid(values: np.ndarray, grid: Grid1D) -> float:
    """Periodic-convention trapezoid: h * sum(values); spectrally accurate for decaying fields."""
    return float(grid.h * np.sum(values))


# ---------------------------------------------------------------------------
# limit scaling c_infinity
# ---------------------------------------------------------------------------

def scaling_equation(c, lam: float, constants: ModelConstants):
    """g(c; lambda) = c^{lambda0} (c - lambda/lambda0)^{1-lambda0} - 2^p (1 - lambda/lambda0)^{1-lambda0}."""
    lam0 = constants.lambda0
    p = constants.p
    c = np.asarray(c, dtype=float)
    return c ** lam0 * (c - lam / lam0) ** (1.0 - lam0) - 2.0 ** p * (1.0 - lam / lam0) ** (1.0 - lam0)


def solve_c_infinity(constants: ModelConstants, lam: float) -> float:
    """Unique root c >= 1 of the limit-scaling equation; decreasing in lambda.

    Bracketed bisection on [1, 2^{4/(5-m)}] down to 1e-13, then two Newton
    polish steps using dg/dc = c^{lambda0-1} (c - lambda/lambda0)^{-lambda0} (c - lambda).
    """
    lam0 = constants.lambda0
    if lam < 0 or lam > lam0 + 1e-15:
        raise ValueError(f"lambda must lie in [0, lambda0={lam0}], got {lam}")
    if abs(lam - lam0) <= 1e-15:
        return 1.0
    lo, hi = 1.0, 2.0 ** (4.0 / (5 - constants.m))
    glo = scaling_equation(lo, lam, constants)
    if glo >= 0.0:
        return lo
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if scaling_equation(mid, lam, constants) <= 0.0:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    for _ in range(2):
        g = scaling_equation(c, lam, constants)
        dg = c ** (lam0 - 1.0) * (c - lam / lam0) ** (-lam0) * (c - lam)
        c -= g / dg
    return float(c)


# ---------------------------------------------------------------------------
# quadrature identities for the scaled soliton
# ---------------------------------------------------------------------------

def soliton_identities(constants: ModelConstants, c: float, n: int = 4096) -> dict:
    """Quadrature values of the soliton integrals next to their closed-form predictions.

    Keys <name>_quad carry the trapezoid values on a c-adapted grid, <name>_pred
    the scaling predictions expressed through int Q and int Q^2 at c = 1.  The
    energy prediction uses the lambda-exact form (1/2) c^{2 theta}
    (lambda - lambda0 c) int Q^2.
    """
    _check_c(c)
    grid = symmetric_grid(constants, c, n=n)
    x = grid.nodes
    m = constants.m
    th = constants.theta
    q = eval_qc(constants, c, x)
    dq = eval_dqc(constants, c, x)
    lq = eval_lambda_qc(constants, c, x)
    iq = integral_q(constants)
    iq2 = integral_q2(constants)
    e1_quad = trapezoid(0.5 * dq ** 2 + 0.5 * constants.lam * q ** 2
                        - q ** (m + 1) / (m + 1), grid)
    return {
        "int_qc_quad": trapezoid(q, grid),
        "int_qc_pred": c ** (th - 0.25) * iq,
        "int_qc2_quad": trapezoid(q ** 2, grid),
        "int_qc2_pred": c ** (2 * th) * iq2,
        "int_qcm1_quad": trapezoid(q ** (m + 1), grid),
        "int_qcm1_pred": 2.0 * (m + 1) / (m + 3) * c ** (2 * th + 1) * iq2,
        "int_lamqc_qc_quad": trapezoid(lq * q, grid),
        "int_lamqc_qc_pred": th * c ** (2 * th - 1) * iq2,
        "energy1_quad": e1_quad,
        "energy1_pred": energy1_qc_exact(constants, c),
    }


def identity_relative_errors(identities: dict) -> dict:
    """Relative error per identity, keyed by the bare name."""
    out = {}
    for key in identities:
        if key.endswith("_quad"):
            name = key[:-5]
            pred = identities[name + "_pred"]
            scale = max(abs(pred), 1e-30)
            out[name] = abs(identities[key] - pred) / scale
    return out
