"""The slowly varying medium a(.): closed-form sigmoid families and hypothesis checks.

A valid medium rises strictly from a_minus to a_plus, stays inside that band,
and approaches its limits exponentially fast.  The rescaled coefficient in the
equation is a_eps(x) = a(eps x); all x-derivatives follow by the chain rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np
from scipy.special import erf


@dataclass(frozen=True)
class PotentialSpec:
    """Medium a(.) with exact derivative evaluators up to third order."""

    family: str
    steepness: float
    a_minus: float
    a_plus: float
    a: Callable
    da: Callable
    d2a: Callable
    d3a: Callable

    def __call__(self, r):
        return self.a(r)

    def power_derivatives(self, s: float, r):
        """(a^s, (a^s)', (a^s)'', (a^s)''') at r, by Faa di Bruno from the exact a-derivatives.

        Used for a^{1/(m-1)} (the soliton shape factor) and a^{1/m} (the modified mass weight).
        """
        a = np.asarray(self.a(r), dtype=float)
        a1 = np.asarray(self.da(r), dtype=float)
        a2 = np.asarray(self.d2a(r), dtype=float)
        a3 = np.asarray(self.d3a(r), dtype=float)
        g = a ** s
        g1 = s * a ** (s - 1) * a1
        g2 = s * ((s - 1) * a ** (s - 2) * a1 ** 2 + a ** (s - 1) * a2)
        g3 = s * ((s - 1) * (s - 2) * a ** (s - 3) * a1 ** 3
                  + 3 * (s - 1) * a ** (s - 2) * a1 * a2
                  + a ** (s - 1) * a3)
        return g, g1, g2, g3


def make_default_potential(steepness: float = 1.0, a_minus: float = 1.0,
                           a_plus: float = 2.0) -> PotentialSpec:
    """Tanh sigmoid a(r) = mid + half tanh(gamma r); point-symmetric about its midpoint."""
    return make_potential("tanh", steepness, a_minus, a_plus)


# evaluators live at module level (bound through functools.partial) so that
# PotentialSpec instances pickle cleanly across worker processes

def _tanh_a(r, g, mid, half):
    return mid + half * np.tanh(g * np.asarray(r, dtype=float))


def _tanh_da(r, g, half):
    return half * g / np.cosh(g * np.asarray(r, dtype=float)) ** 2


def _tanh_d2a(r, g, half):
    r = g * np.asarray(r, dtype=float)
    return -2 * half * g ** 2 * np.tanh(r) / np.cosh(r) ** 2


def _tanh_d3a(r, g, half):
    r = g * np.asarray(r, dtype=float)
    return 2 * half * g ** 3 * (2 * np.tanh(r) ** 2 - 1.0 / np.cosh(r) ** 2) \
        / np.cosh(r) ** 2


_ERF_PREF = 2.0 / math.sqrt(math.pi)


def _erf_a(r, g, mid, half):
    return mid + half * erf(g * np.asarray(r, dtype=float))


def _erf_da(r, g, half):
    return half * _ERF_PREF * g * np.exp(-(g * np.asarray(r, dtype=float)) ** 2)


def _erf_d2a(r, g, half):
    r = np.asarray(r, dtype=float)
    return half * _ERF_PREF * g ** 3 * (-2 * r) * np.exp(-(g * r) ** 2)


def _erf_d3a(r, g, half):
    r = np.asarray(r, dtype=float)
    return half * _ERF_PREF * g ** 3 * (4 * g ** 2 * r ** 2 - 2) * np.exp(-(g * r) ** 2)


def _rational_a(r, g, mid, half):
    r = g * np.asarray(r, dtype=float)
    return mid + half * r / np.sqrt(1.0 + r * r)


def _rational_da(r, g, half):
    r = g * np.asarray(r, dtype=float)
    return half * g * (1.0 + r * r) ** -1.5


def _rational_d2a(r, g, half):
    r = g * np.asarray(r, dtype=float)
    return -3.0 * half * g ** 2 * r * (1.0 + r * r) ** -2.5


def _rational_d3a(r, g, half):
    r = g * np.asarray(r, dtype=float)
    return 3.0 * half * g ** 3 * (4.0 * r * r - 1.0) * (1.0 + r * r) ** -3.5


def _const_a(r, level):
    return np.full_like(np.asarray(r, dtype=float), level)


def _const_zero(r):
    return np.zeros_like(np.asarray(r, dtype=float))


def make_potential(family: str, steepness: float = 1.0, a_minus: float = 1.0,
                   a_plus: float = 2.0) -> PotentialSpec:
    """Closed-form sigmoid families: tanh, erf, rational, plus a constant control medium.

    The rational sigmoid approaches its limits only algebraically, so it fails
    the exponential-decay hypothesis; it exists as a checker counterexample.
    The constant family (a == a_plus) violates strict monotonicity and serves
    as the control medium for floor measurements.
    """
    if steepness <= 0:
        raise ValueError(f"steepness must be positive, got {steepness}")
    if family != "constant" and not a_minus < a_plus:
        raise ValueError("a_minus must be below a_plus")
    g = steepness
    mid = 0.5 * (a_minus + a_plus)
    half = 0.5 * (a_plus - a_minus)

    if family == "tanh":
        a = partial(_tanh_a, g=g, mid=mid, half=half)
        da = partial(_tanh_da, g=g, half=half)
        d2a = partial(_tanh_d2a, g=g, half=half)
        d3a = partial(_tanh_d3a, g=g, half=half)
    elif family == "erf":
        a = partial(_erf_a, g=g, mid=mid, half=half)
        da = partial(_erf_da, g=g, half=half)
        d2a = partial(_erf_d2a, g=g, half=half)
        d3a = partial(_erf_d3a, g=g, half=half)
    elif family == "rational":
        a = partial(_rational_a, g=g, mid=mid, half=half)
        da = partial(_rational_da, g=g, half=half)
        d2a = partial(_rational_d2a, g=g, half=half)
        d3a = partial(_rational_d3a, g=g, half=half)
    elif family == "constant":
        a = partial(_const_a, level=a_plus)
        da = d2a = d3a = _const_zero
    else:
        raise ValueError(f"unknown potential family '{family}'")

    return PotentialSpec(family=family, steepness=g, a_minus=a_minus, a_plus=a_plus,
                         a=a, da=da, d2a=d2a, d3a=d3a)


def eval_a_eps(spec: PotentialSpec, epsilon: float, x, order: int = 0):
    """a(eps x) and its x-derivatives: d^j/dx^j a_eps = eps^j a^{(j)}(eps x)."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    r = epsilon * np.asarray(x, dtype=float)
    if order == 0:
        return spec.a(r)
    if order == 1:
        return epsilon * spec.da(r)
    if order == 2:
        return epsilon ** 2 * spec.d2a(r)
    if order == 3:
        return epsilon ** 3 * spec.d3a(r)
    raise ValueError(f"derivative order must be 0..3, got {order}")


def verify_hypotheses(spec: PotentialSpec, m: int, *, r_max: float = 100.0,
                      n_samples: int = 20001) -> dict:
    """Sampled audit of the medium hypotheses; empirical constants, never proofs.

    Checks, on r in [-r_max, r_max]:
      * strict bounds a_minus < a < a_plus and a' > 0 everywhere sampled;
      * exponential approach to the limits (tail log-slopes must not collapse
        toward zero under widening, which catches algebraic sigmoids);
      * the third-derivative domination |(a^{1/m})'''| <= K (a^{1/m})', with the
        empirical K required to be stable under sampling refinement (compactly
        supported a' makes K blow up near the support edge).
    """
    r = np.linspace(-r_max, r_max, n_samples)
    a = np.asarray(spec.a(r), dtype=float)
    da = np.asarray(spec.da(r), dtype=float)

    # strict inequalities are only checkable where the gap to the limits is
    # representable in double precision; outside that window require containment
    core = np.abs(spec.steepness * r) <= 3.0
    tiny = 64.0 * np.finfo(float).eps * max(abs(spec.a_minus), abs(spec.a_plus))
    bounds_ok = bool(
        np.all(a >= spec.a_minus - tiny) and np.all(a <= spec.a_plus + tiny)
        and np.all(a[core] > spec.a_minus) and np.all(a[core] < spec.a_plus)
    )
    monotone_ok = bool(np.all(da[core] > 0.0) and np.all(da >= 0.0))

    # tail decay rates: gamma_fit = -d/dr log(gap); exponential tails keep them
    # bounded away from zero as r grows, algebraic tails send them to zero
    def tail_rate(r1, r2, left: bool):
        if left:
            g1 = float(spec.a(r1) - spec.a_minus)
            g2 = float(spec.a(r2) - spec.a_minus)
        else:
            g1 = float(spec.a_plus - spec.a(r1))
            g2 = float(spec.a_plus - spec.a(r2))
        if g1 <= 0 or g2 <= 0:
            return math.inf  # already below round-off: decay is certainly fast enough
        return (math.log(g1) - math.log(g2)) / abs(r2 - r1)

    probe = min(r_max, 40.0 / spec.steepness)
    decay_ok = True
    gammas = []
    for sign, left in ((-1.0, True), (1.0, False)):
        near = tail_rate(sign * probe / 4, sign * probe / 2, left)
        far = tail_rate(sign * probe / 2, sign * probe, left)
        gammas.append(far)
        if math.isinf(near) or math.isinf(far):
            continue  # gap below round-off: decay certainly exponential-or-faster
        # algebraic tails decay like r^{-k}: the fitted rate halves when the
        # probe window doubles, while exponential tails keep it flat
        if far <= 0 or far < 0.7 * near:
            decay_ok = False
    gamma_emp = min(gammas)

    def sup_ratio(n):
        rr = np.linspace(-r_max, r_max, n)
        _, g1, _, g3 = spec.power_derivatives(1.0 / m, rr)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.abs(g3) / g1
        ratio = ratio[np.isfinite(ratio)]
        return float(np.max(ratio)) if ratio.size else math.inf

    k1 = sup_ratio(n_samples)
    k2 = sup_ratio(2 * n_samples - 1)
    ratio_ok = math.isfinite(k2) and k2 <= 1.2 * max(k1, 1e-300)

    return {
        "bounds_ok": bounds_ok,
        "monotone_ok": monotone_ok,
        "decay_ok": decay_ok,
        "gamma_empirical": gamma_emp,
        "third_derivative_ratio_ok": ratio_ok,
        "K_empirical": k2,
        "passed": bounds_ok and monotone_ok and decay_ok and ratio_ok,
    }
