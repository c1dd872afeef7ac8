"""Closed-form thresholds and scalar functions for the random CSP ensemble.

The ensemble is parameterized by (n, alpha, k, p, r): n variables over a
common domain of size d = n^alpha, t = r*n*ln(d) constraints of arity k,
each forbidding q = p*d^k value tuples.  Writing tau = 1/(1-p), the
satisfiability threshold in the density coefficient is r_cr = 1/ln(tau),
and in the tightness it is p_cr = 1 - e^(-1/r).

Two parameter regimes guarantee a sharp transition at those points:

* classic:  k*alpha > 1 and k >= tau
* relaxed:  (2k-1)*alpha > 1 and k >= tau*ln(tau)/(tau-1)

The relaxed arity condition is equivalent to tau <= tau_k, where tau_k is
the unique root above 1 of zeta(z) = z*ln(z)/(z-1) = k.  This module also
houses the small scalar functions used by the moment analyzer:

* f(s) = 1 + p/(1-p) * (s^k - d^-k)/(1 - d^-k), the pair-correlation factor
  for two assignments agreeing on a fraction s of the variables,
* g(s) = -k(k-1)(1-s)s^(k-1)/2, the first-order correction relating the
  scope-overlap probability C(S,k)/C(n,k) to s^k,
* varphi(s) = r*ln(1 + p/(1-p)*s^k) - s, whose sign on the interior of
  (0,1) decides whether the pair-correlation sum can dominate,
* u(s) = tau^s - (tau-1)*s^k - 1, the function whose positivity on (0,1)
  characterizes the relaxed arity condition,
* psi(s) = 1/(s^s * (1-s)^(1-s)), the entropy bound with
  C(n, n*s) <= psi(s)^n.

Everything here is a pure function of its arguments; nothing mutates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ParameterError

__all__ = [
    "RoundingPolicy",
    "ModelParams",
    "DerivedSizes",
    "RegimeReport",
    "round_half_up",
    "derive_sizes",
    "r_critical",
    "p_critical",
    "zeta",
    "solve_tau_k",
    "regime_check",
    "f_of_s",
    "g_of_s",
    "varphi",
    "u_of_s",
    "u_prime",
    "psi",
]


class RoundingPolicy(enum.Enum):
    """How real-valued sizes are turned into the integers a generator needs."""

    HALF_UP = "half-up"
    FLOOR = "floor"
    CEIL = "ceil"


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves away from zero toward +inf.

    Python's built-in round() ties to even, which would make q = 30.25
    and q = 30.5 round differently from the usual convention; all derived
    sizes in this package use this fixed rule instead.
    """
    return math.floor(x + 0.5)


def _apply_rounding(x: float, policy: RoundingPolicy) -> int:
    if policy is RoundingPolicy.HALF_UP:
        return round_half_up(x)
    if policy is RoundingPolicy.FLOOR:
        return math.floor(x)
    return math.ceil(x)


@dataclass(frozen=True)
class ModelParams:
    """The five ensemble parameters.

    n: number of variables (n >= k so a scope can be filled).
    alpha: domain growth exponent, domain size d = n^alpha.
    k: constraint arity, k >= 2.
    p: tightness, the fraction of forbidden tuples per constraint, 0 < p < 1.
    r: density coefficient, t = r*n*ln(d) constraints.
    """

    n: int
    alpha: float
    k: int
    p: float
    r: float

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise ParameterError(f"n must be an integer, got {self.n!r}")
        if not isinstance(self.k, int) or isinstance(self.k, bool):
            raise ParameterError(f"k must be an integer, got {self.k!r}")
        if self.k < 2:
            raise ParameterError(f"arity k must be at least 2, got {self.k}")
        if self.n < self.k:
            raise ParameterError(
                f"n must be at least k (a scope needs {self.k} distinct "
                f"variables), got n={self.n}"
            )
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 < self.p < 1.0:
            raise ParameterError(f"p must lie strictly in (0, 1), got {self.p}")
        if not self.r > 0:
            raise ParameterError(f"r must be positive, got {self.r}")


@dataclass(frozen=True)
class DerivedSizes:
    """Integer sizes realized from ModelParams under a rounding policy.

    d: domain size, q: forbidden tuples per constraint, t: number of
    constraints.  m = n*ln(d) is kept exact as a real, tau = 1/(1-p) uses
    the nominal p.  The effective tightness and density implied by the
    rounded integers are exposed as properties; moment formulas evaluated
    in "sampled" mode use those so that formula and generator agree
    exactly.
    """

    d: int
    q: int
    t: int
    m: float
    tau: float
    k: int

    @property
    def p_eff(self) -> float:
        """Realized tightness q / d^k."""
        return self.q / self.d**self.k

    @property
    def r_eff(self) -> float:
        """Realized density coefficient t / m."""
        return self.t / self.m


def derive_sizes(
    params: ModelParams, rounding: RoundingPolicy = RoundingPolicy.HALF_UP
) -> DerivedSizes:
    """Realize the integer sizes (d, q, t) from the real-valued parameters.

    Raises ParameterError when the realized sizes leave the range where
    the model (and the second-moment formulas, which need q <= d^k - 2)
    is defined.
    """
    n, alpha, k, p, r = params.n, params.alpha, params.k, params.p, params.r
    d = _apply_rounding(n**alpha, rounding)
    if d < 2:
        raise ParameterError(
            f"domain size d = round({n}^{alpha}) = {d} is degenerate; need d >= 2"
        )
    tuple_count = d**k
    q = _apply_rounding(p * tuple_count, rounding)
    if q < 1:
        raise ParameterError(
            f"q = round({p} * {tuple_count}) = {q} < 1; constraints would be empty"
        )
    if q > tuple_count - 2:
        raise ParameterError(
            f"q = {q} exceeds d^k - 2 = {tuple_count - 2}; the second-moment "
            f"ratio C(d^k-2, q)/C(d^k, q) is undefined there"
        )
    m = n * math.log(d)
    t = _apply_rounding(r * m, rounding)
    if t < 1:
        raise ParameterError(f"t = round({r} * {m:.6g}) = {t} < 1")
    return DerivedSizes(d=d, q=q, t=t, m=m, tau=1.0 / (1.0 - p), k=k)


def r_critical(p: float) -> float:
    """Threshold density coefficient 1/ln(tau) with tau = 1/(1-p).

    ln(tau) is computed as -log1p(-p), which keeps the identity
    r_critical(p) * ln(1-p) = -1 exact in floating point.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p must lie strictly in (0, 1), got {p}")
    return 1.0 / (-math.log1p(-p))


def p_critical(r: float) -> float:
    """Threshold tightness 1 - e^(-1/r)."""
    if not r > 0:
        raise ParameterError(f"r must be positive, got {r}")
    return -math.expm1(-1.0 / r)


def zeta(z: float) -> float:
    """z*ln(z)/(z-1) for z > 1, strictly increasing, with limit 1 at 1+.

    Computed as z*log1p(z-1)/(z-1), which stays accurate arbitrarily
    close to z = 1 where the naive form loses all precision to
    cancellation in both ln(z) and z - 1.
    """
    if not z > 1.0:
        raise ParameterError(f"zeta is defined for z > 1, got {z}")
    e = z - 1.0
    return z * math.log1p(e) / e


def _zeta_prime(z: float) -> float:
    # derivative ((z-1) - ln z) / (z-1)^2, positive for z > 1
    e = z - 1.0
    return (e - math.log(z)) / (e * e)


def solve_tau_k(k: int) -> float:
    """Unique root tau_k > k of zeta(z) = k.

    Bisection on the bracket (k, e^(k+1)), where zeta(k) < k (since
    ln(k) < k-1) and zeta(e^(k+1)) > k+1 > k, run down to a bracket of
    width 1e-13, then one Newton step to polish.  zeta is monotone, so
    bisection cannot go wrong; the Newton step just sharpens the last
    few bits.
    """
    if not isinstance(k, int) or isinstance(k, bool) or k < 2:
        raise ParameterError(f"k must be an integer >= 2, got {k!r}")
    lo = float(k)
    hi = math.exp(k + 1.0)
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if zeta(mid) < k:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    root -= (zeta(root) - k) / _zeta_prime(root)
    return root


@dataclass(frozen=True)
class RegimeReport:
    """Which sharp-transition conditions a parameter set satisfies.

    Each flag comes with a signed margin, positive when the condition
    holds with room to spare.  Domain conditions are strict inequalities;
    arity conditions are non-strict (the boundary still qualifies).
    """

    relaxed_domain_ok: bool
    relaxed_arity_ok: bool
    classic_domain_ok: bool
    classic_arity_ok: bool
    subcritical: bool
    relaxed_domain_margin: float
    relaxed_arity_margin: float
    classic_domain_margin: float
    classic_arity_margin: float
    subcritical_margin: float


def regime_check(params: ModelParams) -> RegimeReport:
    """Evaluate both regime condition sets and the density's side of r_cr."""
    k, alpha, p, r = params.k, params.alpha, params.p, params.r
    tau = 1.0 / (1.0 - p)
    relaxed_domain_margin = (2 * k - 1) * alpha - 1.0
    # k >= tau*ln(tau)/(tau-1) rewritten through zeta(tau) to reuse the
    # stable form near tau = 1
    relaxed_arity_margin = k - zeta(tau)
    classic_domain_margin = k * alpha - 1.0
    classic_arity_margin = k - tau
    subcritical_margin = r_critical(p) - r
    return RegimeReport(
        relaxed_domain_ok=relaxed_domain_margin > 0,
        relaxed_arity_ok=relaxed_arity_margin >= 0,
        classic_domain_ok=classic_domain_margin > 0,
        classic_arity_ok=classic_arity_margin >= 0,
        subcritical=subcritical_margin > 0,
        relaxed_domain_margin=relaxed_domain_margin,
        relaxed_arity_margin=relaxed_arity_margin,
        classic_domain_margin=classic_domain_margin,
        classic_arity_margin=classic_arity_margin,
        subcritical_margin=subcritical_margin,
    )


def f_of_s(s: float, p: float, d: float, k: int) -> float:
    """Pair-correlation factor f(s) = 1 + p/(1-p) * (s^k - d^-k)/(1 - d^-k).

    d may be real (analysis on the idealized ensemble) or integer (sizes
    realized by the generator).  f is nondecreasing in s with f(1/d) = 1
    and f(1) = 1/(1-p) exactly.
    """
    if not 0.0 <= s <= 1.0:
        raise ParameterError(f"s must lie in [0, 1], got {s}")
    dk = float(d) ** (-k)
    return 1.0 + p / (1.0 - p) * (s**k - dk) / (1.0 - dk)


def g_of_s(s: float, k: int) -> float:
    """Overlap correction g(s) = -k(k-1)(1-s)s^(k-1)/2, zero at both ends."""
    if not 0.0 <= s <= 1.0:
        raise ParameterError(f"s must lie in [0, 1], got {s}")
    return -k * (k - 1) * (1.0 - s) * s ** (k - 1) / 2.0


def varphi(s: float, p: float, r: float, k: int) -> float:
    """Interior exponent varphi(s) = r*ln(1 + p/(1-p)*s^k) - s.

    Negative throughout (0, 1) when the arity condition k >= zeta(tau)
    holds and r < r_critical(p); a positive value at any s certifies that
    the pair-correlation term at overlap fraction s outgrows the first
    moment squared.
    """
    if not 0.0 <= s <= 1.0:
        raise ParameterError(f"s must lie in [0, 1], got {s}")
    return r * math.log1p(p / (1.0 - p) * s**k) - s


def u_of_s(s: float, tau: float, k: int) -> float:
    """u(s) = tau^s - (tau-1)*s^k - 1, with u(0) = u(1) = 0.

    Positivity of u on (0, 1) is equivalent to u'(1) <= 0, which is the
    arity condition k >= tau*ln(tau)/(tau-1).
    """
    if s < 0:
        raise ParameterError(f"s must be nonnegative, got {s}")
    return tau**s - (tau - 1.0) * s**k - 1.0


def u_prime(s: float, tau: float, k: int) -> float:
    """Derivative u'(s) = tau^s * ln(tau) - k*(tau-1)*s^(k-1)."""
    if s < 0:
        raise ParameterError(f"s must be nonnegative, got {s}")
    return tau**s * math.log(tau) - k * (tau - 1.0) * s ** (k - 1)


def psi(s: float) -> float:
    """Entropy bound psi(s) = 1/(s^s * (1-s)^(1-s)) with psi(0) = psi(1) = 1.

    Satisfies C(n, n*s) <= psi(s)^n for all n, peaking at psi(1/2) = 2.
    The endpoints take the continuity value (0^0 read as 1).
    """
    if not 0.0 <= s <= 1.0:
        raise ParameterError(f"s must lie in [0, 1], got {s}")
    if s == 0.0 or s == 1.0:
        return 1.0
    return math.exp(-(s * math.log(s) + (1.0 - s) * math.log1p(-s)))
