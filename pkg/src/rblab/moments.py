"""Log-space moment formulas and the overlap-partition diagnostics.

Everything here evaluates in natural-log space; raw moments like
E[X] = d^n (1-p)^(r*m) overflow float range at trivially small n, so no
function ever forms them directly.

Two evaluation modes:

* sampled: integer sizes (d, q, t) exactly as the generator realizes
  them, with p_eff = q/d^k and r_eff = t/m.  Every identity checked by
  Monte Carlo uses this mode, and the first/second moment formulas are
  then exact expectations over the generator's distribution (the inner
  probabilities are exact binomial-coefficient ratios).
* theory: real-valued d = n^alpha, t = r*m, q = p*d^k.  This matches
  the asymptotic statements and keeps quantities like the eta1 window
  free of integer-rounding jitter, which matters for trend checks.

The second moment decomposes over the number S of variables on which a
pair of assignments agrees.  The analysis splits S/n at eta1 < eta2 <
eta3 and bounds each regime of Phi(S) = B(S) * W(S) separately, where
B is the Binomial(n, 1/d) weight and W(S) = f(S/n)^(r*m) is the pair
correlation factor.  The helpers below evaluate those pieces, the
continuous extension's log-derivative (via digamma), the classic
harmonic/digamma sandwiches they rest on, and the two failure probes
for the regime where the plain second-moment route breaks down.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ConfigError, ParameterError
from .thresholds import (
    ModelParams,
    RoundingPolicy,
    derive_sizes,
    f_of_s,
    varphi,
)

__all__ = [
    "EvalMode",
    "EffectiveParams",
    "PartitionConfig",
    "MomentReport",
    "WindowReport",
    "ThetaProbe",
    "VarphiMax",
    "effective_params",
    "log_first_moment",
    "log_second_moment",
    "log_ratio_upper_bound",
    "w_at_eta1",
    "phi_c_log_derivative",
    "digamma",
    "harmonic_gamma_bounds",
    "binomial_slope_bounds",
    "varphi_max",
    "window_lower_bound",
    "theta_probe",
    "partition_config",
    "default_partition_config",
]

EULER_GAMMA = 0.5772156649015329


class EvalMode(enum.Enum):
    SAMPLED = "sampled"
    THEORY = "theory"


@dataclass(frozen=True)
class EffectiveParams:
    """Parameters resolved to one evaluation mode.

    In sampled mode d, q, t hold the generator's integers (as floats);
    in theory mode d = n^alpha and t = r*m are real.  m = n*ln(d) in
    both, using the mode's own d.
    """

    mode: EvalMode
    n: int
    k: int
    d: float
    p_eff: float
    r_eff: float
    t: float
    m: float


def effective_params(
    params: ModelParams,
    mode: EvalMode = EvalMode.SAMPLED,
    rounding: RoundingPolicy = RoundingPolicy.HALF_UP,
) -> EffectiveParams:
    if mode is EvalMode.SAMPLED:
        sizes = derive_sizes(params, rounding)
        return EffectiveParams(
            mode=mode,
            n=params.n,
            k=params.k,
            d=float(sizes.d),
            p_eff=sizes.p_eff,
            r_eff=sizes.r_eff,
            t=float(sizes.t),
            m=sizes.m,
        )
    d = float(params.n) ** params.alpha
    if d <= 1.0:
        raise ParameterError(f"theory mode needs d = n^alpha > 1, got {d}")
    if params.p >= 1.0 - d ** (-params.k):
        raise ParameterError(
            "p must stay below 1 - d^-k so constraints keep at least one "
            "allowed tuple in expectation"
        )
    m = params.n * math.log(d)
    return EffectiveParams(
        mode=mode,
        n=params.n,
        k=params.k,
        d=d,
        p_eff=params.p,
        r_eff=params.r,
        t=params.r * m,
        m=m,
    )


# ---------------------------------------------------------------------------
# first and second moment


def log_first_moment(
    params: ModelParams, mode: EvalMode = EvalMode.SAMPLED
) -> float:
    """ln E[X] = n*ln(d) + t*ln(1 - p_eff).

    X is the number of solutions.  Sampled mode makes this the exact
    expectation over generated instances; theory mode with r exactly
    r_critical(p) returns 0 (E[X] = 1 on the threshold).
    """
    e = effective_params(params, mode)
    return e.m + e.t * math.log1p(-e.p_eff)


@dataclass(frozen=True)
class MomentReport:
    """Results of the moment evaluations; unfilled parts are None.

    term_table rows are (S, log_B, log_W, log_Phi) for S = 0..n, the
    overlap decomposition of the second-moment ratio bound.
    partition_sums holds the four interval log-sums of Phi split at
    floor(n*eta1) < floor(n*eta2) < floor(n*eta3).  low_interval_cap is
    the predicted scale k*lambda*p*r/(1-p) of the first interval, and
    varphi_max the maximum of varphi on [eta2, eta3].
    """

    mode: EvalMode
    log_EX: float
    log_EX2: float | None = None
    log_ratio: float | None = None
    term_table: tuple[tuple[int, float, float, float], ...] | None = None
    partition_sums: tuple[float, float, float, float] | None = None
    low_interval_cap: float | None = None
    varphi_max: float | None = None


def _inner_ratios(e: EffectiveParams) -> tuple[float, float]:
    """The two pair-satisfaction probabilities from the second moment.

    For a pair of assignments and one random constraint, the chance both
    survive is ratio1 = 1-p when the pair projects identically onto the
    scope, else ratio2 = C(d^k-2, q)/C(d^k, q), written in the
    cancellation-free form (1-p) * (d^k*(1-p) - 1)/(d^k - 1).  Both are
    exact for p = q/d^k.
    """
    p = e.p_eff
    dk = e.d**e.k
    ratio1 = 1.0 - p
    ratio2 = (1.0 - p) * (dk * (1.0 - p) - 1.0) / (dk - 1.0)
    return ratio1, ratio2


def _overlap_probability(n: int, k: int, S: np.ndarray) -> np.ndarray:
    """a_S = C(S,k)/C(n,k) as an exact falling-factorial product."""
    a = np.ones(len(S))
    for i in range(k):
        a *= (S - i) / (n - i)
    a[S < k] = 0.0
    return a


def log_second_moment(
    params: ModelParams, mode: EvalMode = EvalMode.SAMPLED
) -> MomentReport:
    """ln E[X^2] via the exact n+1-term overlap sum, plus the Phi table.

    E[X^2] = d^n * sum_S C(n,S) (d-1)^(n-S) * [a_S*ratio1 +
    (1-a_S)*ratio2]^t, where a_S is the chance a random scope lands
    inside an agreement set of size S.  The mixture is accumulated as
    ratio2 + a_S*(ratio1 - ratio2), both parts positive, so the log
    never sees cancellation.  The report also carries log_EX, the
    log-ratio ln(E[X^2]/E[X]^2), and the term table of the asymptotic
    bound decomposition Phi = B*W.
    """
    e = effective_params(params, mode)
    n, k, d, t = e.n, e.k, e.d, e.t
    ratio1, ratio2 = _inner_ratios(e)
    if ratio2 <= 0.0:
        raise ParameterError(
            "second moment needs q <= d^k - 2 (equivalently p < 1 - d^-k)"
        )
    S = np.arange(n + 1)
    ln_choose = gammaln(n + 1.0) - gammaln(S + 1.0) - gammaln(n - S + 1.0)
    a = _overlap_probability(n, k, S)
    inner = ratio2 + a * (ratio1 - ratio2)
    log_terms = e.m + ln_choose + (n - S) * math.log(d - 1.0) + t * np.log(inner)
    log_ex2 = float(logsumexp(log_terms))
    log_ex = log_first_moment(params, mode)
    table = _phi_table(e)
    return MomentReport(
        mode=mode,
        log_EX=log_ex,
        log_EX2=log_ex2,
        log_ratio=log_ex2 - 2.0 * log_ex,
        term_table=table,
    )


def _phi_arrays(e: EffectiveParams):
    n, k, d, t = e.n, e.k, e.d, e.t
    p = e.p_eff
    S = np.arange(n + 1)
    ln_choose = gammaln(n + 1.0) - gammaln(S + 1.0) - gammaln(n - S + 1.0)
    log_b = ln_choose - S * math.log(d) + (n - S) * math.log1p(-1.0 / d)
    s = S / n
    dk = d ** (-k)
    log_f = np.log1p(p / (1.0 - p) * (s**k - dk) / (1.0 - dk))
    log_w = t * log_f
    return S, log_b, log_w, log_b + log_w


def _phi_table(e: EffectiveParams) -> tuple[tuple[int, float, float, float], ...]:
    S, log_b, log_w, log_phi = _phi_arrays(e)
    return tuple(
        (int(S[i]), float(log_b[i]), float(log_w[i]), float(log_phi[i]))
        for i in range(len(S))
    )


def _interval_logsum(log_phi: np.ndarray, lo: int, hi: int) -> float:
    """Log-sum of terms with lo <= S <= hi; empty intervals give -inf."""
    lo = max(lo, 0)
    hi = min(hi, len(log_phi) - 1)
    if hi < lo:
        return float("-inf")
    return float(logsumexp(log_phi[lo : hi + 1]))


def log_ratio_upper_bound(
    params: ModelParams,
    cfg: PartitionConfig | None = None,
    mode: EvalMode = EvalMode.THEORY,
) -> MomentReport:
    """Evaluate the overlap-sum bound on E[X^2]/E[X]^2 interval by interval.

    Splits sum_S Phi(S) at floor(n*eta1), floor(n*eta2), floor(n*eta3)
    and log-sums each piece.  The full report also carries the exact
    moments, the first interval's predicted scale k*lambda*p*r/(1-p),
    and the maximum of varphi over [eta2, eta3] (the quantity whose
    negativity drives the middle intervals to vanish).
    """
    e = effective_params(params, mode)
    if cfg is None:
        cfg = default_partition_config(params, mode=mode)
    S, log_b, log_w, log_phi = _phi_arrays(e)
    n = e.n
    b1 = math.floor(n * cfg.eta1)
    b2 = math.floor(n * cfg.eta2)
    b3 = math.floor(n * cfg.eta3)
    sums = (
        _interval_logsum(log_phi, 0, b1),
        _interval_logsum(log_phi, b1 + 1, b2),
        _interval_logsum(log_phi, b2 + 1, b3),
        _interval_logsum(log_phi, b3 + 1, n),
    )
    vmax = varphi_max(params, cfg)
    log_ex = log_first_moment(params, mode)
    report2 = log_second_moment(params, mode)
    cap = e.k * cfg.lam * e.p_eff * e.r_eff / (1.0 - e.p_eff)
    return MomentReport(
        mode=mode,
        log_EX=log_ex,
        log_EX2=report2.log_EX2,
        log_ratio=report2.log_ratio,
        term_table=tuple(
            (int(S[i]), float(log_b[i]), float(log_w[i]), float(log_phi[i]))
            for i in range(len(S))
        ),
        partition_sums=sums,
        low_interval_cap=cap,
        varphi_max=vmax.value,
    )


# ---------------------------------------------------------------------------
# eta1 window and the continuous extension


def _eta1(e: EffectiveParams, lam: float, alpha: float) -> float:
    k, n = e.k, e.n
    return 1.0 / e.d + lam / (n ** (1.0 - (k - 1) * alpha) * math.log(e.d))


def w_at_eta1(
    params: ModelParams, lam: float = 1.0, mode: EvalMode = EvalMode.THEORY
) -> tuple[float, float]:
    """(ln W(n*eta1), predicted limit k*lambda*p*r/(1-p)).

    eta1 = 1/d + lam/(n^(1-(k-1)alpha) * ln d) sits just above the
    binomial mean; the correlation factor there tends to the predicted
    constant as n grows.  lam = 0 collapses eta1 to 1/d where W = 1.
    """
    if lam < 0:
        raise ParameterError(f"lam must be nonnegative, got {lam}")
    e = effective_params(params, mode)
    eta1 = _eta1(e, lam, params.alpha)
    if not eta1 < 1.0:
        raise ParameterError(f"eta1 = {eta1:.6g} >= 1; parameters out of range")
    log_w = e.t * math.log(f_of_s(eta1, e.p_eff, e.d, e.k))
    predicted = e.k * lam * e.p_eff * e.r_eff / (1.0 - e.p_eff)
    return log_w, predicted


def digamma(x: float) -> float:
    """Logarithmic derivative of the Gamma function for x > 0.

    Recurrence below 10, then the asymptotic series with five
    even-order terms; absolute error stays under ~1e-13 on the range
    this package touches.
    """
    if not x > 0:
        raise ParameterError(f"digamma evaluated only for x > 0, got {x}")
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    y = 1.0 / (x * x)
    series = y * (
        1.0 / 12.0
        - y * (1.0 / 120.0 - y * (1.0 / 252.0 - y * (1.0 / 240.0 - y / 132.0)))
    )
    return acc + math.log(x) - 0.5 / x - series


def phi_c_log_derivative(
    z: float, params: ModelParams, mode: EvalMode = EvalMode.THEORY
) -> float:
    """Log-derivative of the continuous extension of Phi at real z.

    Replacing the binomial in B by its Gamma-function form makes
    ln Phi differentiable; the derivative is A(z) - ln(d-1) +
    k*p*r*s^(k-1)*ln(d) / ((1-p)(1-d^-k)*f(s)) with s = z/n and
    A(z) = digamma(n-z+1) - digamma(z+1).  Negative values on
    (n*eta1, n*eta2) certify that no mass hides between the window and
    eta2.
    """
    e = effective_params(params, mode)
    n = e.n
    if not 0.0 < z < n:
        raise ParameterError(f"z must lie strictly inside (0, {n}), got {z}")
    s = z / n
    a_term = digamma(n - z + 1.0) - digamma(z + 1.0)
    p, d, k = e.p_eff, e.d, e.k
    dk = d ** (-k)
    grow = (
        k * p * e.r_eff * s ** (k - 1) * math.log(d)
        / ((1.0 - p) * (1.0 - dk) * f_of_s(s, p, d, k))
    )
    return a_term - math.log(d - 1.0) + grow


def harmonic_gamma_bounds(omega: int) -> tuple[float, float, float]:
    """Strict sandwich for gamma - H_omega.

    Returns (lower, value, upper) with lower = -ln(omega) - 1/(2*omega)
    and upper = -ln(omega) - 1/(2*(omega+1)); the harmonic number is
    accumulated with exact compensated summation so the comparison is
    meaningful down to ~1e-14.
    """
    if not isinstance(omega, int) or isinstance(omega, bool) or omega < 1:
        raise ParameterError(f"omega must be an integer >= 1, got {omega!r}")
    h = math.fsum(1.0 / i for i in range(1, omega + 1))
    value = EULER_GAMMA - h
    lower = -math.log(omega) - 0.5 / omega
    upper = -math.log(omega) - 0.5 / (omega + 1.0)
    return lower, value, upper


def binomial_slope_bounds(omega: int, n: int) -> tuple[float, float, float]:
    """Strict sandwich for A(omega) = digamma(n-omega+1) - digamma(omega+1).

    A is the discrete slope of the log-binomial; with
    R(w) = (1/(n-w+1) - 1/w)/2 it satisfies
    ln(n/omega - 1) + R(omega) < A(omega) < ln(n/omega - 1) + R(omega+1)
    for 1 <= omega <= n-1.  Returns (lower, A, upper).
    """
    if not isinstance(omega, int) or isinstance(omega, bool):
        raise ParameterError(f"omega must be an integer, got {omega!r}")
    if not 1 <= omega <= n - 1:
        raise ParameterError(f"omega must lie in [1, {n - 1}], got {omega}")
    base = math.log(n / omega - 1.0)
    r_lo = 0.5 * (1.0 / (n - omega + 1.0) - 1.0 / omega)
    r_hi = 0.5 * (1.0 / (n - omega) - 1.0 / (omega + 1.0))
    value = digamma(n - omega + 1.0) - digamma(omega + 1.0)
    return base + r_lo, value, base + r_hi


# ---------------------------------------------------------------------------
# interior maximum and the two failure probes


@dataclass(frozen=True)
class VarphiMax:
    """Maximum of varphi over [eta2, eta3]; negative certifies decay."""

    value: float
    arg: float
    negative: bool


def varphi_max(params: ModelParams, cfg: PartitionConfig | None = None) -> VarphiMax:
    """Maximize varphi(s) = r*ln(1 + p/(1-p)*s^k) - s over [eta2, eta3].

    Dense grid at step 1e-5 followed by golden-section refinement of
    the best cell.  varphi is the n-free exponent of Phi(S)^(1/m) in
    the middle intervals, so a negative maximum makes those intervals
    vanish exponentially in m.
    """
    if cfg is None:
        cfg = default_partition_config(params)
    return _varphi_max_on(params, cfg.eta2, cfg.eta3)


def _varphi_max_on(params: ModelParams, lo: float, hi: float) -> VarphiMax:
    if not 0.0 <= lo < hi <= 1.0:
        raise ParameterError(f"need 0 <= lo < hi <= 1, got [{lo}, {hi}]")
    p, r, k = params.p, params.r, params.k
    c = p / (1.0 - p)
    grid = np.linspace(lo, hi, max(int((hi - lo) / 1e-5) + 2, 16))
    vals = r * np.log1p(c * grid**k) - grid
    i = int(np.argmax(vals))
    a = float(grid[max(i - 1, 0)])
    b = float(grid[min(i + 1, len(grid) - 1)])
    # golden-section refinement inside the winning cell
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1 = varphi(x1, p, r, k)
    f2 = varphi(x2, p, r, k)
    for _ in range(80):
        if f1 < f2:
            a = x1
            x1, f1 = x2, f2
            x2 = a + invphi * (b - a)
            f2 = varphi(x2, p, r, k)
        else:
            b = x2
            x2, f2 = x1, f1
            x1 = b - invphi * (b - a)
            f1 = varphi(x1, p, r, k)
    arg = 0.5 * (a + b)
    best = max(varphi(arg, p, r, k), float(vals[i]))
    if float(vals[i]) >= best:
        arg = float(grid[i])
    return VarphiMax(value=best, arg=arg, negative=best < 0.0)


@dataclass(frozen=True)
class WindowReport:
    """The just-above-the-mean window of the overlap sum.

    The window is S in [ceil(n*eta1), floor(n^(1-rho))].  window_mass
    is the plain binomial mass sum_B(S) there (tends to 1/2);
    log_window_sum is the log of sum B(S)*W(S); log_certified is the
    floor ln(window_mass) + ln W(left edge), valid because W is
    nondecreasing; predicted_exponent = k*lambda*p*r/(1-p) is where
    ln W(left edge) is headed as n grows.
    """

    lam: float
    rho: float
    s_lo: int
    s_hi: int
    window_mass: float
    log_window_sum: float
    log_w_left: float
    log_certified: float
    predicted_exponent: float


def window_lower_bound(
    params: ModelParams,
    lam: float = 1.0,
    rho: float | None = None,
    mode: EvalMode = EvalMode.THEORY,
) -> WindowReport:
    """Lower-bound machinery for the regime (2k-1)*alpha <= 1.

    There the partition argument has no room between eta1 and n^(-rho)
    scales, and instead of vanishing, the window just above the
    binomial mean keeps about half the mass while W on it grows like
    exp(k*lambda*p*r/(1-p)), unboundedly in lambda.  This function
    evaluates that mechanism at finite n.
    """
    if (2 * params.k - 1) * params.alpha > 1.0:
        raise ParameterError(
            "window bound applies to the regime (2k-1)*alpha <= 1; "
            f"got (2k-1)*alpha = {(2 * params.k - 1) * params.alpha:.6g}"
        )
    if rho is None:
        rho = params.alpha / 2.0
    if not 0.0 < rho < params.alpha:
        raise ParameterError(f"rho must lie in (0, alpha), got {rho}")
    if lam <= 0:
        raise ParameterError(f"lam must be positive, got {lam}")
    e = effective_params(params, mode)
    n = e.n
    eta1 = _eta1(e, lam, params.alpha)
    s_lo = math.ceil(n * eta1)
    s_hi = math.floor(n ** (1.0 - rho))
    if s_hi < s_lo:
        raise ParameterError(
            f"window [{s_lo}, {s_hi}] is empty; n too small for this (lam, rho)"
        )
    S = np.arange(s_lo, s_hi + 1)
    ln_choose = gammaln(n + 1.0) - gammaln(S + 1.0) - gammaln(n - S + 1.0)
    log_b = ln_choose - S * math.log(e.d) + (n - S) * math.log1p(-1.0 / e.d)
    dk = e.d ** (-e.k)
    s = S / n
    log_w = e.t * np.log1p(e.p_eff / (1.0 - e.p_eff) * (s**e.k - dk) / (1.0 - dk))
    log_mass = float(logsumexp(log_b))
    log_w_left = e.t * math.log(f_of_s(s_lo / n, e.p_eff, e.d, e.k))
    predicted = e.k * lam * e.p_eff * e.r_eff / (1.0 - e.p_eff)
    return WindowReport(
        lam=lam,
        rho=rho,
        s_lo=s_lo,
        s_hi=s_hi,
        window_mass=math.exp(log_mass),
        log_window_sum=float(logsumexp(log_b + log_w)),
        log_w_left=log_w_left,
        log_certified=log_mass + log_w_left,
        predicted_exponent=predicted,
    )


@dataclass(frozen=True)
class ThetaProbe:
    """One overlap fraction probed for second-moment failure.

    exponent = varphi(theta)*m is the log-scale of the single term
    B(n*theta)*W(n*theta) against E[X]^2; a positive varphi(theta)
    certifies that the ratio blows up at this overlap.
    """

    theta: float
    log_term: float
    exponent: float
    varphi_at_theta: float


def theta_probe(
    params: ModelParams, theta: float, mode: EvalMode = EvalMode.THEORY
) -> ThetaProbe:
    """Evaluate ln(B(n*theta) * f(theta)^(r*m)) and its m-scaled exponent."""
    if not 0.0 < theta < 1.0:
        raise ParameterError(f"theta must lie strictly in (0, 1), got {theta}")
    e = effective_params(params, mode)
    n = e.n
    z = theta * n
    ln_choose = gammaln(n + 1.0) - gammaln(z + 1.0) - gammaln(n - z + 1.0)
    log_b = ln_choose - z * math.log(e.d) + (n - z) * math.log1p(-1.0 / e.d)
    log_term = log_b + e.t * math.log(f_of_s(theta, e.p_eff, e.d, e.k))
    phi_val = varphi(theta, e.p_eff, e.r_eff, e.k)
    return ThetaProbe(
        theta=theta,
        log_term=float(log_term),
        exponent=phi_val * e.m,
        varphi_at_theta=phi_val,
    )


# ---------------------------------------------------------------------------
# partition configuration


@dataclass(frozen=True)
class PartitionConfig:
    """Analyst constants for the overlap partition, plus derived scales.

    Instances should come from partition_config()/default_partition_config(),
    which validate the coupled constraints; the dataclass itself is
    plain frozen data.
    """

    lam: float
    mu: float
    eta2: float
    eta3: float
    rho: float
    theta: float
    alpha0: float
    alpha1: float
    eta_m: float
    eta1: float


def partition_config(
    params: ModelParams,
    lam: float = 1.0,
    mu: float | None = None,
    eta2: float | None = None,
    eta3: float | None = None,
    rho: float | None = None,
    theta: float | None = None,
    mode: EvalMode = EvalMode.THEORY,
) -> PartitionConfig:
    """Fill defaults for unspecified constants and validate the full set.

    Raises ConfigError naming the violated constraint.  The defaults
    implement one concrete choice of the constants the analysis only
    asserts to exist: mu barely above its floor, eta2 from the slack in
    the mu condition, eta3 halfway between r*ln(tau) and 1.
    """
    n, alpha, k, p, r = params.n, params.alpha, params.k, params.p, params.r
    e = effective_params(params, mode)
    alpha0 = ((2 * k - 1) * alpha - 1.0) / (2.0 * (k - 1))
    alpha1 = (1.0 - alpha) / (2.0 * (k - 1))
    if lam <= 0:
        raise ConfigError(f"lam must be positive, got {lam}")
    if alpha0 <= 0:
        raise ConfigError(
            f"(2k-1)*alpha = {(2 * k - 1) * alpha:.6g} <= 1: the partition "
            "constants require the relaxed domain condition (2k-1)*alpha > 1"
        )
    floor_mu = k * p * r / (1.0 - p)
    if mu is None:
        mu = 1.05 * floor_mu
    if not mu > floor_mu:
        raise ConfigError(
            f"mu = {mu:.6g} must exceed k*p*r/(1-p) = {floor_mu:.6g}"
        )
    if eta2 is None:
        eta2 = min(0.5, (alpha0 / (2.0 * alpha * mu)) ** (1.0 / (k - 1)))
    if eta3 is None:
        eta3 = max((r * -math.log1p(-p) + 1.0) / 2.0, 1.5 * eta2)
        eta3 = min(eta3, 1.0 - 1e-9)
    if theta is None:
        grid = np.linspace(1e-3, 1.0 - 1e-3, 999)
        vals = r * np.log1p(p / (1.0 - p) * grid**k) - grid
        theta = float(grid[int(np.argmax(vals))])
    if rho is None:
        rho = alpha / 2.0
    slack = alpha0 / alpha - mu * eta2 ** (k - 1)
    if not slack > 0:
        raise ConfigError(
            f"alpha0/alpha - mu*eta2^(k-1) = {slack:.6g} must be positive"
        )
    tail = r * math.log1p(-p) + eta3
    if not tail > 0:
        raise ConfigError(
            f"r*ln(1-p) + eta3 = {tail:.6g} must be positive (needs r below "
            "r_critical or a larger eta3)"
        )
    if not 0.0 < eta2 < eta3 < 1.0:
        raise ConfigError(f"need 0 < eta2 < eta3 < 1, got eta2={eta2}, eta3={eta3}")
    if not 0.0 < rho < alpha:
        raise ConfigError(f"rho must lie in (0, alpha), got {rho}")
    if not 0.0 < theta < 1.0:
        raise ConfigError(f"theta must lie in (0, 1), got {theta}")
    eta1 = _eta1(e, lam, alpha)
    if not eta1 < eta2:
        raise ConfigError(
            f"eta1 = {eta1:.6g} must stay below eta2 = {eta2:.6g}; "
            "n is too small for this lam"
        )
    return PartitionConfig(
        lam=lam,
        mu=mu,
        eta2=eta2,
        eta3=eta3,
        rho=rho,
        theta=theta,
        alpha0=alpha0,
        alpha1=alpha1,
        eta_m=float(n) ** (-alpha1),
        eta1=eta1,
    )


def default_partition_config(
    params: ModelParams, mode: EvalMode = EvalMode.THEORY
) -> PartitionConfig:
    """partition_config with every constant left to its default."""
    return partition_config(params, mode=mode)
