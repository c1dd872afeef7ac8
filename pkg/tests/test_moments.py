import math
import random
from fractions import Fraction

import numpy as np
import pytest
import scipy.special

from rblab.errors import ConfigError, ParameterError
from rblab.moments import (
    EvalMode,
    binomial_slope_bounds,
    default_partition_config,
    digamma,
    effective_params,
    harmonic_gamma_bounds,
    log_first_moment,
    log_ratio_upper_bound,
    log_second_moment,
    partition_config,
    phi_c_log_derivative,
    theta_probe,
    varphi_max,
    w_at_eta1,
    window_lower_bound,
)
from rblab.thresholds import ModelParams, derive_sizes, r_critical, varphi

REF_PARAMS = ModelParams(n=9, alpha=0.5, k=2, p=2.0 / 9.0, r=10.0 / (9.0 * math.log(3.0)))
RCR = r_critical(0.25)
BIG_PARAMS = ModelParams(n=10_000, alpha=0.6, k=2, p=0.25, r=0.9 * RCR)


def _exact_moments(n, d, k, q, t):
    """First and second moment as exact rationals, from first principles.

    E[X] sums over single assignments; E[X^2] over pairs grouped by
    agreement count S, where a random scope lands inside the agreement
    set with probability C(S,k)/C(n,k) and the pair survival chance is
    C(d^k-2, q)/C(d^k, q) on split scopes.
    """
    dk = d**k
    p = Fraction(q, dk)
    ratio1 = 1 - p
    ratio2 = Fraction(math.comb(dk - 2, q), math.comb(dk, q))
    ex = Fraction(d) ** n * ratio1**t
    ex2 = Fraction(0)
    for S in range(n + 1):
        a = Fraction(math.comb(S, k), math.comb(n, k))
        inner = ratio2 + a * (ratio1 - ratio2)
        ex2 += math.comb(n, S) * Fraction(d - 1) ** (n - S) * inner**t
    ex2 *= Fraction(d) ** n
    return ex, ex2


def test_sampled_moments_match_exact_rationals():
    sizes = derive_sizes(REF_PARAMS)
    ex, ex2 = _exact_moments(REF_PARAMS.n, sizes.d, sizes.k, sizes.q, sizes.t)
    assert log_first_moment(REF_PARAMS) == pytest.approx(math.log(ex), rel=1e-14)
    rep = log_second_moment(REF_PARAMS)
    assert rep.log_EX2 == pytest.approx(math.log(ex2), rel=1e-14)
    assert rep.log_ratio == pytest.approx(
        math.log(ex2) - 2 * math.log(ex), abs=1e-12
    )
    # frozen values, so a regression cannot hide behind the oracle
    assert rep.log_EX == pytest.approx(7.374366315203927, rel=1e-15)
    assert rep.log_EX2 == pytest.approx(14.815353765639939, rel=1e-15)
    assert rep.log_ratio == pytest.approx(0.06662113523208468, abs=1e-13)


def test_pair_survival_identity():
    # the cancellation-free product form used in the implementation is
    # exactly the hypergeometric ratio C(d^k-2, q)/C(d^k, q)
    for d, k, q in [(3, 2, 2), (3, 2, 7), (2, 2, 2), (4, 3, 30), (5, 2, 11)]:
        dk = d**k
        p = Fraction(q, dk)
        closed = (1 - p) * (dk * (1 - p) - 1) / (dk - 1)
        assert closed == Fraction(math.comb(dk - 2, q), math.comb(dk, q))


def test_second_moment_exceeds_first_squared():
    rng = random.Random(1234)
    produced = 0
    while produced < 100:
        n = rng.randint(6, 50)
        alpha = rng.uniform(0.25, 0.9)
        k = rng.choice((2, 3))
        p = rng.uniform(0.15, 0.6)
        r = rng.uniform(0.2, 1.4) * r_critical(p)
        params = ModelParams(n=n, alpha=alpha, k=k, p=p, r=r)
        try:
            derive_sizes(params)
        except ParameterError:
            continue
        rep = log_second_moment(params)
        assert rep.log_ratio >= 0.0
        mass = math.fsum(math.exp(row[1]) for row in rep.term_table)
        assert abs(mass - 1.0) < 1e-10
        produced += 1


def test_theory_mode_first_moment_vanishes_at_threshold():
    # r_critical keeps r * ln(1-p) = -1 to the last bit, so m + t*log1p(-p)
    # cancels exactly for these p; other p values land within one rounding
    # of the product, covered by the loop below
    for p in (0.25, 0.5, 0.9, 2.0 / 9.0):
        params = ModelParams(n=500, alpha=0.6, k=2, p=p, r=r_critical(p))
        assert log_first_moment(params, EvalMode.THEORY) == 0.0
    rng = random.Random(55)
    for _ in range(300):
        p = rng.uniform(0.01, 0.95)
        params = ModelParams(n=200, alpha=0.7, k=2, p=p, r=r_critical(p))
        assert abs(log_first_moment(params, EvalMode.THEORY)) < 1e-12


def test_theory_mode_first_moment_sign_tracks_density():
    below = ModelParams(n=500, alpha=0.6, k=2, p=0.25, r=0.99 * RCR)
    above = ModelParams(n=500, alpha=0.6, k=2, p=0.25, r=1.01 * RCR)
    assert log_first_moment(below, EvalMode.THEORY) > 0.0
    assert log_first_moment(above, EvalMode.THEORY) < 0.0


def test_sampled_and_theory_modes_differ_by_rounding():
    # sampled mode uses the realized integers, theory mode the real
    # values; both agree when the rounding is exact
    sampled = log_first_moment(REF_PARAMS, EvalMode.SAMPLED)
    theory = log_first_moment(REF_PARAMS, EvalMode.THEORY)
    assert sampled == pytest.approx(theory, rel=1e-12)
    params = ModelParams(n=20, alpha=0.8, k=2, p=0.25, r=1.0)
    assert log_first_moment(params, EvalMode.SAMPLED) != pytest.approx(
        log_first_moment(params, EvalMode.THEORY), rel=1e-6
    )


def test_theory_mode_rejects_saturated_tightness():
    # d^k = 2 at these sizes, so p = 0.9 leaves no allowed tuple in
    # expectation
    params = ModelParams(n=4, alpha=0.25, k=2, p=0.9, r=0.5)
    with pytest.raises(ParameterError):
        effective_params(params, EvalMode.THEORY)


def test_phi_table_structure():
    rep = log_second_moment(REF_PARAMS)
    table = rep.term_table
    assert [row[0] for row in table] == list(range(REF_PARAMS.n + 1))
    for S, log_b, log_w, log_phi in table:
        assert log_phi == pytest.approx(log_b + log_w, abs=1e-12)
    # W is 1 at S/n = 1/d and tau^t at S = n
    sizes = derive_sizes(REF_PARAMS)
    expect_top = sizes.t * math.log(sizes.tau)
    assert table[-1][2] == pytest.approx(expect_top, rel=1e-12)
    # B concentrates near n/d: the mode of the binomial column
    mode_S = max(table, key=lambda row: row[1])[0]
    assert abs(mode_S - REF_PARAMS.n / sizes.d) <= 1.0


def test_partition_sums_frozen_and_consistent():
    rep = log_ratio_upper_bound(ModelParams(n=200, alpha=0.6, k=2, p=0.25, r=0.9 * RCR))
    assert rep.partition_sums == pytest.approx(
        (
            0.4572723474109548,
            -0.6703376741321947,
            -6.247244786613406,
            -44.66766557612337,
        ),
        rel=1e-12,
    )
    # the four intervals tile [0, n]: their log-sums recombine to the
    # log-sum of the whole table
    total = scipy.special.logsumexp([row[3] for row in rep.term_table])
    recombined = scipy.special.logsumexp(list(rep.partition_sums))
    assert recombined == pytest.approx(float(total), abs=1e-12)
    # middle intervals collapse once n grows
    rep2 = log_ratio_upper_bound(
        ModelParams(n=2000, alpha=0.6, k=2, p=0.25, r=0.9 * RCR)
    )
    assert rep2.partition_sums[1] < -5.0
    assert rep2.partition_sums[2] < -5.0
    assert rep2.partition_sums[3] < -5.0


def test_low_interval_cap_matches_window_prediction():
    rep = log_ratio_upper_bound(BIG_PARAMS)
    log_w, predicted = w_at_eta1(BIG_PARAMS)
    assert rep.low_interval_cap == pytest.approx(predicted, rel=1e-12)
    assert log_w == pytest.approx(3.276299477429658, rel=1e-12)
    assert predicted == pytest.approx(2.0856356980693245, rel=1e-12)
    # lam = 0 collapses eta1 to 1/d where W = 1
    log_w0, predicted0 = w_at_eta1(BIG_PARAMS, lam=0.0)
    assert abs(log_w0) < 1e-9
    assert predicted0 == 0.0
    with pytest.raises(ParameterError):
        w_at_eta1(BIG_PARAMS, lam=-0.5)


def test_digamma_against_scipy():
    xs = [1e-3, 0.1, 0.5, 1.0, 1.5, 2.0, 5.0, 9.99, 10.0, 123.4, 1e4, 1e6]
    for x in xs:
        assert digamma(x) == pytest.approx(
            float(scipy.special.digamma(x)), rel=1e-12, abs=1e-12
        )
    with pytest.raises(ParameterError):
        digamma(0.0)
    with pytest.raises(ParameterError):
        digamma(-1.0)


def test_digamma_recurrence_and_special_values():
    gamma = 0.5772156649015329
    assert digamma(1.0) == pytest.approx(-gamma, rel=1e-13)
    assert digamma(2.0) == pytest.approx(1.0 - gamma, rel=1e-13)
    assert digamma(0.5) == pytest.approx(-gamma - 2.0 * math.log(2.0), rel=1e-13)
    rng = random.Random(3)
    for _ in range(100):
        x = rng.uniform(1e-2, 50.0)
        assert digamma(x + 1.0) - digamma(x) == pytest.approx(1.0 / x, rel=1e-10)


def test_phi_c_log_derivative_midpoint_frozen():
    cfg = default_partition_config(BIG_PARAMS)
    mid = 0.5 * (cfg.eta1 + cfg.eta2) * BIG_PARAMS.n
    assert phi_c_log_derivative(mid, BIG_PARAMS) == pytest.approx(
        -2.1611058715438936, rel=1e-12
    )
    with pytest.raises(ParameterError):
        phi_c_log_derivative(0.0, BIG_PARAMS)
    with pytest.raises(ParameterError):
        phi_c_log_derivative(float(BIG_PARAMS.n), BIG_PARAMS)


def test_phi_c_derivative_matches_finite_difference():
    # the closed-form derivative should match a central difference of
    # ln Phi_c built from gammaln directly
    e = effective_params(BIG_PARAMS, EvalMode.THEORY)

    def log_phi_c(z):
        ln_choose = (
            scipy.special.gammaln(e.n + 1.0)
            - scipy.special.gammaln(z + 1.0)
            - scipy.special.gammaln(e.n - z + 1.0)
        )
        s = z / e.n
        dk = e.d ** (-e.k)
        log_b = ln_choose - z * math.log(e.d) + (e.n - z) * math.log1p(-1.0 / e.d)
        log_w = e.t * math.log1p(
            e.p_eff / (1.0 - e.p_eff) * (s**e.k - dk) / (1.0 - dk)
        )
        return log_b + log_w

    for z in (120.0, 700.0, 1500.0):
        h = 1e-4
        numeric = (log_phi_c(z + h) - log_phi_c(z - h)) / (2.0 * h)
        assert phi_c_log_derivative(z, BIG_PARAMS) == pytest.approx(
            numeric, rel=1e-6
        )


def test_harmonic_gamma_sandwich():
    assert harmonic_gamma_bounds(10) == pytest.approx(
        (-2.3525850929940457, -2.351752589066721, -2.3480396384485913),
        rel=1e-14,
    )
    for omega in list(range(1, 60)) + [500, 10_000]:
        lower, value, upper = harmonic_gamma_bounds(omega)
        assert lower < value < upper
    with pytest.raises(ParameterError):
        harmonic_gamma_bounds(0)


def test_binomial_slope_sandwich():
    assert binomial_slope_bounds(5, 100) == pytest.approx(
        (2.8496473124997737, 2.853013147555462, 2.866368803727844),
        rel=1e-13,
    )
    n = 200
    for omega in range(1, n):
        lower, value, upper = binomial_slope_bounds(omega, n)
        assert lower < value < upper
    with pytest.raises(ParameterError):
        binomial_slope_bounds(0, 100)
    with pytest.raises(ParameterError):
        binomial_slope_bounds(100, 100)


def test_varphi_max_frozen_points():
    vm = varphi_max(BIG_PARAMS)
    assert vm.value == pytest.approx(-0.12720080974082604, rel=1e-12)
    assert vm.arg == pytest.approx(0.95, rel=1e-12)
    assert vm.negative

    crit = ModelParams(n=10_000, alpha=0.6, k=2, p=0.5, r=0.9 * r_critical(0.5))
    vm = varphi_max(crit)
    assert vm.value == pytest.approx(-0.10298727458379658, rel=1e-10)
    assert vm.arg == pytest.approx(0.12224817999293565, abs=1e-6)
    assert vm.negative


def test_varphi_max_agrees_with_dense_grid():
    cfg = partition_config(BIG_PARAMS, eta2=0.2, eta3=0.91)
    vm = varphi_max(BIG_PARAMS, cfg)
    grid = np.linspace(cfg.eta2, cfg.eta3, 300_001)
    dense = (
        BIG_PARAMS.r * np.log1p(BIG_PARAMS.p / (1 - BIG_PARAMS.p) * grid**2) - grid
    )
    assert vm.value >= float(dense.max()) - 1e-12
    assert cfg.eta2 <= vm.arg <= cfg.eta3


def test_window_lower_bound_frozen_and_monotone_in_lam():
    params = ModelParams(n=100_000, alpha=0.3, k=2, p=0.25, r=0.9 * RCR)
    rep = window_lower_bound(params)
    assert rep.window_mass == pytest.approx(0.4327422353250692, rel=1e-12)
    assert rep.log_certified == pytest.approx(1.3827161346654533, rel=1e-12)
    assert rep.s_lo <= rep.s_hi
    assert rep.log_certified <= rep.log_window_sum
    certified = [window_lower_bound(params, lam=lam).log_certified for lam in (1, 2, 4)]
    assert certified[0] < certified[1] < certified[2]

    with pytest.raises(ParameterError):
        # (2k-1)*alpha > 1: the partition argument applies instead
        window_lower_bound(BIG_PARAMS)
    with pytest.raises(ParameterError):
        # lam so large the window empties at this n
        window_lower_bound(
            ModelParams(n=20, alpha=0.3, k=2, p=0.25, r=0.9 * RCR), lam=4.0
        )
    with pytest.raises(ParameterError):
        window_lower_bound(params, lam=0.0)
    with pytest.raises(ParameterError):
        window_lower_bound(params, rho=params.alpha)


def test_theta_probe_frozen():
    params = ModelParams(n=10_000, alpha=0.6, k=2, p=0.9, r=0.99 * r_critical(0.9))
    probe = theta_probe(params, theta=0.8)
    assert probe.varphi_at_theta == pytest.approx(0.021647228982219602, rel=1e-12)
    assert probe.varphi_at_theta == pytest.approx(
        varphi(0.8, params.p, params.r, params.k), rel=1e-15
    )
    assert probe.exponent == pytest.approx(1196.2700822181007, rel=1e-12)
    assert probe.exponent > 0.0
    with pytest.raises(ParameterError):
        theta_probe(params, theta=0.0)
    with pytest.raises(ParameterError):
        theta_probe(params, theta=1.0)


def test_partition_config_defaults_frozen():
    cfg = default_partition_config(BIG_PARAMS)
    assert cfg.eta1 == pytest.approx(0.008526481773752728, rel=1e-12)
    assert cfg.eta2 == pytest.approx(0.15221273674697397, rel=1e-12)
    assert cfg.eta3 == pytest.approx(0.95, rel=1e-12)
    assert cfg.mu == pytest.approx(2.189917482972791, rel=1e-12)
    assert cfg.rho == pytest.approx(0.3, rel=1e-12)
    assert 0.0 < cfg.theta < 1.0
    assert cfg.alpha0 == pytest.approx(((2 * 2 - 1) * 0.6 - 1.0) / 2.0, rel=1e-12)
    assert 0.0 < cfg.eta1 < cfg.eta2 < cfg.eta3 < 1.0


def test_partition_config_rejections():
    with pytest.raises(ConfigError):
        # (2k-1)*alpha = 0.9 <= 1
        partition_config(ModelParams(n=10_000, alpha=0.3, k=2, p=0.25, r=0.9 * RCR))
    with pytest.raises(ConfigError):
        partition_config(BIG_PARAMS, lam=0.0)
    with pytest.raises(ConfigError):
        # mu at its floor exactly is rejected
        floor_mu = 2 * 0.25 * BIG_PARAMS.r / 0.75
        partition_config(BIG_PARAMS, mu=floor_mu)
    with pytest.raises(ConfigError):
        # eta2 too large: no slack left in the mu condition
        partition_config(BIG_PARAMS, eta2=0.9)
    with pytest.raises(ConfigError):
        # eta3 below r*ln(tau): the tail interval cannot decay
        partition_config(BIG_PARAMS, eta3=0.5)
    low_r = ModelParams(n=10_000, alpha=0.6, k=2, p=0.25, r=0.3 * RCR)
    with pytest.raises(ConfigError):
        # ordering eta2 < eta3 violated once the other conditions pass
        partition_config(low_r, mu=0.73, eta2=0.5, eta3=0.4)
    with pytest.raises(ConfigError):
        partition_config(BIG_PARAMS, rho=0.6)
    with pytest.raises(ConfigError):
        partition_config(BIG_PARAMS, theta=1.0)
    with pytest.raises(ConfigError):
        # eta1 >= eta2: n too small for this lam
        small = ModelParams(n=100, alpha=0.6, k=2, p=0.25, r=0.9 * RCR)
        partition_config(small, lam=3.0)


def test_log_ratio_upper_bound_sampled_mode():
    # sampled mode evaluates the same decomposition at the realized
    # integer sizes; the report keeps the exact moments alongside
    rep = log_ratio_upper_bound(BIG_PARAMS, mode=EvalMode.SAMPLED)
    assert rep.mode is EvalMode.SAMPLED
    assert rep.log_ratio >= 0.0
    assert len(rep.term_table) == BIG_PARAMS.n + 1
    assert len(rep.partition_sums) == 4
    theory = log_ratio_upper_bound(BIG_PARAMS, mode=EvalMode.THEORY)
    # d = 251.19 rounds to 251: close but not identical sums
    assert rep.partition_sums[0] == pytest.approx(
        theory.partition_sums[0], abs=0.05
    )
    assert rep.partition_sums[0] != theory.partition_sums[0]
