import math

import numpy as np
import pytest

from cylwiener.cylmeasure import CovOperator
from cylwiener.errors import ConfigError, InputError
from cylwiener.radon import (CONVERGING, DIVERGING, INCONCLUSIVE, NOT_RADONIFYING, RADONIFYING,
                             SpectralFamily, extension_verdict, hs_check, mc_partial_sum_check)
from cylwiener.space import SpaceSpec
from cylwiener.stat import MCConfig

L2 = SpaceSpec.truncated(1000)


def test_power_two_partial_sum():
    v = hs_check(SpectralFamily.power(2, 10_000))
    assert v.verdict == RADONIFYING
    # integral comparison: 1/(N+1) <= zeta(2) - S_N <= 1/N
    tail = math.pi ** 2 / 6 - v.hs_sum_partial
    assert 1 / 10_001 <= tail <= 1 / 10_000
    assert abs(v.hs_sum_partial - 1.644934) < 1e-3


@pytest.mark.parametrize("alpha, verdict", [(0.5, NOT_RADONIFYING), (1.0, NOT_RADONIFYING),
                                            (0.0, NOT_RADONIFYING), (1.01, RADONIFYING), (3, RADONIFYING)])
def test_power_analytic(alpha, verdict):
    assert hs_check(SpectralFamily.power(alpha, 100)).verdict == verdict


def test_geometric():
    v = hs_check(SpectralFamily.geometric(0.5, 60))
    assert v.verdict == RADONIFYING
    assert v.hs_sum_partial == pytest.approx(1.0, abs=1e-15)
    assert hs_check(SpectralFamily.geometric(1.0, 10)).verdict == NOT_RADONIFYING


@pytest.mark.parametrize("values, verdict", [
    ([1.0, 0.5, 0.3], INCONCLUSIVE),
    ([k ** -2.0 for k in range(1, 65)], RADONIFYING),
    ([0.7 ** k for k in range(1, 41)], RADONIFYING),
    ([1.0] * 32, NOT_RADONIFYING),
    ([k ** -0.3 for k in range(1, 65)], NOT_RADONIFYING),
    ([k ** -1.0 for k in range(1, 65)], INCONCLUSIVE),
    ([1.0] * 8 + [0.0] * 8, RADONIFYING),
])
def test_explicit_lists(values, verdict):
    assert hs_check(SpectralFamily.explicit(values)).verdict == verdict


def test_hs_check_refuses_banach():
    with pytest.raises(InputError, match="mc_partial_sum_check"):
        hs_check(SpectralFamily.power(2), SpaceSpec.truncated(10, 1))


def test_partial_sums_monotone():
    lam = SpectralFamily.explicit(np.abs(np.random.default_rng(0).standard_normal(50))).eigenvalues()
    assert np.all(np.diff(np.cumsum(lam)) >= 0)


def test_mc_power_two_converging():
    d = mc_partial_sum_check(SpectralFamily.power(2, 1000), L2, 2, (10, 100, 1000), MCConfig(10_000, 1))
    assert d.verdict == CONVERGING
    assert d.gaps[1] < d.gaps[0]
    assert np.all(np.diff(d.moments) > 0)
    exact = sum(k ** -2.0 for k in range(1, 1001))
    assert abs(d.moments[-1] - exact) <= 4 * d.moment_se[-1]
    assert d.report.passed


def test_mc_power_half_diverging():
    d = mc_partial_sum_check(SpectralFamily.power(0.5, 1000), L2, 2, (10, 100, 1000), MCConfig(10_000, 2))
    assert d.verdict == DIVERGING
    for N, m, se in zip(d.levels, d.moments, d.moment_se):
        # integral comparison: 2 sqrt(N+1) - 2 <= sum_{k<=N} k^-1/2 <= 2 sqrt(N) - 1
        lo, hi = 2 * math.sqrt(N + 1) - 2, 2 * math.sqrt(N) - 1
        assert lo - 4 * se <= m <= hi + 4 * se
    assert d.report.passed


def test_mc_single_term():
    fam = SpectralFamily.explicit([1.0] + [0.0] * 999)
    d = mc_partial_sum_check(fam, L2, 2, (1, 10, 1000), MCConfig(1000, 3))
    assert d.gaps == [0.0, 0.0]
    assert d.verdict == CONVERGING


# In l^q with diagonal sigma_k the partial sums converge iff sum sigma_k^q < inf
# (q < inf); in l^inf iff sigma_k sqrt(log k) -> 0.  For q = 2 this is the
# Hilbert-Schmidt verdict, so the Monte Carlo route must agree with hs_check.
NAMED = [
    (SpectralFamily.power(2, 1000), {1.0: DIVERGING, 2.0: CONVERGING, math.inf: CONVERGING}),
    (SpectralFamily.geometric(0.5, 1000), {1.0: CONVERGING, 2.0: CONVERGING, math.inf: CONVERGING}),
    (SpectralFamily.power(0.5, 1000), {1.0: DIVERGING, 2.0: DIVERGING, math.inf: CONVERGING}),
]


@pytest.mark.parametrize("p_moment", [1.0, 2.0])
@pytest.mark.parametrize("norm", [1.0, 2.0, math.inf])
@pytest.mark.parametrize("fam, expected", NAMED)
def test_mc_verdict_named(fam, expected, norm, p_moment):
    d = mc_partial_sum_check(fam, SpaceSpec.truncated(1000, norm), p_moment, (10, 100, 1000), MCConfig(4000, 5))
    assert d.verdict == expected[norm], (d.gaps, d.increments)
    if norm == 2.0:
        analytic = hs_check(fam).verdict
        assert (analytic == RADONIFYING) == (d.verdict == CONVERGING)


def test_mc_config_errors():
    fam = SpectralFamily.power(2, 1000)
    with pytest.raises(ConfigError):
        mc_partial_sum_check(fam, L2, 2, (10, 100), MCConfig(1000))
    with pytest.raises(ConfigError):
        mc_partial_sum_check(fam, L2, 5, (10, 100, 1000), MCConfig(1000))
    with pytest.raises(ConfigError):
        mc_partial_sum_check(fam, SpaceSpec.truncated(100), 2, (10, 100, 1000), MCConfig(1000))


def test_mc_reproducible():
    fam = SpectralFamily.power(1.5, 1000)
    a = mc_partial_sum_check(fam, L2, 2, (10, 100, 1000), MCConfig(500, 9))
    b = mc_partial_sum_check(fam, L2, 2, (10, 100, 1000), MCConfig(500, 9))
    assert a.moments == b.moments


@pytest.mark.parametrize("cov, induced", [
    (CovOperator.power(2, 200), True),
    (CovOperator.power(1, 200), False),
    (CovOperator.identity(200), False),
    (CovOperator.diagonal(np.ones(200)), False),
])
def test_extension_verdict(cov, induced):
    v = extension_verdict(cov, SpaceSpec.truncated(200))
    assert v.induced is induced
    assert v.evidence["route"] == "hilbert-schmidt"


def test_extension_verdict_falls_back_with_warning():
    rng = np.random.default_rng(4)
    u, _ = np.linalg.qr(rng.standard_normal((100, 100)))
    q = (u * (np.arange(1, 101) ** -2.0)) @ u.T
    with pytest.warns(UserWarning, match="Monte Carlo"):
        v = extension_verdict(CovOperator.from_matrix(0.5 * (q + q.T)), SpaceSpec.truncated(100),
                              MCConfig(2000, 1))
    assert v.evidence["route"] == "monte-carlo"
    assert v.verdict == RADONIFYING
