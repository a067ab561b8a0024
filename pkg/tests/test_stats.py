import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qi_spoof.stats import (
    BesselOverflowError,
    CovarianceEstimate,
    SkellamParams,
    analytic_conclusion_probs,
    bessel_i,
    log_bessel_i,
    erroneous_conclusion_probs,
    skellam_logpmf,
    skellam_pmf,
)


def series_bessel(order: int, z: Fraction, terms: int = 60):
    """Exact partial sum of the power series and a bound on its remainder."""
    half = z / 2
    total = Fraction(0)
    term = half ** order / math.factorial(order)
    for k in range(terms):
        total += term
        term = term * half * half / ((k + 1) * (k + 1 + order))
    # remaining terms shrink by at least the ratio of the next one
    ratio = half * half / ((terms + 1) * (terms + 1 + order))
    bound = term / (1 - ratio)
    return total, bound


class TestBessel:
    def test_small_values(self):
        assert bessel_i(0, 0.0) == 1.0
        assert bessel_i(1, 0.0) == 0.0

    def test_i0_of_one(self):
        exact, bound = series_bessel(0, Fraction(1))
        assert bound < Fraction(1, 10 ** 30)
        assert bessel_i(0, 1.0) == pytest.approx(float(exact), rel=1e-15)
        assert float(exact) == pytest.approx(1.2660658777520082, rel=1e-15)

    @pytest.mark.parametrize("order", [0, 1, 2, 5, 17])
    @pytest.mark.parametrize("z", ["1/8", "3", "12", "25"])
    def test_against_exact_series(self, order, z):
        zf = Fraction(z)
        exact, bound = series_bessel(order, zf, terms=200)
        assert bound / exact < Fraction(1, 10 ** 20)
        assert bessel_i(order, float(zf)) == pytest.approx(float(exact), rel=1e-12)

    # reference logs from 30-digit arbitrary-precision evaluation
    @pytest.mark.parametrize("order, z, ref", [
        (300, 5.0, -1139.9978669769773),
        (40, 1e-10, -1059.0805641347736),
        (2000, 10.0, -9987.636031931466),
        (60, 1.0, -230.21290603205696),
        (5000, 20000.0, 19372.309987356097),
    ])
    def test_log_bessel_underflow_region(self, order, z, ref):
        assert float(log_bessel_i(order, z)) == pytest.approx(ref, rel=1e-14)

    def test_overflow_reports_exponent(self):
        with pytest.raises(BesselOverflowError) as err:
            bessel_i(0, 1000.0)
        assert err.value.log_value == pytest.approx(1000 - 0.5 * math.log(2 * math.pi * 1000), rel=1e-6)

    def test_domain(self):
        with pytest.raises(ValueError):
            bessel_i(0, -1.0)


class TestSkellam:
    def test_point_mass(self):
        p = SkellamParams(0.0, 0.0)
        assert skellam_pmf(0, p) == 1.0 and skellam_pmf(3, p) == 0.0

    def test_poisson_reduction(self):
        assert skellam_pmf(2, SkellamParams(2.0, 0.0)) == pytest.approx(math.exp(-2) * 2, rel=1e-14)
        assert skellam_pmf(-1, SkellamParams(2.0, 0.0)) == 0.0
        assert skellam_pmf(-3, SkellamParams(0.0, 1.5)) == pytest.approx(
            math.exp(-1.5) * 1.5 ** 3 / 6, rel=1e-14)

    def test_normalised_window(self):
        x = np.arange(-20, 41)
        assert skellam_pmf(x, SkellamParams(3.0, 1.0)).sum() == pytest.approx(1.0, abs=1e-10)

    def test_matches_direct_convolution(self):
        from scipy.stats import poisson
        mu1, mu2 = 3.0, 1.7
        k = np.arange(0, 80)
        for x in (-5, 0, 4, 9):
            direct = sum(poisson.pmf(j + x, mu1) * poisson.pmf(j, mu2) for j in k if j + x >= 0)
            assert skellam_pmf(x, SkellamParams(mu1, mu2)) == pytest.approx(direct, rel=1e-12)

    def test_large_counts_normalised(self):
        # shot-scale rates where the scaled Bessel function underflows
        p = SkellamParams(1.2e6, 1.1e6)
        sd = math.sqrt(p.variance)
        x = np.arange(math.floor(p.mean - 40 * sd), math.ceil(p.mean + 40 * sd) + 1)
        assert skellam_pmf(x, p).sum() == pytest.approx(1.0, abs=1e-10)

    def test_integer_support(self):
        with pytest.raises(ValueError):
            skellam_logpmf(0.5, SkellamParams(1.0, 1.0))

    @given(st.floats(0.01, 50.0), st.integers(-30, 30))
    def test_symmetry(self, mu, x):
        p = SkellamParams(mu, mu)
        assert skellam_pmf(x, p) == pytest.approx(skellam_pmf(-x, p), rel=1e-12)

    def test_moments(self):
        rng = np.random.default_rng(7)
        mu1, mu2, n = 4.0, 2.5, 10 ** 6
        x = rng.poisson(mu1, n) - rng.poisson(mu2, n)
        var = mu1 + mu2
        assert abs(x.mean() - (mu1 - mu2)) < 3 * math.sqrt(var / n)
        # variance of the sample variance: (mu4 - var^2)/n with mu4 = var + 3 var^2
        assert abs(x.var() - var) < 3 * math.sqrt((var + 2 * var ** 2) / n)

    def test_from_shots_and_clamp(self):
        p = SkellamParams.from_shots(1000, 0.02, 0.01, covariance=3.0)
        assert (p.mu1, p.mu2) == pytest.approx((17.0, 7.0))
        with pytest.warns(RuntimeWarning):
            q = SkellamParams.from_shots(100, 0.02, 0.01, covariance=5.0)
        assert q.clamped and q.mu2 == 0.0

    def test_covariance_narrows_distribution(self):
        variances = [SkellamParams.from_shots(1e5, 0.02, 0.018, c).variance for c in (0, 100, 500)]
        assert variances == sorted(variances, reverse=True)


class TestCovariance:
    def test_shared_component(self):
        rng = np.random.default_rng(3)
        s = rng.poisson(50, 20000)
        a, b = s + rng.poisson(10, 20000), s + rng.poisson(5, 20000)
        c = CovarianceEstimate.from_samples(a, b)
        assert c.C == pytest.approx(50, rel=0.05)

    def test_needs_matched_samples(self):
        with pytest.raises(ValueError):
            CovarianceEstimate.from_samples([1.0], [1.0])


class TestConclusions:
    def test_degenerate_point_mass(self):
        ones = np.ones(10)
        rep = erroneous_conclusion_probs(ones, 3 * ones, ones, 2 * ones)
        assert rep.false_neg_given_real_pos == 0.0
        assert rep.k_false_gt_k_real == 0.0
        assert rep.e_off_nonpositive == 0.0
        assert math.isnan(rep.ordered_neg_given_e)

    def test_single_run_indicators(self):
        rep = erroneous_conclusion_probs([-1.0], [5.0], [-2.0], [1.0])
        assert rep.e_off_nonpositive == 1.0
        assert rep.ordered_neg_given_e == 1.0
        assert set(rep.as_dict()) == set(rep.counts)

    def test_empty(self):
        with pytest.raises(ValueError):
            erroneous_conclusion_probs([], [], [], [])

    def test_analytic_against_double_sum(self):
        r, f = SkellamParams(30.0, 33.0), SkellamParams(31.0, 29.0)
        got = analytic_conclusion_probs(r, f)
        xs = np.arange(-80, 81)
        pr, pf = skellam_pmf(xs, r), skellam_pmf(xs, f)
        ordered = sum(pr[i] * pf[j] for i, xr in enumerate(xs) if xr < 0
                      for j, xf in enumerate(xs) if xf <= xr)
        assert got["ordered_neg"] == pytest.approx(ordered, rel=1e-9)
        assert got["false_neg_given_real_pos"] == pytest.approx(pf[xs < 0].sum(), rel=1e-9)

    def test_analytic_matches_samples(self):
        rng = np.random.default_rng(11)
        r, f = SkellamParams(30.0, 33.0), SkellamParams(31.0, 29.0)
        n = 200000
        rw = rng.poisson(r.mu1, n) - rng.poisson(r.mu2, n)
        fw = rng.poisson(f.mu1, n) - rng.poisson(f.mu2, n)
        rep = erroneous_conclusion_probs(rw, np.ones(n), fw, np.ones(n))
        got = analytic_conclusion_probs(r, f)["false_neg_given_real_pos"]
        d = rep.counts["false_neg_given_real_pos"][1]
        assert abs(rep.false_neg_given_real_pos - got) < 4 * math.sqrt(got * (1 - got) / d)


# reference log pmf values from a 40-digit mpmath evaluation
SKEWED = SkellamParams(38948.1407350587, 1496949.552398742)
SKEWED_LOGPMF = {-1458001: -8.0412512942227322498, -1461719: -12.538105190579172973,
                 1500: -1055722.2532002758273}


@pytest.mark.parametrize("x", sorted(SKEWED_LOGPMF))
def test_skellam_logpmf_large_unequal_means(x):
    got = skellam_logpmf(np.array([x]), SKEWED)[0]
    assert got == pytest.approx(SKEWED_LOGPMF[x], rel=1e-14, abs=1e-11)


def test_skellam_normalised_for_large_unequal_means():
    sd = math.sqrt(SKEWED.variance)
    x = np.arange(math.floor(SKEWED.mean - 40 * sd), math.ceil(SKEWED.mean + 40 * sd) + 1)
    assert abs(skellam_pmf(x, SKEWED).sum() - 1.0) < 1e-12
