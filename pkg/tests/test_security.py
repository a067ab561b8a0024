import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qi_spoof.coincidence import CoincidenceTriple, IntrusionParams, compose_channels, contributions
from qi_spoof.scenario import Scenario
from qi_spoof.security import (
    ChannelEstimate,
    k_gap,
    discrepancy_check,
    estimate_offset_threshold,
    eve_error,
    k_factor,
    k_sweep_check,
    optimal_theta_scan,
    recognize_and_attribute,
    remove_false_info,
    security_metrics,
    snr,
    threshold_errors,
)

T = CoincidenceTriple


def channels(s, p, p_real=0.0):
    a, e, n = contributions(s)
    real, false = compose_channels(a, e, n, IntrusionParams(p, p_real=p_real))
    return (a, e, n), ChannelEstimate.from_triples(real, n), ChannelEstimate.from_triples(false, n)


class TestMetrics:
    def test_k_and_e(self):
        assert k_factor(T(0.4, 0.2, 0), T(0.1, 0.1, 0)) == pytest.approx(3.0)
        assert eve_error(3.0) == pytest.approx(0.25)
        assert k_factor(T(0.4, 0.1, 0), T(0.1, 0.1, 0)) is None
        assert eve_error(None) is None

    def test_threshold_zero_at_p_zero(self, set2):
        a, e, n = contributions(set2)
        e_t, _, _ = threshold_errors(a, e, n, 0.0)
        assert e_t == 0.0

    def test_threshold_equals_eve_error_at_full_intrusion(self, set2):
        a, e, n = contributions(set2)
        e_t, off, e_off = threshold_errors(a, e, n, 1.0)
        assert e_t == pytest.approx(eve_error(k_factor(e, n)))
        assert off == 0.0 and e_off == pytest.approx(e_t)

    def test_measured_offset_matches_analytic(self, set2):
        for p in (0.1, 0.5, 0.9):
            (a, e, n), r, f = channels(set2, p)
            _, _, e_off = threshold_errors(a, e, n, p)
            assert estimate_offset_threshold(r, f) == pytest.approx(e_off, rel=1e-10)

    def test_offset_undefined_for_pure_noise(self):
        z = ChannelEstimate(0.0, 0.0)
        assert estimate_offset_threshold(z, z) is None

    def test_offset_pure_eve(self):
        assert estimate_offset_threshold(ChannelEstimate(0, 0), ChannelEstimate(0.1, 0.3)) == pytest.approx(0.25)

    def test_snr(self):
        n = T(0.2, 0.1, 0)
        assert snr(n, n) == 0.0
        assert snr(T(0.4, 0.1, 0), n) == pytest.approx(0.2 / 0.3)
        assert snr(n, T(0, 0, 0)) is None

    def test_security_metrics_fields(self, set2):
        m = security_metrics(set2)
        assert m.e_eve == pytest.approx(1 / (m.k + 1))
        assert m.snr_real > 0


class TestKSweep:
    def test_noise_free_constant(self):
        r = k_sweep_check(Scenario(n_bar=0.005), [0.1, 0.5, 1.0])
        assert r.validity and all(k == pytest.approx(3.0) for k in r.k_values)
        assert r.rel_spread == pytest.approx(0.0, abs=1e-12)

    def test_set2_valid(self, set2):
        r = k_sweep_check(set2, [i / 50 for i in range(1, 51)])
        assert r.validity and not r.spoof_vulnerable

    def test_high_resend_noise_invalid(self, set2):
        # located by scanning the resend-path background: raw 1.0 makes Eve's
        # wrong excess negative at full transmission
        r = k_sweep_check(set2.replace(noise_signal_eve=1.0), [0.01, 0.1, 0.5, 1.0])
        assert not r.validity and r.spoof_vulnerable
        assert r.wrong_excess[-1] < 0

    @pytest.mark.parametrize("grid", [[], [0.0], [1.5]])
    def test_grid_domain(self, set2, grid):
        with pytest.raises(ValueError):
            k_sweep_check(set2, grid)


class TestDiscrepancy:
    def test_pure_alice_consistent(self, set2):
        (a, _, n), _, _ = channels(set2, 0.0)
        r = discrepancy_check(ChannelEstimate.from_triples(a, n), set2)
        assert r.consistent
        assert any(p == 0.0 and x == pytest.approx(set2.xi) for p, x in r.matching)

    def test_mixed_with_eve_inconsistent(self, set2):
        _, real, _ = channels(set2, 0.5, p_real=0.3)
        r = discrepancy_check(real, set2)
        assert r.precondition_met and not r.consistent

    def test_pure_noise_consistent(self, set2):
        (_, _, n), _, _ = channels(set2, 0.0)
        r = discrepancy_check(ChannelEstimate.from_triples(n, n), set2)
        assert r.consistent and any(p == 1.0 for p, _ in r.solutions)

    def test_empty_grid(self, set2):
        with pytest.raises(ValueError):
            discrepancy_check(ChannelEstimate(0, 0), set2, resolution=0)


class TestVerdict:
    def test_no_intrusion(self, set2):
        _, r, f = channels(set2, 0.0)
        v = recognize_and_attribute(r, f, scenario=set2)
        assert (v.eve_detected, v.alice_channel) == ("no", "real")
        assert "branch=discrepancy_check" in v.rationale

    def test_complete_intrusion_ideal(self):
        z = Scenario(n_bar=0.005)
        _, r, f = channels(z, 1.0)
        v = recognize_and_attribute(r, f, known_e_eve=0.25)
        assert (v.eve_detected, v.alice_channel) == ("yes", "none")

    def test_set2_half_intrusion(self, set2):
        _, r, f = channels(set2, 0.5)
        v = recognize_and_attribute(r, f)
        assert v.alice_channel == "real"

    def test_both_positive_uses_k(self, set2):
        _, r, f = channels(set2, 0.9, p_real=0.6)
        assert r.wrong_nr > 0 and f.wrong_nr > 0
        v = recognize_and_attribute(r, f)
        assert v.alice_channel == "real" and "branch=larger_k_hat" in v.rationale

    def test_tie_is_undetermined(self):
        c = ChannelEstimate(0.1, 0.3)
        v = recognize_and_attribute(c, c)
        assert v.alice_channel == "undetermined"

    def test_both_empty(self):
        z = ChannelEstimate(0.0, 0.0)
        v = recognize_and_attribute(z, z)
        assert (v.eve_detected, v.alice_channel) == ("no", "none")

    def test_tolerance_from_sd(self):
        c = ChannelEstimate(1e-6, 1e-6, wrong_sd=1e-6, correct_sd=1e-6)
        assert c.is_empty()

    def test_rationale_text(self, set2):
        _, r, f = channels(set2, 0.5)
        text = recognize_and_attribute(r, f).rationale_text()
        assert all("=" in line for line in text.splitlines())


class TestRemoval:
    def test_false_channel_own_k_zero(self, set2):
        _, _, f = channels(set2, 0.5)
        assert remove_false_info(f, f.k_hat).trustworthy_correct_nr == pytest.approx(0.0, abs=1e-18)

    def test_real_channel_without_alice_errors(self):
        a, e, n = T(0.5, 0.1, 0), T(0.3, 0.2, 0), T(0.1, 0.1, 0)
        p = 0.4
        real, _ = compose_channels(a, e, n, IntrusionParams(p))
        out = remove_false_info(ChannelEstimate.from_triples(real, n), 2.0, a, n, p)
        assert out.trustworthy_correct_nr == pytest.approx((1 - p) * 0.4)
        assert out.error_term_bound == 0.0

    def test_set2_with_real_intrusion(self, set2):
        (a, e, n), r, f = channels(set2, 0.6, p_real=0.2)
        out = remove_false_info(r, f.k_hat, a, n, 0.6)
        expect = (1 - 0.6) * (a.correct - n.correct) - out.error_term_bound
        assert out.trustworthy_correct_nr == pytest.approx(expect, rel=1e-10)

    def test_undefined_k(self):
        with pytest.raises(ValueError):
            remove_false_info(ChannelEstimate(0.1, 0.1), None)


class TestTheta:
    def test_symmetric_flat(self, set2):
        scan = optimal_theta_scan(set2, [0.0, 0.3, 0.6])
        assert max(scan.e_curve) - min(scan.e_curve) < 1e-12
        assert scan.theta_star == 0.0

    def test_set1_two_point(self, set1):
        assert optimal_theta_scan(set1, [math.pi / 4, 0.0]).theta_star == 0.0

    def test_empty(self, set1):
        with pytest.raises(ValueError):
            optimal_theta_scan(set1, [])


unit = st.floats(0.0, 1.0)


@given(st.floats(0.01, 0.99), st.floats(0.0, 1.0))
def test_k_gap_identity(p, frac):
    a, e, n = T(0.5, 0.09, 0), T(0.3, 0.2, 0), T(0.1, 0.1, 0)
    pr = p * frac
    if pr == 0:
        return
    real, false = compose_channels(a, e, n, IntrusionParams(p, p_real=pr))
    kr = ChannelEstimate.from_triples(real, n).k_hat
    kf = ChannelEstimate.from_triples(false, n).k_hat
    if kr is None or kf is None:
        return
    assert kr - kf == pytest.approx(k_gap(a, e, n, p, pr), rel=1e-9)


@given(st.floats(0.0, 10.0))
def test_eve_error_identity(k):
    assert eve_error(k) == pytest.approx(1 / (k + 1))
