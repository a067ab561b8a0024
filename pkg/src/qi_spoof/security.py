"""Security metrics and Alice's decision procedure.

Quantities that can be undefined (a zero or negative denominator) are
returned as ``None`` rather than raising; callers treat undefined as a
legitimate outcome.

Noise-reduced values subtract the noise-only expectation from a measured or
modelled probability, e.g. ``wrong_nr = Pr_w - Pr^B_w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coincidence import CoincidenceTriple, IntrusionParams, compose_channels, contributions
from .scenario import Scenario

__all__ = [
    "SecurityMetrics",
    "ChannelEstimate",
    "Verdict",
    "KSweepResult",
    "DiscrepancyResult",
    "RemovalResult",
    "ThetaScan",
    "k_factor",
    "eve_error",
    "threshold_errors",
    "estimate_offset_threshold",
    "snr",
    "security_metrics",
    "k_sweep_check",
    "discrepancy_check",
    "recognize_and_attribute",
    "remove_false_info",
    "optimal_theta_scan",
    "k_gap",
]

ANALYTIC_TOL = 1e-12


def _ratio(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


def k_factor(eve: CoincidenceTriple, noise: CoincidenceTriple) -> float | None:
    """Eve's noise-reduced correct-to-wrong ratio; ``None`` if the wrong excess is not positive."""
    return _ratio(eve.correct - noise.correct, eve.wrong - noise.wrong)


def eve_error(k: float | None) -> float | None:
    """Error rate Eve induces, ``1/(k+1)``."""
    return None if k is None else 1.0 / (k + 1.0)


def threshold_errors(alice: CoincidenceTriple, eve: CoincidenceTriple, noise: CoincidenceTriple,
                     p: float) -> tuple[float | None, float | None, float | None]:
    """``(e_T, offset, e_T_off)`` for interception probability ``p``.

    Totals are wrong plus correct (doubles excluded).  Any entry is ``None``
    when its denominator is not positive or ``k`` is undefined.
    """
    tot = lambda t: t.correct + t.wrong  # noqa: E731
    d_eve = tot(eve) - tot(noise)
    d_alice = tot(alice) - tot(noise)
    den = p * d_eve + (1.0 - p) * d_alice
    e_e = eve_error(k_factor(eve, noise))
    if not den > 0:
        return None, None, None
    offset = (1.0 - p) * (alice.wrong - noise.wrong) / den
    if e_e is None:
        return None, offset, None
    e_t = e_e * p * d_eve / den
    return e_t, offset, e_t + offset


@dataclass(frozen=True)
class ChannelEstimate:
    """Noise-reduced wrong and correct expectations of one channel.

    ``wrong_sd`` and ``correct_sd`` are optional sampling standard
    deviations; when present they set the "approximately zero" tolerance
    used by the decision procedure (five standard deviations).
    """

    wrong_nr: float
    correct_nr: float
    wrong_sd: float | None = None
    correct_sd: float | None = None

    @property
    def k_hat(self) -> float | None:
        return _ratio(self.correct_nr, self.wrong_nr)

    @classmethod
    def from_triples(cls, channel: CoincidenceTriple, noise: CoincidenceTriple) -> "ChannelEstimate":
        return cls(channel.wrong - noise.wrong, channel.correct - noise.correct)

    def wrong_tol(self) -> float:
        return ANALYTIC_TOL if self.wrong_sd is None else 5.0 * self.wrong_sd

    def correct_tol(self) -> float:
        return ANALYTIC_TOL if self.correct_sd is None else 5.0 * self.correct_sd

    def is_empty(self) -> bool:
        return abs(self.wrong_nr) <= self.wrong_tol() and abs(self.correct_nr) <= self.correct_tol()


def estimate_offset_threshold(real: ChannelEstimate, false: ChannelEstimate) -> float | None:
    """Measured offset threshold error: summed wrong excess over summed wrong plus correct excess."""
    wrong = real.wrong_nr + false.wrong_nr
    den = wrong + real.correct_nr + false.correct_nr
    if den == 0:
        return None
    return wrong / den


def snr(channel: CoincidenceTriple, noise: CoincidenceTriple) -> float | None:
    """Signal-to-noise ratio of a channel over the noise-only coincidences."""
    den = noise.correct + noise.wrong
    if not den > 0:
        return None
    return ((channel.correct - noise.correct) + (channel.wrong - noise.wrong)) / den


@dataclass(frozen=True)
class SecurityMetrics:
    k: float | None
    e_eve: float | None
    e_threshold: float | None
    offset: float | None
    e_threshold_offset: float | None
    snr_real: float | None
    snr_false: float | None


def security_metrics(scenario: Scenario, triples=None) -> SecurityMetrics:
    """All analytic metrics for a scenario (its system, intrusion and angle)."""
    alice, eve, noise = triples if triples is not None else contributions(scenario)
    real, false = compose_channels(alice, eve, noise, IntrusionParams.from_scenario(scenario))
    k = k_factor(eve, noise)
    e_t, offset, e_t_off = threshold_errors(alice, eve, noise, scenario.p)
    return SecurityMetrics(k=k, e_eve=eve_error(k), e_threshold=e_t, offset=offset,
                           e_threshold_offset=e_t_off, snr_real=snr(real, noise),
                           snr_false=snr(false, noise))


# k-factor validity over Eve's resend attenuation

@dataclass(frozen=True)
class KSweepResult:
    xi_grid: tuple[float, ...]
    k_values: tuple[float | None, ...]
    wrong_excess: tuple[float, ...]
    validity: bool
    rel_spread: float | None

    @property
    def spoof_vulnerable(self) -> bool:
        """Eve's wrong excess vanishes somewhere, so a measured k cannot be trusted."""
        return not self.validity


def k_sweep_check(scenario: Scenario, xi_grid: Sequence[float]) -> KSweepResult:
    """Evaluate ``k`` as a function of Eve's resend attenuation.

    ``validity`` holds when Eve's wrong excess over noise is positive at
    every grid point.  ``rel_spread`` compares ``k`` at the smallest grid
    value with ``k`` at full transmission.
    """
    grid = tuple(float(x) for x in xi_grid)
    if not grid or any(not (0.0 < x <= 1.0) for x in grid):
        raise ValueError("xi_grid must be non-empty with values in (0, 1]")
    ks, excess = [], []
    for x in grid:
        _, eve, noise = contributions(scenario.replace(xi_eve=x))
        ks.append(k_factor(eve, noise))
        excess.append(eve.wrong - noise.wrong)
    validity = all(e > 0 for e in excess)
    _, eve1, noise1 = contributions(scenario.replace(xi_eve=1.0))
    k_one = k_factor(eve1, noise1)
    k_small = ks[int(np.argmin(grid))]
    spread = None
    if k_one is not None and k_small is not None and k_one != 0:
        spread = abs(k_small - k_one) / abs(k_one)
    return KSweepResult(grid, tuple(ks), tuple(excess), validity, spread)


# discrepancy check

@dataclass(frozen=True)
class DiscrepancyResult:
    solutions: tuple[tuple[float, float], ...]
    matching: tuple[tuple[float, float], ...]
    consistent: bool
    precondition_met: bool


def discrepancy_check(channel: ChannelEstimate, scenario: Scenario, resolution: int = 200,
                      rel_tol: float = 1e-3, xi_range: tuple[float, float] | None = None
                      ) -> DiscrepancyResult:
    """Test whether a channel can be explained by Alice's light plus noise alone.

    Scans a ``resolution x resolution`` grid over (p, xi) for points where
    ``(1-p) Pr^A_c(xi) + p Pr^B_c`` reproduces the channel's correct
    probability to relative tolerance ``rel_tol``.  The channel is
    consistent with "no intruder" when one of those points also reproduces
    the wrong probability.  ``precondition_met`` reports whether Eve's
    wrong excess is positive, without which the test cannot expose her.
    """
    if resolution < 1:
        raise ValueError("resolution must be positive")
    lo, hi = xi_range if xi_range is not None else (1.0 / resolution, 1.0)
    xis = np.linspace(lo, hi, resolution)
    ps = np.linspace(0.0, 1.0, resolution)
    if xis.size == 0 or ps.size == 0:
        raise ValueError("empty discrepancy grid")
    _, eve, noise = contributions(scenario)
    target_c = channel.correct_nr + noise.correct
    target_w = channel.wrong_nr + noise.wrong
    sols, matches = [], []
    for xi in xis:
        alice = contributions(scenario.replace(xi=float(xi)))[0]
        pred_c = (1.0 - ps) * alice.correct + ps * noise.correct
        pred_w = (1.0 - ps) * alice.wrong + ps * noise.wrong
        ok_c = np.abs(pred_c - target_c) <= rel_tol * abs(target_c)
        ok_w = np.abs(pred_w - target_w) <= rel_tol * abs(target_w)
        for i in np.flatnonzero(ok_c):
            sols.append((float(ps[i]), float(xi)))
            if ok_w[i]:
                matches.append((float(ps[i]), float(xi)))
    return DiscrepancyResult(tuple(sols), tuple(matches), bool(matches), eve.wrong - noise.wrong > 0)


# decision procedure

@dataclass
class Verdict:
    """Outcome of the recognition procedure.

    ``eve_detected`` is one of ``yes/no/undetermined``; ``alice_channel`` one
    of ``real/false/none/undetermined``.  ``rationale`` lists ``key=value``
    records of every branch taken.
    """

    eve_detected: str = "undetermined"
    alice_channel: str = "undetermined"
    spoof_vulnerable: bool = False
    rationale: list[str] = field(default_factory=list)

    def rationale_text(self) -> str:
        return "\n".join(self.rationale)


def recognize_and_attribute(real: ChannelEstimate, false: ChannelEstimate,
                            noise: CoincidenceTriple | None = None,
                            known_e_eve: float | None = None,
                            scenario: Scenario | None = None,
                            e_tol: float = 1e-9) -> Verdict:
    """Decide whether Eve is present and which channel holds Alice's light.

    Steps, in order: empty-channel check; positive measured offset error
    means Eve is present; if it equals Eve's known error no channel holds
    Alice's light; with both wrong excesses positive the larger estimated
    k-factor marks Alice's channel; a negative wrong excess marks Alice's
    channel directly; otherwise, with no positive evidence, the discrepancy
    check (needs ``scenario``) decides.  ``noise`` is accepted for callers
    that track it and is recorded in the trace.
    """
    v = Verdict()
    chans = {"real": real, "false": false}
    empty = {name: c.is_empty() for name, c in chans.items()}
    for name in chans:
        v.rationale.append(f"empty_{name}={empty[name]}")
    if noise is not None:
        v.rationale.append(f"noise_wrong={noise.wrong!r}")
    if all(empty.values()):
        v.eve_detected, v.alice_channel = "no", "none"
        v.rationale.append("branch=both_channels_empty")
        return v

    e_hat = estimate_offset_threshold(real, false)
    v.rationale.append(f"e_hat_offset={e_hat!r}")
    positive = {n: c.wrong_nr > c.wrong_tol() for n, c in chans.items()}
    negative = {n: c.wrong_nr < -c.wrong_tol() for n, c in chans.items()}

    if e_hat is not None and e_hat > 0:
        v.eve_detected = "yes"
        v.rationale.append("branch=offset_error_positive")
        if known_e_eve is not None and abs(e_hat - known_e_eve) <= e_tol:
            v.alice_channel = "none"
            v.rationale.append("branch=offset_equals_eve_error")
            return v
    elif any(positive.values()):
        v.eve_detected = "yes"
        v.spoof_vulnerable = True
        v.rationale.append("branch=offset_error_nonpositive_but_wrong_excess_positive")
    elif scenario is not None:
        # no positive evidence: test each non-empty channel against Alice-plus-noise
        checks = {n: discrepancy_check(c, scenario) for n, c in chans.items() if not empty[n]}
        for n, res in checks.items():
            v.rationale.append(f"discrepancy_{n}_consistent={res.consistent}")
        v.eve_detected = "no" if all(r.consistent for r in checks.values()) else "yes"
        v.spoof_vulnerable = not all(r.precondition_met for r in checks.values())
        v.rationale.append("branch=discrepancy_check")
    else:
        v.spoof_vulnerable = True
        v.rationale.append("branch=offset_error_nonpositive_no_scenario")

    # attribution of Alice's light
    if positive["real"] and positive["false"]:
        k_r, k_f = real.k_hat, false.k_hat
        v.rationale.append(f"k_hat_real={k_r!r}")
        v.rationale.append(f"k_hat_false={k_f!r}")
        if k_r is None or k_f is None or k_r == k_f:
            v.alice_channel = "undetermined"
            v.rationale.append("branch=k_tie_or_undefined")
        else:
            v.alice_channel = "real" if k_r > k_f else "false"
            v.rationale.append("branch=larger_k_hat")
            v.rationale.append("k_order_rule=k_real>k_false when p_real>0")
    elif negative["real"] != negative["false"]:
        v.alice_channel = "real" if negative["real"] else "false"
        v.rationale.append("branch=negative_wrong_excess")
    else:
        lit = [n for n in chans if not empty[n] and not positive[n]]
        if len(lit) == 1:
            v.alice_channel = lit[0]
            v.rationale.append("branch=only_undisturbed_channel_with_light")
        elif known_e_eve is not None and e_hat is not None and e_hat < known_e_eve and positive["real"]:
            v.alice_channel = "real"
            v.rationale.append("branch=offset_below_eve_error")
        else:
            v.rationale.append("branch=attribution_undetermined")
    return v


# removal of untrustworthy data

@dataclass(frozen=True)
class RemovalResult:
    trustworthy_correct_nr: float
    error_term_bound: float | None


def remove_false_info(channel: ChannelEstimate, k_false: float | None,
                      alice: CoincidenceTriple | None = None,
                      noise: CoincidenceTriple | None = None,
                      p: float | None = None) -> RemovalResult:
    """Strip Eve's contribution from a channel using the false channel's k-factor.

    ``trustworthy = correct_nr - k_false * wrong_nr``.  When the Alice and
    noise triples and ``p`` are supplied, also returns the error term
    ``k_false (1-p)(Pr^A_w - Pr^B_w)`` that perturbs the real channel.
    """
    if k_false is None or not math.isfinite(k_false):
        raise ValueError("remove_false_info needs a defined k-factor")
    trust = channel.correct_nr - k_false * channel.wrong_nr
    err = None
    if alice is not None and noise is not None and p is not None:
        err = k_false * (1.0 - p) * (alice.wrong - noise.wrong)
    return RemovalResult(trust, err)


def k_gap(alice: CoincidenceTriple, eve: CoincidenceTriple, noise: CoincidenceTriple,
          p: float, p_real: float) -> float | None:
    """Gap ``g`` with ``k_real = k_false + g`` when both channels show a wrong excess."""
    da_c, da_w = alice.correct - noise.correct, alice.wrong - noise.wrong
    de_c, de_w = eve.correct - noise.correct, eve.wrong - noise.wrong
    den = de_w * (da_w + p_real / (1.0 - p) * de_w)
    if den == 0:
        return None
    return (da_c * de_w - de_c * da_w) / den


# Eve's basis angle

@dataclass(frozen=True)
class ThetaScan:
    theta_star: float
    thetas: tuple[float, ...]
    e_curve: tuple[float | None, ...]


def optimal_theta_scan(scenario: Scenario, theta_grid: Sequence[float]) -> ThetaScan:
    """Eve's relative basis angle minimising her induced error.

    Undefined errors are skipped; ties go to the smaller angle.
    """
    thetas = tuple(float(t) for t in theta_grid)
    if not thetas:
        raise ValueError("theta_grid must be non-empty")
    curve = []
    for th in thetas:
        _, eve, noise = contributions(scenario.replace(theta=th))
        curve.append(eve_error(k_factor(eve, noise)))
    best = None
    for th, e in sorted(zip(thetas, curve)):
        if e is not None and (best is None or e < best[1]):
            best = (th, e)
    if best is None:
        raise ArithmeticError("Eve's error is undefined on the whole grid")
    return ThetaScan(best[0], thetas, tuple(curve))
