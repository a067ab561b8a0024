"""Per-shot coincidence probabilities and real/false channel composition.

A coincidence triple holds the probability per shot of a correct, wrong or
double coincidence.  For the twin-beam system a shot counts only when the
idler pair clicks in exactly one mode; the signal mode correlated with that
idler mode is the "correct" detector.  For the coherent (BB84-style) system
Alice knows the prepared mode and every shot counts.

Contributions:

* Alice: her own return light, attenuated by ``xi`` on the way back.
* Eve: Eve measures the light in a basis chosen with bias ``r`` and resends
  a single photon in the mode she saw.  When she sees nothing, Alice's
  detectors register noise only (on the ports of Eve's resend path).
* noise: no object, background only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

from .detection import (
    CORRELATED,
    PARTNER,
    ComponentFn,
    OutcomeDistribution,
    bb84_signal_outcomes,
    eve_resend_outcomes,
    idler_click,
    signal_given_idler,
    total_angle,
)
from .fock import DEFAULT_POLICY, SeriesPolicy, component_values
from .scenario import ALICE_MODES, Scenario

__all__ = [
    "CoincidenceTriple",
    "IntrusionParams",
    "CORRELATION_MAP",
    "alice_triple_qi",
    "eve_triple_qi",
    "noise_triple_qi",
    "triples_qi",
    "triples_bb84",
    "contributions",
    "compose_channels",
]

CORRELATION_MAP = dict(CORRELATED)
_BASES = (("H", "V"), ("D", "A"))
_EVE_BASES = (("h", "v"), ("d", "a"))


@dataclass(frozen=True)
class CoincidenceTriple:
    """Correct, wrong and double coincidence probabilities per shot."""

    correct: float
    wrong: float
    double: float

    def __add__(self, other: "CoincidenceTriple") -> "CoincidenceTriple":
        return CoincidenceTriple(self.correct + other.correct, self.wrong + other.wrong,
                                 self.double + other.double)

    def scale(self, factor: float) -> "CoincidenceTriple":
        return CoincidenceTriple(factor * self.correct, factor * self.wrong, factor * self.double)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.correct, self.wrong, self.double)


ZERO = CoincidenceTriple(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class IntrusionParams:
    """Interception probability and its split between real and false channels."""

    p: float
    p_real: float = 0.0
    p_false: float | None = None
    r: float = 0.5

    def __post_init__(self) -> None:
        if self.p_false is None:
            object.__setattr__(self, "p_false", self.p - self.p_real)
        if not (0.0 <= self.p <= 1.0) or not (0.0 <= self.r <= 1.0):
            raise ValueError("p and r must lie in [0, 1]")
        if self.p_real < 0 or self.p_false < 0 or abs(self.p_real + self.p_false - self.p) > 1e-12:
            raise ValueError("need p_real, p_false >= 0 with p_real + p_false = p")

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "IntrusionParams":
        return cls(p=scenario.p, p_real=scenario.p_real, p_false=scenario.p_false, r=scenario.r)


def _triple(d: OutcomeDistribution, weight: float) -> CoincidenceTriple:
    return CoincidenceTriple(weight * d.click_j_only, weight * d.click_k_only, weight * d.click_both)


def _vac_triple(comp, port_j, port_k, weight: float) -> CoincidenceTriple:
    c = comp(port_j, port_k)
    return CoincidenceTriple(weight * c.vac_p, weight * c.vac_o, weight * c.vac_both)


def _comp(policy: SeriesPolicy, components: ComponentFn | None) -> ComponentFn:
    return components or partial(component_values, policy=policy)


def _idler_results(s: Scenario, comp):
    source = s.qi_source
    return {q: idler_click(source, s.idler_port(q), s.idler_port(PARTNER[q]), components=comp)
            for q in ALICE_MODES}


def alice_triple_qi(s: Scenario, policy: SeriesPolicy = DEFAULT_POLICY,
                    components: ComponentFn | None = None) -> CoincidenceTriple:
    """Alice's own return light, summed over both bases and both idler modes."""
    comp = _comp(policy, components)
    idl = _idler_results(s, comp)
    out = ZERO
    for q in ALICE_MODES:
        j = CORRELATED[q]
        d = signal_given_idler(idl[q], s.alice_port(j), s.alice_port(PARTNER[j]), 0.0, components=comp)
        out = out + _triple(d, 0.5 * idl[q].click_prob)
    return out


def noise_triple_qi(s: Scenario, policy: SeriesPolicy = DEFAULT_POLICY,
                    components: ComponentFn | None = None) -> CoincidenceTriple:
    """Background-only coincidences conditioned on an idler click."""
    comp = _comp(policy, components)
    idl = _idler_results(s, comp)
    out = ZERO
    for q in ALICE_MODES:
        j = CORRELATED[q]
        out = out + _vac_triple(comp, s.alice_port(j), s.alice_port(PARTNER[j]),
                                0.5 * idl[q].click_prob)
    return out


def _eve_branch(s: Scenario, comp, photon_dist, prepared_mode: str, weight: float) -> CoincidenceTriple:
    """Eve intercepts light whose click statistics on her pair are ``photon_dist(y, y')``.

    ``prepared_mode`` is the signal mode that counts as correct for Alice.
    """
    j = prepared_mode
    k = PARTNER[j]
    port_j, port_k = s.resend_port(j), s.resend_port(k)
    out = ZERO
    for basis, bias in zip(_EVE_BASES, (s.r, 1.0 - s.r)):
        if bias == 0.0:
            continue
        neither = None
        for y in basis:
            eve_d = photon_dist(y, PARTNER[y])
            neither = eve_d.click_neither
            resend = eve_resend_outcomes(port_j, port_k, total_angle(y, j, s.theta), components=comp)
            out = out + _triple(resend, weight * bias * eve_d.click_j_only)
        out = out + _vac_triple(comp, port_j, port_k, weight * bias * neither)
    return out


def eve_triple_qi(s: Scenario, policy: SeriesPolicy = DEFAULT_POLICY,
                  components: ComponentFn | None = None) -> CoincidenceTriple:
    """Intercept-resend contribution for the twin-beam system.

    Eve-side double clicks are dropped: she resends nothing and Alice's
    detectors are not credited with noise for those shots.
    """
    comp = _comp(policy, components)
    idl = _idler_results(s, comp)
    out = ZERO
    for q in ALICE_MODES:
        j = CORRELATED[q]

        def on_eve(y, yp, q=q, j=j):
            return signal_given_idler(idl[q], s.eve_port(y), s.eve_port(yp),
                                      total_angle(j, y, s.theta), components=comp)

        out = out + _eve_branch(s, comp, on_eve, j, 0.5 * idl[q].click_prob)
    return out


def triples_qi(s: Scenario, policy: SeriesPolicy = DEFAULT_POLICY,
               components: ComponentFn | None = None):
    """(alice, eve, noise) triples for the twin-beam system."""
    return (alice_triple_qi(s, policy, components), eve_triple_qi(s, policy, components),
            noise_triple_qi(s, policy, components))


def triples_bb84(s: Scenario, policy: SeriesPolicy = DEFAULT_POLICY,
                 components: ComponentFn | None = None):
    """(alice, eve, noise) triples for the coherent prepare-and-measure system."""
    comp = _comp(policy, components)
    src = s.bb84_source
    alice = eve = noise = ZERO
    for x in ALICE_MODES:
        k = PARTNER[x]
        d = bb84_signal_outcomes(src, s.alice_port(x), s.alice_port(k), 0.0, components=comp)
        alice = alice + _triple(d, 0.25)
        noise = noise + _vac_triple(comp, s.alice_port(x), s.alice_port(k), 0.25)

        def on_eve(y, yp, x=x):
            return bb84_signal_outcomes(src, s.eve_port(y), s.eve_port(yp),
                                        total_angle(x, y, s.theta), components=comp)

        eve = eve + _eve_branch(s, comp, on_eve, x, 0.25)
    return alice, eve, noise


def contributions(s: Scenario, policy: SeriesPolicy = DEFAULT_POLICY,
                  components: ComponentFn | None = None):
    """Triples for whichever system the scenario selects."""
    if s.system == "bb84":
        return triples_bb84(s, policy, components)
    return triples_qi(s, policy, components)


def compose_channels(alice: CoincidenceTriple, eve: CoincidenceTriple, noise: CoincidenceTriple,
                     intrusion: IntrusionParams) -> tuple[CoincidenceTriple, CoincidenceTriple]:
    """Real and false channel triples.

    ``real = (1-p) alice + p_real eve + p_false noise`` and
    ``false = p_false eve + (1-p_false) noise``.
    """
    p, pr, pf = intrusion.p, intrusion.p_real, intrusion.p_false
    real = alice.scale(1.0 - p) + eve.scale(pr) + noise.scale(pf)
    false = eve.scale(pf) + noise.scale(1.0 - pf)
    return real, false
