"""Click-outcome distributions for idler, signal, Eve and coherent-source detection.

A detector pair ``(J, K)`` is two orthogonal modes of one basis.  Light
arriving at the pair is described by three weights: vacuum (``w0``), a
photon in ``J`` (``q2``) and a photon in ``K`` (``q1``).  Each weight is
mixed with the pair's thermal noise through :func:`qi_spoof.fock.component_values`
and the four click patterns are renormalised to sum to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .fock import (
    DEFAULT_POLICY,
    ComponentSet,
    PortParams,
    SeriesPolicy,
    SourceParamsBB84,
    SourceParamsQI,
    component_values,
    q_factors,
)

__all__ = [
    "MODE_ANGLES",
    "PARTNER",
    "CORRELATED",
    "mode_angle",
    "total_angle",
    "OutcomeDistribution",
    "IdlerResult",
    "idler_click",
    "outcomes_from_weights",
    "signal_given_idler",
    "eve_resend_outcomes",
    "bb84_signal_outcomes",
]

# polarisation angles of Alice's modes; Eve's modes are rotated by theta
MODE_ANGLES = {"H": 0.0, "V": math.pi / 2, "D": math.pi / 4, "A": 3 * math.pi / 4}
PARTNER = {"H": "V", "V": "H", "D": "A", "A": "D", "h": "v", "v": "h", "d": "a", "a": "d"}
# idler mode -> signal mode that carries the twin photon
CORRELATED = {"H": "V", "V": "H", "D": "D", "A": "A"}

ComponentFn = Callable[[PortParams, PortParams], ComponentSet]


def mode_angle(mode: str, theta: float = 0.0) -> float:
    """Polarisation angle of a mode; lower-case labels are Eve's rotated modes."""
    if mode in MODE_ANGLES:
        return MODE_ANGLES[mode]
    upper = mode.upper()
    if mode in ("h", "v", "d", "a"):
        return MODE_ANGLES[upper] + theta
    raise ValueError(f"unknown mode label {mode!r}")


def total_angle(photon_mode: str, detector_mode: str, theta: float = 0.0) -> float:
    """Angle between a photon's mode and a detector mode.

    Only ``cos^2`` and ``sin^2`` of the result are used, so the sign and any
    multiple of ``pi`` are immaterial.  With ``theta = 0`` a diagonal photon
    seen by a rectilinear detector gives ``pi/4``.
    """
    return mode_angle(photon_mode, theta) - mode_angle(detector_mode, theta)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities of the four click patterns of a detector pair."""

    click_j_only: float
    click_k_only: float
    click_both: float
    click_neither: float

    def total(self) -> float:
        return self.click_j_only + self.click_k_only + self.click_both + self.click_neither

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.click_j_only, self.click_k_only, self.click_both, self.click_neither)


@dataclass(frozen=True)
class IdlerResult:
    """Idler click in mode Q (and not in its partner W).

    ``cond_coeffs`` holds the unnormalised weights of the conditioned signal
    state: vacuum (noise-only click), photon in the mode correlated with Q,
    photon in the mode correlated with W.  Dividing them by
    ``click_prob * norm_idler`` gives a distribution summing to one.
    """

    click_prob: float
    norm_idler: float
    cond_coeffs: tuple[float, float, float]


def idler_click(
    source: SourceParamsQI,
    idler_q: PortParams,
    idler_w: PortParams,
    policy: SeriesPolicy = DEFAULT_POLICY,
    components: ComponentFn | None = None,
) -> IdlerResult:
    """Probability that the idler pair clicks in Q only."""
    comp = components or (lambda a, b: component_values(a, b, policy))
    cqw = comp(idler_q, idler_w)
    cwq = comp(idler_w, idler_q)
    norm = source.c0 + source.c1 * (cqw.trace + cwq.trace)
    w0 = source.c0 * cqw.vac_p
    a_q = source.c1 * cqw.a_p_click
    a_w = source.c1 * cwq.a_o_click
    return IdlerResult(click_prob=(w0 + a_q + a_w) / norm, norm_idler=norm, cond_coeffs=(w0, a_q, a_w))


def outcomes_from_weights(
    w0: float,
    q2: float,
    q1: float,
    port_j: PortParams,
    port_k: PortParams,
    policy: SeriesPolicy = DEFAULT_POLICY,
    components: ComponentFn | None = None,
) -> OutcomeDistribution:
    """Click patterns for vacuum weight ``w0``, photon-in-J ``q2``, photon-in-K ``q1``."""
    comp = components or (lambda a, b: component_values(a, b, policy))
    cjk = comp(port_j, port_k)
    ckj = comp(port_k, port_j)
    norm = w0 + q2 * cjk.trace + q1 * ckj.trace
    if not norm > 0.0:
        raise ArithmeticError("detector pair receives no probability mass (normaliser <= 0)")
    return OutcomeDistribution(
        click_j_only=(w0 * cjk.vac_p + q2 * cjk.a_p_click + q1 * ckj.a_o_click) / norm,
        click_k_only=(w0 * cjk.vac_o + q2 * cjk.a_o_click + q1 * ckj.a_p_click) / norm,
        click_both=(w0 * cjk.vac_both + q2 * cjk.a_both + q1 * ckj.a_both) / norm,
        click_neither=(w0 * cjk.vac_none + q2 * cjk.a_none + q1 * ckj.a_none) / norm,
    )


def signal_given_idler(
    idler: IdlerResult,
    sig_j: PortParams,
    sig_k: PortParams,
    theta_total: float,
    policy: SeriesPolicy = DEFAULT_POLICY,
    components: ComponentFn | None = None,
) -> OutcomeDistribution:
    """Signal pair outcomes given an idler click.

    ``theta_total`` is the angle between the mode correlated with the
    clicked idler mode and detector mode J.  Alice's own detectors see
    ``0``; Eve's detectors see the angle between Alice's mode and hers.
    """
    w0, a_q, a_w = idler.cond_coeffs
    q1, q2 = q_factors(theta_total, a_q, a_w)
    return outcomes_from_weights(w0, q2, q1, sig_j, sig_k, policy, components)


def eve_resend_outcomes(
    sig_j: PortParams,
    sig_k: PortParams,
    theta_total: float,
    policy: SeriesPolicy = DEFAULT_POLICY,
    components: ComponentFn | None = None,
) -> OutcomeDistribution:
    """Alice's pair receiving the single photon Eve prepares in her measured mode."""
    c2 = math.cos(theta_total) ** 2
    s2 = math.sin(theta_total) ** 2
    return outcomes_from_weights(0.0, c2, s2, sig_j, sig_k, policy, components)


def bb84_signal_outcomes(
    source: SourceParamsBB84,
    sig_j: PortParams,
    sig_k: PortParams,
    theta_total: float,
    policy: SeriesPolicy = DEFAULT_POLICY,
    components: ComponentFn | None = None,
) -> OutcomeDistribution:
    """Pair outcomes for a truncated coherent pulse prepared at ``theta_total`` from J."""
    c2 = math.cos(theta_total) ** 2
    s2 = math.sin(theta_total) ** 2
    return outcomes_from_weights(
        source.c0_alpha, source.c1_alpha * c2, source.c1_alpha * s2, sig_j, sig_k, policy, components
    )
