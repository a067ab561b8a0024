"""Dense Fock-space reference for the detector-pair components.

Each detector mode is modelled as a beamsplitter: the light heading for the
detector enters one port, a thermal state with the rescaled occupation
enters the other, and the detector sees the transmitted output.  This
module propagates every input Fock pair ``|m, n>`` through the exact
two-mode unitary, using matrix elements computed combinatorially, and
accumulates the detected photon-number distribution.  Nothing here reuses
the series of :mod:`qi_spoof.fock`, so agreement between the two is a
genuine check and disagreement isolates where the mixing operator of the
source model departs from unitary evolution.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, xlogy

from .fock import ComponentSet, PortParams, SeriesPolicy, thermal_cutoff, thermal_pmf

__all__ = [
    "beamsplitter_column",
    "detected_distribution",
    "unitary_components",
    "mixing_operator_distribution",
]

_ORACLE_POLICY = SeriesPolicy(tail_epsilon=1e-15, max_terms=20_000)


def beamsplitter_column(m: int, n: int, transmit: float) -> np.ndarray:
    """Output amplitudes of ``|m>_signal |n>_noise`` over ``|k>_det |m+n-k>_lost``.

    Creation operators map as ``a^+ -> t A^+ - r C^+`` and
    ``b^+ -> r A^+ + t C^+`` with ``A`` the detected mode.  Returns the real
    amplitude vector indexed by ``k = 0..m+n``; its squared norm is one.
    """
    log_t = 0.5 * math.log(transmit) if transmit > 0 else -math.inf
    log_r = 0.5 * math.log1p(-transmit) if transmit < 1 else -math.inf
    total = m + n
    k = np.arange(total + 1)
    # sqrt(k! (total-k)! / (m! n!)) from normalising the output Fock states
    log_norm = 0.5 * (gammaln(k + 1) + gammaln(total - k + 1) - gammaln(m + 1) - gammaln(n + 1))
    j = np.arange(n + 1)
    with np.errstate(invalid="ignore"):
        log_cj = (gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1)
                  + np.where(j > 0, j * log_r, 0.0) + np.where(n - j > 0, (n - j) * log_t, 0.0))
    amp = np.zeros(total + 1)
    # (t A - r C)^m (r A + t C)^n, collect A^k C^(total-k) with k = i + j
    for i in range(m + 1):
        with np.errstate(invalid="ignore"):
            log_ci = (gammaln(m + 1) - gammaln(i + 1) - gammaln(m - i + 1)
                      + (i * log_t if i > 0 else 0.0) + ((m - i) * log_r if m - i > 0 else 0.0))
        if log_ci == -math.inf:
            continue
        sign = -1.0 if (m - i) % 2 else 1.0
        amp[i: i + n + 1] += sign * np.exp(log_ci + log_cj + log_norm[i: i + n + 1])
    return amp


def detected_distribution(port: PortParams, photons: int) -> np.ndarray:
    """Detected photon-number distribution for ``photons`` signal photons plus noise.

    The thermal input is truncated where its tail drops below 1e-15; the
    returned vector is indexed by detected photon number.
    """
    n_eff = port.noise_eff
    q_star, _ = thermal_cutoff(n_eff, _ORACLE_POLICY)
    out = np.zeros(q_star + photons + 1)
    weights = np.atleast_1d(thermal_pmf(np.arange(q_star + 1), n_eff))
    for n, w in enumerate(weights):
        if w == 0.0:
            continue
        col = beamsplitter_column(photons, n, port.transmit)
        out[: col.size] += w * col**2
    return out


def unitary_components(port_p: PortParams, port_o: PortParams) -> ComponentSet:
    """Components for (photon mode P, other mode O) from unitary evolution."""
    dark_p_noise = detected_distribution(port_p, 0)[0]
    dark_o_noise = detected_distribution(port_o, 0)[0]
    photon = detected_distribution(port_p, 1)
    dark_p_photon = photon[0]
    click_p_photon = float(photon[1:].sum())
    return ComponentSet(
        vac_p=(1.0 - dark_p_noise) * dark_o_noise,
        vac_o=dark_p_noise * (1.0 - dark_o_noise),
        vac_both=(1.0 - dark_p_noise) * (1.0 - dark_o_noise),
        vac_none=dark_p_noise * dark_o_noise,
        a_p_click=click_p_photon * dark_o_noise,
        a_o_click=dark_p_photon * (1.0 - dark_o_noise),
        a_both=click_p_photon * (1.0 - dark_o_noise),
        a_none=dark_p_photon * dark_o_noise,
        trace=click_p_photon + dark_p_photon,
    )


def mixing_operator_distribution(port: PortParams) -> np.ndarray:
    """Diagonal of the source model's photon-plus-noise mixing operator.

    Built explicitly as a dense diagonal by routing every thermal term,
    rather than through the summed click rows.  Its sum exceeds one by
    ``2 n |r|^2 |t|^2``, the interference term the operator omits.
    """
    t2, r2, n_eff = port.transmit, port.reflect, port.noise_eff
    q_star, _ = thermal_cutoff(n_eff, _ORACLE_POLICY)
    out = np.zeros(q_star + 2)
    weights = np.atleast_1d(thermal_pmf(np.arange(q_star + 1), n_eff))
    for q, w in enumerate(weights):
        if w == 0.0:
            continue
        z = np.arange(q + 1)
        with np.errstate(divide="ignore"):
            log_b = (gammaln(q + 1) - gammaln(z + 1) - gammaln(q - z + 1)
                     + xlogy(z, r2) + xlogy(q - z, t2))
        b = w * np.exp(log_b)
        out[1: q + 2] += b * t2 * (z + 1)
        out[: q + 1] += b * r2 * (q - z + 1)
    return out
