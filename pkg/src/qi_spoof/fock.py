"""Truncated Fock-state sources and the thermal-mixing components.

Every click probability in the package is assembled from a handful of
scalar components describing a detector pair (two orthogonal modes of one
basis).  One mode of the pair may carry a single photon; both modes carry
thermal background light injected through a beamsplitter whose
transmissivity models detector efficiency times path loss.

The single-photon components follow the mixing operator used in the
source model verbatim, i.e. for a photon mode with thermal occupation
``P(q)`` the diagonal weight of ``|z+1>`` is ``|t|^2 (z+1)`` and of ``|z>`` is
``|r|^2 (q-z+1)``, each multiplied by ``binom(q, z) |r|^{2z} |t|^{2(q-z)}``.
That operator has trace ``1 + 2 n |r|^2 |t|^2`` rather than one, which is why
every downstream distribution is explicitly renormalised.  The module
:mod:`qi_spoof.oracle` evaluates the same quantities from the exact
two-mode beamsplitter unitary for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, xlogy

__all__ = [
    "SourceParamsQI",
    "SourceParamsBB84",
    "PortParams",
    "SeriesPolicy",
    "SeriesConvergenceError",
    "ComponentSet",
    "thermal_pmf",
    "thermal_cutoff",
    "component_values",
    "closed_form_components",
    "q_factors",
]


class SeriesConvergenceError(ArithmeticError):
    """Raised when a thermal series needs more terms than the policy allows.

    Attributes
    ----------
    partial_sum : float
        Value accumulated over the permitted terms.
    tail_bound : float
        Thermal probability mass left outside the permitted terms.
    """

    def __init__(self, message: str, partial_sum: float, tail_bound: float):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.tail_bound = tail_bound


def _check_unit(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class SourceParamsQI:
    """Twin-beam source truncated to the vacuum and one-pair terms.

    Build instances with :meth:`from_mean`; the coefficients are derived
    quantities and are only stored for convenience.
    """

    n_bar: float
    c0: float
    c1: float
    norm0: float

    @classmethod
    def from_mean(cls, n_bar: float) -> "SourceParamsQI":
        if not (n_bar >= 0.0) or math.isinf(n_bar):
            raise ValueError(f"n_bar must be a finite non-negative number, got {n_bar!r}")
        norm0 = 1.0 / (n_bar + 1.0) ** 2 + 2.0 * n_bar / (n_bar + 1.0) ** 3
        c0 = 1.0 / ((n_bar + 1.0) ** 2 * norm0)
        c1 = n_bar / ((n_bar + 1.0) ** 3 * norm0)
        return cls(n_bar=float(n_bar), c0=c0, c1=c1, norm0=norm0)


@dataclass(frozen=True)
class SourceParamsBB84:
    """Weak coherent source truncated to vacuum plus one photon.

    The truncated state is ``c0 |0><0| + c1 |1><1|`` with
    ``c0 = 1/(1+n)`` and ``c1 = n/(1+n)``; ``norm_alpha`` is the trace of the
    untruncated pair ``e^{-n}(1 + n)`` that both coefficients are divided by.
    """

    n_bar_alpha: float
    c0_alpha: float
    c1_alpha: float
    norm_alpha: float

    @classmethod
    def from_mean(cls, n_bar_alpha: float) -> "SourceParamsBB84":
        if not (n_bar_alpha >= 0.0) or math.isinf(n_bar_alpha):
            raise ValueError(f"n_bar_alpha must be finite and non-negative, got {n_bar_alpha!r}")
        norm = math.exp(-n_bar_alpha) * (1.0 + n_bar_alpha)
        return cls(
            n_bar_alpha=float(n_bar_alpha),
            c0_alpha=1.0 / (1.0 + n_bar_alpha),
            c1_alpha=n_bar_alpha / (1.0 + n_bar_alpha),
            norm_alpha=norm,
        )

    @staticmethod
    def fair_qi_mean(n_bar_alpha: float, eta_idler: float) -> float:
        """QI mean photon number that matches a coherent source's photon budget.

        ``n = n_alpha / (2 - eta n_alpha + 2 eta n_alpha)``
        """
        return n_bar_alpha / (2.0 - eta_idler * n_bar_alpha + 2.0 * eta_idler * n_bar_alpha)


@dataclass(frozen=True)
class PortParams:
    """One detector mode: a label, its transmissivity and its raw noise.

    ``noise_raw`` is the physical background mean photon number that reaches
    the detector.  The beamsplitter model injects thermal light through the
    reflecting port, so the occupation fed into that port is rescaled to
    ``noise_raw / (1 - transmit)`` and the reflected mean comes back to
    ``noise_raw``.  A lossless port (``transmit == 1``) reflects nothing, so
    its effective noise is zero.
    """

    mode: str
    transmit: float
    noise_raw: float = 0.0

    def __post_init__(self) -> None:
        _check_unit("transmit", self.transmit)
        if not (self.noise_raw >= 0.0) or math.isinf(self.noise_raw):
            raise ValueError(f"noise_raw must be finite and non-negative, got {self.noise_raw!r}")

    @property
    def reflect(self) -> float:
        return 1.0 - self.transmit

    @property
    def noise_eff(self) -> float:
        if self.reflect <= 0.0:
            return 0.0
        return self.noise_raw / self.reflect

    @property
    def reflected_noise(self) -> float:
        """Thermal mean reaching the detector, ``|r|^2 n_eff``."""
        return self.reflect * self.noise_eff


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation rule for the thermal sums.

    A series over the thermal occupation ``q`` stops at the first index
    ``q*`` whose remaining thermal mass is below ``tail_epsilon``.
    """

    tail_epsilon: float = 1e-14
    max_terms: int = 10_000

    def __post_init__(self) -> None:
        if not (0.0 < self.tail_epsilon < 1.0):
            raise ValueError("tail_epsilon must lie in (0, 1)")
        if self.max_terms < 1:
            raise ValueError("max_terms must be positive")


DEFAULT_POLICY = SeriesPolicy()
_BLOCK = 512


def thermal_pmf(n, n_bar):
    """Thermal photon-number distribution ``n_bar^n / (n_bar + 1)^(n+1)``.

    Accepts scalars or arrays for ``n``.  Evaluated in log space so large
    ``n`` does not overflow.
    """
    n_arr = np.asarray(n)
    if np.any(n_arr < 0) or n_bar < 0:
        raise ValueError("thermal_pmf needs n >= 0 and n_bar >= 0")
    if n_bar == 0:
        out = np.where(n_arr == 0, 1.0, 0.0)
    else:
        out = np.exp(n_arr * math.log(n_bar) - (n_arr + 1) * math.log1p(n_bar))
    return float(out) if np.ndim(out) == 0 else out


def thermal_cutoff(n_bar: float, policy: SeriesPolicy = DEFAULT_POLICY) -> tuple[int, float]:
    """Smallest ``q*`` with thermal tail ``sum_{q > q*} P(q)`` below the policy bound.

    The tail of a geometric distribution is ``(n/(n+1))^(q*+1)``.  Returns
    ``(q*, tail)``; raises :class:`SeriesConvergenceError` if ``q*`` would
    exceed ``policy.max_terms - 1``.
    """
    if n_bar <= 0:
        return 0, 0.0
    log_ratio = -math.log1p(1.0 / n_bar)
    needed = math.log(policy.tail_epsilon) / log_ratio if log_ratio < 0 else math.inf
    if needed > policy.max_terms:
        q_star = math.inf
    else:
        q_star = max(0, math.ceil(needed) - 1)
        while math.exp((q_star + 1) * log_ratio) >= policy.tail_epsilon:
            q_star += 1
        tail = math.exp((q_star + 1) * log_ratio)
    if q_star + 1 > policy.max_terms:
        capped = policy.max_terms - 1
        raise SeriesConvergenceError(
            f"thermal series with n_bar={n_bar} needs {q_star + 1} terms "
            f"(max_terms={policy.max_terms})",
            partial_sum=1.0 - math.exp((capped + 1) * log_ratio),
            tail_bound=math.exp((capped + 1) * log_ratio),
        )
    return q_star, tail


@dataclass(frozen=True)
class ComponentSet:
    """Scalar components for an ordered detector pair (photon mode P, other mode O).

    The ``vac_*`` entries describe thermal noise alone on both modes; the
    ``a_*`` entries describe a single photon in P mixed with noise.  Click
    patterns are written from the point of view of (P, O).

    Attributes
    ----------
    vac_p, vac_o, vac_both, vac_none
        Noise only: P clicks alone, O clicks alone, both click, neither.
    a_p_click
        Photon in P: P clicks, O does not.  (``a_{Q|1}`` for the pair.)
    a_o_click
        Photon in P: P does not click, O clicks.  Calling with the roles
        swapped gives the ``a_{W|0}`` term of the original pair.
    a_both
        Photon in P: both click.  (``a_{Q,W|1}``.)
    a_none
        Photon in P: neither clicks.  (``a_{Q,W|0}``.)
    trace
        Sum of the four ``a_*`` terms, the trace of the mixing operator.
    """

    vac_p: float
    vac_o: float
    vac_both: float
    vac_none: float
    a_p_click: float
    a_o_click: float
    a_both: float
    a_none: float
    trace: float

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _noise_noclick(port: PortParams) -> float:
    """Probability that thermal noise alone leaves the detector dark."""
    return 1.0 / (1.0 + port.reflected_noise)


def _photon_series(port: PortParams, policy: SeriesPolicy) -> tuple[float, float]:
    """Return (sum of the click-row series, sum of the dark-row series).

    The click row is the bracket of ``a_{Q|1}``: the binomial inner sum
    minus the term that leaves the photon mode empty.  The dark row is the
    ``a_{Q,W|0}`` series ``sum P(q) |t|^{2q} |r|^2 (q+1)``.
    """
    t2 = port.transmit
    r2 = port.reflect
    n_eff = port.noise_eff
    q_star, _ = thermal_cutoff(n_eff, policy)
    q = np.arange(q_star + 1)
    pq = np.atleast_1d(thermal_pmf(q, n_eff))
    inner = np.empty(q_star + 1)
    # rows of the binomial inner sum, in blocks to bound memory for large q*
    for start in range(0, q_star + 1, _BLOCK):
        qs = q[start:start + _BLOCK, None]
        z = np.arange(qs[-1, 0] + 1)[None, :]
        valid = z <= qs
        zz = np.where(valid, z, 0)
        log_w = (gammaln(qs + 1) - gammaln(zz + 1) - gammaln(qs - zz + 1)
                 + xlogy(zz, r2) + xlogy(qs - zz, t2))
        weights = np.where(valid, np.exp(log_w), 0.0)
        inner[start:start + _BLOCK] = (weights * (t2 * (z + 1) + r2 * (qs - z + 1))).sum(axis=1)
    with np.errstate(divide="ignore"):
        dark = np.where(q == 0, r2, r2 * (q + 1) * np.power(t2, q))
    click_row = float(np.dot(pq, inner - dark))
    dark_row = float(np.dot(pq, dark))
    return click_row, dark_row


@lru_cache(maxsize=4096)
def component_values(
    port_p: PortParams, port_o: PortParams, policy: SeriesPolicy = DEFAULT_POLICY
) -> ComponentSet:
    """Evaluate all components for the ordered pair (``port_p``, ``port_o``).

    The thermal sums are evaluated term by term and truncated per ``policy``.
    Results are memoised; all arguments are immutable.
    """
    p0 = _noise_noclick(port_p)
    o0 = _noise_noclick(port_o)
    click_row, dark_row = _photon_series(port_p, policy)
    return ComponentSet(
        vac_p=(1.0 - p0) * o0,
        vac_o=p0 * (1.0 - o0),
        vac_both=(1.0 - p0) * (1.0 - o0),
        vac_none=p0 * o0,
        a_p_click=click_row * o0,
        a_o_click=dark_row * (1.0 - o0),
        a_both=click_row * (1.0 - o0),
        a_none=dark_row * o0,
        trace=click_row + dark_row,
    )


def closed_form_components(port_p: PortParams, port_o: PortParams) -> ComponentSet:
    """Same components as :func:`component_values`, from summed geometric series.

    ``sum P(q)(1 + 2 q |r|^2|t|^2) = 1 + 2 n |r|^2 |t|^2`` and
    ``sum P(q)|t|^{2q}|r|^2(q+1) = |r|^2 (n+1) / (n + 1 - n|t|^2)^2``.
    Used as a fast path and as a cross-check of the truncated series.
    """
    t2, r2, n = port_p.transmit, port_p.reflect, port_p.noise_eff
    p0 = _noise_noclick(port_p)
    o0 = _noise_noclick(port_o)
    trace = 1.0 + 2.0 * n * r2 * t2
    dark_row = r2 * (n + 1.0) / (n + 1.0 - n * t2) ** 2
    click_row = trace - dark_row
    return ComponentSet(
        vac_p=(1.0 - p0) * o0,
        vac_o=p0 * (1.0 - o0),
        vac_both=(1.0 - p0) * (1.0 - o0),
        vac_none=p0 * o0,
        a_p_click=click_row * o0,
        a_o_click=dark_row * (1.0 - o0),
        a_both=click_row * (1.0 - o0),
        a_none=dark_row * o0,
        trace=trace,
    )


def q_factors(theta_total: float, a_click: float, a_noclick: float) -> tuple[float, float]:
    """Split single-photon weight between the two signal modes.

    ``q1 = a_click sin^2 + a_noclick cos^2`` and
    ``q2 = a_click cos^2 + a_noclick sin^2`` at the total angle.
    """
    c2 = math.cos(theta_total) ** 2
    s2 = math.sin(theta_total) ** 2
    return a_click * s2 + a_noclick * c2, a_click * c2 + a_noclick * s2
