"""Skellam machinery and erroneous-conclusion probabilities.

A noise-reduced count (object-present clicks minus noise-only clicks over
the same shots) is the difference of two Poisson counts.  When the two
counts are correlated with covariance ``C`` the difference is Skellam with
rates reduced by ``C``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import special

__all__ = [
    "BesselOverflowError",
    "bessel_i",
    "log_bessel_i",
    "log_ive",
    "SkellamParams",
    "CovarianceEstimate",
    "skellam_pmf",
    "skellam_logpmf",
    "ConclusionReport",
    "erroneous_conclusion_probs",
    "analytic_conclusion_probs",
]


class BesselOverflowError(OverflowError):
    """``I_v(z)`` is not representable; ``log_value`` carries its natural log."""

    def __init__(self, order: float, z: float, log_value: float):
        super().__init__(f"I_{order}({z}) overflows: exp({log_value})")
        self.order, self.z, self.log_value = order, z, log_value


# Debye polynomials u_k(t) of the uniform large-order expansion
_DEBYE = (
    np.polynomial.Polynomial([0, 3, 0, -5]) / 24,
    np.polynomial.Polynomial([0, 0, 81, 0, -462, 0, 385]) / 1152,
    np.polynomial.Polynomial([0, 0, 0, 30375, 0, -369603, 0, 765765, 0, -425425]) / 414720,
    np.polynomial.Polynomial([0, 0, 0, 0, 4465125, 0, -94121676, 0, 349922430, 0,
                              -446185740, 0, 185910725]) / 39813120,
)


def _log_i_series(v: np.ndarray, z: np.ndarray, terms: int = 60) -> np.ndarray:
    """Power series in log space; accurate when ``z^2/4`` is small next to ``v + 1``."""
    x = 0.25 * z * z
    acc = np.ones_like(z)
    term = np.ones_like(z)
    for k in range(1, terms):
        term = term * x / (k * (v + k))
        acc = acc + term
    with np.errstate(divide="ignore"):
        return special.xlogy(v, 0.5 * z) - special.gammaln(v + 1) + np.log(acc)


def _log_ive_debye(v: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``log I_v(z) - z`` by the uniform large-order expansion (relative error about ``v^-5``).

    With ``w = z/v`` the exponent is ``v (sqrt(1+w^2) - w) + v log(w / (1 +
    sqrt(1+w^2)))``; the first term is evaluated as ``v / (sqrt(1+w^2) + w)``
    so the factor ``e^z`` never has to be formed and subtracted.
    """
    w = z / v
    root = np.sqrt(1.0 + w * w)
    expo = v / (root + w) + v * (np.log(w) - np.log1p(root))
    t = 1.0 / root
    corr = 1.0 + sum(u(t) / v ** (k + 1) for k, u in enumerate(_DEBYE))
    return -0.5 * np.log(2 * np.pi * v) - 0.5 * np.log(root) + expo + np.log(corr)


def log_ive(order, z):
    """``log I_order(z) - z``: the exponentially scaled Bessel function in log space.

    Uses scipy's ``ive`` where it is representable.  Where it underflows
    (order large next to ``z``), falls back to the power series for small
    ``z`` and to the uniform large-order expansion otherwise.
    """
    order = np.asarray(order, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(order < 0):
        raise ValueError("bessel_i needs order >= 0 and z >= 0")
    order, z = np.broadcast_arrays(order, z)
    with np.errstate(divide="ignore", under="ignore"):
        scaled = special.ive(order, z)
        out = np.array(np.log(scaled), dtype=float)
    bad = (scaled < 1e-280) & (z > 0)
    if np.any(bad):
        v, zz = order[bad], z[bad]
        small = 0.25 * zz * zz <= v + 1
        fix = np.empty(v.shape)
        fix[small] = _log_i_series(v[small], zz[small]) - zz[small]
        fix[~small] = _log_ive_debye(v[~small], zz[~small])
        out[bad] = fix
    return out[()] if out.ndim == 0 else out


def log_bessel_i(order, z):
    """Natural log of the modified Bessel function of the first kind, finite for any ``z > 0``."""
    return log_ive(order, z) + np.asarray(z, dtype=float)


def bessel_i(order: float, z: float) -> float:
    """``I_order(z)`` for ``order, z >= 0``; raises ``BesselOverflowError`` past float range."""
    if z < 0 or order < 0:
        raise ValueError("bessel_i needs order >= 0 and z >= 0")
    value = float(special.iv(order, z))
    if math.isinf(value):
        raise BesselOverflowError(order, z, float(log_bessel_i(order, z)))
    return value


@dataclass(frozen=True)
class SkellamParams:
    """Rates of the two Poisson counts whose difference is observed."""

    mu1: float
    mu2: float
    clamped: bool = False

    def __post_init__(self) -> None:
        if not (self.mu1 >= 0 and self.mu2 >= 0):
            raise ValueError("Skellam rates must be non-negative")

    @property
    def mean(self) -> float:
        return self.mu1 - self.mu2

    @property
    def variance(self) -> float:
        return self.mu1 + self.mu2

    @classmethod
    def from_shots(cls, shots: float, pr_object: float, pr_noise: float,
                   covariance: float = 0.0) -> "SkellamParams":
        """Rates ``N Pr - C``; negative rates are clamped to zero with a warning."""
        mu1 = shots * pr_object - covariance
        mu2 = shots * pr_noise - covariance
        clamped = mu1 < 0 or mu2 < 0
        if clamped:
            warnings.warn("Skellam rate clamped to zero: covariance exceeds expected counts",
                          RuntimeWarning, stacklevel=2)
        return cls(max(mu1, 0.0), max(mu2, 0.0), clamped)


@dataclass(frozen=True)
class CovarianceEstimate:
    """Covariance between object-present and noise-only click counts."""

    C: float
    source: str = "mc_coupled"
    clamped: bool = False

    @classmethod
    def from_samples(cls, object_counts, noise_counts, source: str = "mc_coupled") -> "CovarianceEstimate":
        """Unbiased sample covariance, clamped at zero (a negative value is sampling noise)."""
        a = np.asarray(object_counts, dtype=float)
        b = np.asarray(noise_counts, dtype=float)
        if a.shape != b.shape or a.size < 2:
            raise ValueError("need two matched samples of length >= 2")
        c = float(np.cov(a, b, ddof=1)[0, 1])
        return cls(max(c, 0.0), source, c < 0)


def skellam_logpmf(x, params: SkellamParams):
    """Log pmf of the count difference, evaluated entirely in log space."""
    x = np.asarray(x)
    if not np.all(np.equal(np.mod(x, 1), 0)):
        raise ValueError("Skellam support is the integers")
    mu1, mu2 = params.mu1, params.mu2
    with np.errstate(divide="ignore"):
        if mu1 == 0 and mu2 == 0:
            return np.where(x == 0, 0.0, -np.inf)
        if mu2 == 0:
            return np.where(x >= 0, special.xlogy(np.maximum(x, 0), mu1) - mu1
                            - special.gammaln(np.maximum(x, 0) + 1), -np.inf)
        if mu1 == 0:
            return np.where(x <= 0, special.xlogy(np.maximum(-x, 0), mu2) - mu2
                            - special.gammaln(np.maximum(-x, 0) + 1), -np.inf)
        # -mu1 - mu2 + z = -(sqrt(mu1) - sqrt(mu2))^2, kept small to avoid cancellation
        z = 2.0 * math.sqrt(mu1 * mu2)
        gap = -((math.sqrt(mu1) - math.sqrt(mu2)) ** 2)
        log_ratio = math.log1p((mu1 - mu2) / mu2)
        out = np.asarray(gap + 0.5 * x * log_ratio + log_ive(np.abs(x), z), dtype=float)
        far = np.abs(x) >= _UNIFORM_ORDER
        if np.any(far):
            out = np.array(out, copy=True)
            out[far] = _skellam_log_uniform(np.asarray(x, dtype=float)[far], mu1, mu2)
        return out if out.ndim else float(out)


_UNIFORM_ORDER = 1000  # the large-order expansion is accurate to ~1e-15 beyond this order


def _skellam_log_uniform(x: np.ndarray, mu1: float, mu2: float) -> np.ndarray:
    """Log pmf from the uniform large-order Bessel expansion with the prefactor folded in.

    With ``v = |x|``, ``s = sqrt(v^2 + 4 mu1 mu2)`` and ``mu_a`` the mean on
    the side of ``x``, the exponent collapses to
    ``s - mu1 - mu2 + v log(2 mu_a / (v + s))``, which vanishes at the mean.
    Both pieces are rewritten as differences that are computed directly, so
    no large terms cancel when the means are large and unequal.
    """
    v = np.abs(x)
    total = mu1 + mu2
    m = np.where(x > 0, mu1 - mu2, mu2 - mu1)
    s = np.sqrt(v * v + 4.0 * mu1 * mu2)
    d = (v - m) * (v + m) / (s + total)
    expo = d + v * np.log1p(((m - v) - d) / (v + s))
    t = v / s
    corr = 1.0 + sum(u(t) / v ** (k + 1) for k, u in enumerate(_DEBYE))
    return expo - 0.5 * np.log(2 * np.pi * s) + np.log(corr)


def skellam_pmf(x, params: SkellamParams):
    """Probability that the count difference equals ``x``."""
    out = np.exp(skellam_logpmf(x, params))
    return float(out) if np.ndim(out) == 0 else out


# erroneous conclusions

@dataclass(frozen=True)
class ConclusionReport:
    """The five erroneous-conclusion probabilities.

    * ``false_neg_given_real_pos``: Pr(F_w<0 | R_w>0)
    * ``k_false_gt_k_real``: Pr(k_F > k_R > 0)
    * ``e_off_nonpositive``: Pr(e_off <= 0)
    * ``real_pos_false_neg_given_e``: Pr(R_w>0, F_w<0 | e_off <= 0)
    * ``ordered_neg_given_e``: Pr(F_w <= R_w < 0 | e_off <= 0)

    ``counts`` holds the numerator and denominator of each, so binomial
    uncertainties can be derived.  Conditional entries with an empty
    condition are ``nan``.
    """

    false_neg_given_real_pos: float
    k_false_gt_k_real: float
    e_off_nonpositive: float
    real_pos_false_neg_given_e: float
    ordered_neg_given_e: float
    counts: Mapping[str, tuple[int, int]]

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.counts}


def _frac(num: np.ndarray, cond: np.ndarray) -> tuple[float, int, int]:
    n, d = int(np.count_nonzero(num & cond)), int(np.count_nonzero(cond))
    return (n / d if d else math.nan), n, d


def erroneous_conclusion_probs(real_wrong, real_correct, false_wrong, false_correct) -> ConclusionReport:
    """Frequencies of the erroneous conclusions over matched per-run samples.

    Inputs are noise-reduced expectations (or counts; only signs and ratios
    matter) of each run.  An undefined offset error (zero denominator) is
    counted as not ``<= 0``.
    """
    rw, rc, fw, fc = (np.asarray(a, dtype=float) for a in (real_wrong, real_correct, false_wrong, false_correct))
    if rw.size == 0:
        raise ValueError("empty sample set")
    if not (rw.shape == rc.shape == fw.shape == fc.shape):
        raise ValueError("sample sets must be matched")
    wrong = rw + fw
    den = wrong + rc + fc
    with np.errstate(divide="ignore", invalid="ignore"):
        e_off = np.where(den != 0, wrong / den, np.nan)
        k_r = np.where(rw > 0, rc / rw, np.nan)
        k_f = np.where(fw > 0, fc / fw, np.nan)
    everything = np.ones(rw.shape, dtype=bool)
    e_le = e_off <= 0
    vals = {
        "false_neg_given_real_pos": _frac(fw < 0, rw > 0),
        "k_false_gt_k_real": _frac((k_f > k_r) & (k_r > 0), everything),
        "e_off_nonpositive": _frac(e_le, everything),
        "real_pos_false_neg_given_e": _frac((rw > 0) & (fw < 0), e_le),
        "ordered_neg_given_e": _frac((fw <= rw) & (rw < 0), e_le),
    }
    return ConclusionReport(**{k: v[0] for k, v in vals.items()},
                            counts={k: (v[1], v[2]) for k, v in vals.items()})


def _support(params: SkellamParams, width: float) -> np.ndarray:
    sd = math.sqrt(params.variance)
    lo = math.floor(params.mean - width * sd) - 1
    hi = math.ceil(params.mean + width * sd) + 1
    return np.arange(lo, hi + 1)


def analytic_conclusion_probs(real_wrong: SkellamParams, false_wrong: SkellamParams,
                              width: float = 40.0) -> dict[str, float]:
    """Wrong-coincidence conclusions for independent Skellam channels.

    Returns Pr(F_w<0 | R_w>0) and the unconditioned Pr(F_w <= R_w < 0) by
    direct summation over a ``width``-sigma window.  The remaining report
    entries need the correct-coincidence channels and come from samples.
    """
    xr = _support(real_wrong, width)
    xf = _support(false_wrong, width)
    pr = skellam_pmf(xr, real_wrong)
    pf = skellam_pmf(xf, false_wrong)
    pr_pos = pr[xr > 0].sum()
    pf_neg = pf[xf < 0].sum()
    # Pr(F <= R < 0) = sum_{r<0} P_R(r) * Pr(F <= r)
    cdf_f = np.cumsum(pf)
    idx = np.searchsorted(xf, xr, side="right") - 1
    f_le = np.where(idx >= 0, cdf_f[np.clip(idx, 0, None)], 0.0)
    ordered = float((pr * f_le)[xr < 0].sum())
    return {"false_neg_given_real_pos": float(pf_neg) if pr_pos > 0 else math.nan,
            "ordered_neg": ordered}
