"""Shot-level Monte-Carlo of the temporal spoofing range-finding experiment.

Each run covers ``shots`` time-bins.  A bin whose idler pair clicks in
exactly one mode opens two windows: the real channel ``delta_real`` bins
later and the false channel ``delta_false`` bins later.  Each window's
outcome (correct, wrong, double or none) is drawn from the analytic
conditional distribution of its channel.  A noise-only reference stream is
drawn alongside, driven by the same uniforms as one chosen channel (common
random numbers), and subtracted from both channels to form noise-reduced
expectations.

A later idler click whose window lands on an earlier click's window of the
other channel is a polluted bin and is discarded.

Seeds: run ``i`` uses ``SeedSequence(seed, spawn_key=(i,))``, so every run is
reproducible in isolation and results do not depend on the thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coincidence import ZERO, CoincidenceTriple, IntrusionParams, compose_channels, contributions
from .detection import PARTNER, idler_click
from .scenario import ALICE_MODES, Scenario
from .security import ChannelEstimate, Verdict, estimate_offset_threshold, recognize_and_attribute
from .stats import ConclusionReport, CovarianceEstimate, erroneous_conclusion_probs

__all__ = [
    "CATEGORIES",
    "COUPLINGS",
    "MCConfig",
    "ChannelModel",
    "RunOutcome",
    "MCSummary",
    "channel_model",
    "simulate_run",
    "simulate_ensemble",
    "thread_cap",
]

CATEGORIES = ("correct", "wrong", "double")
COUPLINGS = ("real", "false", "independent")
THREADS_ENV = "QI_SPOOF_THREADS"


def thread_cap() -> int:
    """Worker count: ``QI_SPOOF_THREADS`` if set, else the CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    return os.cpu_count() or 1


@dataclass(frozen=True)
class MCConfig:
    """Ensemble settings.

    ``delays`` overrides the scenario's ``(idler_to_signal, idler_to_eve,
    eve_to_signal)``.  ``coupling`` selects which channel's uniforms drive
    the noise-only stream.
    """

    shots: int
    runs: int = 5000
    seed: int = 0
    delays: tuple[int, int, int] | None = None
    coupling: str = "real"
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.shots < 1 or self.runs < 1:
            raise ValueError("shots and runs must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"coupling must be one of {COUPLINGS}")
        if self.delays is not None and (len(self.delays) != 3 or any(d < 0 for d in self.delays)):
            raise ValueError("delays must be three non-negative integers")

    def channel_delays(self, scenario: Scenario) -> tuple[int, int]:
        if self.delays is None:
            return scenario.channel_delays
        i_s, i_e, e_s = self.delays
        return i_s, i_e + e_s


@dataclass(frozen=True)
class ChannelModel:
    """Per-bin click probability and conditional outcome distributions."""

    idler_prob: float
    real: np.ndarray
    false: np.ndarray
    noise: np.ndarray
    triples: tuple[CoincidenceTriple, CoincidenceTriple, CoincidenceTriple]


def _conditional(t: CoincidenceTriple, idler_prob: float) -> np.ndarray:
    v = np.array(t.as_tuple()) / idler_prob
    return np.append(v, max(0.0, 1.0 - v.sum()))


def channel_model(scenario: Scenario) -> ChannelModel:
    """Analytic inputs of the simulation for a twin-beam scenario."""
    if scenario.system != "qi":
        raise ValueError("the range-finding simulation needs the twin-beam system")
    scenario.validate()
    src = scenario.qi_source
    pi = sum(0.5 * idler_click(src, scenario.idler_port(q), scenario.idler_port(PARTNER[q])).click_prob
             for q in ALICE_MODES)
    if pi <= 0:
        # the idler never clicks, so no window is ever opened
        none = np.array([0.0, 0.0, 0.0, 1.0])
        return ChannelModel(0.0, none, none, none, (ZERO, ZERO, ZERO))
    alice, eve, noise = contributions(scenario)
    real, false = compose_channels(alice, eve, noise, IntrusionParams.from_scenario(scenario))
    return ChannelModel(pi, _conditional(real, pi), _conditional(false, pi),
                        _conditional(noise, pi), (alice, eve, noise))


@dataclass(frozen=True)
class RunOutcome:
    """Counts of one run; each count array is ``(correct, wrong, double)``."""

    run_index: int
    idler_clicks: int
    retained: int
    discarded: int
    real: tuple[int, int, int]
    false: tuple[int, int, int]
    noise: tuple[int, int, int]
    shots: int

    def estimate(self, channel: str) -> ChannelEstimate:
        """Noise-reduced expectations per shot with Skellam standard deviations."""
        c = getattr(self, channel)
        n = self.noise
        return ChannelEstimate(
            wrong_nr=(c[1] - n[1]) / self.shots,
            correct_nr=(c[0] - n[0]) / self.shots,
            wrong_sd=math.sqrt(c[1] + n[1]) / self.shots,
            correct_sd=math.sqrt(c[0] + n[0]) / self.shots,
        )

    @property
    def e_offset(self) -> float | None:
        return estimate_offset_threshold(self.estimate("real"), self.estimate("false"))


def _idler_bins(rng: np.random.Generator, prob: float, shots: int) -> np.ndarray:
    """Positions of Bernoulli(prob) successes in ``range(shots)`` via geometric gaps."""
    if prob <= 0:
        return np.empty(0, dtype=np.int64)
    if prob >= 1:
        return np.arange(shots, dtype=np.int64)
    chunk = max(16, int(shots * prob * 1.2 + 10 * math.sqrt(shots * prob) + 16))
    pos = np.cumsum(rng.geometric(prob, size=chunk)) - 1
    while pos[-1] < shots:
        more = np.cumsum(rng.geometric(prob, size=chunk)) + pos[-1]
        pos = np.concatenate([pos, more])
    return pos[pos < shots]


def _polluted(bins: np.ndarray, d_real: int, d_false: int) -> np.ndarray:
    """Mask of later clicks whose window coincides with an earlier click's other-channel window."""
    gap = abs(d_false - d_real)
    if gap == 0 or bins.size == 0:
        return np.zeros(bins.shape, dtype=bool)
    return np.isin(bins - gap, bins)


def _draw(u: np.ndarray, dist: np.ndarray) -> np.ndarray:
    return np.searchsorted(np.cumsum(dist[:3]), u, side="right")


def _tally(outcomes: np.ndarray) -> tuple[int, int, int]:
    c = np.bincount(outcomes, minlength=4)
    return int(c[0]), int(c[1]), int(c[2])


def simulate_run(config: MCConfig, scenario: Scenario, run_index: int,
                 model: ChannelModel | None = None) -> RunOutcome:
    """Simulate one run; ``model`` may be passed to skip recomputing the analytics."""
    model = model if model is not None else channel_model(scenario)
    d_real, d_false = config.channel_delays(scenario)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(run_index,)))
    bins = _idler_bins(rng, model.idler_prob, config.shots)
    bad = _polluted(bins, d_real, d_false)
    m = int(bins.size - np.count_nonzero(bad))
    u_real = rng.random(m)
    u_false = rng.random(m)
    u_noise = {"real": u_real, "false": u_false}.get(config.coupling)
    if u_noise is None:
        u_noise = rng.random(m)
    return RunOutcome(
        run_index=run_index, idler_clicks=int(bins.size), retained=m,
        discarded=int(np.count_nonzero(bad)),
        real=_tally(_draw(u_real, model.real)), false=_tally(_draw(u_false, model.false)),
        noise=_tally(_draw(u_noise, model.noise)), shots=config.shots,
    )


@dataclass
class MCSummary:
    """Aggregate of an ensemble.

    ``covariance`` maps ``"<channel>_<category>"`` to the covariance between
    that channel's count and the noise-only count of the same category.
    ``samples`` holds per-run noise-reduced expectations keyed
    ``real_wrong``, ``real_correct``, ``false_wrong``, ``false_correct``.
    """

    config: MCConfig
    runs: list[RunOutcome]
    covariance: dict[str, CovarianceEstimate]
    samples: dict[str, np.ndarray]
    conclusions: ConclusionReport
    verdicts: list[Verdict] = field(repr=False, default_factory=list)

    def histogram(self, key: str, bins: int = 50) -> tuple[np.ndarray, np.ndarray]:
        """Density histogram of one noise-reduced sample set (integrates to 1)."""
        return np.histogram(self.samples[key], bins=bins, density=True)


def simulate_ensemble(config: MCConfig, scenario: Scenario, with_verdicts: bool = True) -> MCSummary:
    """Run ``config.runs`` independent runs and aggregate them in run order."""
    model = channel_model(scenario)
    workers = min(config.threads or thread_cap(), config.runs)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda i: simulate_run(config, scenario, i, model), range(config.runs)))
    else:
        runs = [simulate_run(config, scenario, i, model) for i in range(config.runs)]

    counts = {ch: np.array([getattr(r, ch) for r in runs], dtype=float) for ch in ("real", "false", "noise")}
    cov = {}
    if config.runs >= 2:
        for ch in ("real", "false"):
            for j, cat in enumerate(CATEGORIES):
                cov[f"{ch}_{cat}"] = CovarianceEstimate.from_samples(
                    counts[ch][:, j], counts["noise"][:, j], source=f"mc_{config.coupling}")
    n = float(config.shots)
    samples = {
        "real_wrong": (counts["real"][:, 1] - counts["noise"][:, 1]) / n,
        "real_correct": (counts["real"][:, 0] - counts["noise"][:, 0]) / n,
        "false_wrong": (counts["false"][:, 1] - counts["noise"][:, 1]) / n,
        "false_correct": (counts["false"][:, 0] - counts["noise"][:, 0]) / n,
    }
    report = erroneous_conclusion_probs(samples["real_wrong"], samples["real_correct"],
                                        samples["false_wrong"], samples["false_correct"])
    verdicts = []
    if with_verdicts:
        noise = model.triples[2]
        verdicts = [recognize_and_attribute(r.estimate("real"), r.estimate("false"), noise) for r in runs]
    return MCSummary(config, runs, cov, samples, report, verdicts)
