import math

import numpy as np
import pytest

from qi_spoof.mcsim import MCConfig, channel_model, simulate_ensemble, simulate_run, thread_cap
from qi_spoof.scenario import Scenario


@pytest.fixture(scope="module")
def small_cfg():
    return MCConfig(shots=200_000, runs=40, seed=123)


def test_no_light_no_counts():
    s = Scenario(n_bar=0.0)
    out = simulate_run(MCConfig(shots=10_000, runs=1), s, 0)
    assert out.idler_clicks == 0 and out.real == out.false == out.noise == (0, 0, 0)


def test_ideal_no_intrusion():
    s = Scenario(n_bar=0.01, p=0.0)
    out = simulate_run(MCConfig(shots=100_000, runs=1), s, 0)
    assert out.false == (0, 0, 0)
    assert out.real[1] == 0 and out.real[0] == out.retained


def test_seed_determinism(set3, small_cfg):
    a = simulate_ensemble(small_cfg, set3, with_verdicts=False)
    b = simulate_ensemble(small_cfg, set3, with_verdicts=False)
    assert a.runs == b.runs
    assert a.conclusions == b.conclusions


def test_parallel_matches_serial(set3):
    base = dict(shots=100_000, runs=12, seed=9)
    serial = simulate_ensemble(MCConfig(threads=1, **base), set3, with_verdicts=False)
    parallel = simulate_ensemble(MCConfig(threads=4, **base), set3, with_verdicts=False)
    assert serial.runs == parallel.runs
    for k in serial.samples:
        assert np.array_equal(serial.samples[k], parallel.samples[k])


def test_run_reproducible_in_isolation(set3, small_cfg):
    ens = simulate_ensemble(small_cfg, set3, with_verdicts=False)
    assert simulate_run(small_cfg, set3, 17) == ens.runs[17]


def test_frequencies_match_analytics(set3):
    cfg = MCConfig(shots=500_000, runs=20, seed=5)
    ens = simulate_ensemble(cfg, set3, with_verdicts=False)
    model = channel_model(set3)
    m = sum(r.retained for r in ens.runs)
    for name, dist in (("real", model.real), ("false", model.false), ("noise", model.noise)):
        counts = np.sum([getattr(r, name) for r in ens.runs], axis=0)
        for j in range(3):
            p = dist[j]
            assert abs(counts[j] / m - p) < 3.5 * math.sqrt(p * (1 - p) / m), (name, j)


def test_pollution_rate(set3):
    cfg = MCConfig(shots=2_000_000, runs=1, seed=1)
    out = simulate_run(cfg, set3, 0)
    pi = channel_model(set3).idler_prob
    # a click is discarded when the bin one gap earlier also clicked
    frac = out.discarded / out.idler_clicks
    assert abs(frac - pi) < 4 * math.sqrt(pi / out.idler_clicks)


def test_pollution_vanishes_for_weak_source(set3):
    out = simulate_run(MCConfig(shots=2_000_000, runs=1), set3.replace(n_bar=1e-5), 0)
    assert out.discarded <= 2


def test_equal_delays_never_pollute(set3):
    out = simulate_run(MCConfig(shots=500_000, runs=1, delays=(2, 1, 1)), set3, 0)
    assert out.discarded == 0


def test_coupling_sets_covariance(set3):
    base = dict(shots=200_000, runs=300, seed=3)
    coupled = simulate_ensemble(MCConfig(coupling="real", **base), set3, with_verdicts=False)
    indep = simulate_ensemble(MCConfig(coupling="independent", **base), set3, with_verdicts=False)
    c_ind = indep.covariance["real_wrong"]
    nw = np.array([r.noise[1] for r in indep.runs], dtype=float)
    rw = np.array([r.real[1] for r in indep.runs], dtype=float)
    # sampling error of a covariance estimate is about sd(a) sd(b) / sqrt(n)
    tol = 4 * nw.std() * rw.std() / math.sqrt(base["runs"])
    assert c_ind.C < tol
    assert coupled.covariance["real_wrong"].C > 0.5 * rw.var()
    # coupling narrows the noise-reduced distribution
    assert coupled.samples["real_wrong"].var() < 0.5 * indep.samples["real_wrong"].var()


def test_summary_histograms_integrate(set3, small_cfg):
    ens = simulate_ensemble(small_cfg, set3)
    dens, edges = ens.histogram("false_wrong", bins=10)
    assert np.sum(dens * np.diff(edges)) == pytest.approx(1.0)
    assert len(ens.verdicts) == small_cfg.runs
    for k, v in ens.conclusions.as_dict().items():
        assert math.isnan(v) or 0.0 <= v <= 1.0, k


def test_config_validation():
    with pytest.raises(ValueError):
        MCConfig(shots=0)
    with pytest.raises(ValueError):
        MCConfig(shots=10, coupling="bogus")
    with pytest.raises(ValueError):
        MCConfig(shots=10, delays=(1, -1, 0))


def test_requires_twin_beam(set2_bb84):
    with pytest.raises(ValueError):
        simulate_run(MCConfig(shots=10), set2_bb84, 0)


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv("QI_SPOOF_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.setenv("QI_SPOOF_THREADS", "x")
    with pytest.raises(ValueError):
        thread_cap()
