import json
import math

import numpy as np
import pytest

from nklab import enumeration as en, sampler as sm
from nklab.landscape import Genome

from conftest import make


def test_chain_config_defaults_and_validation():
    cfg = sm.ChainConfig(beta=1.0, steps=1000)
    assert cfg.burn_in == 250
    for bad in (dict(beta=-1, steps=10), dict(beta=1, steps=0), dict(beta=1, steps=10, burn_in=10)):
        with pytest.raises(ValueError):
            sm.ChainConfig(**bad)


def test_metropolis_stationary_law_on_four_states():
    land = make(2, 0, 5)
    e = land.energies()
    beta = 1.2
    p, _ = en.gibbs_probabilities(e, beta)
    cfg = sm.ChainConfig(beta, 400_000, rng_seed=3, burn_in=0)
    counts = np.zeros(4)
    r = sm.metropolis_chain(land, cfg, chain_id=0)
    # energies of the 4 states are distinct, so the trace identifies the state
    for i, v in enumerate(e):
        counts[i] = np.sum(np.isclose(r.trace, v, atol=1e-12))
    freq = counts / counts.sum()
    assert np.allclose(freq, p, atol=0.01)


def test_metropolis_matches_exact_mean_energy():
    land = make(8, 2, 11)
    beta = 0.8
    exact = en.exact_free_energy(land, beta).mean_energy
    est = sm.mean_energy(land, beta, steps=40_000, n_chains=8, rng_seed=4)
    assert est.within(exact)
    assert est.n_samples == 8 and est.tau_int >= 1.0


def test_chains_are_reproducible_and_distinct():
    land = make(12, 3, 1)
    cfg = sm.ChainConfig(1.0, 5000, rng_seed=9)
    a, b = sm.metropolis_chain(land, cfg, 0), sm.metropolis_chain(land, cfg, 0)
    c = sm.metropolis_chain(land, cfg, 1)
    assert np.array_equal(a.trace, b.trace) and a.bits == b.bits
    assert not np.array_equal(a.trace, c.trace)


def test_chain_segments_compose():
    land = make(12, 3, 1)
    whole = sm.metropolis_chain(land, sm.ChainConfig(1.0, 2000, 5), 0)
    first = sm.metropolis_chain(land, sm.ChainConfig(1.0, 1000, 5), 0)
    second = sm.metropolis_chain(land, sm.ChainConfig(1.0, 1000, 5), 0, start=first.bits,
                                counter=first.counter, start_energy=first.energy)
    assert second.bits == whole.bits
    assert np.array_equal(np.concatenate([first.trace, second.trace]), whole.trace)


def test_energy_trace_consistent_with_fitness():
    land = make(20, 5, 2)
    r = sm.metropolis_chain(land, sm.ChainConfig(1.5, 3000, 1), 0)
    assert r.energy == pytest.approx(land.fitness(r.bits), abs=1e-9)
    assert r.best_energy == pytest.approx(land.fitness(r.best_bits), abs=1e-9)
    assert r.best_energy >= r.trace.max() - 1e-12


def test_integrated_autocorrelation_time():
    rng = np.random.default_rng(0)
    assert sm.integrated_autocorr_time(rng.normal(size=20_000)) == pytest.approx(1.0, abs=0.15)
    rho, x = 0.9, np.empty(200_000)
    x[0] = 0.0
    z = rng.normal(size=x.size)
    for i in range(1, x.size):
        x[i] = rho * x[i - 1] + z[i]
    assert sm.integrated_autocorr_time(x) == pytest.approx((1 + rho) / (1 - rho), rel=0.15)


def test_free_energy_at_beta_zero_is_ln2():
    est = sm.estimate_free_energy(make(10, 3, 0), 0.0)
    assert est.value == math.log(2) and est.std_error == 0.0


@pytest.mark.parametrize("seed,beta", [(0, 0.5), (1, 1.0), (2, 1.5)])
def test_thermodynamic_integration_matches_exact(seed, beta):
    land = make(10, 3, seed)
    exact = en.exact_free_energy(land, beta).F
    est = sm.estimate_free_energy(land, beta, n_chains=8, steps=8000, rng_seed=seed)
    assert est.within(exact), (est.value, est.std_error, exact)


def test_free_energy_rejects_coarse_grid():
    with pytest.raises(ValueError):
        sm.estimate_free_energy(make(8, 1, 0), 1.0, grid_step=0.2)


def test_estimate_to_json():
    est = sm.EstimateWithError(1.5, 0.1, 8, 2.0)
    rec = json.loads(est.to_json("free_energy", {"n": 8}, 1.0, [0, 9], 12.5))
    assert set(rec) >= {"op", "spec", "beta", "value", "std_error", "n", "seed_range", "wall_time_ms"}
    assert rec["n"] == 8 and rec["seed_range"] == [0, 9]


# -- tempering and maxima ------------------------------------------------------------------------

def test_parallel_tempering_basic_properties():
    land = make(14, 4, 3)
    pt = sm.parallel_tempering(land, sm.default_ladder(3.0, 8), rounds=200, steps_per_round=14, rng_seed=2)
    assert pt.energies.shape == (200, 8)
    assert np.all((pt.swap_rates >= 0) & (pt.swap_rates <= 1))
    assert pt.swap_attempts.sum() > 0
    for r in range(0, 200, 37):
        for t in range(8):
            assert pt.energies[r, t] == pytest.approx(land.fitness(int(pt.states[r, t])), abs=1e-9)
    with pytest.raises(ValueError):
        sm.parallel_tempering(land, [1.0, 0.5], 10, 10)


def test_greedy_ascent_reaches_local_maximum():
    land = make(12, 3, 8)
    bits, e = sm.greedy_ascent(land, 1234)
    assert bits in set(en.local_maxima(land).tolist())
    assert e == pytest.approx(land.fitness(bits))


def test_estimate_max_is_monotone_in_effort():
    land = make(30, 5, 1)
    vals = [sm.estimate_max(land, eff, 0).value for eff in [(1, 1000), (1, 4000), (2, 4000), (3, 8000)]]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_estimate_max_finds_small_ground_state():
    land = make(14, 4, 9)
    est = sm.estimate_max(land, (2, 20_000), 0)
    assert est.value == pytest.approx(en.ground_state(land).M, abs=1e-12)


def test_replica_overlaps_match_exact_in_rem_case():
    n = 10
    land = make(n, n - 1, 4)
    beta = 1.5
    exact = en.exact_free_energy(land, beta).p_Q1
    st = sm.replica_overlap_stats(land, beta, n_chains=16, rounds=1500, rng_seed=1)
    assert st.p_Q1.within(exact)
    assert st.q_hist.sum() == st.r_hist.sum()
    assert set(np.flatnonzero(st.q_hist)) <= {0, n}


def test_replica_overlap_requires_pairs():
    with pytest.raises(ValueError):
        sm.replica_overlap_stats(make(8, 2, 0), 1.0, n_chains=3)


def test_chaos_probe_identical_landscapes():
    est = sm.chaos_probe(3, 1.0, 10, 2, n_seeds=5)
    assert est.value == 1.0 and est.std_error == 0.0


def test_chaos_probe_decorrelated_landscapes_have_small_overlap():
    est = sm.chaos_probe(3, 0.0, 12, 11, n_seeds=30)
    assert est.value < 0.2


def test_concentration_and_monotonicity_probes():
    c = sm.concentration_probe(10, 3, 1.0, 40, [0.1, 0.5])
    assert len(c["rows"]) == 2 and c["all_below"]
    m = sm.monotonicity_probe(10, [0, 3, 9], 40)
    assert [r["k"] for r in m["rows"]] == [0, 3, 9]
    assert m["nondecreasing"]
