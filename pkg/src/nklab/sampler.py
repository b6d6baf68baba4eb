"""Monte Carlo estimation for landscapes beyond exhaustive range.

All randomness comes from a counter-based stream keyed by
``(rng_seed, chain id, step counter)`` and tagged apart from the disorder
hash, so every run is reproducible regardless of scheduling.  Estimates
always come from several independent chains: the reported standard error is
the spread of the per-chain estimates, and the integrated autocorrelation
time of the pooled trace is reported alongside.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import enumeration
from ._backend import kernels
from ._pykernels import chain_hash
from .landscape import Genome, Landscape, LandscapeSpec, interpolated_pair, overlap_Q
from .theory import LN2, free_energy_envelope, max_envelope

__all__ = [
    "ChainConfig", "EstimateWithError", "ChainResult", "PTResult",
    "metropolis_chain", "mean_energy", "parallel_tempering", "greedy_ascent",
    "estimate_max", "estimate_free_energy", "replica_overlap_stats", "chaos_probe",
    "concentration_probe", "monotonicity_probe", "integrated_autocorr_time",
    "disorder_seed", "default_ladder", "ti_grid",
]

MIN_CHAINS = 8
START_COUNTER = (1 << 64) - 1  # counter reserved for the initial genome
SWAP_CHAIN = (1 << 63) + 0x5357  # stream id for replica-exchange decisions


def disorder_seed(base: int, index: int) -> int:
    """Seed of the ``index``-th disorder replica of a sweep."""
    return (int(base) + int(index)) % (1 << 64)


@dataclass(frozen=True)
class ChainConfig:
    beta: float
    steps: int
    rng_seed: int = 0
    burn_in: int | None = None  # default steps // 4
    record_every: int = 1

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.steps < 1 or self.record_every < 1:
            raise ValueError("steps and record_every must be positive")
        burn = self.steps // 4 if self.burn_in is None else self.burn_in
        if not 0 <= burn < self.steps:
            raise ValueError("need 0 <= burn_in < steps")
        object.__setattr__(self, "burn_in", burn)


@dataclass
class EstimateWithError:
    value: float
    std_error: float
    n_samples: int
    tau_int: float | None = None
    meta: dict = field(default_factory=dict)

    def within(self, target: float, n_sigma: float = 3.0, other_se: float = 0.0) -> bool:
        return abs(self.value - target) <= n_sigma * math.hypot(self.std_error, other_se)

    def to_json(self, op: str, spec: dict | None = None, beta: float | None = None,
                seed_range: Sequence[int] | None = None, wall_time_ms: float | None = None) -> str:
        rec = {"op": op, "spec": spec, "beta": beta, "value": self.value,
               "std_error": self.std_error, "n": self.n_samples,
               "seed_range": list(seed_range) if seed_range is not None else None,
               "wall_time_ms": wall_time_ms}
        if self.tau_int is not None:
            rec["tau_int"] = self.tau_int
        return json.dumps(rec, sort_keys=True)


def _from_samples(x: Sequence[float], tau: float | None = None, **meta) -> EstimateWithError:
    x = np.asarray(x, dtype=np.float64)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.inf
    return EstimateWithError(float(x.mean()), se, int(x.size), tau, dict(meta))


def integrated_autocorr_time(x: np.ndarray, c: float = 5.0) -> float:
    """Integrated autocorrelation time with Sokal's self-consistent window."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 4:
        return 1.0
    y = x - x.mean()
    var = y @ y / n
    if var == 0.0:
        return 1.0
    f = np.fft.rfft(y, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (n * var)
    tau = 1.0
    for w in range(1, n):
        tau += 2.0 * acf[w]
        if w >= c * tau:
            break
    return max(tau, 1.0)


# -- single chains -----------------------------------------------------------------------

@dataclass
class ChainResult:
    bits: int
    energy: float
    trace: np.ndarray  # H after every ``record_every`` steps
    accepted: int
    best_energy: float
    best_bits: int
    counter: int


def initial_bits(landscape: Landscape, rng_seed: int, chain_id: int) -> int:
    return chain_hash(rng_seed, chain_id, START_COUNTER) & ((1 << landscape.n) - 1)


def metropolis_chain(landscape: Landscape, cfg: ChainConfig, chain_id: int = 0,
                     start: int | None = None, counter: int = 0,
                     start_energy: float | None = None) -> ChainResult:
    """Single-spin-flip Metropolis targeting ``exp(beta H)``.

    Each step draws a locus uniformly and accepts the flip with probability
    ``min(1, exp(beta Delta))``.  To continue a chain, pass its final
    ``bits``, ``counter`` and ``energy``; the continuation is then identical
    to one longer run.
    """
    bits = initial_bits(landscape, cfg.rng_seed, chain_id) if start is None else int(start)
    energy = landscape.fitness(bits) if start_energy is None else float(start_energy)
    out = kernels.metropolis(*landscape.kernel_args(), cfg.beta, bits, energy, cfg.steps,
                             cfg.rng_seed, chain_id, counter, cfg.record_every)
    return ChainResult(*out)


def mean_energy(landscape: Landscape, beta: float, steps: int, n_chains: int = MIN_CHAINS,
                rng_seed: int = 0, burn_in: int | None = None,
                method: str = "tempering") -> EstimateWithError:
    """``<H>_beta / N`` from independent runs (time average after burn-in).

    ``method="tempering"`` (default) runs each chain as a replica-exchange
    ladder from 0 to ``beta`` (spacing at most 0.1) and averages at the
    target temperature; single-flip chains alone freeze in local maxima once
    ``beta`` approaches ``beta_c``.  ``method="metropolis"`` uses plain
    independent chains (``burn_in`` applies to this method only; tempering
    discards the first quarter of its rounds).  ``steps`` counts Metropolis
    steps per temperature.
    """
    if method == "metropolis":
        cfg = ChainConfig(beta, steps, rng_seed, burn_in)
        per_chain, traces = [], []
        for c in range(n_chains):
            r = metropolis_chain(landscape, cfg, c)
            t = r.trace[cfg.burn_in:] / landscape.n
            per_chain.append(t.mean())
            traces.append(t)
    elif method == "tempering":
        means, traces = _tempered_means(landscape, ti_grid(beta, 0.1), steps, n_chains, rng_seed)
        per_chain = means[:, -1]
    else:
        raise ValueError(f"unknown method {method!r}")
    tau = float(np.mean([integrated_autocorr_time(t) for t in traces]))
    return _from_samples(per_chain, tau)


# -- parallel tempering ------------------------------------------------------------------------

def default_ladder(beta_max: float, n_temps: int, beta_min: float = 0.05) -> np.ndarray:
    """Geometric ladder from ``beta_min`` to ``beta_max`` (strictly increasing)."""
    if n_temps < 2:
        return np.array([beta_max])
    return np.geomspace(beta_min, beta_max, n_temps)


@dataclass
class PTResult:
    ladder: np.ndarray
    energies: np.ndarray  # (rounds, n_temps) energy at each temperature after each round
    states: np.ndarray  # (rounds, n_temps) genome bits, uint64
    swap_attempts: np.ndarray
    swap_accepts: np.ndarray
    best_energy: float
    best_bits: int
    round_records: list[tuple[int, float, int]]  # (round, energy, bits) when the record improved

    @property
    def swap_rates(self) -> np.ndarray:
        return self.swap_accepts / np.maximum(self.swap_attempts, 1)


def parallel_tempering(landscape: Landscape, ladder: Sequence[float], rounds: int,
                       steps_per_round: int, rng_seed: int = 0, chain_base: int = 0) -> PTResult:
    """Replica-exchange Metropolis over an increasing ``ladder`` of betas.

    Each round runs ``steps_per_round`` Metropolis steps at every
    temperature, then proposes swaps between adjacent temperatures
    (even pairs on even rounds, odd pairs on odd rounds), accepted with
    probability ``min(1, exp((b_i - b_j)(H_j - H_i)))``.  Temperature slot
    ``t`` always uses chain stream ``chain_base + t``.
    """
    ladder = np.asarray(ladder, dtype=np.float64)
    if ladder.ndim != 1 or ladder.size < 1 or np.any(np.diff(ladder) <= 0):
        raise ValueError("ladder must be strictly increasing")
    nt = ladder.size
    n = landscape.n
    bits = [initial_bits(landscape, rng_seed, chain_base + t) for t in range(nt)]
    ener = [landscape.fitness(b) for b in bits]
    counters = [0] * nt
    swap_counter = 0
    swap_id = SWAP_CHAIN + chain_base
    e_hist = np.empty((rounds, nt))
    s_hist = np.empty((rounds, nt), dtype=np.uint64)
    attempts = np.zeros(max(nt - 1, 0), dtype=np.int64)
    accepts = np.zeros(max(nt - 1, 0), dtype=np.int64)
    args = landscape.kernel_args()
    best_e = max(ener)
    best_b = bits[int(np.argmax(ener))]
    records = [(-1, best_e, best_b)]
    for r in range(rounds):
        for t in range(nt):
            out = kernels.metropolis(*args, float(ladder[t]), bits[t], ener[t], steps_per_round,
                                     rng_seed, chain_base + t, counters[t], 0)
            bits[t], ener[t], _, _, be, bb, counters[t] = out
            if be > best_e:
                best_e, best_b = be, bb
        for t in range(r % 2, nt - 1, 2):
            u = kernels.chain_uniform(rng_seed, swap_id, swap_counter)
            swap_counter += 1
            attempts[t] += 1
            x = (ladder[t] - ladder[t + 1]) * (ener[t + 1] - ener[t])
            if x >= 0.0 or u < math.exp(x):
                accepts[t] += 1
                bits[t], bits[t + 1] = bits[t + 1], bits[t]
                ener[t], ener[t + 1] = ener[t + 1], ener[t]
        e_hist[r] = ener
        s_hist[r] = bits
        if best_e > records[-1][1]:
            records.append((r, best_e, best_b))
    return PTResult(ladder, e_hist, s_hist, attempts, accepts, best_e, best_b, records)


# -- maximisation ------------------------------------------------------------------------

def greedy_ascent(landscape: Landscape, bits: int) -> tuple[int, float]:
    """Steepest single-flip ascent to a 1-flip local maximum."""
    n = landscape.n
    e = landscape.fitness(bits)
    while True:
        deltas = [landscape.delta_fitness(bits, j) for j in range(n)]
        j = int(np.argmax(deltas))
        if deltas[j] <= 0.0:
            return bits, e
        bits ^= 1 << j
        e += deltas[j]


@dataclass
class MaxEstimate:
    value: float  # best H/N found: a lower bound on M
    bits: int
    per_restart: list[float]


def estimate_max(landscape: Landscape, effort: tuple[int, int] = (4, 20_000), rng_seed: int = 0,
                 n_temps: int = 12, beta_max: float = 6.0, steps_per_round: int | None = None) -> MaxEstimate:
    """Lower bound on ``M`` by parallel tempering plus greedy polishing.

    ``effort = (restarts, steps)``: ``restarts`` independent tempering runs,
    each performing about ``steps`` Metropolis steps per temperature.  Every
    time a run's record improves, the record genome is polished by steepest
    ascent; the answer is the best polished value.  Runs are prefix-
    consistent in both effort knobs, so more effort never returns less.
    """
    restarts, steps = effort
    n = landscape.n
    spr = steps_per_round or max(n, 10)
    rounds = max(steps // spr, 1)
    ladder = default_ladder(beta_max, n_temps, beta_min=0.1)
    best_v, best_b = -math.inf, 0
    per = []
    for r in range(restarts):
        pt = parallel_tempering(landscape, ladder, rounds, spr, rng_seed, chain_base=r * (n_temps + 1))
        run_best, run_bits = -math.inf, 0
        for _, _, b in pt.round_records:
            pb, pe = greedy_ascent(landscape, b)
            if pe > run_best or (pe == run_best and pb < run_bits):
                run_best, run_bits = pe, pb
        per.append(run_best / n)
        if run_best > best_v:
            best_v, best_b = run_best, run_bits
    return MaxEstimate(best_v / n, best_b, per)


# -- free energy by thermodynamic integration ------------------------------------------------------

def ti_grid(beta: float, grid_step: float) -> np.ndarray:
    """Uniform grid ``0, h, ..., beta`` with ``h <= grid_step``."""
    m = max(int(math.ceil(beta / grid_step - 1e-12)), 1)
    return np.linspace(0.0, beta, m + 1) if beta > 0 else np.array([0.0])


def _tempered_means(landscape: Landscape, ladder: np.ndarray, steps: int, n_chains: int,
                    rng_seed: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Per-run mean of ``H/N`` at every ladder temperature, plus target-temperature traces.

    Each run is an independent replica-exchange simulation (one round =
    ``N`` steps per temperature); the first quarter of the rounds is burn-in.
    """
    n = landscape.n
    rounds = max(steps // n, 20)
    burn = rounds // 4
    means = np.empty((n_chains, ladder.size))
    traces = []
    for c in range(n_chains):
        pt = parallel_tempering(landscape, ladder, rounds, n, rng_seed, chain_base=c * (ladder.size + 1))
        e = pt.energies[burn:] / n
        means[c] = e.mean(axis=0)
        traces.append(e[:, -1])
    return means, traces


def _trapezoid(grid: np.ndarray, y: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(grid)))


def estimate_free_energy(landscape: Landscape, beta: float, n_chains: int = MIN_CHAINS,
                         steps: int = 20_000, grid_step: float = 0.05, rng_seed: int = 0) -> EstimateWithError:
    """``F(beta) = ln 2 + int_0^beta <H>_b / N db`` for one landscape.

    The grid doubles as a replica-exchange ladder, so each independent run
    samples every grid temperature at once and yields its own trapezoid
    estimate.  The standard error combines the run-to-run spread with a
    Richardson estimate of the discretisation error (``|T_h - T_2h| / 3``).
    ``steps`` counts Metropolis steps per grid temperature.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if beta == 0:
        return EstimateWithError(LN2, 0.0, n_chains)
    if grid_step > 0.1:
        raise ValueError("grid step must be at most 0.1")
    grid = ti_grid(beta, grid_step)
    means, _ = _tempered_means(landscape, grid, steps, n_chains, rng_seed)
    fine = [LN2 + _trapezoid(grid, m) for m in means]
    coarse = []
    if grid.size >= 3 and (grid.size - 1) % 2 == 0:
        coarse = [LN2 + _trapezoid(grid[::2], m[::2]) for m in means]
    est = _from_samples(fine)
    if coarse:
        disc = abs(est.value - float(np.mean(coarse))) / 3.0
        est.meta["discretisation_error"] = disc
        est.std_error = math.hypot(est.std_error, disc)
    return est


def estimate_free_energy_disorder(spec_n: int, k: int, beta: float, n_seeds: int, base_seed: int = 0,
                                  **kwargs) -> EstimateWithError:
    """Disorder average of :func:`estimate_free_energy` over ``n_seeds`` landscapes."""
    vals = []
    for i in range(n_seeds):
        land = Landscape(LandscapeSpec(n=spec_n, k=k, seed=disorder_seed(base_seed, i)))
        vals.append(estimate_free_energy(land, beta, **kwargs).value)
    return _from_samples(vals)


# -- replica overlaps --------------------------------------------------------------------------

@dataclass
class OverlapStats:
    p_Q0: EstimateWithError
    p_Q1: EstimateWithError
    mean_Q: EstimateWithError
    mean_R: EstimateWithError
    q_hist: np.ndarray  # pooled counts of N Q
    r_hist: np.ndarray  # pooled counts of N R + N


def replica_overlap_stats(landscape: Landscape, beta: float, n_chains: int = 16, rounds: int = 2000,
                          steps_per_round: int | None = None, n_temps: int = 16,
                          burn_in_rounds: int | None = None, rng_seed: int = 0) -> OverlapStats:
    """Overlap law of two independent Gibbs replicas at ``beta``.

    ``n_chains`` independent tempering runs (ladder ending at ``beta``) are
    paired up; run ``2c`` and run ``2c+1`` are sampled at the same rounds
    after burn-in, and each pair contributes one estimate per statistic.
    """
    if n_chains < 2 or n_chains % 2:
        raise ValueError("n_chains must be an even number >= 2")
    n, k = landscape.n, landscape.k
    spr = steps_per_round or n
    burn = rounds // 4 if burn_in_rounds is None else burn_in_rounds
    ladder = default_ladder(beta, n_temps) if beta > 0.05 else np.array([beta])
    runs = [parallel_tempering(landscape, ladder, rounds, spr, rng_seed, chain_base=c * (n_temps + 1))
            for c in range(n_chains)]
    q0, q1, mq, mr = [], [], [], []
    qh = np.zeros(n + 1, dtype=np.int64)
    rh = np.zeros(2 * n + 1, dtype=np.int64)
    for c in range(0, n_chains, 2):
        a = runs[c].states[burn:, -1]
        b = runs[c + 1].states[burn:, -1]
        qs = np.array([overlap_Q(int(x), int(y), k, n).numerator for x, y in zip(a, b)])
        rs = n - 2 * np.bitwise_count(a ^ b).astype(np.int64)
        q0.append(np.mean(qs == 0))
        q1.append(np.mean(qs == n))
        mq.append(qs.mean() / n)
        mr.append(rs.mean() / n)
        qh += np.bincount(qs, minlength=n + 1)
        rh += np.bincount(rs + n, minlength=2 * n + 1)
    return OverlapStats(_from_samples(q0), _from_samples(q1), _from_samples(mq), _from_samples(mr), qh, rh)


# -- chaos ---------------------------------------------------------------------------------------

def chaos_probe(base_seed: int, s: float, n: int, k: int, n_seeds: int,
                effort: tuple[int, int] = (2, 5_000), exact_limit: int = 20,
                rng_seed: int = 0) -> EstimateWithError:
    """``phi(s) = E Q(argmax H^1_s, argmax H^2_s)`` over disorder replicas.

    Fittest genomes are exact (ground-state scan) when ``N <= exact_limit``
    and otherwise come from :func:`estimate_max`.
    """
    vals = []
    for i in range(n_seeds):
        pair = interpolated_pair(disorder_seed(base_seed, i), s, n, k)
        tops = []
        for land in (pair.first, pair.second):
            if n <= exact_limit:
                tops.append(enumeration.ground_state(land).sigma_star.bits)
            else:
                tops.append(estimate_max(land, effort, rng_seed).bits)
        vals.append(overlap_Q(tops[0], tops[1], k, n).value)
    return _from_samples(vals)


# -- disorder-level probes ------------------------------------------------------------------

def concentration_probe(n: int, k: int, beta: float, n_seeds: int, t_grid: Sequence[float],
                        base_seed: int = 0) -> dict:
    """Empirical tails of ``|F - mean F|`` and ``|M - mean M|`` against their envelopes."""
    fs, ms = np.empty(n_seeds), np.empty(n_seeds)
    for i in range(n_seeds):
        land = Landscape(LandscapeSpec(n=n, k=k, seed=disorder_seed(base_seed, i)))
        e = land.energies()
        fs[i] = enumeration.exact_free_energy(land, beta, e).F
        ms[i] = e.max() / n
    rows = []
    for t in t_grid:
        pf = float(np.mean(np.abs(fs - fs.mean()) >= t))
        pm = float(np.mean(np.abs(ms - ms.mean()) >= t))
        ef, em = free_energy_envelope(n, t, beta), max_envelope(n, t)
        rows.append({"t": float(t), "tail_F": pf, "envelope_F": ef, "tail_M": pm, "envelope_M": em,
                     "below": pf <= ef and pm <= em})
    return {"n": n, "k": k, "beta": beta, "n_seeds": n_seeds, "std_F": float(fs.std(ddof=1)),
            "std_M": float(ms.std(ddof=1)), "rows": rows, "all_below": all(r["below"] for r in rows)}


def monotonicity_probe(n: int, k_list: Sequence[int], n_seeds: int, base_seed: int = 0,
                       n_sigma: float = 3.0) -> dict:
    """Disorder means of exact ``M`` for each ``K``; nondecreasing within ``n_sigma`` SE."""
    rows = []
    for k in k_list:
        ms = []
        for i in range(n_seeds):
            land = Landscape(LandscapeSpec(n=n, k=k, seed=disorder_seed(base_seed, i)))
            ms.append(float(land.energies().max()) / n)
        est = _from_samples(ms)
        rows.append({"k": int(k), "mean_M": est.value, "std_error": est.std_error})
    ok = all(b["mean_M"] >= a["mean_M"] - n_sigma * math.hypot(a["std_error"], b["std_error"])
             for a, b in zip(rows, rows[1:]))
    return {"n": n, "n_seeds": n_seeds, "rows": rows, "nondecreasing": ok}
