"""Exact exhaustive computations over all ``2^N`` genomes.

Single-genome scans (ground state, level sets, Gibbs quantities, local
maxima, peak packing) start from the full fitness vector ``E[bits]``.  Pair
quantities use the XOR bijection: a pair ``(a, b)`` is ``(a, a ^ d)``, and
both overlaps depend only on the difference pattern ``d`` (``N R = N -
2|d|``, ``N Q`` = number of all-agreeing windows of ``~d``).  Sums over
pairs with a fixed ``d`` are autocorrelations, computed for all ``d`` at
once by a Walsh-Hadamard transform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._backend import kernels
from .landscape import Genome, Landscape

__all__ = [
    "SCAN_LIMIT", "PAIR_LIMIT",
    "GroundStateResult", "GibbsSummary", "ConstraintSet", "CoupledMaxResult",
    "energies", "ground_state", "level_set_count", "exact_free_energy", "exact_overlap_law",
    "coupled_max", "constrained_free_energy", "local_maxima", "local_maxima_census",
    "peak_packing", "walsh_hadamard", "autocorrelation", "pattern_overlaps",
]

SCAN_LIMIT = 26
PAIR_LIMIT = 14


def _check_limit(n: int, limit: int, what: str) -> None:
    if n > limit:
        raise ValueError(f"N={n} exceeds the {what} limit {limit}")


def energies(landscape: Landscape, limit: int = SCAN_LIMIT) -> np.ndarray:
    """Fitness of every genome, indexed by bit pattern."""
    _check_limit(landscape.n, limit, "scan")
    return landscape.energies()


def _energies(landscape, e, limit=SCAN_LIMIT):
    return energies(landscape, limit) if e is None else e


def _lex_smallest(indices: np.ndarray, n: int) -> int:
    """Lexicographically smallest genome string (locus 0 first) among ``indices``."""
    return min((int(i) for i in indices), key=lambda b: format(b, f"0{n}b")[::-1])


# -- ground state and level sets ----------------------------------------------------

@dataclass(frozen=True)
class GroundStateResult:
    sigma_star: Genome
    M: float
    argmax_ties: int


def ground_state(landscape: Landscape, e: np.ndarray | None = None,
                 limit: int = SCAN_LIMIT) -> GroundStateResult:
    """Exact maximum of ``H/N``; ties broken towards the lexicographically smallest genome."""
    e = _energies(landscape, e, limit)
    top = e.max()
    ties = np.flatnonzero(e == top)
    best = _lex_smallest(ties, landscape.n)
    return GroundStateResult(Genome(landscape.n, best), float(top) / landscape.n, int(ties.size))


def level_set_count(landscape: Landscape, s: float, e: np.ndarray | None = None,
                    limit: int = SCAN_LIMIT) -> int:
    """``|{sigma : H(sigma) >= s N}|``."""
    e = _energies(landscape, e, limit)
    return int(np.count_nonzero(e >= s * landscape.n))


# -- Gibbs measure --------------------------------------------------------------------

@dataclass
class GibbsSummary:
    """Exact Gibbs quantities at inverse temperature ``beta``.

    ``overlap_law`` maps ``(N Q, N R)`` to the probability that two
    independent replicas have those overlaps.
    """

    n: int
    beta: float
    F: float
    mean_energy: float
    p_Q1: float
    mean_Q: float | None = None
    overlap_law: dict[tuple[int, int], float] | None = field(default=None, repr=False)

    def law_of_R(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for (_, nr), p in sorted(self.overlap_law.items()):
            out[nr] = out.get(nr, 0.0) + p
        return out

    def law_of_Q(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for (nq, _), p in sorted(self.overlap_law.items()):
            out[nq] = out.get(nq, 0.0) + p
        return out


def gibbs_probabilities(e: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """Return ``(p, ln Z)`` for the Gibbs measure ``p ~ exp(beta E)``."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    x = beta * e
    m = float(x.max())
    w = np.exp(x - m)
    z = float(w.sum())
    return w / z, m + math.log(z)


def exact_free_energy(landscape: Landscape, beta: float, e: np.ndarray | None = None,
                      limit: int = SCAN_LIMIT) -> GibbsSummary:
    """``F = (1/N) ln sum exp(beta H)``, ``<H>/N`` and ``sum p^2`` by log-sum-exp."""
    e = _energies(landscape, e, limit)
    n = landscape.n
    p, log_z = gibbs_probabilities(e, beta)
    return GibbsSummary(n=n, beta=float(beta), F=log_z / n, mean_energy=float(p @ e) / n,
                        p_Q1=float(p @ p))


def walsh_hadamard(x: np.ndarray) -> np.ndarray:
    """Unnormalised fast Walsh-Hadamard transform of a length-``2^N`` vector."""
    y = np.array(x, dtype=np.float64, copy=True)
    size = y.size
    if size & (size - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < size:
        v = y.reshape(-1, 2, h)
        a = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        v[:, 1, :] = a - v[:, 1, :]
        h *= 2
    return y


def autocorrelation(p: np.ndarray) -> np.ndarray:
    """``A(d) = sum_a p(a) p(a ^ d)`` for every pattern ``d``."""
    f = walsh_hadamard(p)
    return walsh_hadamard(f * f) / p.size


def pattern_overlaps(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """``(N Q, N R)`` for the pair ``(a, a ^ d)`` indexed by ``d``."""
    d = np.arange(1 << n, dtype=np.uint64)
    nq = kernels.window_counts(n, k)[::-1]  # agreement pattern of d is ~d = (2^N-1) - d
    nr = n - 2 * np.bitwise_count(d).astype(np.int64)
    return nq.astype(np.int64), nr


def exact_overlap_law(landscape: Landscape, beta: float, e: np.ndarray | None = None,
                      limit: int = PAIR_LIMIT) -> GibbsSummary:
    """Exact joint law of ``(N Q, N R)`` for two independent Gibbs replicas."""
    n, k = landscape.n, landscape.k
    _check_limit(n, limit, "pair-scan")
    e = _energies(landscape, e)
    summary = exact_free_energy(landscape, beta, e)
    p, _ = gibbs_probabilities(e, beta)
    a = autocorrelation(p)
    nq, nr = pattern_overlaps(n, k)
    # law[(nq, nr)] accumulated on an integer grid, then sparsified
    grid = np.zeros((n + 1, 2 * n + 1))
    np.add.at(grid, (nq, nr + n), a)
    law = {(int(q), int(r) - n): float(grid[q, r]) for q, r in zip(*np.nonzero(grid))}
    summary.overlap_law = law
    summary.mean_Q = float(a @ nq) / n
    return summary


# -- constrained pair maxima ---------------------------------------------------------------

@dataclass(frozen=True)
class ConstraintSet:
    """Predicate on exact overlaps ``(N Q, N R)`` of a pair, vectorised over arrays."""

    name: str
    predicate: Callable[[np.ndarray, np.ndarray, int], np.ndarray] = field(repr=False)

    def mask(self, nq: np.ndarray, nr: np.ndarray, n: int) -> np.ndarray:
        return np.asarray(self.predicate(nq, nr, n), dtype=bool)

    @staticmethod
    def all_pairs() -> "ConstraintSet":
        return ConstraintSet("all", lambda q, r, n: np.ones_like(q, dtype=bool))

    @staticmethod
    def q_strictly_between() -> "ConstraintSet":
        """``0 < Q < 1``."""
        return ConstraintSet("0<Q<1", lambda q, r, n: (q > 0) & (q < n))

    @staticmethod
    def q_one() -> "ConstraintSet":
        return ConstraintSet("Q=1", lambda q, r, n: q == n)

    @staticmethod
    def q_zero_r_above(delta: float) -> "ConstraintSet":
        """``Q = 0`` and ``|R| > delta``."""
        return ConstraintSet(f"Q=0,|R|>{delta}", lambda q, r, n: (q == 0) & (np.abs(r) > delta * n))

    @staticmethod
    def r_between(delta: float) -> "ConstraintSet":
        """``delta < |R| < 1``."""
        return ConstraintSet(f"{delta}<|R|<1", lambda q, r, n: (np.abs(r) > delta * n) & (np.abs(r) < n))

    @staticmethod
    def q_outside_band(lo: float, hi: float, delta: float) -> "ConstraintSet":
        """``Q in (0, lo - delta] U [hi + delta, 1)``."""
        return ConstraintSet(
            f"Q in (0,{lo}-{delta}]U[{hi}+{delta},1)",
            lambda q, r, n: ((q > 0) & (q <= (lo - delta) * n)) | ((q >= (hi + delta) * n) & (q < n)))


@dataclass(frozen=True)
class CoupledMaxResult:
    value: float  # max of H(s1)/N + H(s2)/N over the constraint set
    sigma1: Genome
    sigma2: Genome
    n_patterns: int


def _allowed_patterns(n: int, k: int, constraint: ConstraintSet) -> np.ndarray:
    nq, nr = pattern_overlaps(n, k)
    pats = np.flatnonzero(constraint.mask(nq, nr, n))
    if pats.size == 0:
        raise ValueError(f"constraint set {constraint.name} is empty at N={n}")
    return pats


def coupled_max(landscape: Landscape, constraint: ConstraintSet, e: np.ndarray | None = None,
                limit: int = PAIR_LIMIT) -> CoupledMaxResult:
    """``max_{(s1, s2) in S} (H(s1) + H(s2))/N`` with its argmax pair."""
    n, k = landscape.n, landscape.k
    _check_limit(n, limit, "pair-scan")
    e = _energies(landscape, e)
    pats = _allowed_patterns(n, k, constraint)
    best, a, b = kernels.coupled_max(e, pats)
    return CoupledMaxResult(best / n, Genome(n, a), Genome(n, b), int(pats.size))


def constrained_free_energy(landscape: Landscape, constraint: ConstraintSet, beta: float,
                            e: np.ndarray | None = None, limit: int = PAIR_LIMIT) -> float:
    """``(1/N) ln sum_{(s1, s2) in S} exp(beta (H(s1) + H(s2)))``.

    Summed pattern by pattern in log space relative to the constrained
    maximum, so it stays accurate at large ``beta``.
    """
    n, k = landscape.n, landscape.k
    _check_limit(n, limit, "pair-scan")
    e = _energies(landscape, e)
    pats = _allowed_patterns(n, k, constraint)
    top = kernels.coupled_max(e, pats)[0]
    idx = np.arange(e.size)
    total = 0.0
    for d in pats:
        total += float(np.exp(beta * (e + e[idx ^ int(d)] - top)).sum())
    return (beta * top + math.log(total)) / n


# -- local structure ---------------------------------------------------------------------

def local_maxima(landscape: Landscape, e: np.ndarray | None = None,
                 limit: int = SCAN_LIMIT) -> np.ndarray:
    """Bit patterns of all 1-flip local maxima (``H(s) >= H(flip(s, j))`` for all j)."""
    e = _energies(landscape, e, limit)
    idx = np.arange(e.size)
    ok = np.ones(e.size, dtype=bool)
    for j in range(landscape.n):
        ok &= e >= e[idx ^ (1 << j)]
    return np.flatnonzero(ok)


def local_maxima_census(landscape: Landscape, e: np.ndarray | None = None,
                        limit: int = SCAN_LIMIT) -> int:
    return int(local_maxima(landscape, e, limit).size)


def peak_packing(landscape: Landscape, epsilon: float, delta: float, e: np.ndarray | None = None,
                 limit: int = SCAN_LIMIT) -> list[Genome]:
    """Greedy set of near-fittest genomes with pairwise ``Q = 0`` and ``|R| < delta``.

    Genomes with ``H/N >= M - epsilon`` are visited in descending fitness
    (ties by bit pattern) and kept when compatible with every genome kept
    so far.  This is a lower-bound witness for the number of mutually
    decoupled near-optimal peaks, not a maximum packing.
    """
    n = landscape.n
    e = _energies(landscape, e, limit)
    m = e.max() / n
    cand = np.flatnonzero(e / n >= m - epsilon)
    cand = cand[np.argsort(-e[cand], kind="stable")]
    chosen = kernels.greedy_pack(cand, n, landscape.k, delta * n)
    return [Genome(n, b) for b in chosen]
