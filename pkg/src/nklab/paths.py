"""Bridge paths between two genomes, and classic adaptive walks.

A bridge of ``n`` steps between ``sigma_hat`` and ``sigma_check`` cuts the
ring into blocks of ``k = floor(N/(n+1))`` loci (the last block takes the
remainder) and rewrites one block per step, so intermediate node ``l`` reads
``sigma_check`` on loci ``< l k`` and ``sigma_hat`` elsewhere.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._backend import kernels
from .landscape import Genome, Landscape, overlap_Q, overlap_R
from .theory import BETA_C

__all__ = [
    "BridgePath", "PathReport", "TheoremFlags", "WalkTrace",
    "build_bridge", "path_report", "verify_theorem_bounds", "regime_holds",
    "q_step_bound", "r_step_bound", "fitness_slack", "adaptive_walk",
]

MIN_THEOREM_STEPS = 10


@dataclass(frozen=True)
class BridgePath:
    n: int  # number of steps
    k: int  # block size
    nodes: tuple[Genome, ...]
    blocks: tuple[tuple[int, ...], ...]  # blocks[l] = loci rewritten by step l

    @property
    def flips(self) -> list[int]:
        """Loci actually changed at each step."""
        return [(a.bits ^ b.bits).bit_count() for a, b in zip(self.nodes, self.nodes[1:])]

    def reversed(self) -> "BridgePath":
        return build_bridge(self.nodes[-1], self.nodes[0], self.n)


def _blocks(n_loci: int, n: int) -> tuple[tuple[int, ...], ...]:
    k = n_loci // (n + 1)
    out = [tuple(range(l * k, (l + 1) * k)) for l in range(n - 1)]
    out.append(tuple(range((n - 1) * k, n_loci)))
    return tuple(out)


def build_bridge(sigma_hat: Genome, sigma_check: Genome, n: int,
                 order: Sequence[int] | None = None) -> BridgePath:
    """Rewrite ``sigma_hat`` into ``sigma_check`` one block per step.

    ``order`` optionally permutes the blocks (default ascending); node
    ``l + 1`` is node ``l`` with block ``order[l]`` copied from ``sigma_check``.
    """
    if sigma_hat.n != sigma_check.n:
        raise ValueError("genomes must have equal length")
    n_loci = sigma_hat.n
    if n < 1:
        raise ValueError("need at least one step")
    if n_loci < n + 1:
        raise ValueError("need N >= n+1 so that blocks are non-empty")
    blocks = _blocks(n_loci, n)
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of range(n)")
    nodes = [sigma_hat]
    bits = sigma_hat.bits
    for l in order:
        mask = sum(1 << i for i in blocks[l])
        bits = (bits & ~mask) | (sigma_check.bits & mask)
        nodes.append(Genome(n_loci, bits))
    return BridgePath(n, n_loci // (n + 1), tuple(nodes), tuple(blocks[l] for l in order))


def q_step_bound(n: int, alpha: float) -> float:
    """Per-step lower bound ``1 - 2/(n+1) - 2 alpha`` on ``Q``."""
    return 1.0 - 2.0 / (n + 1) - 2.0 * alpha


def r_step_bound(n: int) -> float:
    """Per-step lower bound ``1 - 4/(n+1)`` on ``R``."""
    return 1.0 - 4.0 / (n + 1)


def fitness_slack(n: int, eta: float) -> float:
    """Explicit fitness slack ``(8n + 10) eta`` of the bridge theorem."""
    return (8 * n + 10) * eta


def regime_holds(alpha: float, eta: float) -> bool:
    """``0 < alpha < eta / (5 sqrt(2 ln 2))``."""
    return 0.0 < alpha < eta / (5.0 * BETA_C)


@dataclass
class PathReport:
    n_loci: int
    k: int  # epistasis
    steps: int
    alpha: float  # K/N used in the overlap bound
    q_num: list[int]  # N Q per step
    r_num: list[int]  # N R per step
    fitness: list[float]  # H/N per node
    flips: list[int]
    block_sizes: list[int]
    q_bound_ok: list[bool]  # Q >= 1 - 2/(n+1) - 2 alpha
    r_bound_ok: list[bool]  # R >= 1 - 4/(n+1)
    q_exact_ok: list[bool]  # N Q >= N - |I_l| - K
    r_exact_ok: list[bool]  # N R >= N - 2 |I_l|

    @property
    def Q(self) -> list[float]:
        return [q / self.n_loci for q in self.q_num]

    @property
    def R(self) -> list[float]:
        return [r / self.n_loci for r in self.r_num]

    @property
    def min_Q(self) -> float:
        return min(self.Q)

    @property
    def min_R(self) -> float:
        return min(self.R)

    @property
    def min_interior_fitness(self) -> float:
        inner = self.fitness[1:-1]
        return min(inner) if inner else min(self.fitness)

    @property
    def overlap_bounds_hold(self) -> bool:
        return all(self.q_bound_ok) and all(self.r_bound_ok)

    @property
    def exact_bounds_hold(self) -> bool:
        return all(self.q_exact_ok) and all(self.r_exact_ok)

    def to_dict(self) -> dict:
        return {"N": self.n_loci, "K": self.k, "steps": self.steps, "alpha": self.alpha,
                "Q": [f"{q}/{self.n_loci}" for q in self.q_num],
                "R": [f"{r}/{self.n_loci}" for r in self.r_num],
                "fitness": self.fitness, "flips": self.flips, "block_sizes": self.block_sizes,
                "min_Q": self.min_Q, "min_R": self.min_R,
                "min_interior_fitness": self.min_interior_fitness,
                "q_bound_ok": self.q_bound_ok, "r_bound_ok": self.r_bound_ok,
                "q_exact_ok": self.q_exact_ok, "r_exact_ok": self.r_exact_ok}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def rows(self) -> list[tuple[int, float | None, float | None, float]]:
        """``(l, Q, R, fitness)`` per node; node 0 has no incoming step."""
        out = [(0, None, None, self.fitness[0])]
        for l in range(self.steps):
            out.append((l + 1, self.Q[l], self.R[l], self.fitness[l + 1]))
        return out


def path_report(landscape: Landscape, path: BridgePath, alpha: float | None = None) -> PathReport:
    """Exact per-step overlaps and per-node fitness for ``path``."""
    n_loci, k = landscape.n, landscape.k
    if path.nodes[0].n != n_loci:
        raise ValueError("path length does not match the landscape")
    a = k / n_loci if alpha is None else alpha
    qn, rn, qok, rok, qex, rex = [], [], [], [], [], []
    qb, rb = q_step_bound(path.n, a), r_step_bound(path.n)
    for l, (x, y) in enumerate(zip(path.nodes, path.nodes[1:])):
        q = overlap_Q(x, y, k).numerator
        r = overlap_R(x, y).numerator
        size = len(path.blocks[l])
        qn.append(q)
        rn.append(r)
        # compare in exact integers where the bound is rational
        qok.append(q / n_loci >= qb - 1e-15)
        rok.append(r * (path.n + 1) >= n_loci * (path.n + 1 - 4))
        qex.append(q >= n_loci - size - k)
        rex.append(r >= n_loci - 2 * size)
    fit = [landscape.fitness(g) / n_loci for g in path.nodes]
    return PathReport(n_loci, k, path.n, a, qn, rn, fit, path.flips,
                      [len(b) for b in path.blocks], qok, rok, qex, rex)


@dataclass
class TheoremFlags:
    in_regime: bool  # alpha < eta / (5 sqrt(2 ln 2)) and n >= 10
    regime_alpha: bool
    steps_in_regime: bool
    fitness_ok: bool  # min interior fitness >= M - (8n+10) eta
    q_bound_ok: bool
    r_bound_ok: bool
    threshold: float  # M - (8n+10) eta

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_theorem_bounds(report: PathReport, alpha: float, n: int, eta: float, M: float) -> TheoremFlags:
    ra = regime_holds(alpha, eta)
    rs = n >= MIN_THEOREM_STEPS
    thr = M - fitness_slack(n, eta)
    return TheoremFlags(ra and rs, ra, rs, report.min_interior_fitness >= thr,
                        all(report.q_bound_ok), all(report.r_bound_ok), thr)


# -- adaptive walks ----------------------------------------------------------------------

@dataclass
class WalkTrace:
    genomes: list[int]
    fitness: list[float]  # H/N, strictly increasing
    rule: str

    @property
    def end(self) -> int:
        return self.genomes[-1]

    @property
    def steps(self) -> int:
        return len(self.genomes) - 1


WALK_CHAIN = (1 << 62) + 0x57414C4B  # stream id for random-improving walks


def adaptive_walk(landscape: Landscape, start: Genome | int, rule: str = "steepest",
                  rng_seed: int = 0, max_steps: int | None = None) -> WalkTrace:
    """Single-flip improving walk until a 1-flip local maximum.

    ``steepest`` takes the best improving flip (lowest locus on ties);
    ``random-improving`` picks uniformly among improving flips using the
    counter-based stream.
    """
    if rule not in ("steepest", "random-improving"):
        raise ValueError(f"unknown rule {rule!r}")
    n = landscape.n
    bits = start.bits if isinstance(start, Genome) else int(start)
    e = landscape.fitness(bits)
    genomes, fit = [bits], [e / n]
    counter = 0
    limit = max_steps if max_steps is not None else 1 << min(n, 62)
    for _ in range(limit):
        deltas = np.array([landscape.delta_fitness(bits, j) for j in range(n)])
        up = np.flatnonzero(deltas > 0.0)
        if up.size == 0:
            break
        if rule == "steepest":
            j = int(up[np.argmax(deltas[up])])
        else:
            u = kernels.chain_uniform(rng_seed, WALK_CHAIN, counter)
            counter += 1
            j = int(up[min(int(u * up.size), up.size - 1)])
        bits ^= 1 << j
        e = landscape.fitness(bits)
        genomes.append(bits)
        fit.append(e / n)
    return WalkTrace(genomes, fit, rule)
