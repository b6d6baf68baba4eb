"""Exact counting of genomes by epistatic overlap with the all-ones genome.

``counts[l] = |{sigma : N Q(sigma, 1) = l}|``.  Every maximal circular run of
``L`` ones contributes ``max(0, L - K)`` to ``N Q``; the all-ones genome
contributes ``N``.  Counts are Python integers, exact for any ``N <= 64``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .landscape import overlap_Q_one
from .theory import entropy_h

__all__ = [
    "CountTable",
    "count_by_overlap",
    "count_by_overlap_bruteforce",
    "lemma2_bound_check",
    "tightness_lower_bound",
    "construction_lower_bound",
    "count_by_R",
    "r_entropy_bound_log2",
]

MAX_DP_N = 64
MAX_BRUTE_N = 20


@dataclass(frozen=True)
class CountTable:
    n: int
    k: int
    counts: tuple[int, ...]  # index l = N Q, length N + 1

    def __getitem__(self, l: int) -> int:
        return self.counts[l]

    def as_dict(self, nonzero: bool = False) -> dict[int, int]:
        return {l: c for l, c in enumerate(self.counts) if c or not nonzero}

    @property
    def total(self) -> int:
        return sum(self.counts)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "k": self.k,
                           "counts": {str(l): str(c) for l, c in enumerate(self.counts)}})

    @classmethod
    def from_json(cls, text: str) -> "CountTable":
        d = json.loads(text)
        n = d["n"]
        counts = [0] * (n + 1)
        for l, c in d["counts"].items():
            counts[int(l)] = int(c)
        return cls(n, d["k"], tuple(counts))

    def compact(self) -> str:
        """``{l:count,...}`` over non-zero entries."""
        return "{" + ",".join(f"{l}:{c}" for l, c in self.as_dict(nonzero=True).items()) + "}"


def _check(n: int, k: int, n_max: int) -> None:
    if not 2 <= n <= n_max:
        raise ValueError(f"N must lie in [2, {n_max}]")
    if not 0 <= k <= n - 1:
        raise ValueError("K must lie in [0, N-1]")


def _add_shifted(acc: list[int], poly: list[int], shift: int) -> None:
    for e, c in enumerate(poly):
        if c:
            acc[e + shift] += c


def count_by_overlap(n: int, k: int) -> CountTable:
    """Exact overlap counts by a transfer recursion over run structures.

    Linear strings (segments between two zeros) are counted by the
    generating polynomials ``G[m] = x^{c(m)} + sum_{L<m} x^{c(L)} G[m-L-1]``
    (first zero after ``L`` ones), with ``c(L) = max(0, L-K)``.  On the
    ring, strings with at least two zeros are split at their first and last
    zero: the wrap-around run of length ``s`` can be placed in ``s+1`` ways
    and the interior is a linear segment of length ``N-2-s``.  Strings with
    one zero and the all-ones string are added separately.
    """
    _check(n, k, MAX_DP_N)

    def c(L: int) -> int:
        return max(0, L - k)

    size = n + 1
    g: list[list[int]] = [[1] + [0] * n]
    for m in range(1, n - 1):
        poly = [0] * size
        poly[c(m)] += 1
        for L in range(m):
            _add_shifted(poly, g[m - L - 1], c(L))
        g.append(poly)
    counts = [0] * size
    counts[n] += 1  # all ones
    counts[c(n - 1)] += n  # exactly one zero
    for s in range(n - 1):  # at least two zeros
        inner = g[n - 2 - s]
        for e, v in enumerate(inner):
            if v:
                counts[e + c(s)] += (s + 1) * v
    return CountTable(n, k, tuple(counts))


def count_by_overlap_bruteforce(n: int, k: int, method: str = "fold") -> CountTable:
    """Count by enumerating all ``2^N`` genomes.

    ``method="fold"`` evaluates ``N Q`` with the window AND-fold kernel;
    ``method="runs"`` calls :func:`overlap_Q_one` genome by genome (slow,
    an independent route).
    """
    _check(n, k, MAX_BRUTE_N)
    if method == "fold":
        hist = np.bincount(kernels.window_counts(n, k), minlength=n + 1)
        counts = tuple(int(v) for v in hist)
    elif method == "runs":
        counts_l = [0] * (n + 1)
        for bits in range(1 << n):
            counts_l[overlap_Q_one(bits, k, n).numerator] += 1
        counts = tuple(counts_l)
    else:
        raise ValueError(f"unknown method {method!r}")
    return CountTable(n, k, counts)


def lemma2_bound_check(n: int, k: int, table: CountTable | None = None) -> dict:
    """Compare each ``counts[l]`` (``1 <= l <= N-K-1``) with ``N 2^{N-(K+l)}``.

    ``applicable`` records whether ``N^2 2^{-K} <= 1/2``, the large-``N``
    hypothesis under which the bound is derived; violations are reported,
    not raised.
    """
    table = table or count_by_overlap(n, k)
    rows = []
    for l in range(1, n - k):
        bound = n * 2 ** (n - (k + l))
        rows.append({"l": l, "count": table[l], "bound": bound, "holds": table[l] <= bound})
    applicable = n * n <= 2 ** (k - 1)  # N^2 2^-K <= 1/2, exactly
    return {"n": n, "k": k, "applicable": applicable, "rows": rows,
            "all_hold": all(r["holds"] for r in rows)}


def tightness_lower_bound(n: int, k: int, l: int) -> int:
    """Closed-form tightness bound ``N 2^{m - floor(m/(K+1))}`` with ``m = N-K-l-1``.

    The construction behind it places a run of ``K+l`` ones followed by a
    zero and fills the remaining ``m`` loci freely except for every
    ``(K+1)``-th one.  It forgets that the locus *before* the run must be a
    zero as well, so for ``l < N-K-1`` this value can exceed the true count
    by a factor of 2; see :func:`construction_lower_bound`.
    """
    if not 1 <= l <= n - k - 1:
        raise ValueError("l must lie in [1, N-K-1]")
    m = n - k - l - 1
    return n * 2 ** (m - m // (k + 1))


def construction_lower_bound(n: int, k: int, l: int) -> int:
    """Valid count of genomes with a single run of ``K+l`` ones and no other long run.

    The run is flanked by zeros on both sides, leaving ``m' = N-K-l-2`` free
    loci in which every ``(K+1)``-th is forced to zero.  When ``l = N-K-1`` a
    single zero serves as both flanks and the count is exactly ``N``.
    """
    if not 1 <= l <= n - k - 1:
        raise ValueError("l must lie in [1, N-K-1]")
    m = n - k - l - 2
    if m < 0:
        return n
    return n * 2 ** (m - m // (k + 1))


def count_by_R(n: int, r_numerator: int) -> int:
    """``|{sigma : sum_i sigma_i = r}| = C(N, (N+r)/2)``."""
    if abs(r_numerator) > n or (n - r_numerator) % 2:
        raise ValueError("need |r| <= N and r = N (mod 2)")
    return math.comb(n, (n + r_numerator) // 2)


def r_entropy_bound_log2(n: int, r_numerator: int) -> float:
    """``log2`` of ``2^{N h(|r|/N)}``, which bounds ``2^N C(N, (N+|r|)/2)``."""
    if abs(r_numerator) > n:
        raise ValueError("need |r| <= N")
    return n * entropy_h(abs(r_numerator) / n)
