"""NK landscapes on a ring: generation, fitness, overlaps, correlated pairs.

A landscape with ``N`` loci and epistasis range ``K`` assigns to every
genome ``sigma`` the fitness

    H(sigma) = sum_{i=0}^{N-1} X_i(sigma_i, ..., sigma_{i+K})      (indices mod N)

where the components ``X_i`` are i.i.d. standard Gaussians.  Components are
never stored by default: each one is a pure function of
``(seed, i, window word)`` obtained by hashing and an inverse-normal CDF, so a
landscape is fully described by ``(N, K, seed)``.

Conventions (frozen -- changing them changes every landscape):

* genome bit ``i`` holds locus ``i``; bit 1 is spin +1, bit 0 is spin -1;
* the window word of locus ``i`` has bit ``j`` equal to locus ``i+j mod N``
  (least significant bit = locus ``i``);
* fitness is summed over ``i`` ascending in double precision.
"""
from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._backend import kernels
from ._pykernels import mix64

__all__ = [
    "LandscapeSpec",
    "Genome",
    "OverlapValue",
    "Landscape",
    "CorrelatedPair",
    "make_landscape",
    "k_from_alpha",
    "window_word",
    "overlap_Q",
    "overlap_Q_naive",
    "overlap_R",
    "overlap_Q_one",
    "windowed_overlap",
    "interpolated_pair",
    "split_fitness",
    "MAX_TABLE_WINDOW",
    "AUTO_TABLE_ENTRIES",
]

#: table mode is allowed only when K+1 is at most this
MAX_TABLE_WINDOW = 24
#: hashed landscapes silently cache a component table up to this many entries
AUTO_TABLE_ENTRIES = 1 << 22
MAX_LOCI = 64

_COPY_TAGS = (0x436F70794F6E6521, 0x436F707954776F21)  # derive copy seeds


def k_from_alpha(n: int, alpha: float) -> int:
    """``K = floor(alpha * (N - 1))`` evaluated exactly.

    ``alpha`` is read as the decimal it prints as, so e.g. ``0.57 * 100`` floors
    to 57 rather than to the 56 that binary floating point would give.
    """
    return math.floor(Fraction(repr(float(alpha))) * (n - 1))


@dataclass(frozen=True)
class LandscapeSpec:
    """Immutable description of one landscape instance.

    Give either ``k`` or ``alpha``; when only ``alpha`` is given,
    ``K = floor(alpha (N - 1))``.  ``cache_mode`` is ``"hashed"`` (components
    computed on demand) or ``"table"`` (all ``N 2^(K+1)`` components
    materialised up front; requires ``K + 1 <= 24``).
    """

    n: int
    k: int | None = None
    seed: int = 0
    alpha: float | None = None
    cache_mode: str = "hashed"

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 2:
            raise ValueError(f"N must be an integer >= 2, got {n!r}")
        if n > MAX_LOCI:
            raise ValueError(f"N exceeds the supported maximum {MAX_LOCI}")
        k = self.k
        if self.alpha is not None:
            if not 0.0 < float(self.alpha) <= 1.0:
                raise ValueError("alpha must lie in (0, 1]")
            ka = k_from_alpha(n, self.alpha)
            if k is None:
                k = ka
            elif k != ka:
                raise ValueError(f"K={k} inconsistent with alpha={self.alpha} (floor gives {ka})")
        if k is None:
            raise ValueError("either k or alpha must be given")
        if k < 0:
            raise ValueError("K must be non-negative")
        if k > n - 1:
            raise ValueError(f"K exceeds N-1 (K={k}, N={n})")
        if self.cache_mode not in ("hashed", "table"):
            raise ValueError(f"unknown cache_mode {self.cache_mode!r}")
        if self.cache_mode == "table" and k + 1 > MAX_TABLE_WINDOW:
            raise ValueError(f"table mode needs K+1 <= {MAX_TABLE_WINDOW}")
        seed = int(self.seed)
        if not 0 <= seed < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "seed", seed)

    def to_dict(self) -> dict:
        d = {"n": self.n, "k": self.k, "seed": self.seed, "cache_mode": self.cache_mode}
        if self.alpha is not None:
            d["alpha"] = float(self.alpha)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "LandscapeSpec":
        return cls(n=d["n"], k=d.get("k"), seed=d.get("seed", 0), alpha=d.get("alpha"),
                   cache_mode=d.get("cache_mode", "hashed"))

    @classmethod
    def from_json(cls, text: str) -> "LandscapeSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Genome:
    """Cyclic binary configuration of length ``n`` packed into an integer."""

    n: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_LOCI:
            raise ValueError("genome length out of range")
        if not 0 <= self.bits < 1 << self.n:
            raise ValueError("bits do not fit in n loci")

    @classmethod
    def from_spins(cls, spins: Iterable[int]) -> "Genome":
        spins = list(spins)
        bits = 0
        for i, s in enumerate(spins):
            if s not in (1, -1):
                raise ValueError("spins must be +1 or -1")
            if s == 1:
                bits |= 1 << i
        return cls(len(spins), bits)

    @classmethod
    def from_string(cls, text: str) -> "Genome":
        """Parse ``"1101..."`` with locus 0 first."""
        if not text or set(text) - {"0", "1"}:
            raise ValueError("genome string must consist of 0/1")
        return cls(len(text), int(text[::-1], 2))

    @classmethod
    def ones(cls, n: int) -> "Genome":
        return cls(n, (1 << n) - 1)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Genome":
        return cls(n, int.from_bytes(rng.bytes(8), "little") & ((1 << n) - 1))

    def spin(self, i: int) -> int:
        return 1 if (self.bits >> (i % self.n)) & 1 else -1

    def spins(self) -> np.ndarray:
        return np.array([self.spin(i) for i in range(self.n)], dtype=np.int8)

    def flip(self, j: int) -> "Genome":
        return Genome(self.n, self.bits ^ (1 << (j % self.n)))

    def complement(self) -> "Genome":
        return Genome(self.n, self.bits ^ ((1 << self.n) - 1))

    def __str__(self) -> str:
        return format(self.bits, f"0{self.n}b")[::-1]


@dataclass(frozen=True, order=True)
class OverlapValue:
    """Exact overlap ``numerator / denominator`` (denominator = N)."""

    numerator: int
    denominator: int

    @property
    def value(self) -> float:
        return self.numerator / self.denominator

    def __float__(self) -> float:
        return self.value

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)


def _bits(g, n: int | None = None) -> tuple[int, int]:
    if isinstance(g, Genome):
        if n is not None and g.n != n:
            raise ValueError(f"genome length {g.n} does not match N={n}")
        return g.bits, g.n
    if n is None:
        raise ValueError("N required for raw integer genomes")
    g = int(g)
    if not 0 <= g < 1 << n:
        raise ValueError("genome bits out of range")
    return g, n


def _rotr(x: int, s: int, n: int) -> int:
    s %= n
    if s == 0:
        return x
    return ((x >> s) | (x << (n - s))) & ((1 << n) - 1)


def window_word(g, i: int, k: int, n: int | None = None) -> int:
    """Window word of locus ``i``: bit ``j`` is locus ``i + j mod N``."""
    bits, n = _bits(g, n)
    return _rotr(bits, i, n) & ((1 << (k + 1)) - 1)


class Landscape:
    """Handle bundling a spec with its fitness-component oracle.

    A landscape is a weighted sum of independent hashed Gaussian fields
    (``terms = ((weight, seed), ...)``); a plain landscape has the single term
    ``(1.0, spec.seed)``.  Handles are immutable; the lazily built component
    table is created under a lock and then only read.
    """

    def __init__(self, spec: LandscapeSpec, terms: Sequence[tuple[float, int]] | None = None):
        self.spec = spec
        self.n = spec.n
        self.k = spec.k
        if terms is None:
            terms = ((1.0, spec.seed),)
        self.terms = tuple((float(w), int(s)) for w, s in terms if w != 0.0)
        if not self.terms:
            raise ValueError("landscape needs at least one non-zero term")
        self._seeds = [s for _, s in self.terms]
        self._weights = [w for w, _ in self.terms]
        self._table: np.ndarray | None = None
        self._lock = threading.Lock()
        self._width = 1 << (self.k + 1)
        entries = self.n * self._width if self.k + 1 <= MAX_TABLE_WINDOW else math.inf
        self._auto_table = spec.cache_mode == "table" or entries <= AUTO_TABLE_ENTRIES
        if spec.cache_mode == "table":
            self._build_table()

    # -- oracle --------------------------------------------------------------
    def _build_table(self) -> np.ndarray:
        with self._lock:
            if self._table is None:
                t = kernels.component_table(self._seeds, self._weights, self.n, self.k)
                t.setflags(write=False)
                self._table = t
        return self._table

    @property
    def table(self) -> np.ndarray | None:
        """Component table ``T[i, word]`` if it is (or may be) materialised."""
        if self._table is None and self._auto_table:
            self._build_table()
        return self._table

    def kernel_args(self) -> tuple:
        """``(n, k, seeds, weights, table)`` as consumed by the kernels."""
        return self.n, self.k, self._seeds, self._weights, self.table

    def component(self, i: int, word: int) -> float:
        """Fitness component ``X_i(word)``."""
        if not 0 <= i < self.n:
            raise ValueError(f"locus {i} out of range")
        if not 0 <= word < self._width:
            raise ValueError(f"window word {word} out of range")
        if self._table is not None:
            return float(self._table[i, word])
        return float(kernels.mixed_component(self._seeds, self._weights, i, word))

    # -- fitness ---------------------------------------------------------------
    def fitness(self, g) -> float:
        """``H(g)``, summed over loci in ascending order."""
        bits, _ = _bits(g, self.n)
        return float(kernels.fitness_bits(*self.kernel_args(), bits))

    def norm_fitness(self, g) -> float:
        return self.fitness(g) / self.n

    def delta_fitness(self, g, j: int) -> float:
        """``H(flip(g, j)) - H(g)``, touching only the windows that contain ``j``."""
        bits, _ = _bits(g, self.n)
        if not 0 <= j < self.n:
            raise ValueError(f"locus {j} out of range")
        return float(kernels.delta_bits(*self.kernel_args(), bits, j))

    def energies(self) -> np.ndarray:
        """``H`` of every genome, indexed by its bit pattern (direct sums)."""
        return kernels.energies(*self.kernel_args())

    def gray_energies(self) -> np.ndarray:
        """``H`` of every genome via a Gray-code walk with incremental updates."""
        return kernels.gray_energies(*self.kernel_args())

    def __repr__(self) -> str:
        return f"Landscape(n={self.n}, k={self.k}, terms={self.terms})"


def make_landscape(spec: LandscapeSpec) -> Landscape:
    return Landscape(spec)


# -- overlaps --------------------------------------------------------------------

def overlap_R(g1, g2, n: int | None = None) -> OverlapValue:
    """Scalar-product overlap: ``N R = N - 2 * Hamming(g1, g2)``."""
    b1, n1 = _bits(g1, n)
    b2, n2 = _bits(g2, n1)
    return OverlapValue(n1 - 2 * bin(b1 ^ b2).count("1"), n1)


def overlap_Q(g1, g2, k: int, n: int | None = None) -> OverlapValue:
    """Epistatic overlap: fraction of loci whose whole window agrees.

    Computed in O(N) from the circular agreement vector: every maximal
    circular run of agreement of length ``L >= K+1`` contributes ``L - K``.
    """
    b1, n1 = _bits(g1, n)
    b2, n = _bits(g2, n1)
    _check_k(k, n)
    full = (1 << n) - 1
    agree = ~(b1 ^ b2) & full
    if agree == full:
        return OverlapValue(n, n)
    # start scanning just after a disagreement so no run straddles the start
    z = (~agree & full).bit_length() - 1
    total = run = 0
    for t in range(1, n + 1):
        if (agree >> ((z + t) % n)) & 1:
            run += 1
        else:
            if run > k:
                total += run - k
            run = 0
    return OverlapValue(total, n)


def overlap_Q_naive(g1, g2, k: int, n: int | None = None) -> OverlapValue:
    """O(N K) window-by-window reference for :func:`overlap_Q`."""
    b1, n1 = _bits(g1, n)
    b2, n = _bits(g2, n1)
    _check_k(k, n)
    count = 0
    for i in range(n):
        if all(((b1 >> ((i + j) % n)) & 1) == ((b2 >> ((i + j) % n)) & 1) for j in range(k + 1)):
            count += 1
    return OverlapValue(count, n)


def overlap_Q_one(g, k: int, n: int | None = None) -> OverlapValue:
    """Epistatic overlap with the all-ones genome."""
    bits, n = _bits(g, n)
    return overlap_Q(bits, (1 << n) - 1, k, n)


def windowed_overlap(g1, g2, i: int, k: int, n: int | None = None) -> float:
    """``(1/(K+1)) sum_{j=0}^{K} sigma1_{i+j} sigma2_{i+j}`` (cyclic)."""
    b1, n1 = _bits(g1, n)
    b2, n = _bits(g2, n1)
    _check_k(k, n)
    s = 0
    for j in range(k + 1):
        p = (i + j) % n
        s += 1 if ((b1 >> p) & 1) == ((b2 >> p) & 1) else -1
    return s / (k + 1)


def _check_k(k: int, n: int) -> None:
    if not 0 <= k <= n - 1:
        raise ValueError(f"K={k} out of range for N={n}")


# -- correlated landscapes -----------------------------------------------------------

@dataclass(frozen=True)
class CorrelatedPair:
    """Two landscapes ``sqrt(s) H + sqrt(1-s) H^c`` for c = 1, 2.

    ``H`` is the base landscape and ``H^1``, ``H^2`` are independent copies
    with seeds derived from the base seed.  Each marginal is again an NK
    landscape; the two share covariance ``s N`` at every genome.
    """

    base_seed: int
    copy1_seed: int
    copy2_seed: int
    s: float
    first: Landscape = field(repr=False)
    second: Landscape = field(repr=False)


def copy_seeds(base_seed: int) -> tuple[int, int]:
    return tuple(mix64(mix64(int(base_seed)) ^ t) for t in _COPY_TAGS)


def interpolated_pair(base_seed: int, s: float, n: int, k: int | None = None,
                      alpha: float | None = None, cache_mode: str = "hashed") -> CorrelatedPair:
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    spec = LandscapeSpec(n=n, k=k, seed=base_seed, alpha=alpha, cache_mode=cache_mode)
    c1, c2 = copy_seeds(base_seed)
    a, b = math.sqrt(s), math.sqrt(1.0 - s)
    l1 = Landscape(spec, ((a, spec.seed), (b, c1)))
    l2 = Landscape(spec, ((a, spec.seed), (b, c2)))
    return CorrelatedPair(spec.seed, c1, c2, float(s), l1, l2)


def split_fitness(landscape: Landscape, g, n1: int) -> tuple[float, float]:
    """Fitness of the two halves ``[0, N1)`` and ``[N1, N)`` with no wraparound.

    ``V1`` sums the components whose window lies inside the first segment
    (loci ``0 .. N1-K-1``); ``V2`` those inside the second (loci
    ``N1 .. N-K-1``).  A segment shorter than ``K+1`` contributes 0.
    """
    n, k = landscape.n, landscape.k
    bits, _ = _bits(g, n)
    if not 1 <= n1 <= n - 1:
        raise ValueError("N1 must lie in [1, N-1]")
    n2 = n - n1
    v1 = 0.0
    for i in range(n1 - k):
        v1 += landscape.component(i, window_word(bits, i, k, n))
    v2 = 0.0
    for i in range(n2 - k):
        v2 += landscape.component(n1 + i, window_word(bits, n1 + i, k, n))
    return v1, v2
