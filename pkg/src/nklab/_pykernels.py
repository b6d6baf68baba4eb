"""Pure-Python/numpy implementations of the hot kernels.

This module is the reference for ``_kernels.pyx``: every function here has a
compiled twin with the same signature, and the two must agree bit for bit
(``tests/test_backend_parity.py``).  It is also the fallback when the
extension is not built.

Genomes are plain integers: bit ``i`` holds locus ``i`` (1 <-> spin +1).
"""
from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
# domain tags keep disorder and chain streams apart
DISORDER_TAG = 0x4E4B2D4C414E4453
CHAIN_TAG = 0x434841494E2D5247
TWO_M53 = 2.0 ** -53
U_LO = TWO_M53
U_HI = 1.0 - TWO_M53

# Wichura (1988) AS241 PPND16 coefficients, highest degree last.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _horner(c, r):
    v = c[7]
    for j in range(6, -1, -1):
        v = v * r + c[j]
    return v


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def to_unit(h: int) -> float:
    u = (h >> 11) * TWO_M53
    if u < U_LO:
        return U_LO
    if u > U_HI:
        return U_HI
    return u


def ppnd16(p: float) -> float:
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _horner(_A, r) / _horner(_B, r)
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        v = _horner(_C, r) / _horner(_D, r)
    else:
        r = r - 5.0
        v = _horner(_E, r) / _horner(_F, r)
    return -v if q < 0.0 else v


def disorder_hash(seed: int, i: int, word: int) -> int:
    h = mix64((seed & MASK64) ^ DISORDER_TAG)
    h = mix64((h + GAMMA * (i + 1)) & MASK64)
    return mix64((h + GAMMA * (word + 1)) & MASK64)


def chain_hash(rng_seed: int, chain_id: int, counter: int) -> int:
    h = mix64((rng_seed & MASK64) ^ CHAIN_TAG)
    h = mix64((h + GAMMA * (chain_id + 1)) & MASK64)
    return mix64((h + GAMMA * (counter + 1)) & MASK64)


def component(seed: int, i: int, word: int) -> float:
    return ppnd16(to_unit(disorder_hash(seed, i, word)))


def mixed_component(seeds, weights, i: int, word: int) -> float:
    acc = 0.0
    for s, w in zip(seeds, weights):
        acc += w * component(int(s), i, word)
    return acc


def chain_uniform(rng_seed: int, chain_id: int, counter: int) -> float:
    return to_unit(chain_hash(rng_seed, chain_id, counter))


# -- vectorised helpers ------------------------------------------------------

_U = np.uint64


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U(30))) * _U(MIX1)
    z = (z ^ (z >> _U(27))) * _U(MIX2)
    return z ^ (z >> _U(31))


def _ppnd16_vec(p: np.ndarray) -> np.ndarray:
    q = p - 0.5
    out = np.empty_like(p)
    central = np.abs(q) <= 0.425
    qc = q[central]
    r = 0.180625 - qc * qc
    out[central] = qc * _horner(_A, r) / _horner(_B, r)
    tail = ~central
    if tail.any():
        qt = q[tail]
        rt = np.where(qt < 0.0, p[tail], 1.0 - p[tail])
        # numpy's SIMD log is not guaranteed to match libm to the last ulp
        rt = np.sqrt(-np.fromiter(map(math.log, rt), dtype=np.float64, count=rt.size))
        v = np.empty_like(rt)
        lo = rt <= 5.0
        r1 = rt[lo] - 1.6
        v[lo] = _horner(_C, r1) / _horner(_D, r1)
        r2 = rt[~lo] - 5.0
        v[~lo] = _horner(_E, r2) / _horner(_F, r2)
        out[tail] = np.where(qt < 0.0, -v, v)
    return out


def _component_row(seed: int, i: int, words: np.ndarray) -> np.ndarray:
    h = mix64((seed & MASK64) ^ DISORDER_TAG)
    h = mix64((h + GAMMA * (i + 1)) & MASK64)
    z = _mix64_vec(_U(h) + _U(GAMMA) * (words + _U(1)))
    u = (z >> _U(11)).astype(np.float64) * TWO_M53
    np.clip(u, U_LO, U_HI, out=u)
    return _ppnd16_vec(u)


def component_table(seeds, weights, n: int, k: int) -> np.ndarray:
    width = 1 << (k + 1)
    words = np.arange(width, dtype=np.uint64)
    table = np.zeros((n, width), dtype=np.float64)
    for i in range(n):
        row = table[i]
        for s, w in zip(seeds, weights):
            row += w * _component_row(int(s), i, words)
    return table


def chain_uniforms(rng_seed: int, chain_id: int, start: int, count: int) -> np.ndarray:
    return np.array([chain_uniform(rng_seed, chain_id, start + c) for c in range(count)])


# -- landscape scans ---------------------------------------------------------

def _rotr(x: int, s: int, n: int, full: int) -> int:
    if s == 0:
        return x
    return ((x >> s) | (x << (n - s))) & full


def _rotr_vec(x: np.ndarray, s: int, n: int, full: np.uint64) -> np.ndarray:
    if s == 0:
        return x
    return ((x >> _U(s)) | (x << _U(n - s))) & full


def _comp_fn(seeds, weights, table):
    if table is not None:
        return lambda i, w: table[i, w]
    seeds = [int(s) for s in seeds]
    weights = [float(w) for w in weights]
    return lambda i, w: mixed_component(seeds, weights, i, w)


def fitness_bits(n: int, k: int, seeds, weights, table, bits: int) -> float:
    comp = _comp_fn(seeds, weights, table)
    full = (1 << n) - 1
    mask = (1 << (k + 1)) - 1
    h = 0.0
    for i in range(n):
        h += comp(i, _rotr(bits, i, n, full) & mask)
    return float(h)


def delta_bits(n: int, k: int, seeds, weights, table, bits: int, j: int) -> float:
    comp = _comp_fn(seeds, weights, table)
    return _delta(comp, n, k, bits, j, (1 << n) - 1, (1 << (k + 1)) - 1)


def _delta(comp, n, k, bits, j, full, mask):
    d = 0.0
    for t in range(min(k + 1, n)):
        i = (j - t) % n
        w_old = _rotr(bits, i, n, full) & mask
        d += comp(i, w_old ^ (1 << t)) - comp(i, w_old)
    return d


def energies(n: int, k: int, seeds, weights, table) -> np.ndarray:
    full = _U((1 << n) - 1)
    mask = _U((1 << (k + 1)) - 1)
    x = np.arange(1 << n, dtype=np.uint64)
    out = np.zeros(1 << n, dtype=np.float64)
    all_words = np.arange(1 << (k + 1), dtype=np.uint64)
    for i in range(n):
        words = (_rotr_vec(x, i, n, full) & mask).astype(np.intp)
        if table is not None:
            row = table[i]
        else:
            row = np.zeros(all_words.size, dtype=np.float64)
            for s, w in zip(seeds, weights):
                row += float(w) * _component_row(int(s), i, all_words)
        out += row[words]
    return out


def gray_energies(n: int, k: int, seeds, weights, table) -> np.ndarray:
    comp = _comp_fn(seeds, weights, table)
    full = (1 << n) - 1
    mask = (1 << (k + 1)) - 1
    out = np.empty(1 << n, dtype=np.float64)
    bits = 0
    h = fitness_bits(n, k, seeds, weights, table, 0)
    out[0] = h
    for t in range(1, 1 << n):
        j = (t & -t).bit_length() - 1
        h += _delta(comp, n, k, bits, j, full, mask)
        bits ^= 1 << j
        out[bits] = h
    return out


def _window_fold_vec(x: np.ndarray, n: int, k: int) -> np.ndarray:
    full = _U(MASK64 if n == 64 else (1 << n) - 1)
    y = x.copy()
    span = 1
    while span < k + 1:
        step = min(span, k + 1 - span)
        y &= _rotr_vec(y, step, n, full)
        span += step
    return y


def window_counts(n: int, k: int) -> np.ndarray:
    x = np.arange(1 << n, dtype=np.uint64)
    return np.bitwise_count(_window_fold_vec(x, n, k)).astype(np.uint8)


def overlap_q(n: int, k: int, a: int, b: int) -> int:
    full = (1 << n) - 1
    y = ~(a ^ b) & full
    span = 1
    while span < k + 1:
        step = min(span, k + 1 - span)
        y &= _rotr(y, step, n, full)
        span += step
    return y.bit_count() if hasattr(y, "bit_count") else bin(y).count("1")


# -- Monte Carlo -------------------------------------------------------------

def metropolis(n, k, seeds, weights, table, beta, bits, energy, steps,
               rng_seed, chain_id, counter, record_every):
    """Single-spin-flip Metropolis at inverse temperature ``beta``.

    Returns ``(bits, energy, trace, accepted, best_energy, best_bits, counter)``.
    Each step consumes two chain counters (site, acceptance).
    """
    comp = _comp_fn(seeds, weights, table)
    full = (1 << n) - 1
    mask = (1 << (k + 1)) - 1
    trace = np.empty(steps // record_every if record_every > 0 else 0)
    accepted = 0
    best_e, best_b = energy, bits
    rec = 0
    for s in range(1, steps + 1):
        j = int(chain_uniform(rng_seed, chain_id, counter) * n)
        u = chain_uniform(rng_seed, chain_id, counter + 1)
        counter += 2
        d = _delta(comp, n, k, bits, j, full, mask)
        if d >= 0.0 or u < math.exp(beta * d):
            bits ^= 1 << j
            energy += d
            accepted += 1
            if energy > best_e:
                best_e, best_b = energy, bits
        if record_every > 0 and s % record_every == 0:
            trace[rec] = energy
            rec += 1
    return bits, energy, trace, accepted, best_e, best_b, counter


def coupled_max(e: np.ndarray, patterns) -> tuple[float, int, int]:
    idx = np.arange(e.size)
    best, ba, bb = -math.inf, -1, -1
    for d in patterns:
        d = int(d)
        s = e + e[idx ^ d]
        a = int(np.argmax(s))
        if s[a] > best:
            best, ba, bb = float(s[a]), a, a ^ d
    return best, ba, bb


def greedy_pack(candidates, n: int, k: int, delta_n: float) -> list[int]:
    full = _U(MASK64 if n == 64 else (1 << n) - 1)
    chosen = np.empty(0, dtype=np.uint64)
    out: list[int] = []
    for c in candidates:
        c = int(c)
        if chosen.size:
            diff = chosen ^ _U(c)
            if _window_fold_vec(~diff & full, n, k).any():
                continue
            nr = n - 2 * np.bitwise_count(diff).astype(np.int64)
            if not np.all(np.abs(nr) < delta_n):
                continue
        chosen = np.append(chosen, _U(c))
        out.append(c)
    return out
