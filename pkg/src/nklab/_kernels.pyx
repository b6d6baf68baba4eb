# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Mirror of ``_pykernels``: same signatures, same floating-point operation
order, bit-identical results.  Built with ``-ffp-contract=off`` so no fused
multiply-adds sneak in.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, uint8_t
from libc.math cimport log, sqrt, exp, fabs, INFINITY

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef uint64_t DISORDER_TAG = 0x4E4B2D4C414E4453ULL
cdef uint64_t CHAIN_TAG = 0x434841494E2D5247ULL
cdef double TWO_M53 = 1.1102230246251565404e-16
cdef double U_LO = 1.1102230246251565404e-16
cdef double U_HI = 1.0 - 1.1102230246251565404e-16

cdef double[8] A_ = [3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
                     1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
                     3.3430575583588128105e4, 2.5090809287301226727e3]
cdef double[8] B_ = [1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
                     2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
                     5.2264952788528545610e3]
cdef double[8] C_ = [1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
                     3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
                     2.27238449892691845833e-2, 7.74545014278341407640e-4]
cdef double[8] D_ = [1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
                     1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                     1.05075007164441684324e-9]
cdef double[8] E_ = [6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
                     2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                     2.71155556874348757815e-5, 2.01033439929228813265e-7]
cdef double[8] F_ = [1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
                     7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                     2.04426310338993978564e-15]


cdef inline double horner(double* c, double r) noexcept nogil:
    cdef double v = c[7]
    cdef int j
    for j in range(6, -1, -1):
        v = v * r + c[j]
    return v


cdef inline uint64_t mix64_c(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline double to_unit_c(uint64_t h) noexcept nogil:
    cdef double u = <double>(h >> 11) * TWO_M53
    if u < U_LO:
        return U_LO
    if u > U_HI:
        return U_HI
    return u


cdef double ppnd16_c(double p) noexcept nogil:
    cdef double q = p - 0.5
    cdef double r, v
    if fabs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * horner(A_, r) / horner(B_, r)
    r = p if q < 0.0 else 1.0 - p
    r = sqrt(-log(r))
    if r <= 5.0:
        r = r - 1.6
        v = horner(C_, r) / horner(D_, r)
    else:
        r = r - 5.0
        v = horner(E_, r) / horner(F_, r)
    return -v if q < 0.0 else v


cdef inline uint64_t locus_state(uint64_t seed, uint64_t i) noexcept nogil:
    cdef uint64_t h = mix64_c(seed ^ DISORDER_TAG)
    return mix64_c(h + GAMMA * (i + 1))


cdef inline double component_c(uint64_t seed, uint64_t i, uint64_t word) noexcept nogil:
    cdef uint64_t h = mix64_c(locus_state(seed, i) + GAMMA * (word + 1))
    return ppnd16_c(to_unit_c(h))


cdef inline double chain_uniform_c(uint64_t rng_seed, uint64_t chain_id, uint64_t counter) noexcept nogil:
    cdef uint64_t h = mix64_c(rng_seed ^ CHAIN_TAG)
    h = mix64_c(h + GAMMA * (chain_id + 1))
    return to_unit_c(mix64_c(h + GAMMA * (counter + 1)))


cdef inline uint64_t rotr_c(uint64_t x, int s, int n, uint64_t full) noexcept nogil:
    if s == 0:
        return x
    return ((x >> s) | (x << (n - s))) & full


cdef inline uint64_t full_mask(int n) noexcept nogil:
    return <uint64_t>0xFFFFFFFFFFFFFFFFULL if n >= 64 else ((<uint64_t>1 << n) - 1)


# Landscape context: either a dense table or the disorder terms for hashing.
cdef struct Ctx:
    int n
    int k
    uint64_t full
    uint64_t mask
    double* table
    Py_ssize_t width
    uint64_t* seeds
    double* weights
    int nterms


cdef inline double comp_ctx(Ctx* c, int i, uint64_t word) noexcept nogil:
    cdef double acc
    cdef int t
    if c.table != NULL:
        return c.table[i * c.width + <Py_ssize_t>word]
    acc = 0.0
    for t in range(c.nterms):
        acc += c.weights[t] * component_c(c.seeds[t], <uint64_t>i, word)
    return acc


cdef inline double fitness_ctx(Ctx* c, uint64_t bits) noexcept nogil:
    cdef double h = 0.0
    cdef int i
    for i in range(c.n):
        h += comp_ctx(c, i, rotr_c(bits, i, c.n, c.full) & c.mask)
    return h


cdef inline double delta_ctx(Ctx* c, uint64_t bits, int j) noexcept nogil:
    cdef double d = 0.0
    cdef int t, i, cnt
    cdef uint64_t w_old
    cnt = c.k + 1 if c.k + 1 < c.n else c.n
    for t in range(cnt):
        i = j - t
        if i < 0:
            i += c.n
        w_old = rotr_c(bits, i, c.n, c.full) & c.mask
        d += comp_ctx(c, i, w_old ^ (<uint64_t>1 << t)) - comp_ctx(c, i, w_old)
    return d


cdef class _Holder:
    """Keeps the numpy buffers behind a Ctx alive."""
    cdef Ctx ctx
    cdef object seeds_arr
    cdef object weights_arr
    cdef object table_arr

    def __init__(self, int n, int k, seeds, weights, table):
        cdef cnp.ndarray[cnp.uint64_t, ndim=1] s = np.ascontiguousarray(
            [int(x) & 0xFFFFFFFFFFFFFFFF for x in seeds], dtype=np.uint64)
        cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.ascontiguousarray(weights, dtype=np.float64)
        cdef cnp.ndarray[cnp.float64_t, ndim=2] tb
        self.seeds_arr = s
        self.weights_arr = w
        self.ctx.n = n
        self.ctx.k = k
        self.ctx.full = full_mask(n)
        self.ctx.mask = full_mask(k + 1)
        self.ctx.seeds = <uint64_t*>s.data
        self.ctx.weights = <double*>w.data
        self.ctx.nterms = <int>s.shape[0]
        if table is None:
            self.ctx.table = NULL
            self.ctx.width = 0
        else:
            tb = np.ascontiguousarray(table, dtype=np.float64)
            self.table_arr = tb
            self.ctx.table = <double*>tb.data
            self.ctx.width = tb.shape[1]


# -- scalar API --------------------------------------------------------------

def mix64(z):
    return int(mix64_c(<uint64_t>(int(z) & 0xFFFFFFFFFFFFFFFF)))


def ppnd16(double p):
    return ppnd16_c(p)


def component(seed, int i, word):
    return component_c(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF), <uint64_t>i,
                       <uint64_t>int(word))


def mixed_component(seeds, weights, int i, word):
    cdef double acc = 0.0
    for s, w in zip(seeds, weights):
        acc += <double>w * component_c(<uint64_t>(int(s) & 0xFFFFFFFFFFFFFFFF), <uint64_t>i,
                                       <uint64_t>int(word))
    return acc


def chain_uniform(rng_seed, chain_id, counter):
    return chain_uniform_c(<uint64_t>(int(rng_seed) & 0xFFFFFFFFFFFFFFFF),
                           <uint64_t>int(chain_id), <uint64_t>int(counter))


def chain_uniforms(rng_seed, chain_id, start, Py_ssize_t count):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(count, dtype=np.float64)
    cdef uint64_t rs = <uint64_t>(int(rng_seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t cid = <uint64_t>int(chain_id)
    cdef uint64_t st = <uint64_t>int(start)
    cdef Py_ssize_t c
    for c in range(count):
        out[c] = chain_uniform_c(rs, cid, st + <uint64_t>c)
    return out


def component_table(seeds, weights, int n, int k):
    cdef Py_ssize_t width = <Py_ssize_t>1 << (k + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] table = np.zeros((n, width), dtype=np.float64)
    cdef _Holder hold = _Holder(n, k, seeds, weights, None)
    cdef Ctx* c = &hold.ctx
    cdef double* tp = <double*>table.data
    cdef int i, t
    cdef Py_ssize_t w
    cdef uint64_t ls
    cdef double acc
    with nogil:
        for i in range(n):
            for w in range(width):
                acc = 0.0
                for t in range(c.nterms):
                    acc += c.weights[t] * component_c(c.seeds[t], <uint64_t>i, <uint64_t>w)
                tp[i * width + w] = acc
    return table


def fitness_bits(int n, int k, seeds, weights, table, bits):
    cdef _Holder hold = _Holder(n, k, seeds, weights, table)
    return fitness_ctx(&hold.ctx, <uint64_t>int(bits))


def delta_bits(int n, int k, seeds, weights, table, bits, int j):
    cdef _Holder hold = _Holder(n, k, seeds, weights, table)
    return delta_ctx(&hold.ctx, <uint64_t>int(bits), j)


# -- exhaustive scans --------------------------------------------------------

def energies(int n, int k, seeds, weights, table):
    """Fitness of every genome.

    Accumulates locus by locus (one component row at a time) so each genome
    still receives its components in ascending-locus order -- the same
    floating-point sum as ``fitness_bits`` -- while hashing each component
    only once.
    """
    cdef Py_ssize_t size = <Py_ssize_t>1 << n
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(size, dtype=np.float64)
    cdef _Holder hold = _Holder(n, k, seeds, weights, table)
    cdef Ctx* c = &hold.ctx
    cdef double* op = <double*>out.data
    cdef Py_ssize_t width = <Py_ssize_t>1 << (k + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rowbuf
    cdef double* row
    cdef Py_ssize_t x, w
    cdef int i, t
    cdef double acc
    if c.table == NULL:
        rowbuf = np.empty(width, dtype=np.float64)
        row = <double*>rowbuf.data
    with nogil:
        for i in range(n):
            if c.table != NULL:
                row = c.table + i * c.width
            else:
                for w in range(width):
                    acc = 0.0
                    for t in range(c.nterms):
                        acc += c.weights[t] * component_c(c.seeds[t], <uint64_t>i, <uint64_t>w)
                    row[w] = acc
            for x in range(size):
                op[x] += row[<Py_ssize_t>(rotr_c(<uint64_t>x, i, n, c.full) & c.mask)]
    return out


def gray_energies(int n, int k, seeds, weights, table):
    cdef Py_ssize_t size = <Py_ssize_t>1 << n
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(size, dtype=np.float64)
    cdef _Holder hold = _Holder(n, k, seeds, weights, table)
    cdef Ctx* c = &hold.ctx
    cdef double* op = <double*>out.data
    cdef uint64_t bits = 0
    cdef double h
    cdef Py_ssize_t t
    cdef int j
    with nogil:
        h = fitness_ctx(c, 0)
        op[0] = h
        for t in range(1, size):
            j = 0
            while not ((t >> j) & 1):
                j += 1
            h += delta_ctx(c, bits, j)
            bits ^= <uint64_t>1 << j
            op[bits] = h
    return out


cdef inline uint64_t window_fold(uint64_t y, int n, int k, uint64_t full) noexcept nogil:
    cdef int span = 1
    cdef int step
    while span < k + 1:
        step = span if span < k + 1 - span else k + 1 - span
        y &= rotr_c(y, step, n, full)
        span += step
    return y


def window_counts(int n, int k):
    cdef Py_ssize_t size = <Py_ssize_t>1 << n
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] out = np.empty(size, dtype=np.uint8)
    cdef uint8_t* op = <uint8_t*>out.data
    cdef uint64_t full = full_mask(n)
    cdef Py_ssize_t x
    with nogil:
        for x in range(size):
            op[x] = <uint8_t>__builtin_popcountll(window_fold(<uint64_t>x, n, k, full))
    return out


def overlap_q(int n, int k, a, b):
    cdef uint64_t full = full_mask(n)
    cdef uint64_t y = ~(<uint64_t>int(a) ^ <uint64_t>int(b)) & full
    return __builtin_popcountll(window_fold(y, n, k, full))


# -- Monte Carlo -------------------------------------------------------------

def metropolis(int n, int k, seeds, weights, table, double beta, bits, double energy,
               Py_ssize_t steps, rng_seed, chain_id, counter, Py_ssize_t record_every):
    """Single-spin-flip Metropolis; see the pure-Python twin for the contract."""
    cdef _Holder hold = _Holder(n, k, seeds, weights, table)
    cdef Ctx* c = &hold.ctx
    cdef Py_ssize_t nrec = steps // record_every if record_every > 0 else 0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] trace = np.empty(nrec, dtype=np.float64)
    cdef double* tp = <double*>trace.data
    cdef uint64_t b = <uint64_t>int(bits)
    cdef uint64_t rs = <uint64_t>(int(rng_seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t cid = <uint64_t>int(chain_id)
    cdef uint64_t ctr = <uint64_t>int(counter)
    cdef Py_ssize_t s, rec = 0, accepted = 0
    cdef int j
    cdef double u, d, best_e = energy
    cdef uint64_t best_b = b
    with nogil:
        for s in range(1, steps + 1):
            j = <int>(chain_uniform_c(rs, cid, ctr) * n)
            u = chain_uniform_c(rs, cid, ctr + 1)
            ctr += 2
            d = delta_ctx(c, b, j)
            if d >= 0.0 or u < exp(beta * d):
                b ^= <uint64_t>1 << j
                energy += d
                accepted += 1
                if energy > best_e:
                    best_e = energy
                    best_b = b
            if record_every > 0 and s % record_every == 0:
                tp[rec] = energy
                rec += 1
    return int(b), energy, trace, accepted, best_e, int(best_b), int(ctr)


def coupled_max(e, patterns):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ea = np.ascontiguousarray(e, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pa = np.ascontiguousarray(patterns, dtype=np.int64)
    cdef double* ep = <double*>ea.data
    cdef int64_t* pp = <int64_t*>pa.data
    cdef Py_ssize_t size = ea.shape[0], np_ = pa.shape[0]
    cdef Py_ssize_t p, a, d
    cdef double s, best = -INFINITY
    cdef Py_ssize_t ba = -1, bb = -1
    with nogil:
        for p in range(np_):
            d = <Py_ssize_t>pp[p]
            for a in range(size):
                s = ep[a] + ep[a ^ d]
                if s > best:
                    best = s
                    ba = a
                    bb = a ^ d
    return best, int(ba), int(bb)


def greedy_pack(candidates, int n, int k, double delta_n):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] ca = np.ascontiguousarray(
        [int(x) for x in candidates], dtype=np.uint64)
    cdef Py_ssize_t m = ca.shape[0]
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] chosen = np.empty(m, dtype=np.uint64)
    cdef uint64_t* cp = <uint64_t*>ca.data
    cdef uint64_t* sp = <uint64_t*>chosen.data
    cdef uint64_t full = full_mask(n)
    cdef uint64_t diff, x
    cdef Py_ssize_t q, r, nc = 0
    cdef bint ok
    with nogil:
        for q in range(m):
            x = cp[q]
            ok = True
            for r in range(nc):
                diff = sp[r] ^ x
                if window_fold(~diff & full, n, k, full) != 0:
                    ok = False
                    break
                if fabs(<double>(n - 2 * __builtin_popcountll(diff))) >= delta_n:
                    ok = False
                    break
            if ok:
                sp[nc] = x
                nc += 1
    return [int(chosen[r]) for r in range(nc)]
