"""The compiled kernels must reproduce the reference kernels bit for bit."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nklab import _pykernels as P

C = pytest.importorskip("nklab._kernels", reason="compiled kernels not built")

SEEDS, W = [12345], [1.0]
SHAPES = [(8, 2), (10, 9), (12, 5), (13, 0)]


@pytest.mark.parametrize("n,k", SHAPES)
def test_tables_and_energies_identical(n, k):
    tc, tp = C.component_table(SEEDS, W, n, k), P.component_table(SEEDS, W, n, k)
    assert np.array_equal(tc, tp)
    ec = C.energies(n, k, SEEDS, W, None)
    assert np.array_equal(ec, P.energies(n, k, SEEDS, W, None))
    assert np.array_equal(ec, P.energies(n, k, SEEDS, W, tp))
    assert np.array_equal(C.gray_energies(n, k, SEEDS, W, tc), P.gray_energies(n, k, SEEDS, W, tp))
    assert np.array_equal(C.window_counts(n, k), P.window_counts(n, k))


@pytest.mark.parametrize("n,k", SHAPES)
def test_metropolis_identical(n, k):
    e0 = P.fitness_bits(n, k, SEEDS, W, None, 5)
    r1 = C.metropolis(n, k, SEEDS, W, None, 1.0, 5, e0, 3000, 99, 3, 0, 10)
    r2 = P.metropolis(n, k, SEEDS, W, None, 1.0, 5, e0, 3000, 99, 3, 0, 10)
    assert r1[0] == r2[0] and r1[1] == r2[1]
    assert np.array_equal(r1[2], r2[2])
    assert r1[3:] == r2[3:]


@pytest.mark.parametrize("n,k", SHAPES)
def test_pair_kernels_identical(n, k):
    e = P.energies(n, k, SEEDS, W, None)
    pats = np.nonzero(P.window_counts(n, k) == 0)[0]
    assert C.coupled_max(e, pats) == P.coupled_max(e, pats)
    cand = np.argsort(-e, kind="stable")[:200]
    assert C.greedy_pack(cand, n, k, 0.5 * n) == P.greedy_pack(cand, n, k, 0.5 * n)


def test_inverse_cdf_identical_including_tails():
    for u in (1e-300, 2.0**-53, 1e-10, 0.02, 0.5, 0.97, 1 - 2.0**-53):
        assert C.ppnd16(u) == P.ppnd16(u)


def test_mixed_terms_identical():
    s, w = [1, 2], [0.6, 0.8]
    assert np.array_equal(C.component_table(s, w, 10, 3), P.component_table(s, w, 10, 3))
    assert np.array_equal(C.energies(10, 3, s, w, None), P.energies(10, 3, s, w, None))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 64).flatmap(lambda n: st.tuples(
    st.just(n), st.integers(0, n - 1), st.integers(0, 2**64 - 1), st.integers(0, 2**n - 1),
    st.integers(0, n - 1))))
def test_fitness_and_delta_identical(args):
    n, k, seed, bits, j = args
    assert C.fitness_bits(n, k, [seed], W, None, bits) == P.fitness_bits(n, k, [seed], W, None, bits)
    assert C.delta_bits(n, k, [seed], W, None, bits, j) == P.delta_bits(n, k, [seed], W, None, bits, j)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
def test_chain_stream_identical(seed, chain, counter):
    assert C.chain_uniform(seed, chain, counter) == P.chain_uniform(seed, chain, counter)
    assert C.mix64(seed) == P.mix64(seed)
