import math

import pytest
from hypothesis import given, settings, strategies as st

from nklab import combinatorics as cb


def test_small_tables():
    assert cb.count_by_overlap(4, 1).as_dict(nonzero=True) == {0: 7, 1: 4, 2: 4, 4: 1}
    assert cb.count_by_overlap(5, 4).compact() == "{0:31,5:1}"


@pytest.mark.parametrize("n", range(2, 17))
def test_dp_matches_bruteforce(n):
    for k in range(0, n):
        assert cb.count_by_overlap(n, k) == cb.count_by_overlap_bruteforce(n, k)


@pytest.mark.parametrize("n", range(2, 10))
def test_run_method_agrees(n):
    for k in range(n):
        assert cb.count_by_overlap_bruteforce(n, k, "runs") == cb.count_by_overlap_bruteforce(n, k)


@pytest.mark.parametrize("n", [2, 17, 33, 64])
def test_totals_are_exact_powers(n):
    for k in (0, n // 2, n - 1):
        assert cb.count_by_overlap(n, k).total == 2**n


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 64).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n - 1))))
def test_gap_above_n_minus_k(args):
    n, k = args
    t = cb.count_by_overlap(n, k)
    assert all(t[l] == 0 for l in range(n - k, n))
    assert t[n] == 1


def test_rem_case():
    for n in (3, 8, 40):
        t = cb.count_by_overlap(n, n - 1)
        assert t[0] == 2**n - 1 and t[n] == 1


def test_k_zero_is_binomial():
    n = 12
    t = cb.count_by_overlap(n, 0)
    assert list(t.counts) == [math.comb(n, l) for l in range(n + 1)]


def test_json_roundtrip_and_big_ints():
    t = cb.count_by_overlap(64, 10)
    assert cb.CountTable.from_json(t.to_json()) == t
    assert '"counts"' in t.to_json()


def test_upper_bound_where_applicable():
    r = cb.lemma2_bound_check(20, 12)
    assert r["applicable"] and r["all_hold"]
    assert not cb.lemma2_bound_check(10, 3)["applicable"]


def test_construction_lower_bound_is_valid():
    for n, k in [(20, 12), (24, 14), (16, 9), (30, 20)]:
        t = cb.count_by_overlap(n, k)
        for l in range(1, n - k):
            assert cb.construction_lower_bound(n, k, l) <= t[l]


def test_construction_lower_bound_is_tight_for_one_long_run():
    # at N = 20, K = 12 only one run can exceed K, so the construction is exact
    t = cb.count_by_overlap(20, 12)
    assert [t[l] for l in range(1, 8)] == [640, 320, 160, 80, 40, 20, 20]
    assert [cb.construction_lower_bound(20, 12, l) for l in range(1, 8)] == [640, 320, 160, 80, 40, 20, 20]


def test_lower_bound_argument_checks():
    with pytest.raises(ValueError):
        cb.tightness_lower_bound(10, 3, 0)
    with pytest.raises(ValueError):
        cb.construction_lower_bound(10, 3, 7)


def test_counts_by_r():
    assert sum(cb.count_by_R(10, r) for r in range(-10, 11, 2)) == 2**10
    with pytest.raises(ValueError):
        cb.count_by_R(10, 3)
    for r in range(0, 11, 2):
        assert math.log2(cb.count_by_R(10, r)) <= cb.r_entropy_bound_log2(10, r) - 10 + 1e-12


def test_argument_validation():
    with pytest.raises(ValueError):
        cb.count_by_overlap(65, 3)
    with pytest.raises(ValueError):
        cb.count_by_overlap(5, 5)
    with pytest.raises(ValueError):
        cb.count_by_overlap_bruteforce(21, 3)
