import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from nklab import theory as th


def test_constants():
    assert th.BETA_C == pytest.approx(1.177410, abs=1e-6)
    assert th.ALPHA_STAR == pytest.approx(0.171573, abs=1e-6)
    assert th.beta_c() == math.sqrt(2 * math.log(2))


def test_entropy_endpoints_and_monotonicity():
    assert th.entropy_h(0.0) == 2.0
    assert th.entropy_h(1.0) == 1.0
    u = np.linspace(0, 1, 501)
    h = [th.entropy_h(float(x)) for x in u]
    assert all(a > b for a, b in zip(h, h[1:]))


@settings(max_examples=200, deadline=None)
@given(st.floats(1.0, 2.0))
def test_h_inverse_roundtrip(y):
    assert th.entropy_h(th.h_inverse(y)) == pytest.approx(y, abs=1e-12)


def test_rate_function_series_branch_is_continuous():
    below, above = th.rate_I(1e-3 * (1 - 1e-12)), th.rate_I(1e-3)
    assert below == pytest.approx(above, rel=1e-10)
    assert th.rate_I(1.0) == th.LN2
    assert th.rate_I(0.5) == pytest.approx(0.5 * (1.5 * math.log(1.5) + 0.5 * math.log(0.5)), rel=1e-15)


def test_discriminant_vanishes_at_threshold():
    assert abs(th.discriminant(th.ALPHA_STAR)) <= 1e-12
    with pytest.raises(ValueError):
        th.discriminant(0.2)


@pytest.mark.parametrize("alpha", [0.05, 0.1, 0.17])
def test_roots_multiply_to_alpha(alpha):
    assert th.c1(alpha) * th.c2(alpha) == pytest.approx(alpha, abs=1e-9)
    assert th.c1(alpha) + th.c2(alpha) == pytest.approx(1 - alpha, abs=1e-15)


def test_free_energy_continuous_and_c1_at_beta_c():
    b = th.BETA_C
    assert th.LN2 + b * b / 2 == pytest.approx(b * b, abs=1e-12)
    assert abs(th.limiting_free_energy(b * (1 - 1e-15)) - th.limiting_free_energy(b)) <= 1e-12
    assert th.limiting_free_energy_derivative(b * (1 - 1e-15)) == pytest.approx(b, abs=1e-12)
    assert th.limiting_free_energy(0.5) == th.LN2 + 0.125
    assert th.limiting_free_energy(2.0) == 2.0 * b


# -- second-moment exponent -------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.2, 0.5, 1.0])
def test_exponent_positive_on_full_range(alpha):
    assert th.regime_positivity(alpha, 2000)["all_positive"]


def test_exponent_negative_in_failure_region():
    assert th.min_f(0.1, 1.15)[1] < 0


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(0.01, 1.2))
def test_min_f_matches_dense_grid(alpha, s):
    t, v = th.min_f(alpha, s)
    grid = np.linspace(0, 1 - alpha, 2001)
    vals = (alpha + grid) * th.LN2 - grid * s * s / (1 + grid)
    assert v <= vals.min() + 1e-12
    assert v == pytest.approx(th.f_s(alpha, s, t), abs=1e-12)


def test_sup_identity():
    assert all(r["holds"] and r["grid_max"] <= r["closed_form"] + 1e-12 for r in th.sup_identity_check())


# -- gap thresholds ------------------------------------------------------------------------

def test_gap_bounds_high_epistasis():
    g = th.gap_bounds(0.5, 0.3)
    assert g.high_epistasis
    assert g.E == pytest.approx(th.level_E(0.5, 0.3))
    assert g.E_prime is None and g.rhs_Q_low is None


def test_gap_bounds_low_epistasis_fields():
    a = 0.1
    d_star = th.delta_star(a)
    g = th.gap_bounds(a, 0.995)
    assert 0.995 > d_star
    assert g.E_prime == pytest.approx(th.BETA_C * math.sqrt((2 - a) * th.entropy_h(0.995) / 2))
    assert g.E_prime < th.BETA_C
    small = th.gap_bounds(a, 0.05)
    assert small.rhs_Q_low is not None and small.rhs_Q_low > 0


def test_delta_star_definition():
    for a in (0.05, 0.1, 0.17):
        assert th.entropy_h(th.delta_star(a)) == pytest.approx(2 / (2 - a), abs=1e-12)


# -- beta_p ------------------------------------------------------------------------------------

def test_beta_p_values():
    assert th.beta_p(2) == pytest.approx(math.sqrt(0.5), abs=1e-12)
    d = th.beta_p(4, return_details=True)
    assert d["beta_p"] == pytest.approx(1.1147594468753668, abs=1e-9)
    assert d["attained"] == "interior"
    assert th.beta_p(2, return_details=True)["attained"] == "u->0"


def test_beta_p_monotone_and_bounded():
    vals = [th.beta_p(p) for p in (2, 4, 8, 16, 32, 64)]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
    assert all(v <= th.BETA_C + 1e-9 for v in vals)
    assert vals[-1] >= th.BETA_C - 1e-3


def test_beta_p_rejects_odd():
    with pytest.raises(ValueError):
        th.beta_p(3)


# -- orthant probabilities -------------------------------------------------------------------

def test_orthant_anchors():
    assert th.orthant_prob(0.0, 0.0) == pytest.approx(0.25, abs=1e-14)
    assert th.orthant_prob(0.5, 0.0) == pytest.approx(1 / 3, abs=1e-10)
    assert th.orthant_prob(1.0, 1.3) == th.gauss_sf(1.3)
    assert th.orthant_prob(0.0, 1.3) == pytest.approx(th.gauss_sf(1.3) ** 2, rel=1e-12)


@pytest.mark.parametrize("t", [-0.7, -0.2, 0.1, 0.5, 0.9])
@pytest.mark.parametrize("x", [-1.5, 0.0, 0.7, 2.5])
def test_orthant_matches_scipy(t, x):
    ref = stats.multivariate_normal([0, 0], [[1, t], [t, 1]]).cdf([-x, -x])
    assert th.orthant_prob(t, x) == pytest.approx(ref, abs=1e-7)


@pytest.mark.parametrize("t", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_orthant_closed_form_at_zero(t):
    assert th.orthant_prob(t, 0.0) == pytest.approx(0.25 + math.asin(t) / (2 * math.pi), abs=1e-12)


def test_log_orthant_deep_tail_is_finite():
    v = th.log_orthant_prob(0.3, 40.0)
    assert math.isfinite(v) and v < -1000


@pytest.mark.parametrize("t", [0.1 * i for i in range(1, 10)])
@pytest.mark.parametrize("s", [0.5, 0.8, 1.1])
@pytest.mark.parametrize("n", [10, 20, 40])
def test_orthant_upper_bound(t, s, n):
    assert th.lemma2_3_bound(t, s, n) >= th.orthant_prob(t, s * math.sqrt(n))


def test_corrected_orthant_asymptotic_tends_to_one():
    r = [th.orthant_asymptotic_ratio(0.3, 1.0, n, corrected=True) for n in (200, 400, 800)]
    assert all(abs(x - 1) > abs(y - 1) for x, y in zip(r, r[1:]))
    assert abs(r[-1] - 1) < 0.01


# -- second moment ------------------------------------------------------------------------------

def test_second_moment_ratio_against_direct_sum():
    from nklab.combinatorics import count_by_overlap

    n, k, s = 10, 9, 0.8
    counts = count_by_overlap(n, k).as_dict()
    ratio, bound = th.second_moment_ratio(n, k, s, counts)
    x = s * math.sqrt(n)
    direct = sum(c * th.orthant_prob(l / n, x) for l, c in counts.items()) / (2**n * th.gauss_sf(x) ** 2)
    assert ratio == pytest.approx(direct, rel=1e-10)
    assert ratio <= bound


def test_second_moment_rejects_partial_counts():
    with pytest.raises(ValueError):
        th.second_moment_ratio(4, 1, 0.5, {0: 7})


# -- envelopes ------------------------------------------------------------------------------------

def test_envelopes():
    assert th.free_energy_envelope(14, 0.0, 1.0) == 2.0
    assert th.max_envelope(14, 1.0) == pytest.approx(2 * math.exp(-3.5))
    assert th.free_energy_envelope(14, 0.5, 2.0) == pytest.approx(2 * math.exp(-14 * 0.25 / 16))
