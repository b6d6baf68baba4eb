"""Closed forms and numerically resolved constants for the NK model.

Everything here is a pure function of its arguments.  Notation:

* ``beta_c = sqrt(2 ln 2)``: critical inverse temperature and limiting
  ground-state energy per locus;
* ``alpha_star = 3 - 2 sqrt 2``: epistasis threshold between the high- and
  low-epistasis overlap-gap regimes;
* ``h(u)``: the binary-entropy-type function
  ``1 - (1+u)/2 log2((1+u)/2) - (1-u)/2 log2((1-u)/2)``;
* ``I(u) = ((1+u) ln(1+u) + (1-u) ln(1-u)) / 2``;
* ``f_s(t) = (alpha + t) ln 2 - t s^2 / (1+t)`` on ``[0, 1-alpha]``, the
  exponent controlling the second moment of the level-set count.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import integrate, optimize, special

__all__ = [
    "BETA_C", "ALPHA_STAR", "LN2",
    "beta_c", "alpha_star", "discriminant", "c1", "c2",
    "limiting_free_energy", "limiting_free_energy_derivative",
    "entropy_h", "h_inverse", "rate_I",
    "f_s", "min_f", "regime_positivity",
    "GapBounds", "gap_bounds", "level_E", "level_E_prime", "delta_star",
    "beta_p", "beta_p_objective",
    "gauss_sf", "log_gauss_sf", "mills_lower",
    "orthant_prob", "log_orthant_prob", "lemma2_3_bound", "orthant_asymptotic_ratio",
    "second_moment_ratio", "second_moment_bound", "sup_identity_check",
    "free_energy_envelope", "max_envelope",
]

LN2 = math.log(2.0)
BETA_C = math.sqrt(2.0 * LN2)
ALPHA_STAR = 3.0 - 2.0 * math.sqrt(2.0)
_ALPHA_STAR_CONJ = 3.0 + 2.0 * math.sqrt(2.0)
SQRT_LN2 = math.sqrt(LN2)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def beta_c() -> float:
    return BETA_C


def alpha_star() -> float:
    return ALPHA_STAR


# -- low-epistasis roots ---------------------------------------------------------

def discriminant(alpha: float) -> float:
    """``Delta(alpha) = sqrt(alpha^2 - 6 alpha + 1)``, real for ``alpha <= alpha_*``.

    The quadratic is evaluated in factored form ``(alpha - alpha_*)(alpha -
    3 - 2 sqrt 2)`` so that it vanishes exactly at ``alpha_*`` instead of
    leaving an O(1e-8) square root of round-off.
    """
    if not 0.0 < alpha <= ALPHA_STAR:
        raise ValueError(f"Delta(alpha) is real only for 0 < alpha <= {ALPHA_STAR}")
    d = (alpha - ALPHA_STAR) * (alpha - _ALPHA_STAR_CONJ)
    return math.sqrt(d) if d > 0.0 else 0.0


def c1(alpha: float) -> float:
    return 0.5 * (1.0 - alpha - discriminant(alpha))


def c2(alpha: float) -> float:
    return 0.5 * (1.0 - alpha + discriminant(alpha))


# -- limiting free energy ------------------------------------------------------------

def limiting_free_energy(beta: float) -> float:
    """``ln 2 + beta^2/2`` below ``beta_c`` and ``beta beta_c`` above."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return LN2 + 0.5 * beta * beta if beta < BETA_C else beta * BETA_C


def limiting_free_energy_derivative(beta: float) -> float:
    if beta <= 0:
        raise ValueError("beta must be positive")
    return beta if beta < BETA_C else BETA_C


# -- entropy-type functions ----------------------------------------------------------

def _xlog2x(x: float) -> float:
    return 0.0 if x <= 0.0 else x * math.log2(x)


def entropy_h(u: float) -> float:
    """``h(u)``; strictly decreasing from ``h(0) = 2`` to ``h(1) = 1``."""
    if not 0.0 <= u <= 1.0:
        raise ValueError("u must lie in [0, 1]")
    return 1.0 - _xlog2x(0.5 * (1.0 + u)) - _xlog2x(0.5 * (1.0 - u))


def h_inverse(y: float, tol: float = 1e-14) -> float:
    """Solve ``h(u) = y`` for ``u`` in ``[0, 1]`` by bisection."""
    if not 1.0 <= y <= 2.0:
        raise ValueError("y must lie in [1, 2]")
    if y == 2.0:
        return 0.0
    if y == 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if entropy_h(mid) > y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rate_I(u: float) -> float:
    """``I(u) = ((1+u) ln(1+u) + (1-u) ln(1-u)) / 2`` with ``I(1) = ln 2``."""
    if not 0.0 <= u <= 1.0:
        raise ValueError("u must lie in [0, 1]")
    if u < 1e-3:
        # sum_k u^{2k} / (2k (2k-1)); cancellation-free near 0
        u2 = u * u
        return u2 * (1 / 2 + u2 * (1 / 12 + u2 * (1 / 30 + u2 * (1 / 56 + u2 / 90))))
    if u == 1.0:
        return LN2
    return 0.5 * ((1.0 + u) * math.log1p(u) + (1.0 - u) * math.log1p(-u))


# -- second-moment exponent ------------------------------------------------------------

def f_s(alpha: float, s: float, t: float) -> float:
    return (alpha + t) * LN2 - t * s * s / (1.0 + t)


def min_f(alpha: float, s: float) -> tuple[float, float]:
    """Minimise ``f_s`` over ``[0, 1-alpha]``; returns ``(t_min, value)``.

    ``f_s`` is convex in ``t`` with stationary point ``t_* = s/sqrt(ln 2) - 1``,
    so the minimiser is ``t_*`` clamped to the interval.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if s <= 0:
        raise ValueError("s must be positive")
    t_star = s / SQRT_LN2 - 1.0
    hi = 1.0 - alpha
    if t_star <= 0.0:
        return 0.0, alpha * LN2
    if t_star >= hi:
        return hi, LN2 - hi * s * s / (2.0 - alpha)
    return t_star, -(1.0 - alpha) * LN2 + 2.0 * s * SQRT_LN2 - s * s


def regime_positivity(alpha: float, n_grid: int = 10_000) -> dict:
    """Certify ``min_f > 0`` on a grid of ``s`` in ``(0, s_max(alpha))``.

    ``s_max = beta_c`` for ``alpha >= alpha_*`` and
    ``sqrt(ln 2) (1 + sqrt(alpha))`` below, the range on which the second
    moment method controls the level-set count.
    """
    s_max = BETA_C if alpha >= ALPHA_STAR else SQRT_LN2 * (1.0 + math.sqrt(alpha))
    grid = s_max * np.arange(1, n_grid + 1) / (n_grid + 1)
    first_failure = None
    smallest = math.inf
    for s in grid:
        v = min_f(alpha, float(s))[1]
        smallest = min(smallest, v)
        if v <= 0.0 and first_failure is None:
            first_failure = float(s)
    return {"alpha": alpha, "s_max": s_max, "n_grid": n_grid, "all_positive": first_failure is None,
            "first_failure": first_failure, "smallest_value": smallest}


# -- overlap-gap thresholds ------------------------------------------------------------

def level_E(alpha: float, delta: float) -> float:
    """Fitness level above which distinct genomes have ``|R| < delta`` (high epistasis)."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return BETA_C - BETA_C * min(1.0 - math.sqrt(entropy_h(delta) / 2.0),
                                 1.0 - (3.0 - alpha) / (2.0 * math.sqrt(2.0)))


def delta_star(alpha: float) -> float:
    """``h^{-1}(2/(2-alpha))``: left end of the domain of ``E'``."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    return h_inverse(2.0 / (2.0 - alpha))


def level_E_prime(alpha: float, delta: float) -> float:
    """Low-epistasis analogue of :func:`level_E`, defined for ``delta > delta_*``."""
    if not 0.0 < alpha <= ALPHA_STAR:
        raise ValueError("E' is defined only for 0 < alpha <= alpha_*")
    if not 0.0 < delta < 1.0 or entropy_h(delta) >= 2.0 / (2.0 - alpha):
        raise ValueError("delta must lie in (delta_*, 1)")
    return BETA_C * math.sqrt((2.0 - alpha) * entropy_h(delta) / 2.0)


@dataclass(frozen=True)
class GapBounds:
    """Overlap-gap thresholds at ``(alpha, delta)``.

    ``rhs_*`` are the amounts by which ``2 lim E M`` exceeds the constrained
    coupled maximum.  Low-epistasis fields are ``None`` outside their range.
    """

    alpha: float
    delta: float
    high_epistasis: bool
    rhs_Q: float
    rhs_R: float
    E: float
    Delta: float | None = None
    c1: float | None = None
    c2: float | None = None
    delta_star: float | None = None
    rhs_Q_low: float | None = None
    rhs_R_low: float | None = None
    E_prime: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def gap_bounds(alpha: float, delta: float) -> GapBounds:
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    q_gap = 1.0 - (3.0 - alpha) / (2.0 * math.sqrt(2.0))
    r_gap = min(1.0 - math.sqrt(entropy_h(delta) / 2.0), q_gap)
    fields = dict(alpha=alpha, delta=delta, high_epistasis=alpha > ALPHA_STAR,
                  rhs_Q=2.0 * BETA_C * q_gap, rhs_R=2.0 * BETA_C * r_gap, E=BETA_C - BETA_C * r_gap)
    if alpha <= ALPHA_STAR:
        d = discriminant(alpha)
        fields.update(Delta=d, c1=c1(alpha), c2=c2(alpha), delta_star=delta_star(alpha))
        if delta < fields["c1"]:
            fields["rhs_Q_low"] = 2.0 * BETA_C * (1.0 - math.sqrt(1.0 - delta * (d + delta) / 2.0))
        if entropy_h(delta) < 2.0 / (2.0 - alpha):
            e_prime = level_E_prime(alpha, delta)
            fields["E_prime"] = e_prime
            fields["rhs_R_low"] = 2.0 * BETA_C * (1.0 - math.sqrt((2.0 - alpha) * entropy_h(delta) / 2.0))
    return GapBounds(**fields)


# -- beta_p --------------------------------------------------------------------------

def beta_p_objective(u: float, p: int) -> float:
    """``g(u) = (1 + u^{-p}) I(u)`` on ``(0, 1)``."""
    if u <= 0.0:
        return 0.5 if p == 2 else math.inf
    try:
        up = u ** (-p)
    except OverflowError:
        return math.inf
    return (1.0 + up) * rate_I(u)


def beta_p(p: int, return_details: bool = False):
    """``sqrt(inf_{0<u<1} (1 + u^{-p}) I(u))`` for even ``p >= 2``.

    The infimum can sit on the boundary (``u -> 0`` for ``p = 2``) or within
    ~1e-4 of ``u = 1`` for large ``p``, so the objective is first scanned on
    log-spaced grids clustered at both ends, the best grid point is refined
    by bounded scalar minimisation, and the result is compared with the
    boundary limits ``g(0+) = 1/2`` (``p = 2``; ``+inf`` otherwise) and
    ``g(1-) = 2 ln 2``.
    """
    if p < 2 or p % 2:
        raise ValueError("p must be an even integer >= 2")
    near0 = np.logspace(-12, -0.3, 400)
    near1 = 1.0 - np.logspace(-12, -0.3, 400)
    grid = np.unique(np.concatenate([near0, np.linspace(0.01, 0.99, 981), near1]))
    grid = grid[(grid > 0.0) & (grid < 1.0)]
    vals = np.array([beta_p_objective(float(u), p) for u in grid])
    j = int(np.argmin(vals))
    lo = float(grid[max(j - 1, 0)])
    hi = float(grid[min(j + 1, grid.size - 1)])
    best_u, best_g = float(grid[j]), float(vals[j])
    if hi > lo:
        res = optimize.minimize_scalar(lambda u: beta_p_objective(u, p), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-15, "maxiter": 500})
        if res.fun < best_g:
            best_u, best_g = float(res.x), float(res.fun)
    where = "interior"
    boundary0 = 0.5 if p == 2 else math.inf
    if boundary0 <= best_g + 1e-12:
        best_u, best_g, where = 0.0, min(boundary0, best_g), "u->0"
    if 2.0 * LN2 <= best_g:
        best_u, best_g, where = 1.0, 2.0 * LN2, "u->1"
    value = math.sqrt(best_g)
    if return_details:
        return {"p": p, "beta_p": value, "inf_g": best_g, "argmin_u": best_u, "attained": where}
    return value


# -- Gaussian tails ----------------------------------------------------------------------

def gauss_sf(x: float) -> float:
    """``P(Z >= x)`` for standard normal ``Z`` (full relative accuracy)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def log_gauss_sf(x: float) -> float:
    return float(special.log_ndtr(-x))


def mills_lower(s: float, n: int) -> float:
    """``x/(sqrt(2 pi)(x^2+1)) e^{-x^2/2}`` at ``x = s sqrt(N)``: lower bound on ``P(Z >= x)``."""
    x = s * math.sqrt(n)
    return x / (math.sqrt(2.0 * math.pi) * (x * x + 1.0)) * math.exp(-0.5 * x * x)


def _log_orthant_core(t: float, x: float) -> float:
    """``log P(X1 >= x, X2 >= x)`` for ``x >= 0`` and ``|t| < 1``.

    Writes the probability as ``phi(x) * int_0^inf exp(-x y - y^2/2)
    Phi_bar((x(1-t) - t y)/sqrt(1-t^2)) dy`` (condition on ``X1 = x + y``),
    whose integrand is O(1), so no underflow occurs for large ``x``.
    """
    r = math.sqrt((1.0 - t) * (1.0 + t))

    def integrand(y):
        return math.exp(-x * y - 0.5 * y * y + special.log_ndtr(-(x * (1.0 - t) - t * y) / r))

    pieces = [0.0]
    if t > 0.0:
        y0 = x * (1.0 - t) / t  # where the conditional tail crosses 1/2
        if 0.0 < y0 < 60.0:
            pieces.append(y0)
    total = 0.0
    for a, b in zip(pieces, pieces[1:] + [math.inf]):
        v, _ = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-12, limit=400)
        total += v
    return -0.5 * x * x - _LOG_SQRT_2PI + math.log(total)


def log_orthant_prob(t: float, x: float) -> float:
    """Logarithm of :func:`orthant_prob`; usable deep in the tail."""
    if not -1.0 <= t <= 1.0:
        raise ValueError("correlation must lie in [-1, 1]")
    if t == 1.0:
        return log_gauss_sf(x)
    if x < 0.0 or t == -1.0:
        p = orthant_prob(t, x)
        return math.log(p) if p > 0 else -math.inf
    return _log_orthant_core(t, x)


def orthant_prob(t: float, x: float) -> float:
    """``P(X1 >= x, X2 >= x)`` for standard bivariate normals with correlation ``t``."""
    if not -1.0 <= t <= 1.0:
        raise ValueError("correlation must lie in [-1, 1]")
    if t == 1.0:
        return gauss_sf(x)
    if t == -1.0:
        return max(0.0, gauss_sf(x) - gauss_sf(-x)) if x < 0 else 0.0
    if x >= 0.0:
        return math.exp(_log_orthant_core(t, x))
    r = math.sqrt((1.0 - t) * (1.0 + t))

    def integrand(z):
        return math.exp(-0.5 * z * z - _LOG_SQRT_2PI) * gauss_sf((x - t * z) / r)

    v1, _ = integrate.quad(integrand, x, 0.0, epsabs=1e-14, epsrel=1e-12, limit=400)
    v2, _ = integrate.quad(integrand, 0.0, math.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
    return v1 + v2


def lemma2_3_bound(t: float, s: float, n: int) -> float:
    """``P(Z >= s sqrt N)^2 + arcsin(t)/(2 pi) e^{-s^2 N/(1+t)}``.

    Upper bound on ``orthant_prob(t, s sqrt N)`` for ``t`` in ``[0, 1]``.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    return gauss_sf(s * math.sqrt(n)) ** 2 + math.asin(t) / (2.0 * math.pi) * math.exp(-s * s * n / (1.0 + t))


def orthant_asymptotic_ratio(t: float, s: float, n: int, corrected: bool = False) -> float:
    """Orthant probability at ``x = s sqrt N`` divided by its tail asymptotic.

    With ``corrected=False`` the reference is
    ``e^{-x^2/(1+t)} / (2 pi x^2 sqrt(1-t^2))``; the exact large-``x``
    behaviour carries an extra factor ``(1+t)^2``, so this ratio tends to
    ``(1+t)^2``.  With ``corrected=True`` the factor is included and the ratio
    tends to 1.
    """
    x2 = s * s * n
    log_r = (log_orthant_prob(t, math.sqrt(x2)) + math.log(2.0 * math.pi * x2)
             + 0.5 * math.log((1.0 - t) * (1.0 + t)) + x2 / (1.0 + t))
    if corrected:
        log_r -= 2.0 * math.log1p(t)
    return math.exp(log_r)


# -- second moment of the level-set count ----------------------------------------------------

def second_moment_bound(n: int, k: int, s: float) -> float:
    """Three-term analytic upper bound on ``E L^2 / (E L)^2``.

    ``2 + sqrt(2 pi)(s^2 N + 1)/(s sqrt N) e^{-N(ln 2 - s^2/2)}
    + 4 pi (s^2 N + 1)^2 N / s^2 e^{-N min f_s}``, with ``f_s`` minimised over
    ``[0, 1 - K/N]`` so the bound is evaluated at the effective ratio ``K/N``.
    """
    x2 = s * s * n
    alpha_eff = k / n
    term1 = math.sqrt(2.0 * math.pi) * (x2 + 1.0) / (s * math.sqrt(n)) * math.exp(-n * (LN2 - 0.5 * s * s))
    mf = min_f(alpha_eff, s)[1] if alpha_eff > 0 else 0.0
    term2 = 4.0 * math.pi * (x2 + 1.0) ** 2 * n / (s * s) * math.exp(-n * mf)
    return 2.0 + term1 + term2


def second_moment_ratio(n: int, k: int, s: float, counts: Mapping[int, int]) -> tuple[float, float]:
    """Exact ``E L_N(s)^2 / (E L_N(s))^2`` and its analytic bound.

    ``E L^2 = 2^N sum_l counts[l] P(X1(l/N) >= s sqrt N, X2(l/N) >= s sqrt N)``
    where ``counts[l]`` is the number of genomes with ``N Q(sigma, 1) = l``.
    """
    if sum(int(c) for c in counts.values()) != 1 << n:
        raise ValueError("counts must be the full overlap table for this N")
    x = s * math.sqrt(n)
    log_sf = log_gauss_sf(x)
    total = 0.0
    for l, c in sorted(counts.items()):
        c = int(c)
        if c == 0:
            continue
        # ratio contribution counts[l] * P_l / (2^N sf^2), assembled in log space
        total += math.exp(math.log(c) - n * LN2 + log_orthant_prob(l / n, x) - 2.0 * log_sf)
    return total, second_moment_bound(n, k, s)


def sup_identity_check(alphas: Sequence[float] = tuple(np.linspace(0.05, 1.0, 20)),
                       n_grid: int = 100_000) -> list[dict]:
    """Check ``sup_{0<t<=1-alpha} (1+t)(2-alpha-t) = ((3-alpha)/2)^2``.

    The maximiser ``(1-alpha)/2`` is used clamped to the interval; a dense
    grid maximum is reported alongside.
    """
    out = []
    for a in alphas:
        a = float(a)
        hi = 1.0 - a
        t_opt = min(max(0.5 * (1.0 - a), 0.0), hi)
        closed = ((3.0 - a) / 2.0) ** 2
        at_opt = (1.0 + t_opt) * (2.0 - a - t_opt)
        ts = np.linspace(0.0, hi, n_grid + 1)[1:] if hi > 0 else np.array([0.0])
        vals = (1.0 + ts) * (2.0 - a - ts)
        out.append({"alpha": a, "closed_form": closed, "t_opt": t_opt, "value_at_t_opt": at_opt,
                    "grid_max": float(vals.max()), "holds": abs(at_opt - closed) <= 1e-12})
    return out


# -- concentration envelopes ----------------------------------------------------------------------

def free_energy_envelope(n: int, t: float, beta: float) -> float:
    """``2 e^{-N t^2/(4 beta^2)}``: tail bound for ``|F - E F|``."""
    return 2.0 * math.exp(-n * t * t / (4.0 * beta * beta))


def max_envelope(n: int, t: float) -> float:
    """``2 e^{-N t^2/4}``: tail bound for ``|M - E M|``."""
    return 2.0 * math.exp(-n * t * t / 4.0)
