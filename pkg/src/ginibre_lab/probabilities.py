"""Incomplete-gamma machinery and closed-form identities for disk events.

Everything here reduces to the regularized incomplete gamma functions with
integer shape,

    lower(n, t) = gamma(n+1, t)/n!   (= P{Poisson(t) > n}),
    upper(n, t) = Gamma(n+1, t)/n!   (= P{Poisson(t) <= n}),

evaluated in log space by a power series (t < n+1) or a continued fraction
(t >= n+1).  The implementation is self-contained; scipy.special is used only
as an independent oracle in the test suite.

Closed forms built on top:
  - void probability of a radius-r disk (product of upper tails),
  - resolvent of the planar kernel at the origin of a through-origin disk,
  - the radial density of the area gap between the typical cell and the
    cell of an inserted germ, and the integrals tying them together,
  - exact radial counting laws (independent Bernoulli modes),
  - location laws for the extra point appearing under the reduced process.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

_EPS = 1e-17
_MAX_ITER = 10_000


class IncGammaError(RuntimeError):
    """Raised when a series/continued fraction fails to converge."""


# ---------------------------------------------------------------------------
# log factorial and Poisson pmf helpers (stdlib only)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _lgamma_int_table(n_max: int) -> np.ndarray:
    """log(k!) for k = 0..n_max, exact per element via math.lgamma."""
    return np.array([math.lgamma(k + 1.0) for k in range(n_max + 1)])


def log_factorial(n) -> np.ndarray:
    n = np.asarray(n, dtype=np.int64)
    table = _lgamma_int_table(int(n.max()) if n.size else 0)
    return table[n]


def poisson_log_pmf(n, t: float) -> np.ndarray:
    """log of t^n e^-t / n!, elementwise over integer n >= 0."""
    n = np.asarray(n, dtype=np.int64)
    if t == 0.0:
        out = np.where(n == 0, 0.0, -np.inf)
        return out
    return n * math.log(t) - t - log_factorial(n)


def _log1mexp(u: np.ndarray) -> np.ndarray:
    """log(1 - e^u) for u <= 0, accurate across the whole range."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = u > -math.log(2.0)  # e^u close to 1
    with np.errstate(divide="ignore"):
        out[small] = np.log(-np.expm1(u[small]))
        out[~small] = np.log1p(-np.exp(u[~small]))
    return out


# ---------------------------------------------------------------------------
# core evaluations: series and continued fraction, vectorized over n
# ---------------------------------------------------------------------------


def _log_lower_series(n: np.ndarray, t: float) -> np.ndarray:
    """log lower(n, t) by power series; requires t < n+1 elementwise."""
    a = n + 1.0
    # sum_{k>=0} prod_{j<=k} t/(a+j), starting term 1
    term = np.ones_like(a)
    total = np.ones_like(a)
    ap = a.copy()
    for _ in range(_MAX_ITER):
        ap += 1.0
        term = term * (t / ap)
        total += term
        if np.all(term < _EPS * total):
            break
    else:
        raise IncGammaError(f"series did not converge at t={t}")
    # lower(a-hape,.) = total * t^a e^-t / Gamma(a+1)
    return np.log(total) + a * math.log(t) - t - log_factorial(np.asarray(n + 1, dtype=np.int64))


def _log_upper_cf(n: np.ndarray, t: float) -> np.ndarray:
    """log upper(n, t) by modified Lentz continued fraction; needs t >= n+1."""
    a = n + 1.0
    tiny = 1e-300
    b = t + 1.0 - a
    c = np.full_like(a, 1.0 / tiny)
    d = 1.0 / np.where(np.abs(b) < tiny, tiny, b)
    h = d.copy()
    converged = np.zeros(a.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(converged, h, h * delta)
        converged = converged | (np.abs(delta - 1.0) < _EPS)
        if np.all(converged):
            break
    else:
        raise IncGammaError(f"continued fraction did not converge at t={t}")
    # upper(n,t) = h * t^a e^-t / Gamma(a), Gamma(a) = n!
    return np.log(h) + a * math.log(t) - t - log_factorial(n.astype(np.int64))


def log_incgamma_pair(n, t: float) -> tuple[np.ndarray, np.ndarray]:
    """(log lower(n,t), log upper(n,t)) for integer array n >= 0, scalar t >= 0.

    The branch below t = n+1 computes the lower tail directly (it is the
    smaller one there) and takes the complement in log space; above, the
    roles swap.  Both logs are finite for t > 0.
    """
    n = np.atleast_1d(np.asarray(n, dtype=np.int64))
    if np.any(n < 0):
        raise ValueError("mode index must be >= 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    log_low = np.empty(n.shape, dtype=float)
    log_up = np.empty(n.shape, dtype=float)
    if t == 0.0:
        log_low[:] = -np.inf
        log_up[:] = 0.0
        return log_low, log_up
    series = t < n + 1.0
    if np.any(series):
        ll = _log_lower_series(n[series].astype(float), t)
        log_low[series] = ll
        log_up[series] = _log1mexp(ll)
    cf = ~series
    if np.any(cf):
        lu = _log_upper_cf(n[cf].astype(float), t)
        log_up[cf] = lu
        log_low[cf] = _log1mexp(lu)
    return log_low, log_up


def log_lower_regularized(n, t: float) -> np.ndarray:
    return log_incgamma_pair(n, t)[0]


def log_upper_regularized(n, t: float) -> np.ndarray:
    return log_incgamma_pair(n, t)[1]


def lower_regularized(n, t: float) -> np.ndarray:
    return np.exp(log_lower_regularized(n, t))


def upper_regularized(n, t: float) -> np.ndarray:
    return np.exp(log_upper_regularized(n, t))


def log_lower_unnormalized(n, t: float) -> np.ndarray:
    """log gamma(n+1, t) (no factorial normalization)."""
    n = np.asarray(n, dtype=np.int64)
    return log_lower_regularized(n, t) + log_factorial(n)


def mode_cutoff(t: float, tol: float = 1e-16) -> int:
    """Smallest probed N with certified dropped mass sum_{n>N} lower(n,t) < tol.

    Tail bound without cancellation: sum_{n>N} P{Poisson(t) > n} equals
    E[(Poisson(t) - N - 1)^+], and k pmf(k) = t pmf(k-1) telescopes that to
    at most t * lower(N, t), a single evaluation.
    """
    if t <= 0.0:
        return 0
    log_goal = math.log(tol * max(t, 1.0)) - math.log(max(t, 1e-300))
    n_guess = int(math.ceil(t + 10.0 * math.sqrt(t + 1.0))) + 8
    for _ in range(200):
        log_low = float(log_lower_regularized(np.array([n_guess]), t)[0])
        if log_low < log_goal:
            return n_guess
        n_guess += max(8, n_guess // 8)
    raise IncGammaError(f"cutoff search failed at t={t}")


# ---------------------------------------------------------------------------
# cached table over a t grid
# ---------------------------------------------------------------------------


@dataclass
class IncGammaTable:
    """Cached log lower/upper regularized values over (mode, t grid)."""

    n_max: int
    t_grid: np.ndarray
    log_low: np.ndarray = field(repr=False)  # shape (n_max+1, len(t_grid))
    log_up: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, n_max: int, t_grid) -> "IncGammaTable":
        t_grid = np.asarray(t_grid, dtype=float)
        ns = np.arange(n_max + 1)
        low = np.empty((n_max + 1, t_grid.size))
        up = np.empty_like(low)
        for j, t in enumerate(t_grid):
            low[:, j], up[:, j] = log_incgamma_pair(ns, float(t))
        return cls(n_max=n_max, t_grid=t_grid, log_low=low, log_up=up)

    def check(self, atol: float = 1e-12) -> None:
        """Complement and monotonicity invariants on the cached values."""
        total = np.exp(self.log_low) + np.exp(self.log_up)
        if not np.allclose(total, 1.0, rtol=0.0, atol=atol):
            raise IncGammaError("complement identity violated in table")
        low = np.exp(self.log_low)
        if np.any(np.diff(low, axis=1) < -atol):
            raise IncGammaError("lower tail not increasing in t")
        if np.any(np.diff(low, axis=0) > atol):
            raise IncGammaError("lower tail not decreasing in mode index")


# ---------------------------------------------------------------------------
# void products and resolvent series on disks
# ---------------------------------------------------------------------------


def log_void_product(t: float, n_min: int = 0) -> float:
    """log prod_{n>=n_min} upper(n, t).

    The product over dropped modes n > N contributes sum log(1 - lower_n),
    which the cutoff certifies to be below 1e-16 * max(t,1) in magnitude;
    it is therefore omitted rather than estimated by a cancelling subtraction.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return 0.0
    n_top = mode_cutoff(t)
    ns = np.arange(n_top + 1)
    _, log_up = log_incgamma_pair(ns, t)
    return math.fsum(log_up[n_min:].tolist())


def void_prob_disk(r: float, family: str = "ginibre") -> float:
    """P{no point of the process in a disk of radius r}.

    family 'ginibre': any radius-r disk (translation invariance).
    family 'palm': the centered disk B(0, r) under the reduced process
    conditioned on a point at the origin (mode 0 removed).
    """
    if r < 0:
        raise ValueError("radius must be >= 0")
    t = r * r
    if family == "ginibre":
        return math.exp(log_void_product(t, n_min=0))
    if family == "palm":
        return math.exp(log_void_product(t, n_min=1))
    raise ValueError(f"unknown family {family!r}")


def _pois_over_upper(t: float, n_min: int = 0) -> float:
    """sum_{n>=n_min} pmf_Poisson(n, t) / upper(n, t); every term is in (0, 1]."""
    if t == 0.0:
        return 1.0 if n_min == 0 else 0.0
    n_top = mode_cutoff(t)
    ns = np.arange(n_min, n_top + 1)
    _, log_up = log_incgamma_pair(ns, t)
    terms = np.exp(poisson_log_pmf(ns, t) - log_up)
    # dropped modes have pmf/upper <= lower mass, below the cutoff tolerance
    return float(math.fsum(terms.tolist()))


def resolvent_origin_disk(r: float) -> float:
    """Resolvent kernel of the planar process at the origin, for the disk
    B(a, |a|) with |a| = r (the origin sits on the boundary).

    Equals (1/pi) sum_{n>=0} r^{2n} e^{-r^2} / Gamma(n+1, r^2); each term is
    the Poisson pmf over the matching upper tail.
    """
    if r < 0:
        raise ValueError("radius must be >= 0")
    return _pois_over_upper(r * r, n_min=0) / math.pi


def area_gap_density_radial(t: float) -> float:
    """H(sqrt(t)): density (in t = |z|^2) of the area captured from the
    typical cell by an extra germ at distance sqrt(t)... evaluated as
    void product times the mode sum with the n = 0 term cancelled.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return 0.0
    return math.exp(log_void_product(t)) * _pois_over_upper(t, n_min=1)


def area_gap_density(z_modulus: float) -> float:
    """H(z) as a function of |z| (radially symmetric)."""
    return area_gap_density_radial(z_modulus * z_modulus)


# ---------------------------------------------------------------------------
# expected-area integrals
# ---------------------------------------------------------------------------

_T_SUPPORT = 60.0  # integrands decay like (1+t)e^{-2t}; mass beyond is < 1e-48


@dataclass(frozen=True)
class QuadratureValue:
    value: float
    quad_error: float

    def __float__(self) -> float:
        return self.value


def _void_product_value(t: float) -> float:
    return math.exp(log_void_product(t))


def ev_typical_cell() -> QuadratureValue:
    """Expected area of the Voronoi cell of the origin germ under the
    reduced process: pi * integral of -(d/dt) prod upper(n,t).  The exact
    value is pi; the returned quad error certifies the numerics.
    """

    def integrand(t: float) -> float:
        if t == 0.0:
            return 1.0
        return _void_product_value(t) * _pois_over_upper(t, n_min=0)

    val, err = quad(integrand, 0.0, _T_SUPPORT, limit=200, epsabs=1e-12, epsrel=1e-12)
    return QuadratureValue(value=math.pi * val, quad_error=math.pi * err)


def ev_inserted_germ_cell() -> QuadratureValue:
    """Expected area of the cell of a germ inserted at the origin of the
    un-reduced process: pi * integral of prod_{n>=0} upper(n, t) dt.
    Bounded above by 3*pi/4 through the (1+t)e^{-2t} envelope.
    """
    val, err = quad(_void_product_value, 0.0, _T_SUPPORT, limit=200, epsabs=1e-12, epsrel=1e-12)
    return QuadratureValue(value=math.pi * val, quad_error=math.pi * err)


def area_gap_radial() -> QuadratureValue:
    """integral over the plane of the area-gap density H, computed by radial
    quadrature: pi * int_0^inf H(sqrt(t)) dt."""
    val, err = quad(area_gap_density_radial, 0.0, _T_SUPPORT, limit=200,
                    epsabs=1e-12, epsrel=1e-12)
    return QuadratureValue(value=math.pi * val, quad_error=math.pi * err)


def mehta_envelope(t: float) -> float:
    """(1+t) e^{-2t}, a pointwise upper bound for prod_{n>=0} upper(n,t)."""
    return (1.0 + t) * math.exp(-2.0 * t)


@dataclass(frozen=True)
class CaptureBound:
    """Lower bound on the probability that the extra point of the reduced
    process lands in the neighbor set of the origin germ."""

    value: float
    numerator: float      # 1 - int prod upper dt  (= area gap / pi)
    denominator: float    # int sqrt(H radial) dt, provably <= 1
    simple_lower: float   # numerator^2, the denominator<=1 relaxation
    floor: float          # 1/16, from the 3/4 envelope integral


def neighbor_capture_bound() -> CaptureBound:
    numer = 1.0 - ev_inserted_germ_cell().value / math.pi

    def sqrt_h(t: float) -> float:
        return math.sqrt(area_gap_density_radial(t))

    denom, _ = quad(sqrt_h, 0.0, _T_SUPPORT, limit=200, epsabs=1e-11, epsrel=1e-11)
    value = (numer / denom) ** 2
    return CaptureBound(
        value=value,
        numerator=numer,
        denominator=denom,
        simple_lower=numer * numer,
        floor=1.0 / 16.0,
    )


# ---------------------------------------------------------------------------
# extra-point location laws
# ---------------------------------------------------------------------------


def extra_point_prob_disk(r: float) -> float:
    """P{extra point of the reduced representation lies in B(0, r)} = 1 - e^{-r^2}."""
    if r < 0:
        raise ValueError("radius must be >= 0")
    return float(-np.expm1(-r * r))


def extra_point_prob_annulus(r_in: float, r_out: float) -> float:
    if not 0 <= r_in <= r_out:
        raise ValueError("need 0 <= r_in <= r_out")
    return math.exp(-r_in * r_in) - math.exp(-r_out * r_out)


def count_pmf_from_bernoulli(alphas) -> np.ndarray:
    """pmf of a sum of independent Bernoulli(alpha_n) variables."""
    probs = np.array([1.0])
    for a in np.asarray(alphas, dtype=float):
        probs = np.convolve(probs, [1.0 - a, a])
    return probs


def extra_point_prob_disk_via_counts(r: float) -> tuple[float, float]:
    """Same disk probability recovered from counting laws: the telescoped sum
    of CDF differences between the plain and reduced processes on B(0, r).

    Returns (value, certified truncation bound).
    """
    t = r * r
    if t == 0.0:
        return 0.0, 0.0
    n_top = mode_cutoff(t)
    alphas = np.exp(log_lower_regularized(np.arange(n_top + 1), t))
    tail = max(t - math.fsum(alphas.tolist()), 0.0)
    pmf_plain = count_pmf_from_bernoulli(alphas)
    pmf_reduced = count_pmf_from_bernoulli(alphas[1:])
    k = max(pmf_plain.size, pmf_reduced.size) + 1
    cdf_plain = np.cumsum(np.pad(pmf_plain, (0, k - pmf_plain.size)))
    cdf_reduced = np.cumsum(np.pad(pmf_reduced, (0, k - pmf_reduced.size)))
    value = float(math.fsum((cdf_reduced - cdf_plain).tolist()))
    return value, tail + 1e-12


def extra_point_prob_given_void(r: float) -> float:
    """P{extra point in the through-origin disk of radius r | that disk is
    empty of reduced-process points} = 1 - 1/(pi * resolvent at the origin).
    Increases from 0 to 1 with r.
    """
    if r < 0:
        raise ValueError("radius must be >= 0")
    if r == 0.0:
        return 0.0
    return 1.0 - 1.0 / (math.pi * resolvent_origin_disk(r))


# ---------------------------------------------------------------------------
# exact radial counting laws
# ---------------------------------------------------------------------------


def _family_min_mode(family) -> tuple[int, int | None]:
    """(first mode index, exclusive mode stop or None) for a family tag."""
    if family == "ginibre":
        return 0, None
    if family == "palm":
        return 1, None
    if isinstance(family, tuple) and len(family) == 2:
        tag, m = family
        if tag == "truncated":
            return 0, int(m)
        if tag == "truncated_palm":
            return 1, int(m)
    raise ValueError(f"unknown family {family!r}")


def radial_counting_law(radii, counts, family="ginibre") -> float:
    """Exact P{exactly counts[i] points in annulus (radii[i-1], radii[i]]}.

    radii: increasing positive radii bounding consecutive annuli (the first
    annulus is the disk of radius radii[0]).  Every rotation-invariant model
    here has independent mode occupations, so the joint law is a product of
    per-mode categorical distributions, accumulated by dynamic programming.
    """
    radii = np.asarray(radii, dtype=float)
    counts = [int(c) for c in np.atleast_1d(counts)]
    if radii.ndim != 1 or radii.size != len(counts):
        raise ValueError("radii and counts must have matching length")
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    if any(c < 0 for c in counts):
        raise ValueError("counts must be >= 0")
    n_min, n_stop = _family_min_mode(family)
    t_edges = radii * radii
    n_top = mode_cutoff(float(t_edges[-1]))
    if n_stop is not None:
        n_top = min(n_top, n_stop - 1)
    if n_top < n_min:
        return 1.0 if all(c == 0 for c in counts) else 0.0
    ns = np.arange(n_min, n_top + 1)
    # lower tails at each annulus edge; per-mode annulus masses by difference
    lows = np.stack([np.exp(log_lower_regularized(ns, float(t))) for t in t_edges], axis=1)
    p_annuli = np.diff(np.concatenate([np.zeros((ns.size, 1)), lows], axis=1), axis=1)
    p_inside = lows[:, -1]
    # state[c1,...,cm] = P{counts so far = c}; modes beyond n_top certified
    # negligible unless truncated families cut the list first
    shape = tuple(c + 1 for c in counts)
    state = np.zeros(shape)
    state[(0,) * len(counts)] = 1.0
    for row, q_out in zip(p_annuli, 1.0 - p_inside):
        new = state * q_out
        for axis, p in enumerate(row):
            if p <= 0.0:
                continue
            shifted = np.zeros_like(state)
            idx_to = [slice(None)] * len(counts)
            idx_from = [slice(None)] * len(counts)
            idx_to[axis] = slice(1, None)
            idx_from[axis] = slice(0, -1)
            shifted[tuple(idx_to)] = state[tuple(idx_from)]
            new += shifted * p
        state = new
    return float(state[tuple(counts)])
