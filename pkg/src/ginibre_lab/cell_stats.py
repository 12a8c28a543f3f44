"""Monte Carlo estimators of Voronoi typical-cell functionals.

Two cell models recur throughout:
  - the typical cell: the origin's cell under the point process conditioned
    to contain the origin (conditioned configuration, origin removed, cell
    built against it);
  - the inserted-germ cell: the origin's cell against an unconditioned
    configuration.

The coverage probability P{z in cell} factors through the void probability
of the disk B(z, |z|) (optionally times the boundary resolvent), which makes
every first-moment estimator a one-dimensional radial integral; higher
moments need the void probability of unions of such disks, computed per draw
from the mode Gram matrix of the planar kernel over the union.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .geometry import (
    DiskUnion,
    UnboundedCellError,
    convex_polygon_disk_area,
    halfplane_intersection,
    lens_area,
    union_area,
    voronoi_cell_at_origin,
)
from .kernels import GinibreKernel, PalmKernel, mode_features
from .mc_engine import MIN_SAMPLES, Accumulator, MCEstimate, stream
from .probabilities import (
    area_gap_density_radial,
    area_gap_radial,
    ev_inserted_germ_cell,
    ev_typical_cell,
    mode_cutoff,
)
from .sampling import (
    poisson_sample,
    truncated_ginibre_sample,
    truncated_palm_sample,
)
from .spectral import union_nodes

INTENSITY = 1.0 / math.pi


class DrawFailure(RuntimeError):
    """A single Monte Carlo draw could not be evaluated."""


class TooManyDiscardsError(RuntimeError):
    """The discard fraction exceeded its cap; results would be biased."""


# ---------------------------------------------------------------------------
# radial coverage profiles (dense grid, stable upward recurrence)
# ---------------------------------------------------------------------------

_GRID_T_MAX = 16.0
_GRID_N = 16384
_GRID_MODES = 96


@lru_cache(maxsize=1)
def _coverage_grid() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, void, pi * boundary resolvent) on a dense grid of t = |z|^2.

    Upward recurrence: with q = P{Poisson(t) <= n} and p = Poisson pmf at n,
    q_{n+1} = q_n + p_{n+1} adds positives only, so the grid is stable; the
    scalar log-space ladder in probabilities cross-checks it in the tests.
    """
    t = np.linspace(0.0, _GRID_T_MAX, _GRID_N)
    pois = np.exp(-t)          # pmf at n = 0
    q = pois.copy()            # P{Poisson(t) <= 0}
    sum_log_q = np.zeros_like(t)
    sum_q = np.zeros_like(t)
    resolvent = np.zeros_like(t)
    for n in range(_GRID_MODES):
        sum_log_q += np.log(q)
        sum_q += q
        resolvent += pois / q
        pois = pois * t / (n + 1)
        q = q + pois
    # remaining factors: log Q(n+1,t) ~ -P(n+1,t), and the lower tails sum
    # to t exactly, so the remainder is -(t - sum of accounted lower tails)
    tail = -(t - (_GRID_MODES - sum_q))
    void = np.exp(sum_log_q + np.minimum(tail, 0.0))
    return t, void, resolvent


def cell_coverage_probability(t, model: str = "typical") -> np.ndarray:
    """P{point at squared radius t lies in the cell}, interpolated.

    model 'typical': void times the boundary resolvent factor;
    model 'germ': unconditioned void alone; model 'poisson': exp(-t).
    """
    t = np.asarray(t, dtype=float)
    grid_t, void, resolvent = _coverage_grid()
    if model == "typical":
        return np.interp(t, grid_t, void * resolvent, right=0.0)
    if model == "germ":
        return np.interp(t, grid_t, void, right=0.0)
    if model == "poisson":
        return np.exp(-t)
    raise ValueError(f"unknown coverage model {model!r}")


# ---------------------------------------------------------------------------
# per-draw union engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnionEvaluation:
    void: float
    resolvent_points: np.ndarray
    n_nodes: int


def _nodes_budget_for(area: float) -> int:
    return int(min(max(4000.0, 600.0 * area), 24000.0))


def _mode_range_for(kernel) -> int:
    """First mode index of the kernel's exact planar-mode factorization."""
    if isinstance(kernel, PalmKernel):
        return 1
    if isinstance(kernel, GinibreKernel):
        return 0
    raise ValueError("mode factorization covers the planar and conditioned "
                     "kernels only")


def _star_radial(domain: DiskUnion, thetas: np.ndarray) -> np.ndarray:
    """Radial boundary function of a union of disks each containing 0.

    A disk with |center| <= radius is star-shaped about the origin, with the
    exit radius |c| cos(d) + sqrt(r^2 - |c|^2 sin^2(d)) along direction
    offset d from the center; the union takes the pointwise maximum.
    """
    out = np.zeros_like(thetas)
    for c, r in zip(domain.centers, domain.radii):
        d = thetas - math.atan2(c.imag, c.real)
        rho_c = abs(c)
        disc = r * r - (rho_c * np.sin(d)) ** 2
        np.maximum(out, rho_c * np.cos(d) + np.sqrt(np.maximum(disc, 0.0)),
                   out=out)
    return out


def _radial_lower_table(s_max: int, x: np.ndarray) -> np.ndarray:
    """P(s/2 + 1, x) for s = 0..s_max, columns over the x grid.

    Two interleaved downward ladders (integer and half-integer order) built
    from P(a, x) = P(a + 1, x) + pmf(a, x): addition of positives only.  The
    start order is raised until the certified series bound
    pmf(a, x_max) / (1 - x_max / (a + 1)) drops below 1e-17.
    """
    x = np.asarray(x, dtype=float)
    x_max = float(x.max()) if x.size else 0.0
    out = np.zeros((s_max + 1, x.size))
    if x_max <= 0.0:
        return out
    a_top = 0.5 * s_max + 1.0
    a_start = max(a_top, 1.5 * x_max + 8.0)
    while True:
        log_bound = (a_start * math.log(x_max) - x_max
                     - math.lgamma(a_start + 1.0))
        ratio = x_max / (a_start + 1.0)
        if ratio < 1.0 and log_bound - math.log1p(-ratio) < math.log(1e-17):
            break
        a_start += max(4.0, 0.1 * a_start)
    a_start = math.ceil(a_start - a_top) + a_top
    log_x = np.log(np.maximum(x, 1e-300))
    for chain_top in (a_start, a_start + 0.5):
        a = chain_top
        lpmf = a * log_x - x - math.lgamma(a + 1.0)
        acc = np.zeros(x.size)
        while True:
            s = int(round(2.0 * (a - 1.0)))
            if 0 <= s <= s_max:
                out[s] = acc
            if s <= 1:
                break
            # pmf(a - 1, x) = pmf(a, x) * a / x, kept in log space
            lpmf = lpmf + math.log(a) - log_x
            a -= 1.0
            acc = acc + np.exp(lpmf)
    return out


def _star_gram(domain: DiskUnion, modes: np.ndarray,
               n_theta: int = 4096) -> np.ndarray:
    """Mode Gram matrix over a union of origin-containing disks.

    In polar coordinates about 0 the radial factor integrates exactly to a
    half-order lower incomplete gamma at R(theta)^2, leaving one periodic
    theta integral per (mode sum, mode difference) pair; the equispaced FFT
    evaluates all of them at spectral accuracy away from the finitely many
    boundary kinks.
    """
    thetas = 2.0 * math.pi * np.arange(n_theta) / n_theta
    x = _star_radial(domain, thetas) ** 2
    s_max = int(2 * modes.max())
    table = _radial_lower_table(s_max, x)
    freq = np.fft.fft(table, axis=1)
    m_idx = modes[:, None]
    n_idx = modes[None, :]
    s = m_idx + n_idx
    d = (m_idx - n_idx) % n_theta
    lg = np.array([math.lgamma(n + 1.0) for n in range(int(modes.max()) + 1)])
    lg_half = np.array([math.lgamma(0.5 * j + 1.0) for j in range(s_max + 1)])
    coef = np.exp(lg_half[s] - 0.5 * (lg[m_idx] + lg[n_idx]))
    gram = coef * freq[s, d] / n_theta
    return 0.5 * (gram + gram.conj().T)


def union_void_and_resolvent(kernel, disks, eval_points, budget: int | None = None,
                             shift=None) -> UnionEvaluation:
    """Fredholm determinant and resolvent minor on a union of disks.

    The planar kernel factors exactly through the orthonormal modes
    f_n(z) = z^n e^{-|z|^2/2} / sqrt(pi n!) (the conditioned kernel drops
    mode 0), so det(I - K_A) = det(I - G) with G the mode Gram matrix over
    the union, and R_A(x, y) = f(x) (I - G)^{-1} f(y)^dagger on the closure.
    The mode set is cut off with dropped trace below 1e-12, certified by the
    incomplete-gamma tail.

    When every disk contains the origin the union is star-shaped about it
    and G comes from the exact-radial FFT rule (budget = angular samples);
    otherwise G falls back to equal-weight low-discrepancy nodes (budget =
    node count).  Either way quadrature error enters G additively: the
    matrix stays Hermitian PSD and no determinant sign can flip.
    """
    domain = DiskUnion.of(disks)
    n_min = _mode_range_for(kernel)
    t_dom = max(abs(c) + r for c, r in zip(domain.centers, domain.radii)) ** 2
    if t_dom > 900.0:
        # union radius beyond 30: the mode basis would be enormous, and every
        # caller treats such draws as certified-negligible or substitutes a
        # domination bound
        raise DrawFailure("union domain too large for the mode basis")
    modes = np.arange(n_min, mode_cutoff(t_dom, 1e-12) + 1)
    starlike = all(abs(c) <= r + 1e-12
                   for c, r in zip(domain.centers, domain.radii))
    if starlike:
        n_quad = budget if budget is not None else 4096
        gram = _star_gram(domain, modes, n_theta=n_quad)
    else:
        area = union_area(domain)
        n_quad = budget if budget is not None else _nodes_budget_for(area)
        nodes, weights = union_nodes(domain, n_quad, shift=shift)
        feats = mode_features(nodes, modes)    # (n_modes, n_nodes)
        gram = (float(weights[0]) * (feats @ feats.conj().T)).conj()
    lam, vecs = np.linalg.eigh(gram)
    lam = np.clip(np.real(lam), 0.0, None)
    if lam.max() > 1.0 + 5e-3:
        raise DrawFailure("quadrature breakdown: Gram eigenvalue above one")
    lam = np.minimum(lam, 1.0 - 1e-12)
    log_void = float(np.sum(np.log1p(-lam)))
    pts = np.atleast_1d(np.asarray(eval_points, dtype=complex))
    if log_void < -200.0:
        # determinant underflow: the true value is certified below 1e-86, so
        # the draw contributes zero regardless of the resolvent
        zeros = np.zeros((pts.size, pts.size), dtype=complex)
        return UnionEvaluation(void=0.0, resolvent_points=zeros,
                               n_nodes=n_quad)
    void = math.exp(log_void)
    f_pts = mode_features(pts, modes)          # (n_modes, n_pts)
    half = vecs.T @ f_pts
    # with G_mn = integral of conj(f_m) f_n, the quadratic form pairs the
    # conjugated eigenbasis with the point features
    r = (half.conj().T @ (half / (1.0 - lam)[:, None])).conj()
    if not np.all(np.isfinite(r)):
        raise DrawFailure("nonfinite resolvent entries")
    return UnionEvaluation(void=void, resolvent_points=r, n_nodes=n_quad)


def palm_trace_correction(points, budget: int | None = None) -> float:
    """Sum over m >= 2 of tr(K0^m)/m for the conditioned kernel on the union
    of disks B(z_i, |z_i|); the small-disk decay rate of this correction is a
    tested invariant."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    disks = [(complex(z), float(abs(z))) for z in pts]
    domain = DiskUnion.of(disks)
    n_min = _mode_range_for(PalmKernel())
    t_dom = max(abs(c) + r for c, r in zip(domain.centers, domain.radii)) ** 2
    modes = np.arange(n_min, mode_cutoff(t_dom, 1e-12) + 1)
    gram = _star_gram(domain, modes, n_theta=budget or 4096)
    lam = np.linalg.eigvalsh(gram)
    lam = np.clip(np.real(lam), 0.0, 1.0 - 1e-12)
    return float(np.sum(-np.log1p(-lam) - lam))


# ---------------------------------------------------------------------------
# region proposals
# ---------------------------------------------------------------------------


def _normalize_region(region) -> tuple[str, float]:
    if isinstance(region, str):
        if region == "whole_plane":
            return "whole_plane", 0.0
        raise ValueError(f"unknown region {region!r}")
    tag, *rest = region
    if tag == "whole_plane":
        return "whole_plane", 0.0
    if tag in ("ball", "complement_ball"):
        radius = float(rest[0])
        if radius <= 0:
            raise ValueError("region radius must be positive")
        return tag, radius
    raise ValueError(f"unknown region {region!r}")


def _draw_points(rng: np.random.Generator, tag: str, param: float,
                 k: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(points (n, k), importance weights (n,)) covering the region^k."""
    if tag == "ball":
        rho = param * np.sqrt(rng.uniform(size=(n, k)))
        weight = np.full(n, (math.pi * param * param) ** k)
    elif tag == "complement_ball":
        rho = param + rng.exponential(size=(n, k))
        weight = np.prod(2.0 * math.pi * rho, axis=1) * np.exp(
            np.sum(rho - param, axis=1)
        )
    elif tag == "whole_plane":
        rho = np.sqrt(rng.exponential(size=(n, k)))
        weight = math.pi ** k * np.exp(np.sum(rho * rho, axis=1))
    else:
        raise ValueError(tag)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=(n, k))
    return rho * np.exp(1j * theta), weight


def _coverage_model_for(model: str) -> str:
    return {"ginibre_formula": "typical", "germ_formula": "germ",
            "poisson_formula": "poisson"}[model]


# ---------------------------------------------------------------------------
# area moments
# ---------------------------------------------------------------------------


def moment_in_region(k: int, region, model: str, budget: int = 200_000,
                     seed: int = 0, stream_id: int = 0, m_modes: int = 64,
                     n_cells: int = 2000, discard_cap: float = 0.01
                     ) -> MCEstimate:
    """E[V^k(cell intersected with the region)] for the chosen cell model.

    Model strings: 'ginibre_formula' (typical cell), 'germ_formula'
    (inserted-germ cell), 'poisson_formula' (Poisson typical cell),
    'empirical' (sampled cells of the truncated process).
    """
    if k < 1:
        raise ValueError("moment order k must be >= 1")
    tag, param = _normalize_region(region)
    if model == "empirical":
        return _empirical_moment(k, tag, param, m_modes, n_cells, seed)
    if model not in ("ginibre_formula", "germ_formula", "poisson_formula"):
        raise ValueError(f"unknown model {model!r}")
    rng = stream(seed, stream_id)
    method = f"moment_k{k}_{model}_{tag}"
    acc = Accumulator()
    if k == 1 or model == "poisson_formula":
        cov_model = _coverage_model_for(model)
        chunk = 200_000
        done = 0
        while done < budget:
            n = min(chunk, budget - done)
            pts, weight = _draw_points(rng, tag, param, k, n)
            if k == 1:
                f = cell_coverage_probability(np.abs(pts[:, 0]) ** 2, cov_model)
            else:
                f = np.array([_poisson_union_integrand(row) for row in pts])
            acc.add(f * weight)
            done += n
        return acc.estimate(seed, method)
    # k >= 2, formula models: per-draw union void (+ resolvent at the origin)
    discards = 0
    done = 0
    while done < budget:
        pts, weight = _draw_points(rng, tag, param, k, 1)
        row, wgt = pts[0], float(weight[0])
        try:
            acc.add([wgt * _formula_union_integrand(row, model, rng)])
        except DrawFailure:
            discards += 1
            if discards > max(10, discard_cap * budget):
                raise TooManyDiscardsError(
                    f"{discards} discarded draws out of {done + discards}"
                )
        done += 1
    return acc.estimate(seed, method)


def _poisson_union_integrand(row: np.ndarray) -> float:
    disks = [(complex(z), float(abs(z))) for z in row]
    return math.exp(-union_area(DiskUnion.of(disks)) / math.pi)


def _formula_union_integrand(row: np.ndarray, model: str,
                             rng: np.random.Generator) -> float:
    """Joint coverage probability of the row's points for a formula model.

    When the union is so large that its top operator eigenvalue sits within
    quadrature error of 1 the discretized determinant degenerates.  The joint
    coverage is a probability dominated by each single-point coverage, and on
    exactly those draws that bound is far below the Monte Carlo noise floor,
    so the dominating bound is substituted instead of discarding the draw.
    """
    disks = [(complex(z), float(abs(z))) for z in row]
    shift = tuple(rng.uniform(size=2))
    try:
        ev = union_void_and_resolvent(GinibreKernel(), disks, [0.0 + 0.0j],
                                      shift=shift)
    except DrawFailure:
        cov_model = "germ" if model == "germ_formula" else "typical"
        t = np.abs(row) ** 2
        return float(np.min(cell_coverage_probability(t, cov_model)))
    if model == "germ_formula":
        return ev.void
    return ev.void * math.pi * float(np.real(ev.resolvent_points[0, 0]))


def _cell_region_area(cell, tag: str, param: float) -> float:
    if tag == "whole_plane":
        return cell.area
    inside = convex_polygon_disk_area(cell.vertices, param)
    if tag == "ball":
        return inside
    return cell.area - inside


def _empirical_moment(k: int, tag: str, param: float, m_modes: int,
                      n_cells: int, seed: int) -> MCEstimate:
    ensemble = empirical_typical_cell(m_modes=m_modes, n_cells=n_cells,
                                      seed=seed, model="palm")
    values = np.array([
        _cell_region_area(c, tag, param) ** k for c in ensemble.cells
    ])
    acc = Accumulator()
    acc.add(values)
    return acc.estimate(seed, f"moment_k{k}_empirical_m{m_modes}_{tag}")


# ---------------------------------------------------------------------------
# W_k constants and the small-radius ratio expansion
# ---------------------------------------------------------------------------


def w_constant(k: int, budget: int = 1_000_000, seed: int = 0) -> MCEstimate:
    """Leading small-radius coefficient: the mean over the unit-ball k-cube
    of the disk-union area V(z), scaled by 1/pi (MC form of the normalized
    integral of V over B(1)^k)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = stream(seed, 0)
    acc = Accumulator()
    if k == 1:
        chunk = 500_000
        done = 0
        while done < budget:
            n = min(chunk, budget - done)
            z, _ = _draw_points(rng, "ball", 1.0, 1, n)
            acc.add(np.abs(z[:, 0]) ** 2)
            done += n
    else:
        for _ in range(budget):
            z, _ = _draw_points(rng, "ball", 1.0, k, 1)
            disks = [(complex(v), float(abs(v))) for v in z[0]]
            acc.add([union_area(DiskUnion.of(disks)) / math.pi])
    return acc.estimate(seed, f"w_constant_k{k}")


@dataclass(frozen=True)
class SmallRRatioRow:
    r: float
    ratio: float
    ratio_stderr: float
    shifted: float          # (ratio - 1) / r^2
    shifted_stderr: float
    envelope_bound: float   # exp of the normalized Gaussian mass of B(2r)
    n_samples: int


@dataclass(frozen=True)
class SmallRRatioTable:
    k: int
    rows: list
    w_estimate: float
    w_stderr: float

    def as_rows(self) -> list:
        return [
            {"r": row.r, "ratio": row.ratio, "ratio_stderr": row.ratio_stderr,
             "shifted": row.shifted, "shifted_stderr": row.shifted_stderr,
             "envelope_bound": row.envelope_bound, "n": row.n_samples}
            for row in self.rows
        ]


def small_r_ratio(k: int = 1, r_list=(0.15, 0.2, 0.25, 0.3, 0.35, 0.4),
                  budget: int = 1_000_000, seed: int = 0) -> SmallRRatioTable:
    """Ratio of the k-th intersection-area moment (ball of radius r) between
    the typical cell and its Poisson counterpart, with the fitted constant
    term of (ratio - 1)/r^2 against r^2.

    Common random numbers: both integrands are evaluated on the same draws,
    so the ratio variance only carries the integrand difference.
    """
    if any(r <= 0 or r > 0.5 for r in r_list):
        raise ValueError("radii must lie in (0, 0.5]")
    rows = []
    n_per = max(MIN_SAMPLES, budget // len(r_list))
    for j, r in enumerate(r_list):
        rng = stream(seed, 100 + j)
        f_g = np.empty(0)
        f_p = np.empty(0)
        if k == 1:
            pts, _ = _draw_points(rng, "ball", r, 1, n_per)
            t = np.abs(pts[:, 0]) ** 2
            f_g = cell_coverage_probability(t, "typical")
            f_p = np.exp(-t)
        else:
            g_list, p_list = [], []
            for _ in range(n_per):
                pts, _ = _draw_points(rng, "ball", r, k, 1)
                row = pts[0]
                p_list.append(_poisson_union_integrand(row))
                g_list.append(_formula_union_integrand(row, "ginibre_formula",
                                                       rng))
            f_g, f_p = np.array(g_list), np.array(p_list)
        m_g, m_p = float(np.mean(f_g)), float(np.mean(f_p))
        cov = np.cov(np.vstack([f_g, f_p]))
        ratio = m_g / m_p
        var_ratio = (cov[0, 0] / m_p**2 + m_g**2 * cov[1, 1] / m_p**4
                     - 2.0 * m_g * cov[0, 1] / m_p**3) / n_per
        ratio_se = math.sqrt(max(var_ratio, 0.0))
        envelope = math.exp(1.0 - math.exp(-4.0 * r * r))
        rows.append(SmallRRatioRow(
            r=r, ratio=ratio, ratio_stderr=ratio_se,
            shifted=(ratio - 1.0) / r**2, shifted_stderr=ratio_se / r**2,
            envelope_bound=envelope, n_samples=n_per,
        ))
    w_hat, w_se = _weighted_intercept(
        x=np.array([row.r**2 for row in rows]),
        y=np.array([row.shifted for row in rows]),
        sigma=np.array([row.shifted_stderr for row in rows]),
    )
    return SmallRRatioTable(k=k, rows=rows, w_estimate=w_hat, w_stderr=w_se)


def _weighted_intercept(x: np.ndarray, y: np.ndarray,
                        sigma: np.ndarray) -> tuple[float, float]:
    """Weighted least squares y = a + b x; returns (a, stderr of a)."""
    w = 1.0 / np.maximum(sigma, 1e-300) ** 2
    sw, sx, sy = w.sum(), (w * x).sum(), (w * y).sum()
    sxx, sxy = (w * x * x).sum(), (w * x * y).sum()
    denom = sw * sxx - sx * sx
    a = (sxx * sy - sx * sxy) / denom
    var_a = sxx / denom
    return float(a), float(math.sqrt(var_a))


# ---------------------------------------------------------------------------
# tail bound and the pair-overlap integral
# ---------------------------------------------------------------------------


def overlap_integral(radius: float) -> float:
    """Normalized Gaussian pair integral over B(radius)^2, reduced to one
    radial dimension through the two-disk intersection area."""
    if radius <= 0:
        raise ValueError("radius must be positive")

    def integrand(d: float) -> float:
        return math.exp(-d * d) * lens_area(d, radius, radius) * d

    value, _ = quad(integrand, 0.0, 2.0 * radius, limit=200,
                    epsabs=1e-12, epsrel=1e-10)
    return value / math.pi


@dataclass(frozen=True)
class TailBoundRow:
    radius: float
    k: int
    lhs: float
    rhs: float
    margin: float
    margin_stderr: float
    overlap: float
    factor: float
    n_samples: int
    holds: bool

    def as_dict(self) -> dict:
        return {"R": self.radius, "k": self.k, "lhs": self.lhs,
                "rhs": self.rhs, "margin": self.margin,
                "margin_stderr": self.margin_stderr, "J": self.overlap,
                "factor": self.factor, "n": self.n_samples,
                "holds": self.holds}


def tail_bound_check(k: int, r_list=(0.5, 1.0, 1.5, 2.0), budget: int = 40_000,
                     seed: int = 0) -> list:
    """Tail moment inequality: typical-cell moment outside B(R) vs the
    Poisson moment scaled by exp(3/2 - J(R)); per-draw differences share the
    importance draws so the margin gets a direct standard error."""
    if not 1 <= k:
        raise ValueError("k must be >= 1")
    rows = []
    for j, radius in enumerate(r_list):
        j_value = overlap_integral(radius)
        factor = math.exp(1.5 - j_value)
        rng = stream(seed, 300 + j)
        if k == 1:
            pts, weight = _draw_points(rng, "complement_ball", radius, 1, budget)
            t = np.abs(pts[:, 0]) ** 2
            f_g = cell_coverage_probability(t, "typical")
            f_p = np.exp(-t)
            diffs = weight * (factor * f_p - f_g)
            lhs = float(np.mean(weight * f_g))
            rhs = float(np.mean(weight * factor * f_p))
            n_used = budget
        else:
            diff_list, lhs_list, rhs_list = [], [], []
            n_draws = max(MIN_SAMPLES, budget // 20)
            for _ in range(n_draws):
                pts, weight = _draw_points(rng, "complement_ball", radius, k, 1)
                row, wgt = pts[0], float(weight[0])
                try:
                    g_val = _formula_union_integrand(row, "ginibre_formula", rng)
                except DrawFailure:
                    continue
                p_val = _poisson_union_integrand(row)
                lhs_list.append(wgt * g_val)
                rhs_list.append(wgt * factor * p_val)
                diff_list.append(wgt * (factor * p_val - g_val))
            if len(diff_list) < 0.98 * n_draws:
                raise TooManyDiscardsError("tail draws discarded beyond cap")
            diffs = np.array(diff_list)
            lhs = float(np.mean(lhs_list))
            rhs = float(np.mean(rhs_list))
            n_used = len(diff_list)
        margin = float(np.mean(diffs))
        margin_se = float(np.std(diffs, ddof=1) / math.sqrt(len(diffs)))
        rows.append(TailBoundRow(
            radius=radius, k=k, lhs=lhs, rhs=rhs, margin=margin,
            margin_stderr=margin_se, overlap=j_value, factor=factor,
            n_samples=n_used, holds=margin > 0.0,
        ))
    return rows


# ---------------------------------------------------------------------------
# side-count probabilities of the typical cell
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SideEstimate:
    k: int
    estimate: MCEstimate
    acceptance: float
    n_attempted: int
    n_accepted: int
    n_discarded: int
    proposal: "SideProposal | SideMixture"
    min_integrand: float


@dataclass(frozen=True)
class SideProposal:
    """One importance component for the k neighbor points of a k-sided cell.

    Radii are iid Gamma(radial_shape) with the given mean; angular gaps are
    Dirichlet(gap_concentration) around a uniformly rotated start, so
    concentration 1 reproduces plain sorted-uniform angles.  Both families
    keep full support on their domain, so any parameter choice is unbiased.
    """

    radial_shape: float = 2.0
    radial_mean: float = 2.0
    gap_concentration: float = 1.0

    def draw(self, rng: np.random.Generator, k: int
             ) -> tuple[np.ndarray, np.ndarray]:
        rho = rng.gamma(self.radial_shape,
                        self.radial_mean / self.radial_shape, size=k)
        gaps = rng.dirichlet(np.full(k, self.gap_concentration))
        return rho, gaps

    def log_set_density(self, rho: np.ndarray, gaps: np.ndarray) -> float:
        """log density of the unordered point set w.r.t. d(rho) d(theta).

        Each unordered angle set has k cyclic representations of equal
        density (the Dirichlet gap density is cyclic-shift invariant), hence
        the single factor k rather than k!.
        """
        k = rho.size
        a = self.radial_shape
        s = self.radial_mean / a
        al = self.gap_concentration
        log_dirichlet = (math.lgamma(k * al) - k * math.lgamma(al)
                         + (al - 1.0) * float(np.sum(np.log(gaps))))
        return (math.log(k) - k * math.log(2.0 * math.pi) + log_dirichlet
                + float(np.sum((a - 1.0) * np.log(rho) - rho / s))
                - k * (math.lgamma(a) + a * math.log(s)))


@dataclass(frozen=True)
class SideMixture:
    """Defensive mixture of a full-support base and a focused component.

    The weight is computed against the mixture density, so it never exceeds
    the base-only weight divided by the base fraction: a poorly matched focus
    can waste half the draws but cannot starve any region of the integrand.
    """

    base: SideProposal
    focus: SideProposal
    focus_weight: float = 0.5

    def draw(self, rng: np.random.Generator, k: int
             ) -> tuple[np.ndarray, np.ndarray]:
        part = self.focus if rng.uniform() < self.focus_weight else self.base
        return part.draw(rng, k)

    def log_set_density(self, rho: np.ndarray, gaps: np.ndarray) -> float:
        return float(np.logaddexp(
            math.log1p(-self.focus_weight)
            + self.base.log_set_density(rho, gaps),
            math.log(self.focus_weight)
            + self.focus.log_set_density(rho, gaps)))


# focus components matched to the value-weighted moments of the side
# integrand (neighbor radii and gap spread of accepted k-sided draws)
_SIDE_FOCUS = {
    3: SideProposal(6.0, 1.15, 24.0),
    4: SideProposal(7.0, 1.50, 11.0),
    5: SideProposal(9.0, 1.80, 8.0),
    6: SideProposal(10.0, 1.95, 4.5),
}


def default_side_proposal(k: int) -> SideMixture:
    return SideMixture(base=SideProposal(), focus=_SIDE_FOCUS[k])


def _side_draw(rng: np.random.Generator, k: int, prop
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rho, gaps = prop.draw(rng, k)
    theta = rng.uniform(0.0, 2.0 * math.pi) + 2.0 * math.pi * np.concatenate(
        ([0.0], np.cumsum(gaps[:-1])))
    return rho * np.exp(1j * theta), rho, gaps


def _side_log_weight(rho: np.ndarray, gaps: np.ndarray, prop) -> float:
    """log importance weight against the flat generator measure."""
    return (float(np.sum(np.log(rho)))
            - prop.log_set_density(rho, gaps))


def side_probability(k: int, budget: int = 4000, seed: int = 0,
                     proposal: SideProposal | SideMixture | None = None,
                     discard_cap: float = 0.05) -> SideEstimate:
    """P{typical cell has exactly k sides} by importance sampling over
    generator k-tuples: per accepted draw (bounded cell with k sides) the
    integrand is the conditioned-process void probability of the vertex-disk
    union times the resolvent minor at the generators.

    Acceptance (bounded cell with exactly k sides) is a pure shape event,
    invariant under dilation, so radial tuning cannot raise it; only the
    angular concentration can, by proposing near-regular gap patterns.  The
    default proposal is a defensive mixture: a flat full-support base plus a
    component focused on the near-regular configurations carrying the mass,
    weighted against the mixture density so no region is ever starved.
    """
    if not 3 <= k <= 6:
        raise ValueError("side counts are estimated for k in 3..6")
    prop = proposal if proposal is not None else default_side_proposal(k)
    rng = stream(seed, 700 + k)
    palm = PalmKernel()
    acc = Accumulator()
    n_accepted = 0
    n_discarded = 0
    min_integrand = math.inf
    log_cap = k * math.log(10.0 / math.pi)
    for _ in range(budget):
        z, rho, gaps = _side_draw(rng, k, prop)
        value = 0.0
        poly = halfplane_intersection(z)
        if poly.bounded and poly.side_count == k:
            verts = poly.vertices
            log_w = _side_log_weight(rho, gaps, prop)
            t_far = max(float(abs(v)) ** 2 for v in verts)
            far_cap = float(cell_coverage_probability(
                np.array([t_far]), "typical")[0])
            # the flower contains the farthest vertex disk, whose conditioned
            # void is exactly the single-point cell coverage; with a
            # Hadamard-style cap of 10/pi per resolvent diagonal the whole
            # weighted draw is certified negligible below this product
            log_far = math.log(far_cap) if far_cap > 0.0 else -math.inf
            if log_w + log_far + log_cap < math.log(1e-10):
                n_accepted += 1
                acc.add([0.0])
                continue
            disks = [(complex(v), float(abs(v))) for v in verts
                     if abs(v) > 1e-12]
            try:
                ev = union_void_and_resolvent(
                    palm, disks, z, shift=tuple(rng.uniform(size=2)))
            except DrawFailure:
                # under-resolved flowers have far vertices, where the true
                # void factor is far below float noise; the draw stays in the
                # average with value zero
                n_discarded += 1
                if n_discarded > max(10, discard_cap * budget):
                    raise TooManyDiscardsError(
                        f"{n_discarded} spectral failures in side draws")
                acc.add([0.0])
                continue
            n_accepted += 1
            if ev.void > 0.0:
                sign, log_minor = np.linalg.slogdet(ev.resolvent_points)
                if float(np.real(sign)) > 0.5 and math.isfinite(log_minor):
                    integrand = math.exp(math.log(ev.void) + log_minor)
                    min_integrand = min(min_integrand, integrand)
                    value = math.exp(log_w + math.log(ev.void) + log_minor)
        acc.add([value])
    est = acc.estimate(seed, f"side_probability_k{k}")
    return SideEstimate(
        k=k, estimate=est, acceptance=n_accepted / budget,
        n_attempted=budget, n_accepted=n_accepted, n_discarded=n_discarded,
        proposal=prop, min_integrand=min_integrand,
    )


def _side_acceptance(k: int, prop: SideProposal | SideMixture, seed: int,
                     pilot: int = 400) -> float:
    rng = stream(seed, 900 + k)
    hits = 0
    for _ in range(pilot):
        poly = halfplane_intersection(_side_draw(rng, k, prop)[0])
        hits += poly.bounded and poly.side_count == k
    return hits / pilot


def side_distribution(ks=(3, 4, 5, 6), budget: int = 4000, seed: int = 0
                      ) -> dict:
    """Formula estimates for each side count plus the residual mass."""
    estimates = {k: side_probability(k, budget=budget, seed=seed) for k in ks}
    total = sum(e.estimate.value for e in estimates.values())
    total_se = math.sqrt(sum(e.estimate.stderr**2 for e in estimates.values()))
    return {"estimates": estimates, "total": total, "total_stderr": total_se,
            "residual_mass": 1.0 - total}


# ---------------------------------------------------------------------------
# empirical cells
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellEnsemble:
    model: str
    m_modes: int
    n_requested: int
    n_kept: int
    n_unbounded: int
    n_edge_discarded: int
    cells: list
    mean_area: float
    area_stderr: float
    second_moment: float
    second_stderr: float
    mean_perimeter: float
    perimeter_stderr: float
    side_freq: dict

    @property
    def discard_fraction(self) -> float:
        return (self.n_unbounded + self.n_edge_discarded) / self.n_requested

    def side_freq_stderr(self, k: int) -> float:
        p = self.side_freq.get(k, 0.0)
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.n_kept)


def _cell_configuration(model: str, m_modes: int, seed: int,
                        stream_id: int) -> np.ndarray:
    if model == "palm":
        return truncated_palm_sample(m_modes, seed, stream_id).points
    if model == "ginibre":
        return truncated_ginibre_sample(m_modes, seed, stream_id).points
    if model == "poisson":
        return poisson_sample(INTENSITY, math.sqrt(m_modes), seed,
                              stream_id).points
    raise ValueError(f"unknown cell model {model!r}")


def empirical_typical_cell(m_modes: int = 64, n_cells: int = 10_000,
                           seed: int = 0, model: str = "palm",
                           discard_cap: float = 0.02) -> CellEnsemble:
    """Sampled origin cells with the edge-effect discard rule.

    A kept cell must be bounded with its flower inside the bulk disk of
    radius (2/3) sqrt(m_modes): beyond that the truncated model no longer
    resembles the infinite process and the cell would be edge-biased.
    """
    if m_modes < 32:
        raise ValueError("need at least 32 modes for a trustworthy bulk")
    bulk = (2.0 / 3.0) * math.sqrt(m_modes)
    cells = []
    n_unbounded = 0
    n_edge = 0
    for i in range(n_cells):
        pts = _cell_configuration(model, m_modes, seed, i + 1)
        cell = voronoi_cell_at_origin(pts)
        if not cell.bounded:
            n_unbounded += 1
            continue
        if cell.determinacy_radius > bulk:
            n_edge += 1
            continue
        cells.append(cell)
    discard_fraction = (n_unbounded + n_edge) / n_cells
    if discard_fraction > discard_cap:
        raise TooManyDiscardsError(
            f"discarded {discard_fraction:.1%} of cells (cap {discard_cap:.0%})"
        )
    areas = np.array([c.area for c in cells])
    perims = np.array([c.perimeter for c in cells])
    sides = np.array([c.side_count for c in cells])
    n_kept = len(cells)
    freq = {int(s): float(np.mean(sides == s)) for s in np.unique(sides)}
    return CellEnsemble(
        model=model, m_modes=m_modes, n_requested=n_cells, n_kept=n_kept,
        n_unbounded=n_unbounded, n_edge_discarded=n_edge, cells=cells,
        mean_area=float(np.mean(areas)),
        area_stderr=float(np.std(areas, ddof=1) / math.sqrt(n_kept)),
        second_moment=float(np.mean(areas**2)),
        second_stderr=float(np.std(areas**2, ddof=1) / math.sqrt(n_kept)),
        mean_perimeter=float(np.mean(perims)),
        perimeter_stderr=float(np.std(perims, ddof=1) / math.sqrt(n_kept)),
        side_freq=freq,
    )


# ---------------------------------------------------------------------------
# neighbor-capture gap between the two cell models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CaptureStats:
    ev_typical: float
    ev_germ: float
    gap_difference: float        # ev_typical - ev_germ
    gap_quadrature: float        # direct radial quadrature of the gap density
    agreement: float             # |difference of the two paths|
    gap_floor_ok: bool           # gap >= pi/4, from the 3pi/4 bound
    density_nonnegative: bool
    empirical_germ: MCEstimate | None

    def as_dict(self) -> dict:
        d = {
            "ev_typical": self.ev_typical, "ev_germ": self.ev_germ,
            "gap_difference": self.gap_difference,
            "gap_quadrature": self.gap_quadrature,
            "agreement": self.agreement, "gap_floor_ok": self.gap_floor_ok,
            "density_nonnegative": self.density_nonnegative,
        }
        if self.empirical_germ is not None:
            d["empirical_germ"] = self.empirical_germ.as_dict()
        return d


def neighbor_capture_stats(m_modes: int = 64, n_cells: int = 4000,
                           seed: int = 0, empirical: bool = True
                           ) -> CaptureStats:
    """Mean-area gap between the typical cell and the inserted-germ cell,
    via two quadrature paths, plus an empirical germ-cell cross-check."""
    ev_t = float(ev_typical_cell())
    ev_g = float(ev_inserted_germ_cell())
    gap_quad = float(area_gap_radial())
    density_ok = all(
        area_gap_density_radial(t) >= 0.0
        for t in np.linspace(0.01, 12.0, 120)
    )
    emp = None
    if empirical:
        ensemble = empirical_typical_cell(m_modes=m_modes, n_cells=n_cells,
                                          seed=seed, model="ginibre")
        emp = MCEstimate(
            value=ensemble.mean_area, stderr=ensemble.area_stderr,
            n_samples=ensemble.n_kept, seed=seed,
            method=f"empirical_germ_cell_m{m_modes}",
        )
    return CaptureStats(
        ev_typical=ev_t, ev_germ=ev_g, gap_difference=ev_t - ev_g,
        gap_quadrature=gap_quad, agreement=abs((ev_t - ev_g) - gap_quad),
        gap_floor_ok=(ev_t - ev_g) >= math.pi / 4.0 - 1e-9,
        density_nonnegative=density_ok, empirical_germ=emp,
    )


def estimate_record(quantity: str, k: int, region, est: MCEstimate,
                    discards: int = 0) -> dict:
    """JSON-ready record shape shared with the command line interface."""
    return {
        "quantity": quantity, "k": k, "region": str(region),
        "value": est.value, "stderr": est.stderr, "n": est.n_samples,
        "seed": est.seed, "discards": discards,
    }
