"""Spectral decompositions of kernels restricted to planar domains.

Two routes produce the same object:
  - analytic disk modes: on a centered disk the monomial modes diagonalize
    every rotation-invariant family here, with eigenvalues given by the
    regularized lower incomplete gamma at t = r^2 (and a translation gauge
    for off-center disks of the infinite kernel);
  - Nystrom quadrature: symmetrized weighted Gram matrix on product
    Gauss-Legendre nodes (disks, annuli) or low-discrepancy nodes filtered
    by the indicator (disk unions), eigendecomposed and extended off the
    nodes by the kernel itself.

Downstream consumers only see eigenvalues in [0, 1), a tail-mass bound, and
a vectorized mode evaluator, so Fredholm determinants, resolvents and the
truncated minor-series identity are source-agnostic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.stats import qmc

from . import probabilities as prob
from .geometry import Annulus, Disk, DiskUnion, domain_area
from .kernels import (
    GinibreKernel,
    Kernel,
    PalmKernel,
    TranslatedGinibreKernel,
    TruncatedGinibreKernel,
    TruncatedPalmKernel,
    mode_features,
)

EIGENVALUE_CEIL = 1.0 - 1e-14


class SpectralError(RuntimeError):
    pass


class CutoffTooSmallError(SpectralError):
    """Requested mode cutoff drops more than the certified tail tolerance."""


class DivergentResolventError(SpectralError):
    """Top eigenvalue too close to 1 for the resolvent series."""


class NormTooLargeError(SpectralError):
    """Operator norm too large for the alternating minor series check."""


class BudgetExhaustedError(SpectralError):
    """Quadrature refinement hit the node cap before converging."""


@dataclass
class SpectralDecomposition:
    """Eigenvalues (descending, in [0,1)) plus a mode evaluator."""

    eigenvalues: np.ndarray
    domain: object
    source: str                      # "analytic" or "quadrature"
    tail_mass: float                 # certified bound on the dropped trace
    clamped: int = 0                 # eigenvalues clipped into [0, ceil]
    mode_indices: np.ndarray | None = None
    _evaluator: object = field(default=None, repr=False)

    @property
    def n_modes(self) -> int:
        return int(self.eigenvalues.size)

    def modes_at(self, z) -> np.ndarray:
        """Eigenfunction values, shape (n_modes, len(z))."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return self._evaluator(z)


# ---------------------------------------------------------------------------
# analytic disk modes
# ---------------------------------------------------------------------------

_ANALYTIC_FAMILIES = ("ginibre", "palm", "truncated_ginibre", "truncated_palm")


def default_cutoff(t: float) -> int:
    return int(math.ceil(t + 12.0 * math.sqrt(t + 1.0)))


def _family_modes(family: str, t: float, cutoff: int | None, m: int | None):
    if family in ("ginibre", "palm"):
        top = default_cutoff(t) if cutoff is None else int(cutoff)
        start = 0 if family == "ginibre" else 1
        return np.arange(start, top + 1), True
    if family in ("truncated_ginibre", "truncated_palm"):
        if m is None:
            raise SpectralError("truncated families need the mode count m")
        start = 0 if family == "truncated_ginibre" else 1
        return np.arange(start, m), False
    raise SpectralError(f"unknown analytic family {family!r}")


def disk_modes(family: str, disk: Disk, cutoff: int | None = None,
               m: int | None = None) -> SpectralDecomposition:
    """Analytic spectrum of a kernel family on a disk.

    Families 'ginibre' and 'truncated_ginibre' work on any disk whose
    closure is compatible with the gauge construction (centered anywhere);
    'palm'/'truncated_palm' require the centered disk, where the mode basis
    is still exact.  Eigenvalues: lower regularized incomplete gamma at
    t = radius^2, mode n.
    """
    if family not in _ANALYTIC_FAMILIES:
        raise SpectralError(f"unknown analytic family {family!r}")
    center = complex(disk.center)
    if family in ("palm", "truncated_palm") and abs(center) > 0:
        raise SpectralError("reduced-process modes are analytic on centered disks only")
    t = disk.radius**2
    modes, infinite = _family_modes(family, t, cutoff, m)
    if modes.size == 0:
        raise SpectralError("empty mode list")
    alphas = np.exp(prob.log_lower_regularized(modes, t))
    if infinite:
        all_low = np.exp(prob.log_lower_regularized(np.arange(modes[-1] + 1), t))
        tail = max(t - math.fsum(all_low.tolist()), 0.0)
        if tail > 1e-12 * max(1.0, t):
            raise CutoffTooSmallError(
                f"cutoff {modes[-1]} drops mass {tail:.3e} at t={t}"
            )
    else:
        tail = 0.0

    log_gamma_low = prob.log_lower_unnormalized(modes, t)

    def evaluator(z: np.ndarray) -> np.ndarray:
        x = z - center
        r_abs = np.abs(x)
        theta = np.angle(x)
        # -1e8 stands in for log 0: mode 0 sees 0 * that = 0, higher modes
        # underflow to exactly 0, which is the correct limit at the center
        log_r = np.where(r_abs > 0, np.log(np.where(r_abs > 0, r_abs, 1.0)), -1e8)
        log_mag = (
            modes[:, None] * log_r[None, :]
            - 0.5 * (r_abs * r_abs)[None, :]
            - 0.5 * (math.log(math.pi) + log_gamma_low)[:, None]
        )
        with np.errstate(under="ignore"):
            vals = np.exp(log_mag) * np.exp(1j * modes[:, None] * theta[None, :])
        if abs(center) > 0:
            gauge = np.exp(1j * np.imag(x * np.conj(center)))
            vals = vals * gauge[None, :]
        return vals

    return SpectralDecomposition(
        eigenvalues=alphas,
        domain=disk,
        source="analytic",
        tail_mass=tail,
        mode_indices=modes,
        _evaluator=evaluator,
    )


def analytic_family_for(kernel: Kernel) -> tuple[str, int | None, complex]:
    """(family tag, truncation, required disk center) for analytic modes."""
    if isinstance(kernel, GinibreKernel):
        return "ginibre", None, 0j
    if isinstance(kernel, PalmKernel):
        return "palm", None, 0j
    if isinstance(kernel, TruncatedGinibreKernel):
        return "truncated_ginibre", kernel.m, 0j
    if isinstance(kernel, TruncatedPalmKernel):
        return "truncated_palm", kernel.m, 0j
    if isinstance(kernel, TranslatedGinibreKernel):
        return "ginibre", None, kernel.a
    raise SpectralError(f"no analytic mode basis for {type(kernel).__name__}")


# ---------------------------------------------------------------------------
# quadrature nodes
# ---------------------------------------------------------------------------


def _radial_angular_nodes(center: complex, s_lo: float, s_hi: float,
                          budget: int) -> tuple[np.ndarray, np.ndarray]:
    """Product rule nodes for an annulus s = rho^2 in [s_lo, s_hi].

    Angular rule is exact for the mode phases once n_theta exceeds twice the
    significant mode count; radial rule is Gauss-Legendre in s.
    """
    n_theta = 2 * default_cutoff(s_hi) + 17
    n_r = max(12, budget // n_theta)
    x, w = np.polynomial.legendre.leggauss(n_r)
    s = 0.5 * (s_hi - s_lo) * (x + 1.0) + s_lo
    w_s = 0.5 * (s_hi - s_lo) * w
    theta = 2.0 * math.pi * np.arange(n_theta) / n_theta
    nodes = (center + np.sqrt(s)[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = np.broadcast_to((w_s * math.pi / n_theta)[:, None],
                              (n_r, n_theta)).ravel().copy()
    return nodes, weights


_HALTON_CACHE: dict[int, np.ndarray] = {}


def _halton_unit(n: int) -> np.ndarray:
    """First n points of the deterministic 2D Halton sequence."""
    have = _HALTON_CACHE.get(0)
    if have is None or have.shape[0] < n:
        eng = qmc.Halton(d=2, scramble=False)
        _HALTON_CACHE[0] = eng.random(max(n, 1 << 14))
    return _HALTON_CACHE[0][:n]


def union_nodes(domain: DiskUnion, budget: int,
                shift: tuple[float, float] | None = None
                ) -> tuple[np.ndarray, np.ndarray]:
    """Equal-weight low-discrepancy nodes inside a disk union.

    Optional toroidal shift of the unit-square sequence decorrelates the
    node cloud between Monte Carlo draws.
    """
    x0, x1, y0, y1 = domain.bounding_box()
    area = domain_area(domain)
    box = (x1 - x0) * (y1 - y0)
    nodes: list[np.ndarray] = []
    need = budget
    offset = 0
    # expected acceptance area/box; 3x safety, grow geometrically
    take = int(1.3 * budget * box / max(area, 1e-12)) + 64
    while need > 0:
        raw = _halton_unit(offset + take)[offset:offset + take]
        offset += take
        if shift is not None:
            raw = (raw + np.asarray(shift)) % 1.0
        pts = (x0 + raw[:, 0] * (x1 - x0)) + 1j * (y0 + raw[:, 1] * (y1 - y0))
        inside = pts[domain.contains(pts)]
        if inside.size:
            nodes.append(inside[:need])
            need -= min(need, inside.size)
        take = max(take, 256)
        if offset > 400 * budget + 100_000:
            raise SpectralError("node generation failed: domain too thin?")
    pts = np.concatenate(nodes)
    weights = np.full(pts.shape, area / budget)
    return pts, weights


def domain_nodes(domain, budget: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(domain, Disk):
        return _radial_angular_nodes(complex(domain.center), 0.0,
                                     domain.radius**2, budget)
    if isinstance(domain, Annulus):
        return _radial_angular_nodes(complex(domain.center),
                                     domain.r_inner**2, domain.r_outer**2,
                                     budget)
    if isinstance(domain, DiskUnion):
        return union_nodes(domain, budget)
    raise SpectralError(f"unsupported domain {type(domain).__name__}")


# ---------------------------------------------------------------------------
# Nystrom decomposition
# ---------------------------------------------------------------------------


def nystrom_decompose(kernel: Kernel, domain, budget: int | None = None,
                      drop_below: float = 1e-14) -> SpectralDecomposition:
    """Quadrature eigendecomposition of a kernel on a bounded domain."""
    if budget is None:
        budget = getattr(domain, "quadrature_budget", None) or 4096
    nodes, weights = domain_nodes(domain, budget)
    sw = np.sqrt(weights)
    b = kernel.eval(nodes[:, None], nodes[None, :]) * sw[:, None] * sw[None, :]
    b = 0.5 * (b + b.conj().T)
    evals, evecs = np.linalg.eigh(b)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    clamped = int(np.sum(evals > EIGENVALUE_CEIL) + np.sum(evals < 0.0))
    evals = np.clip(evals, 0.0, EIGENVALUE_CEIL)
    keep = evals > drop_below
    trace_quad = float(np.sum(weights * kernel.diag(nodes)))
    tail = max(trace_quad - float(np.sum(evals[keep])), 0.0)
    evals = evals[keep]
    vecs = evecs[:, keep]
    scaled = vecs * sw[:, None]  # rows j: sqrt(w_j) u_j -> extension weights

    def evaluator(z: np.ndarray) -> np.ndarray:
        kz = kernel.eval(z[:, None], nodes[None, :])
        return ((kz @ scaled) / evals[None, :]).T

    return SpectralDecomposition(
        eigenvalues=evals,
        domain=domain,
        source="quadrature",
        tail_mass=tail,
        clamped=clamped,
        mode_indices=None,
        _evaluator=evaluator,
    )


def nystrom_decompose_refined(kernel: Kernel, domain, start_budget: int = 4096,
                              top: int = 20, tol: float = 1e-6,
                              cap: int = 65536) -> SpectralDecomposition:
    """Double the node budget until the top eigenvalues stabilize."""
    budget = start_budget
    sd = nystrom_decompose(kernel, domain, budget)
    while True:
        if 2 * budget > cap:
            raise BudgetExhaustedError(
                f"top-{top} eigenvalues not stable at the {cap}-node cap"
            )
        budget *= 2
        sd_next = nystrom_decompose(kernel, domain, budget)
        k = min(top, sd.n_modes, sd_next.n_modes)
        a = np.zeros(top)
        b = np.zeros(top)
        a[:k] = sd.eigenvalues[:k]
        b[:k] = sd_next.eigenvalues[:k]
        move = float(np.max(np.abs(a - b)))
        sd = sd_next
        if move < tol:
            return sd


# ---------------------------------------------------------------------------
# determinants, resolvents, traces
# ---------------------------------------------------------------------------


def fredholm_det(sd: SpectralDecomposition) -> float:
    """det(I - K) on the domain: product of (1 - eigenvalue) times the
    certified correction for the dropped tail."""
    log_det = float(np.sum(np.log1p(-sd.eigenvalues))) - sd.tail_mass
    return math.exp(log_det)


def iterated_trace(sd: SpectralDecomposition, power: int) -> float:
    """trace(K^power) over the domain, power >= 1."""
    if power < 1:
        raise ValueError("power must be >= 1")
    return float(np.sum(sd.eigenvalues**power)) + (sd.tail_mass if power == 1 else 0.0)


def _beta(sd: SpectralDecomposition) -> np.ndarray:
    if sd.eigenvalues.size and sd.eigenvalues.max() > 1.0 - 1e-12:
        raise DivergentResolventError(
            "eigenvalue within 1e-12 of 1; resolvent series unreliable"
        )
    return sd.eigenvalues / (1.0 - sd.eigenvalues)


def resolvent(sd: SpectralDecomposition, z1, z2) -> np.ndarray:
    """Resolvent kernel sum beta_n phi_n(z1) conj(phi_n(z2)), broadcasting."""
    beta = _beta(sd)
    z1 = np.atleast_1d(np.asarray(z1, dtype=complex))
    z2 = np.atleast_1d(np.asarray(z2, dtype=complex))
    f1 = sd.modes_at(z1)
    f2 = sd.modes_at(z2)
    out = np.einsum("m,mi,mj->ij", beta, f1, np.conj(f2))
    return out if out.size > 1 else out.reshape(())


def resolvent_minor(sd: SpectralDecomposition, points) -> float:
    """det of the resolvent Gram matrix at the given points (real, >= 0)."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    beta = _beta(sd)
    f = sd.modes_at(pts)
    mat = np.einsum("m,mi,mj->ij", beta, f, np.conj(f))
    mat = 0.5 * (mat + mat.conj().T)
    return float(np.real(np.linalg.det(mat)))


# ---------------------------------------------------------------------------
# truncated alternating minor series (finite-order identity check)
# ---------------------------------------------------------------------------


def elem_sympoly(values: np.ndarray, n_max: int) -> np.ndarray:
    """Elementary symmetric polynomials e_0..e_n_max of the values."""
    e = np.zeros(n_max + 1)
    e[0] = 1.0
    for v in np.asarray(values, dtype=float):
        new = e.copy()
        new[1:] += v * e[:-1]
        e = new
    return e


@dataclass(frozen=True)
class MinorSeriesResult:
    lhs: float
    rhs: float
    residual: float
    order: int


def minor_series_residual(sd: SpectralDecomposition, points,
                          order: int = 8) -> MinorSeriesResult:
    """Residual of the finite-order alternating identity linking the
    principal-minor expansion at the points to the Fredholm series times the
    resolvent minor.

    Both sides are truncated at the same order; the exact identity holds in
    the limit, so the residual decays like the first dropped elementary
    symmetric term.  Integrals over the domain are evaluated exactly in the
    eigenbasis (orthonormal modes).
    """
    alphas = sd.eigenvalues
    if alphas.size == 0:
        raise SpectralError("empty spectrum")
    if alphas.max() >= 0.9:
        raise NormTooLargeError("operator norm >= 0.9; series too slow here")
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    k = pts.size
    f = sd.modes_at(pts)  # (m, k)
    scaled = np.sqrt(alphas)[:, None] * f
    m = alphas.size

    idx_sets = list(combinations(range(m), k))
    weights = np.empty(len(idx_sets))
    for j, subset in enumerate(idx_sets):
        sub = scaled[list(subset), :]
        det = np.linalg.det(sub)
        weights[j] = float(np.real(det * np.conj(det)))

    lhs = 0.0
    for j, subset in enumerate(idx_sets):
        if weights[j] == 0.0:
            continue
        others = np.delete(alphas, list(subset))
        e = elem_sympoly(others, order)
        signs = (-1.0) ** np.arange(order + 1)
        lhs += weights[j] * float(np.dot(signs, e))

    e_all = elem_sympoly(alphas, order)
    fred_trunc = float(np.dot((-1.0) ** np.arange(order + 1), e_all))
    res_det = 0.0
    for j, subset in enumerate(idx_sets):
        if weights[j] == 0.0:
            continue
        res_det += weights[j] / float(np.prod(1.0 - alphas[list(subset)]))
    rhs = fred_trunc * res_det
    return MinorSeriesResult(lhs=lhs, rhs=rhs, residual=abs(lhs - rhs), order=order)
