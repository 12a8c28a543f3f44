"""Finite-ground-set determinantal processes with exact law enumeration.

This is the brute-force end of the toolkit: every closed-form identity used
on the continuum (block counting via resolvents, anchored conditioning,
counting-CDF gaps, stochastic domination, matched-Gramian equivalence) has a
finite analogue here that can be checked against full enumeration of the
2^N subset probabilities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product

import networkx as nx
import numpy as np

from .probabilities import count_pmf_from_bernoulli

MAX_GROUND_SIZE = 14


class DiscreteError(ValueError):
    pass


class GroundSetTooLargeError(DiscreteError):
    pass


class NotLoewnerOrderedError(DiscreteError):
    pass


class GramMismatchError(DiscreteError):
    pass


class ZeroAnchorError(DiscreteError):
    pass


@dataclass
class FiniteDPP:
    """Determinantal process on {0..N-1} with Hermitian kernel, spectrum in
    [0, 1) (the strict upper end keeps every conditional law well defined)."""

    k_matrix: np.ndarray
    _eigs: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        k = np.asarray(self.k_matrix, dtype=complex)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise DiscreteError("kernel must be square")
        if k.shape[0] > MAX_GROUND_SIZE:
            raise GroundSetTooLargeError(
                f"ground set {k.shape[0]} exceeds {MAX_GROUND_SIZE}"
            )
        if not np.allclose(k, k.conj().T, atol=1e-12):
            raise DiscreteError("kernel must be Hermitian to 1e-12")
        k = 0.5 * (k + k.conj().T)
        w = np.linalg.eigvalsh(k)
        if w.min() < -1e-12 or w.max() >= 1.0:
            raise DiscreteError("kernel spectrum must lie in [0, 1)")
        self.k_matrix = k
        self._eigs = w

    @property
    def n(self) -> int:
        return self.k_matrix.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigs

    def count_pmf(self) -> np.ndarray:
        """Total-count law: independent Bernoulli(eigenvalue) convolution."""
        return count_pmf_from_bernoulli(np.clip(self._eigs, 0.0, 1.0))


def _batched_principal_dets(mat: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    """(masks, dets) over all principal minors of the given size."""
    n = mat.shape[0]
    combos = np.array(list(combinations(range(n), size)), dtype=np.int64)
    sub = mat[combos[:, :, None], combos[:, None, :]]
    dets = np.linalg.det(sub)
    masks = np.sum(1 << combos, axis=1)
    return masks, dets


def exact_law(d: FiniteDPP) -> np.ndarray:
    """P{configuration = S} for every S, indexed by bitmask."""
    n = d.n
    eye = np.eye(n)
    sign, logdet = np.linalg.slogdet(eye - d.k_matrix)
    void = float(np.real(sign) * math.exp(logdet))
    l_mat = np.linalg.solve(eye - d.k_matrix, d.k_matrix)
    p = np.zeros(1 << n)
    p[0] = void
    for size in range(1, n + 1):
        masks, dets = _batched_principal_dets(l_mat, size)
        p[masks] = void * np.real(dets)
    return p


def _popcounts(n_bits: int) -> np.ndarray:
    masks = np.arange(1 << n_bits, dtype=np.int64)
    out = np.zeros(masks.size, dtype=np.int64)
    for b in range(n_bits):
        out += (masks >> b) & 1
    return out


def law_block_counts(p: np.ndarray, blocks: list) -> np.ndarray:
    """Aggregate a subset law into a joint block-count array."""
    n = int(round(math.log2(p.size)))
    masks = np.arange(p.size, dtype=np.int64)
    shape = tuple(len(b) + 1 for b in blocks)
    idx = np.zeros(p.size, dtype=np.int64)
    for b_i, block in enumerate(blocks):
        cnt = np.zeros(p.size, dtype=np.int64)
        for j in block:
            if j >= n:
                raise DiscreteError("block index outside ground set")
            cnt += (masks >> j) & 1
        stride = int(np.prod(shape[b_i + 1:], dtype=np.int64))
        idx += cnt * stride
    out = np.bincount(idx, weights=p, minlength=int(np.prod(shape)))
    return out.reshape(shape)


def _validate_blocks(n: int, blocks, counts) -> tuple[list, list]:
    blocks = [list(map(int, b)) for b in blocks]
    counts = [int(c) for c in counts]
    if len(blocks) != len(counts):
        raise DiscreteError("blocks and counts must align")
    flat = [j for b in blocks for j in b]
    if len(set(flat)) != len(flat):
        raise DiscreteError("blocks must be disjoint")
    if any(j < 0 or j >= n for j in flat):
        raise DiscreteError("block index outside ground set")
    if any(c < 0 for c in counts):
        raise DiscreteError("counts must be >= 0")
    return blocks, counts


def _void_and_resolvent(k: np.ndarray, a_idx: list[int]) -> tuple[float, np.ndarray]:
    """det(I - K_A) and the resolvent K_A (I - K_A)^{-1} on A."""
    ka = k[np.ix_(a_idx, a_idx)]
    eye = np.eye(len(a_idx))
    sign, logdet = np.linalg.slogdet(eye - ka)
    if np.real(sign) <= 0:
        raise DiscreteError("I - K_A numerically singular")
    void = float(np.real(sign) * math.exp(logdet))
    r_a = np.linalg.solve(eye - ka, ka)
    return void, r_a


def counting_distribution(d: FiniteDPP, blocks, counts) -> float:
    """P{exactly counts[i] points in blocks[i] for every i}: void factor on
    the union times subset sums of resolvent minors, one combination per
    choice of occupied positions in each block."""
    blocks, counts = _validate_blocks(d.n, blocks, counts)
    a_idx = sorted(j for b in blocks for j in b)
    if not a_idx:
        return 1.0 if all(c == 0 for c in counts) else 0.0
    void, r_a = _void_and_resolvent(d.k_matrix, a_idx)
    pos = {j: i for i, j in enumerate(a_idx)}
    per_block = []
    for block, c in zip(blocks, counts):
        if c > len(block):
            return 0.0
        per_block.append([tuple(pos[j] for j in t) for t in combinations(block, c)])
    total = 0.0
    batch = []
    for pick in product(*per_block):
        idx = [j for t in pick for j in t]
        if idx:
            batch.append(idx)
        else:
            total += 1.0  # empty minor det = 1
    if batch:
        arr = np.array(batch, dtype=np.int64)
        sub = r_a[arr[:, :, None], arr[:, None, :]]
        total += float(np.sum(np.real(np.linalg.det(sub))))
    return void * total


def _extended_resolvent(k: np.ndarray, s_idx: list[int], a_idx: list[int]) -> np.ndarray:
    """Resolvent against region A, evaluated on index set S (possibly off A):
    R(x, y) = K(x, y) + K(x, A)(I - K_A)^{-1} K(A, y)."""
    ka = k[np.ix_(a_idx, a_idx)]
    eye = np.eye(len(a_idx))
    cross_left = k[np.ix_(s_idx, a_idx)]
    cross_right = k[np.ix_(a_idx, s_idx)]
    middle = np.linalg.solve(eye - ka, cross_right)
    return k[np.ix_(s_idx, s_idx)] + cross_left @ middle


def conditioned_counting(d: FiniteDPP, anchors, blocks, counts) -> float:
    """Block-count law of the process conditioned to contain the anchors
    (anchors removed), via the anchored resolvent-minor formula.

    Anchors must avoid the block union: the continuum statement integrates
    over configurations that almost surely miss the anchor locations, and
    the discrete analogue keeps that disjointness explicit.
    """
    anchors = [int(a) for a in np.atleast_1d(anchors)]
    if len(set(anchors)) != len(anchors):
        raise DiscreteError("anchors must be distinct")
    blocks, counts = _validate_blocks(d.n, blocks, counts)
    a_idx = sorted(j for b in blocks for j in b)
    if set(anchors) & set(a_idx):
        raise DiscreteError("anchors must not lie in the counted blocks")
    ku = d.k_matrix[np.ix_(anchors, anchors)]
    sign, logdet = np.linalg.slogdet(ku)
    if np.real(sign) <= 0 or logdet < math.log(1e-300):
        raise ZeroAnchorError("anchor minor of the kernel is singular")
    det_ku = float(np.real(sign) * math.exp(logdet))
    if not a_idx:
        return 1.0 if all(c == 0 for c in counts) else 0.0
    void, _ = _void_and_resolvent(d.k_matrix, a_idx)
    s_idx = anchors + a_idx
    r_ext = _extended_resolvent(d.k_matrix, s_idx, a_idx)
    p = len(anchors)
    pos = {j: i + p for i, j in enumerate(a_idx)}
    per_block = []
    for block, c in zip(blocks, counts):
        if c > len(block):
            return 0.0
        per_block.append([tuple(pos[j] for j in t) for t in combinations(block, c)])
    anchor_rows = list(range(p))
    batch = []
    for pick in product(*per_block):
        batch.append(anchor_rows + [j for t in pick for j in t])
    arr = np.array(batch, dtype=np.int64)
    sub = r_ext[arr[:, :, None], arr[:, None, :]]
    total = float(np.sum(np.real(np.linalg.det(sub))))
    return void * total / det_ku


# ---------------------------------------------------------------------------
# counting-CDF gap under anchoring, and the eigenvalue-floor bound
# ---------------------------------------------------------------------------


def _elem_sympoly(values: np.ndarray, n_max: int) -> np.ndarray:
    e = np.zeros(n_max + 1)
    e[0] = 1.0
    for v in values:
        new = e.copy()
        new[1:] += v * e[:-1]
        e = new
    return e


@dataclass(frozen=True)
class CdfGapResult:
    """Gap P{N(psi_u) <= k} - P{N(psi) <= k} and its audit trail."""

    value: float             # spectral-series formula
    exact: float             # from the two exact counting laws
    cdf_plain: float
    cdf_conditioned: float
    bound_factor_ok: bool    # conditioned cdf <= (1 - alpha_max)^{-1} plain cdf
    k: int


def count_cdf_gap(d: FiniteDPP, anchor: int, k: int) -> CdfGapResult:
    """Amount by which conditioning at the anchor (and removing it) raises
    the probability of at most k points on the whole ground set."""
    u = int(anchor)
    if not 0 <= u < d.n:
        raise DiscreteError("anchor outside ground set")
    kuu = float(np.real(d.k_matrix[u, u]))
    if kuu <= 1e-300:
        raise ZeroAnchorError("kernel diagonal vanishes at the anchor")
    alphas, vecs = np.linalg.eigh(d.k_matrix)
    alphas = np.clip(alphas, 0.0, 1.0 - 1e-15)
    f_u = vecs[u, :]
    beta = alphas / (1.0 - alphas)
    sigma = 0.0
    for n_mode in range(alphas.size):
        others = np.delete(beta, n_mode)
        e_k = _elem_sympoly(others, k)[k] if k <= others.size else 0.0
        w = float(np.real(f_u[n_mode] * np.conj(f_u[n_mode])))
        sigma += w * alphas[n_mode] ** 2 / (1.0 - alphas[n_mode]) * e_k
    void = float(np.prod(1.0 - alphas))
    value = void * sigma / kuu

    pmf_plain = count_pmf_from_bernoulli(alphas)
    cdf_plain = float(np.sum(pmf_plain[: k + 1]))
    schur = _schur_at(d.k_matrix, [u])
    eig_cond = np.clip(np.linalg.eigvalsh(schur), 0.0, 1.0)
    pmf_cond = count_pmf_from_bernoulli(eig_cond)
    cdf_cond = float(np.sum(pmf_cond[: k + 1]))
    factor = 1.0 / (1.0 - float(alphas.max()))
    return CdfGapResult(
        value=value,
        exact=cdf_cond - cdf_plain,
        cdf_plain=cdf_plain,
        cdf_conditioned=cdf_cond,
        bound_factor_ok=cdf_cond <= factor * cdf_plain + 1e-12,
        k=int(k),
    )


def _schur_at(k: np.ndarray, anchors: list[int]) -> np.ndarray:
    """Kernel of the process conditioned on the anchors, anchors removed."""
    n = k.shape[0]
    keep = [i for i in range(n) if i not in set(anchors)]
    g = k[np.ix_(anchors, anchors)]
    cross = k[np.ix_(keep, anchors)]
    return k[np.ix_(keep, keep)] - cross @ np.linalg.solve(g, cross.conj().T)


def anchored_cdf_via_modified_minor(d: FiniteDPP, anchor: int, k: int,
                                    subset=None) -> float:
    """P{at most k points of the anchored process in the subset}, computed
    through the plain-process CDF plus a correction whose minors carry the
    resolvent-minus-kernel column at the anchor."""
    u = int(anchor)
    a_idx = sorted(int(j) for j in (subset if subset is not None else range(d.n)))
    if u in a_idx:
        a_idx = [j for j in a_idx if j != u]
    if not a_idx:
        return 1.0
    kuu = float(np.real(d.k_matrix[u, u]))
    if kuu <= 1e-300:
        raise ZeroAnchorError("kernel diagonal vanishes at the anchor")
    ka_eigs = np.clip(np.linalg.eigvalsh(d.k_matrix[np.ix_(a_idx, a_idx)]), 0.0, 1.0)
    cdf_plain = float(np.sum(count_pmf_from_bernoulli(ka_eigs)[: k + 1]))
    void, _ = _void_and_resolvent(d.k_matrix, a_idx)
    s_idx = [u] + a_idx
    r_ext = _extended_resolvent(d.k_matrix, s_idx, a_idx)
    k_sub = d.k_matrix[np.ix_(s_idx, s_idx)]
    modified = r_ext.copy()
    modified[:, 0] = r_ext[:, 0] - k_sub[:, 0]
    if k > len(a_idx):
        correction_sets = []
    else:
        correction_sets = list(combinations(range(1, len(a_idx) + 1), k))
    total = 0.0
    if correction_sets:
        batch = np.array([[0] + list(t) for t in correction_sets], dtype=np.int64)
        sub = r_ext[batch[:, :, None], batch[:, None, :]]
        sub[:, :, 0] = modified[batch, 0]
        total = float(np.sum(np.real(np.linalg.det(sub))))
    return cdf_plain + void * total / kuu


# ---------------------------------------------------------------------------
# stochastic domination
# ---------------------------------------------------------------------------


@dataclass
class DominationReport:
    mode: str
    violation: bool
    worst_margin: float
    n_events_checked: int
    loewner_gap: float
    witness: object = None

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "violation": self.violation,
            "worst_margin": self.worst_margin,
            "n_events_checked": self.n_events_checked,
            "loewner_gap": self.loewner_gap,
            "witness": self.witness if self.witness is None else repr(self.witness),
        }


def _partitions_up_to(n: int, max_blocks: int):
    """Restricted-growth labelings of n items into at most max_blocks blocks."""
    labels = np.zeros(n, dtype=np.int64)

    def rec(i: int, top: int):
        if i == n:
            yield labels.copy()
            return
        for lab in range(min(top + 1, max_blocks - 1) + 1):
            labels[i] = lab
            yield from rec(i + 1, max(top, lab))

    if n == 0:
        return
    yield from rec(0, -1)


def domination_check(dominant: FiniteDPP, dominated: FiniteDPP,
                     mode: str = "elementary", tol: float = 1e-10,
                     require_loewner: bool = True) -> DominationReport:
    """Check that every decreasing event is at most as likely under the
    dominant process.

    mode 'elementary' (N <= 12): all events {every block count <= threshold}
    over all partitions into at most 3 blocks, all thresholds at once via
    cumulative sums of the joint histograms.
    mode 'full' (N <= 12): every down-closed family of subsets, reduced to a
    maximum-weight closure problem and solved exactly by min-cut.
    """
    if dominant.n != dominated.n:
        raise DiscreteError("pairs must share a ground set")
    n = dominant.n
    gap_matrix = dominant.k_matrix - dominated.k_matrix
    loewner_gap = float(np.linalg.eigvalsh(0.5 * (gap_matrix + gap_matrix.conj().T)).min())
    if require_loewner and loewner_gap < -1e-10:
        raise NotLoewnerOrderedError(f"K - L has eigenvalue {loewner_gap:.3e}")
    if n > 12:
        raise GroundSetTooLargeError("domination checks capped at N = 12")
    d_law = exact_law(dominant) - exact_law(dominated)

    if mode == "elementary":
        return _domination_elementary(n, d_law, tol, loewner_gap)
    if mode == "full":
        return _domination_full(n, d_law, tol, loewner_gap)
    raise DiscreteError(f"unknown mode {mode!r}")


def _domination_elementary(n: int, d_law: np.ndarray, tol: float,
                           loewner_gap: float) -> DominationReport:
    masks = np.arange(1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)
    worst = -math.inf
    witness = None
    n_events = 0
    for labels in _partitions_up_to(n, 3):
        m = int(labels.max()) + 1
        onehot = np.equal.outer(labels, np.arange(m)).astype(np.float64)
        counts = (bits @ onehot).astype(np.int64)  # (2^n, m)
        shape = tuple(int(onehot[:, i].sum()) + 1 for i in range(m))
        strides = np.ones(m, dtype=np.int64)
        for i in range(m - 2, -1, -1):
            strides[i] = strides[i + 1] * shape[i + 1]
        idx = counts @ strides
        hist = np.bincount(idx, weights=d_law, minlength=int(np.prod(shape)))
        grid = hist.reshape(shape)
        for ax in range(m):
            grid = np.cumsum(grid, axis=ax)
        n_events += grid.size
        g_max = float(grid.max())
        if g_max > worst:
            worst = g_max
            if g_max > tol:
                kmax = np.unravel_index(int(np.argmax(grid)), shape)
                witness = {"labels": labels.tolist(), "thresholds": list(map(int, kmax))}
    return DominationReport(
        mode="elementary", violation=worst > tol, worst_margin=worst,
        n_events_checked=n_events, loewner_gap=loewner_gap, witness=witness,
    )


def _domination_full(n: int, d_law: np.ndarray, tol: float,
                     loewner_gap: float) -> DominationReport:
    """Max over down-closed families F of sum_{S in F} d_law[S], via the
    project-selection min-cut on the subset lattice."""
    n_masks = 1 << n
    g = nx.DiGraph()
    source, sink = "s", "t"
    pos_total = 0.0
    cutoff = 1e-15
    for mask in range(n_masks):
        v = d_law[mask]
        if v > cutoff:
            g.add_edge(source, mask, capacity=float(v))
            pos_total += float(v)
        elif v < -cutoff:
            g.add_edge(mask, sink, capacity=float(-v))
    for mask in range(1, n_masks):
        b = mask
        while b:
            bit = b & (-b)
            g.add_edge(mask, mask ^ bit, capacity=math.inf)
            b ^= bit
    if pos_total == 0.0 or source not in g or sink not in g:
        return DominationReport(
            mode="full", violation=False, worst_margin=0.0,
            n_events_checked=n_masks, loewner_gap=loewner_gap,
        )
    cut_value, (s_side, _) = nx.minimum_cut(
        g, source, sink, flow_func=nx.algorithms.flow.dinitz
    )
    family = [m for m in s_side if m != source]
    gain = float(np.sum(d_law[family])) if family else 0.0
    gain = max(gain, pos_total - cut_value)
    witness = None
    if gain > tol:
        witness = {"family_size": len(family),
                   "maximal_elements": _maximal_masks(family)[:16]}
    return DominationReport(
        mode="full", violation=gain > tol, worst_margin=gain,
        n_events_checked=n_masks, loewner_gap=loewner_gap, witness=witness,
    )


def _maximal_masks(family: list[int]) -> list[int]:
    fam = set(family)
    out = []
    for m_val in sorted(fam, key=lambda x: -bin(x).count("1")):
        if not any(m_val != other and (m_val & other) == m_val for other in out):
            out.append(m_val)
    return out


# ---------------------------------------------------------------------------
# matched block Gramians
# ---------------------------------------------------------------------------


@dataclass
class ProjectionFactorization:
    """Kernel F diag(alphas) F^H with orthonormal feature columns, plus a
    block partition of the ground set."""

    features: np.ndarray      # (N, M), F^H F = I_M
    alphas: np.ndarray        # (M,) in [0, 1)
    blocks: list

    def __post_init__(self):
        f = np.asarray(self.features, dtype=complex)
        gram = f.conj().T @ f
        if not np.allclose(gram, np.eye(f.shape[1]), atol=1e-10):
            raise DiscreteError("feature columns must be orthonormal")
        flat = [j for b in self.blocks for j in b]
        if sorted(flat) != list(range(f.shape[0])):
            raise DiscreteError("blocks must partition the ground set")
        self.features = f
        self.alphas = np.asarray(self.alphas, dtype=float)

    def kernel(self) -> np.ndarray:
        return (self.features * self.alphas[None, :]) @ self.features.conj().T

    def block_gram(self, i: int) -> np.ndarray:
        rows = self.features[np.asarray(self.blocks[i], dtype=np.int64), :]
        return rows.conj().T @ rows

    def joint_block_law(self) -> np.ndarray:
        law = exact_law(FiniteDPP(self.kernel()))
        return law_block_counts(law, self.blocks)


def block_law_discrepancy(pa: ProjectionFactorization,
                          pb: ProjectionFactorization,
                          gram_atol: float = 1e-10) -> float:
    """Maximum absolute difference between the two joint block-count laws.

    Precondition (the theorem's hypothesis): same mode weights and matching
    per-block mode Gramians.
    """
    if len(pa.blocks) != len(pb.blocks):
        raise GramMismatchError("block structures differ in length")
    if pa.alphas.size != pb.alphas.size or not np.allclose(
        pa.alphas, pb.alphas, atol=1e-12
    ):
        raise GramMismatchError("mode weights differ")
    for i in range(len(pa.blocks)):
        if not np.allclose(pa.block_gram(i), pb.block_gram(i), atol=gram_atol):
            raise GramMismatchError(f"block {i} Gramians differ")
    law_a = pa.joint_block_law()
    law_b = pb.joint_block_law()
    shape = tuple(max(sa, sb) for sa, sb in zip(law_a.shape, law_b.shape))
    pad_a = np.zeros(shape)
    pad_b = np.zeros(shape)
    pad_a[tuple(slice(0, s) for s in law_a.shape)] = law_a
    pad_b[tuple(slice(0, s) for s in law_b.shape)] = law_b
    return float(np.max(np.abs(pad_a - pad_b)))


def realize_matched_blocks(pa: ProjectionFactorization,
                           block_sizes: list | None = None) -> ProjectionFactorization:
    """Construct a second ground set with the same per-block mode Gramians:
    factor each block Gramian G_i = C_i^H C_i and use the factor rows as the
    new block's feature rows (padding with zero rows if a larger block is
    requested)."""
    new_rows = []
    new_blocks = []
    cursor = 0
    for i in range(len(pa.blocks)):
        gram = pa.block_gram(i)
        w, v = np.linalg.eigh(0.5 * (gram + gram.conj().T))
        keep = w > 1e-12
        c = (v[:, keep] * np.sqrt(w[keep])[None, :]).conj().T  # (rank, M)
        rank = c.shape[0]
        size = rank if block_sizes is None else int(block_sizes[i])
        if size < rank:
            raise DiscreteError(f"block {i} needs at least {rank} rows")
        rows = np.zeros((size, pa.alphas.size), dtype=complex)
        rows[:rank, :] = c
        new_rows.append(rows)
        new_blocks.append(list(range(cursor, cursor + size)))
        cursor += size
    features = np.vstack(new_rows)
    return ProjectionFactorization(features=features, alphas=pa.alphas.copy(),
                                   blocks=new_blocks)


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------


def random_kernel(n: int, rng: np.random.Generator, lo: float = 0.05,
                  hi: float = 0.95) -> np.ndarray:
    """Hermitian matrix with spectrum uniform in [lo, hi]."""
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, _ = np.linalg.qr(z)
    d = rng.uniform(lo, hi, size=n)
    k = (q * d[None, :]) @ q.conj().T
    return 0.5 * (k + k.conj().T)


def random_loewner_pair(n: int, rng: np.random.Generator,
                        rank: int = 1) -> tuple[FiniteDPP, FiniteDPP]:
    """(dominant, dominated) with K - L PSD of the requested rank."""
    k = random_kernel(n, rng)
    l_mat = k.copy()
    for _ in range(rank):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        v /= np.linalg.norm(v)
        t_max = 1.0 / float(np.real(np.vdot(v, np.linalg.solve(l_mat, v))))
        if t_max <= 0:
            continue
        t = rng.uniform(0.15, 0.9) * t_max
        l_mat = l_mat - t * np.outer(v, v.conj())
        l_mat = 0.5 * (l_mat + l_mat.conj().T)
    w = np.linalg.eigvalsh(l_mat)
    if w.min() < 0:
        l_mat = l_mat - (w.min() - 1e-14) * np.eye(n)
        l_mat = l_mat * (1.0 / (1.0 + 1e-12))
    return FiniteDPP(k), FiniteDPP(l_mat)


def planar_gram_pair(n_points: int, rng: np.random.Generator,
                     spread: float = 1.0, top: float = 0.9
                     ) -> tuple[FiniteDPP, FiniteDPP]:
    """Kernel Gram matrix of the planar process on random points (rescaled
    into Condition B) paired with its anchored Schur complement: restriction
    dominates conditioning."""
    from .kernels import GinibreKernel

    pts = spread * (rng.normal(size=n_points) + 1j * rng.normal(size=n_points))
    gram = GinibreKernel().gram(pts)
    lam = np.linalg.eigvalsh(gram).max()
    k = gram * (top / lam)
    dominated = _schur_at(k, [0])
    dominant = k[1:, 1:]
    return FiniteDPP(dominant), FiniteDPP(dominated)
