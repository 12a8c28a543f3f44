"""Exact samplers for the planar determinantal models.

Three independent routes to the truncated process laws:
  - eigenvalues of a complex Gaussian matrix (the defining random-matrix
    picture),
  - sequential projection sampling driven by the exact kernel-diagonal
    mixture proposal (no tuning; acceptance rate j/m at step j),
  - independent radii (squared moduli are Gamma(n, 1)) for the moduli laws.

All randomness flows through counter-based streams from mc_engine, so every
sample is reproducible from (seed, stream_id).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import TruncatedGinibreKernel, TruncatedKernelBase, TruncatedPalmKernel
from .mc_engine import stream

_DISTINCT_MODULI_RTOL = 1e-12
_MAX_RESAMPLE = 5


class SamplingError(RuntimeError):
    pass


class ProposalStallError(SamplingError):
    """Acceptance rate collapsed; numerical degeneracy in the projection."""


@dataclass
class PointSample:
    """A finite point configuration with its provenance."""

    points: np.ndarray
    model: str
    params: dict
    seed: int
    stream_id: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return int(self.points.size)

    def moduli(self) -> np.ndarray:
        return np.sort(np.abs(self.points))


def kostlan_radii(count: int, seed: int, stream_id: int = 0,
                  start_index: int = 1) -> np.ndarray:
    """Independent moduli: the n-th squared radius is Gamma(n, 1),
    n = start_index .. start_index+count-1 (matching consecutive modes)."""
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = stream(seed, stream_id)
    shapes = np.arange(start_index, start_index + count, dtype=float)
    return np.sqrt(rng.gamma(shape=shapes))


def _check_distinct_moduli(points: np.ndarray) -> bool:
    r = np.sort(np.abs(points))
    if r.size < 2:
        return True
    gaps = np.diff(r)
    return bool(np.all(gaps > _DISTINCT_MODULI_RTOL * np.maximum(r[1:], 1e-300)))


def ginibre_matrix_sample(m: int, seed: int, stream_id: int = 0) -> PointSample:
    """Eigenvalues of an m x m matrix with iid complex Gaussian entries
    (variance 1/2 per real component): the m-point truncated process."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = stream(seed, stream_id)
    resamples = 0
    for _ in range(_MAX_RESAMPLE + 1):
        g = rng.normal(0.0, math.sqrt(0.5), size=(m, m)) \
            + 1j * rng.normal(0.0, math.sqrt(0.5), size=(m, m))
        pts = np.linalg.eigvals(g)
        if _check_distinct_moduli(pts):
            return PointSample(
                points=pts, model="matrix_eigenvalues", params={"m": m},
                seed=seed, stream_id=stream_id,
                meta={"resamples": resamples},
            )
        resamples += 1
    raise SamplingError("repeated modulus collisions in matrix sampling")


def _householder_complement(w: np.ndarray) -> np.ndarray:
    """Orthonormal basis (j x (j-1)) of the complement of unit vector w."""
    j = w.size
    v = w.copy()
    phase = w[0] / abs(w[0]) if abs(w[0]) > 0 else 1.0
    v[0] += phase
    h = np.eye(j, dtype=complex) - 2.0 * np.outer(v, v.conj()) / np.vdot(v, v).real
    return h[:, 1:]


def hkpv_sample(kernel: TruncatedKernelBase, seed: int, stream_id: int = 0,
                batch: int = 256) -> PointSample:
    """Sequential projection sampler for a finite-rank mode kernel.

    Proposal at every step: pick a mode uniformly, draw the squared radius
    from its Gamma(mode+1, 1) radial law and a uniform angle; accept with
    probability (projected feature norm)^2 / (kernel diagonal).  The mixture
    dominates each intermediate density with constant m/j at step j, so the
    expected number of proposals is m * H_m overall.
    """
    modes = kernel.modes
    m = modes.size
    rng = stream(seed, stream_id)
    resamples = 0
    proposals_used = 0
    while True:
        pts = np.empty(m, dtype=complex)
        v = np.eye(m, dtype=complex)
        for step in range(m):
            j = m - step  # remaining rank
            accepted = None
            tries = 0
            while accepted is None:
                if tries > 200_000:
                    raise ProposalStallError(
                        f"no acceptance after {tries} proposals at rank {j}"
                    )
                mode_idx = rng.integers(0, m, size=batch)
                s = rng.gamma(shape=modes[mode_idx] + 1.0)
                theta = rng.uniform(0.0, 2.0 * math.pi, size=batch)
                x = np.sqrt(s) * np.exp(1j * theta)
                feats = kernel.features(x)  # (m, batch)
                k_diag = np.sum(np.abs(feats) ** 2, axis=0)
                w = v.conj().T @ feats    # (j, batch)
                norms = np.sum(np.abs(w) ** 2, axis=0)
                ok = k_diag > 0
                acc = np.zeros(batch)
                acc[ok] = norms[ok] / k_diag[ok]
                u = rng.uniform(size=batch)
                hits = np.flatnonzero(u < acc)
                tries += batch
                proposals_used += batch
                if hits.size:
                    b = int(hits[0])
                    accepted = (x[b], w[:, b])
            xb, wb = accepted
            pts[step] = xb
            if j > 1:
                w_hat = wb / math.sqrt(float(np.vdot(wb, wb).real))
                v = v @ _householder_complement(w_hat)
        if _check_distinct_moduli(pts):
            return PointSample(
                points=pts,
                model="projection_sampler",
                params={"modes_from": int(modes[0]), "modes_to": int(modes[-1])},
                seed=seed, stream_id=stream_id,
                meta={"resamples": resamples, "proposals": proposals_used},
            )
        resamples += 1
        if resamples > _MAX_RESAMPLE:
            raise SamplingError("repeated modulus collisions in projection sampling")


def truncated_ginibre_sample(m: int, seed: int, stream_id: int = 0) -> PointSample:
    return hkpv_sample(TruncatedGinibreKernel(m), seed, stream_id)


def truncated_palm_sample(m: int, seed: int, stream_id: int = 0) -> PointSample:
    """(m-1)-point reduced truncation: modes 1..m-1."""
    return hkpv_sample(TruncatedPalmKernel(m), seed, stream_id)


def thin_and_rescale(sample: PointSample, alpha: float, seed: int,
                     stream_id: int = 0) -> PointSample:
    """Independent keep-with-probability-alpha followed by sqrt(alpha)
    shrinking; preserves unit intensity."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    rng = stream(seed, stream_id)
    keep = rng.uniform(size=sample.count) < alpha
    pts = sample.points[keep] * math.sqrt(alpha)
    return PointSample(
        points=pts,
        model=f"thinned({sample.model})",
        params={**sample.params, "alpha": alpha},
        seed=seed, stream_id=stream_id,
        meta={"parent_seed": sample.seed, "kept": int(keep.sum())},
    )


def poisson_sample(intensity: float, radius: float, seed: int,
                   stream_id: int = 0) -> PointSample:
    """Homogeneous Poisson configuration on the centered disk."""
    if intensity <= 0 or radius <= 0:
        raise ValueError("intensity and radius must be positive")
    rng = stream(seed, stream_id)
    n = rng.poisson(intensity * math.pi * radius * radius)
    r = radius * np.sqrt(rng.uniform(size=n))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    return PointSample(
        points=r * np.exp(1j * theta),
        model="poisson",
        params={"intensity": intensity, "radius": radius},
        seed=seed, stream_id=stream_id,
    )
