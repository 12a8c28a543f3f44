"""Kernel families for the planar determinantal models and their algebra.

All kernels are Hermitian maps C x C -> C evaluated through a numerically
stable split: the translation-invariant modulus exp(-|z1-z2|^2/2) times a
pure phase, instead of the raw exponential of inner products (which overflows
for |z| beyond ~27).  Conditioning on points is a Schur complement against
the kernel Gram matrix of the anchors.
"""
from __future__ import annotations

import math

import numpy as np

INV_PI = 1.0 / math.pi


class KernelError(ValueError):
    pass


class DegenerateAnchorError(KernelError):
    """Anchor set has (numerically) singular kernel Gram matrix."""


class Kernel:
    """Base class: eval broadcasts over numpy arrays of complex points."""

    def eval(self, z1, z2) -> np.ndarray:
        raise NotImplementedError

    def diag(self, z) -> np.ndarray:
        """K(z, z); real by Hermitian symmetry."""
        z = np.asarray(z, dtype=complex)
        return np.real(self.eval(z, z))

    def gram(self, points) -> np.ndarray:
        """Hermitian matrix K(z_i, z_j) over a point list."""
        pts = np.asarray(points, dtype=complex).ravel()
        g = self.eval(pts[:, None], pts[None, :])
        return 0.5 * (g + g.conj().T)


def _phase_inner(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    """Im(z1 * conj(z2)), the phase of the planar kernel."""
    return np.imag(z1 * np.conj(z2))


class GinibreKernel(Kernel):
    """Infinite planar kernel with unit intensity 1/pi."""

    def eval(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        d = z1 - z2
        mod = np.exp(-0.5 * (d.real * d.real + d.imag * d.imag))
        return INV_PI * mod * np.exp(1j * _phase_inner(z1, z2))

    def diag(self, z):
        z = np.asarray(z, dtype=complex)
        return np.full(z.shape, INV_PI)


class PalmKernel(Kernel):
    """Kernel of the process conditioned to have a point at the origin,
    with that point removed: the Schur complement of the planar kernel at 0.
    Diagonal (1 - e^{-|z|^2})/pi, vanishing at the origin."""

    _base = GinibreKernel()

    def eval(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        # subtracted rank-one term K(z1,0)K(0,z2)/K(0,0), bounded by 1/pi
        a1 = z1.real * z1.real + z1.imag * z1.imag
        a2 = z2.real * z2.real + z2.imag * z2.imag
        rank_one = INV_PI * np.exp(-0.5 * (a1 + a2))
        return self._base.eval(z1, z2) - rank_one

    def diag(self, z):
        z = np.asarray(z, dtype=complex)
        a = z.real * z.real + z.imag * z.imag
        return -INV_PI * np.expm1(-a)


class ThinnedGinibreKernel(Kernel):
    """Keep each point with probability alpha, then shrink by sqrt(alpha):
    intensity is preserved, eval is the planar kernel at rescaled arguments."""

    def __init__(self, alpha: float):
        if not 0.0 < alpha <= 1.0:
            raise KernelError("thinning probability must be in (0, 1]")
        self.alpha = float(alpha)
        self._base = GinibreKernel()
        self._s = 1.0 / math.sqrt(self.alpha)

    def eval(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        return self._base.eval(z1 * self._s, z2 * self._s)


class TranslatedGinibreKernel(Kernel):
    """Planar kernel seen from a shifted origin: K(z1 - a, z2 - a)."""

    def __init__(self, a: complex):
        self.a = complex(a)
        self._base = GinibreKernel()

    def eval(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        return self._base.eval(z1 - self.a, z2 - self.a)


def mode_features(z, modes: np.ndarray) -> np.ndarray:
    """Orthonormal planar modes f_n(z) = z^n e^{-|z|^2/2} / sqrt(pi n!),
    returned with shape (len(modes), *z.shape).  Stable recurrence
    f_{n+1} = f_n * z / sqrt(n+1); underflow to zero at large |z| is the
    correct limit."""
    z = np.asarray(z, dtype=complex)
    modes = np.asarray(modes, dtype=np.int64)
    n_max = int(modes.max()) if modes.size else 0
    a = z.real * z.real + z.imag * z.imag
    out = np.empty((n_max + 1,) + z.shape, dtype=complex)
    out[0] = np.exp(-0.5 * a) / math.sqrt(math.pi)
    for n in range(n_max):
        out[n + 1] = out[n] * z / math.sqrt(n + 1.0)
    return out[modes]


class TruncatedKernelBase(Kernel):
    """Finite-rank projection onto consecutive planar modes."""

    modes: np.ndarray

    def features(self, z) -> np.ndarray:
        return mode_features(z, self.modes)

    def eval(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        b = np.broadcast(z1, z2)
        f1 = self.features(np.broadcast_to(z1, b.shape))
        f2 = self.features(np.broadcast_to(z2, b.shape))
        return np.sum(f1 * np.conj(f2), axis=0)


class TruncatedGinibreKernel(TruncatedKernelBase):
    """Modes 0..M-1; the associated process has exactly M points."""

    def __init__(self, m: int):
        if m < 1:
            raise KernelError("need at least one mode")
        self.m = int(m)
        self.modes = np.arange(self.m)


class TruncatedPalmKernel(TruncatedKernelBase):
    """Modes 1..M-1: the M-point truncation conditioned at the origin with
    the origin point removed, an (M-1)-point process."""

    def __init__(self, m: int):
        if m < 2:
            raise KernelError("need M >= 2 for a nonempty reduced truncation")
        self.m = int(m)
        self.modes = np.arange(1, self.m)


class FiniteMatrixKernel(Kernel):
    """Kernel on the finite ground set {0..N-1} given by a Hermitian matrix
    with spectrum inside [0, 1)."""

    def __init__(self, h: np.ndarray, validate: bool = True):
        h = np.asarray(h, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise KernelError("matrix kernel must be square")
        if validate:
            if not np.allclose(h, h.conj().T, atol=1e-12):
                raise KernelError("matrix kernel must be Hermitian")
            w = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
            if w.min() < -1e-12 or w.max() >= 1.0:
                raise KernelError("matrix kernel spectrum must lie in [0, 1)")
        self.h = 0.5 * (h + h.conj().T)

    def eval(self, z1, z2):
        i = np.asarray(z1)
        j = np.asarray(z2)
        if not (np.issubdtype(i.dtype, np.integer) and np.issubdtype(j.dtype, np.integer)):
            raise KernelError("matrix kernels are evaluated at integer indices")
        return self.h[i, j]


class ConditionedKernel(Kernel):
    """Schur complement of a base kernel at a finite anchor set: the kernel
    of the process conditioned to contain the anchors, anchors removed."""

    def __init__(self, base: Kernel, anchors):
        anchors = np.asarray(anchors, dtype=complex).ravel()
        if anchors.size == 0:
            raise KernelError("conditioning requires at least one anchor")
        g = base.gram(anchors)
        scale = float(np.prod(np.clip(np.real(np.diag(g)), 1e-300, None)))
        sign, logdet = np.linalg.slogdet(g)
        if sign.real <= 0 or logdet < math.log(1e-12 * max(scale, 1e-300)):
            raise DegenerateAnchorError(
                "anchor Gram matrix is singular beyond the 1e-12 scale floor"
            )
        self.base = base
        self.anchors = anchors
        self._g_inv = np.linalg.inv(g)

    def eval(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        b = np.broadcast(z1, z2)
        z1b = np.broadcast_to(z1, b.shape).ravel()
        z2b = np.broadcast_to(z2, b.shape).ravel()
        # rows K(z1, anchors), cols K(anchors, z2)
        u = self.base.eval(z1b[:, None], self.anchors[None, :])
        v = self.base.eval(self.anchors[None, :], z2b[:, None])
        correction = np.einsum("ip,pq,iq->i", u, self._g_inv, v)
        out = self.base.eval(z1b, z2b) - correction
        return out.reshape(b.shape)


def palm_of(kernel: Kernel) -> Kernel:
    """Kernel of the reduced process conditioned at the origin (index 0 for
    finite matrix kernels)."""
    if isinstance(kernel, GinibreKernel):
        return PalmKernel()
    if isinstance(kernel, TruncatedGinibreKernel):
        return TruncatedPalmKernel(kernel.m)
    if isinstance(kernel, FiniteMatrixKernel):
        return condition(kernel, [0])
    origin = np.array([0.0 + 0.0j])
    if float(kernel.diag(origin)[0]) <= 1e-300:
        raise DegenerateAnchorError("kernel vanishes at the origin")
    return ConditionedKernel(kernel, origin)


def condition(kernel: Kernel, anchors) -> Kernel:
    """Condition a kernel on containing the anchor points (Schur complement);
    with an empty anchor list this is the identity operation."""
    anchors = np.asarray(anchors)
    if anchors.size == 0:
        return kernel
    if isinstance(kernel, FiniteMatrixKernel):
        idx = np.asarray(anchors).astype(np.int64).ravel()
        n = kernel.h.shape[0]
        keep = np.array([i for i in range(n) if i not in set(idx.tolist())], dtype=np.int64)
        g = kernel.h[np.ix_(idx, idx)]
        scale = float(np.prod(np.clip(np.real(np.diag(g)), 1e-300, None)))
        sign, logdet = np.linalg.slogdet(g)
        if sign.real <= 0 or logdet < math.log(1e-12 * max(scale, 1e-300)):
            raise DegenerateAnchorError("anchor Gram matrix is singular")
        cross = kernel.h[np.ix_(keep, idx)]
        schur = kernel.h[np.ix_(keep, keep)] - cross @ np.linalg.solve(g, cross.conj().T)
        return FiniteMatrixKernel(schur, validate=False)
    return ConditionedKernel(kernel, np.asarray(anchors, dtype=complex))


def correlation(kernel: Kernel, points) -> float:
    """k-point correlation of the point configuration at the given points,
    normalized with the 1/k! convention: det(K(z_i, z_j)) / k!."""
    pts = np.asarray(points, dtype=complex).ravel()
    k = pts.size
    if k == 0:
        return 1.0
    g = kernel.gram(pts)
    det = float(np.real(np.linalg.det(g)))
    return det / math.gamma(k + 1.0)
