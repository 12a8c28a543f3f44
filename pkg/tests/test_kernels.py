"""Tests for the planar kernel families and their conditioning algebra."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ginibre_lab.kernels import (
    INV_PI,
    ConditionedKernel,
    DegenerateAnchorError,
    FiniteMatrixKernel,
    GinibreKernel,
    KernelError,
    PalmKernel,
    ThinnedGinibreKernel,
    TranslatedGinibreKernel,
    TruncatedGinibreKernel,
    TruncatedPalmKernel,
    condition,
    correlation,
    mode_features,
    palm_of,
)

_points = st.complex_numbers(
    max_magnitude=20.0, allow_nan=False, allow_infinity=False
)


def _random_points(rng, n, scale=2.5):
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * scale


def test_ginibre_eval_closed_form():
    k = GinibreKernel()
    z1, z2 = 1.3 + 0.4j, -0.2 + 2.1j
    d = z1 - z2
    expect = INV_PI * np.exp(-0.5 * abs(d) ** 2) * np.exp(1j * np.imag(z1 * np.conj(z2)))
    assert np.isclose(k.eval(z1, z2), expect, rtol=1e-14)
    assert k.diag(np.array([0.0, 5.0 + 5.0j])).tolist() == [INV_PI, INV_PI]


@settings(max_examples=100, deadline=None)
@given(_points, _points)
def test_ginibre_hermitian_and_modulus(z1, z2):
    k = GinibreKernel()
    v12 = complex(k.eval(z1, z2))
    v21 = complex(k.eval(z2, z1))
    assert np.isclose(v12, np.conj(v21), rtol=1e-12, atol=1e-300)
    # |K(z1,z2)|^2 = K(z1,z1) K(z2,z2) e^{-|z1-z2|^2}
    expect = INV_PI * INV_PI * math.exp(-abs(z1 - z2) ** 2)
    assert np.isclose(abs(v12) ** 2, expect, rtol=1e-10, atol=1e-300)


def test_ginibre_gram_psd():
    rng = np.random.default_rng(1)
    pts = _random_points(rng, 12)
    g = GinibreKernel().gram(pts)
    assert np.allclose(g, g.conj().T)
    w = np.linalg.eigvalsh(g)
    assert w.min() > -1e-12


def test_ginibre_matches_mode_expansion():
    # the kernel is the closure of sum_n f_n(z1) conj(f_n(z2))
    k = GinibreKernel()
    z1 = np.array([0.5 + 0.2j, -1.4 + 1.0j])
    z2 = np.array([2.0 - 0.3j, 0.1 + 0.1j])
    feats1 = mode_features(z1, np.arange(80))
    feats2 = mode_features(z2, np.arange(80))
    series = np.sum(feats1 * np.conj(feats2), axis=0)
    assert np.allclose(series, k.eval(z1, z2), rtol=1e-12, atol=1e-14)


def test_mode_features_direct_formula():
    z = np.array([0.7 - 1.1j, 2.5 + 0.4j])
    modes = np.array([0, 1, 3, 7])
    feats = mode_features(z, modes)
    for i, n in enumerate(modes):
        expect = z**n * np.exp(-0.5 * np.abs(z) ** 2) / math.sqrt(math.pi * math.factorial(n))
        assert np.allclose(feats[i], expect, rtol=1e-13)


def test_mode_features_underflow_to_zero():
    feats = mode_features(np.array([40.0 + 0.0j]), np.arange(3))
    assert np.all(np.isfinite(feats))
    assert np.all(np.abs(feats) == 0.0)


def test_mode_features_orthonormal_under_quadrature():
    # radial Gauss-Legendre x uniform angles integrates f_m conj(f_n) on C
    n_r, n_th = 160, 64
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 6.0 * (x + 1.0) / 2.0
    wr = 6.0 / 2.0 * w * r
    th = 2.0 * math.pi * np.arange(n_th) / n_th
    wth = 2.0 * math.pi / n_th
    z = r[:, None] * np.exp(1j * th[None, :])
    feats = mode_features(z, np.arange(6))
    flat = feats.reshape(6, -1)
    weights = (wr[:, None] * wth * np.ones_like(th)[None, :]).ravel()
    gram = (flat * weights) @ flat.conj().T
    assert np.allclose(gram, np.eye(6), atol=1e-10)


def test_palm_kernel_is_rank_one_subtraction():
    rng = np.random.default_rng(2)
    z1 = _random_points(rng, 6)
    z2 = _random_points(rng, 6)
    base = GinibreKernel()
    palm = PalmKernel()
    rank_one = base.eval(z1, 0.0) * base.eval(0.0, z2) / base.eval(0.0, 0.0)
    assert np.allclose(palm.eval(z1, z2), base.eval(z1, z2) - rank_one, rtol=1e-12)


def test_palm_kernel_diagonal():
    palm = PalmKernel()
    z = np.array([0.0, 0.5, 2.0 + 1.0j])
    expect = (1.0 - np.exp(-np.abs(z) ** 2)) / math.pi
    assert np.allclose(palm.diag(z), expect, rtol=1e-13, atol=1e-16)
    assert palm.diag(np.array([0.0]))[0] == 0.0


def test_palm_of_dispatch():
    assert isinstance(palm_of(GinibreKernel()), PalmKernel)
    tp = palm_of(TruncatedGinibreKernel(5))
    assert isinstance(tp, TruncatedPalmKernel) and tp.m == 5
    # generic kernels go through the Schur complement at the origin
    generic = palm_of(ThinnedGinibreKernel(0.7))
    assert isinstance(generic, ConditionedKernel)
    with pytest.raises(DegenerateAnchorError):
        palm_of(PalmKernel())  # already vanishes at the origin


def test_palm_matches_conditioned_schur():
    rng = np.random.default_rng(3)
    pts = _random_points(rng, 5, scale=1.5)
    closed = PalmKernel().gram(pts)
    schur = ConditionedKernel(GinibreKernel(), [0.0 + 0.0j]).gram(pts)
    assert np.allclose(closed, schur, rtol=1e-11, atol=1e-13)


def test_truncated_palm_equals_mode_drop():
    m = 7
    rng = np.random.default_rng(4)
    pts = _random_points(rng, 5, scale=1.2)
    full = TruncatedGinibreKernel(m)
    reduced = TruncatedPalmKernel(m)
    # dropping mode 0 is exactly the Schur complement at the origin
    schur = condition(full, [0.0 + 0.0j]).gram(pts)
    assert np.allclose(reduced.gram(pts), schur, rtol=1e-10, atol=1e-13)
    assert reduced.modes.tolist() == list(range(1, m))


def test_thinned_kernel_preserves_intensity():
    k = ThinnedGinibreKernel(0.4)
    z = np.array([0.3 + 0.1j, 1.0 - 2.0j])
    assert np.allclose(k.diag(z), INV_PI)
    # alpha = 1 reduces to the plain kernel
    k1 = ThinnedGinibreKernel(1.0)
    base = GinibreKernel()
    assert np.allclose(k1.eval(z, z[::-1]), base.eval(z, z[::-1]), rtol=1e-14)
    with pytest.raises(KernelError):
        ThinnedGinibreKernel(0.0)
    with pytest.raises(KernelError):
        ThinnedGinibreKernel(1.2)


def test_thinned_kernel_decorrelates():
    # small alpha: off-diagonal decays faster (rescaled separation grows)
    z1, z2 = 0.0 + 0.0j, 1.0 + 0.0j
    strong = abs(ThinnedGinibreKernel(0.9).eval(z1, z2))
    weak = abs(ThinnedGinibreKernel(0.1).eval(z1, z2))
    assert weak < strong


def test_translated_kernel_gauge():
    a = 1.5 - 0.7j
    k = TranslatedGinibreKernel(a)
    base = GinibreKernel()
    rng = np.random.default_rng(5)
    z1 = _random_points(rng, 4)
    z2 = _random_points(rng, 4)
    assert np.allclose(k.eval(z1, z2), base.eval(z1 - a, z2 - a), rtol=1e-14)
    # translation leaves all correlations invariant
    pts = _random_points(rng, 3)
    assert np.isclose(
        correlation(k, pts + a), correlation(base, pts), rtol=1e-11
    )


def test_correlation_pair_closed_form():
    # rho_2(z1, z2) with the 1/k! convention:
    # det [[1/pi, K12], [K21, 1/pi]] / 2 = (1 - e^{-|u|^2}) / (2 pi^2)
    base = GinibreKernel()
    for u in (0.5, 1.5 + 0.5j, 3.0j):
        val = correlation(base, [0.0, u])
        expect = (1.0 - math.exp(-abs(u) ** 2)) / (2.0 * math.pi**2)
        assert math.isclose(val, expect, rel_tol=1e-12)
    assert correlation(base, []) == 1.0
    assert math.isclose(correlation(base, [0.3 + 0.2j]), INV_PI, rel_tol=1e-14)


def test_correlation_vanishes_at_repeated_points():
    val = correlation(GinibreKernel(), [1.0 + 1.0j, 1.0 + 1.0j])
    assert abs(val) < 1e-14


def test_conditioned_kernel_vanishes_at_anchors():
    anchors = np.array([0.5 + 0.5j, -1.0 + 0.2j])
    ck = condition(GinibreKernel(), anchors)
    assert np.allclose(ck.diag(anchors), 0.0, atol=1e-13)
    # conditioning keeps positivity on fresh points
    rng = np.random.default_rng(6)
    pts = _random_points(rng, 6)
    w = np.linalg.eigvalsh(ck.gram(pts))
    assert w.min() > -1e-10


def test_conditioned_kernel_degenerate_anchors():
    with pytest.raises(DegenerateAnchorError):
        ConditionedKernel(GinibreKernel(), [0.7 + 0.1j, 0.7 + 0.1j])
    with pytest.raises(KernelError):
        ConditionedKernel(GinibreKernel(), [])


def test_condition_empty_is_identity():
    base = GinibreKernel()
    assert condition(base, []) is base


def test_finite_matrix_kernel_validation():
    good = np.array([[0.5, 0.2], [0.2, 0.5]])
    k = FiniteMatrixKernel(good)
    assert k.eval(np.array([0]), np.array([1]))[()] == 0.2
    with pytest.raises(KernelError):
        FiniteMatrixKernel(np.array([[0.5, 0.4], [0.1, 0.5]]))  # not Hermitian
    with pytest.raises(KernelError):
        FiniteMatrixKernel(np.array([[1.2, 0.0], [0.0, 0.5]]))  # spectrum >= 1
    with pytest.raises(KernelError):
        FiniteMatrixKernel(np.ones((2, 3)))
    with pytest.raises(KernelError):
        k.eval(np.array([0.5]), np.array([1]))  # non-integer index


def test_finite_matrix_conditioning_schur():
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    h = (q * rng.uniform(0.1, 0.9, 4)) @ q.T
    k = FiniteMatrixKernel(h)
    reduced = condition(k, [1])
    keep = [0, 2, 3]
    g = h[np.ix_(keep, keep)] - np.outer(h[keep, 1], h[1, keep]) / h[1, 1]
    assert np.allclose(reduced.h, g, atol=1e-12)
    palm0 = palm_of(k)
    expect = h[1:, 1:] - np.outer(h[1:, 0], h[0, 1:]) / h[0, 0]
    assert np.allclose(palm0.h, expect, atol=1e-12)


def test_truncated_kernel_rank():
    m = 6
    k = TruncatedGinibreKernel(m)
    rng = np.random.default_rng(8)
    pts = _random_points(rng, 12, scale=1.5)
    w = np.linalg.eigvalsh(k.gram(pts))
    assert np.sum(w > 1e-10) <= m
    with pytest.raises(KernelError):
        TruncatedGinibreKernel(0)
    with pytest.raises(KernelError):
        TruncatedPalmKernel(1)
