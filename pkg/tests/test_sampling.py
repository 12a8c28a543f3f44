"""Tests for the exact point-process samplers.

Distributional checks run on fixed seeds, so outcomes are deterministic;
thresholds still leave 4-sigma head room so nearby seeds would pass too.
"""
import math

import numpy as np
import pytest
from scipy import stats

from ginibre_lab.kernels import TruncatedGinibreKernel, TruncatedPalmKernel
from ginibre_lab.sampling import (
    PointSample,
    ginibre_matrix_sample,
    hkpv_sample,
    kostlan_radii,
    poisson_sample,
    thin_and_rescale,
    truncated_ginibre_sample,
    truncated_palm_sample,
)


def test_point_sample_fields():
    s = truncated_ginibre_sample(5, seed=1)
    assert s.count == 5
    mod = s.moduli()
    assert np.all(np.diff(mod) >= 0)
    assert s.model == "projection_sampler"
    assert s.params == {"modes_from": 0, "modes_to": 4}
    assert s.meta["proposals"] > 0


def test_kostlan_radii_reproducible():
    a = kostlan_radii(20, seed=3, stream_id=4)
    b = kostlan_radii(20, seed=3, stream_id=4)
    assert np.array_equal(a, b)
    c = kostlan_radii(20, seed=3, stream_id=5)
    assert not np.array_equal(a, c)
    assert kostlan_radii(0, seed=1).size == 0
    with pytest.raises(ValueError):
        kostlan_radii(-1, seed=1)


def test_kostlan_radii_gamma_law():
    # n-th squared radius is Gamma(n, 1); KS against the exact CDF per index
    n_reps = 2000
    sq = np.empty((n_reps, 30))
    for i in range(n_reps):
        sq[i] = kostlan_radii(30, seed=100, stream_id=i) ** 2
    for n in (1, 7, 30):
        p = stats.kstest(sq[:, n - 1], stats.gamma(a=n).cdf).pvalue
        assert p > 1e-4, f"order {n} radial law rejected, p={p}"
    # start_index shifts the whole ladder
    shifted = kostlan_radii(5, seed=9, start_index=3)
    assert shifted.size == 5


def test_matrix_sample_counts_and_energy():
    s = ginibre_matrix_sample(16, seed=2)
    assert s.count == 16
    assert s.model == "matrix_eigenvalues"
    again = ginibre_matrix_sample(16, seed=2)
    assert np.array_equal(np.sort(s.points), np.sort(again.points))
    # sum of squared moduli has mean m(m+1)/2 under the moduli law
    m, reps = 16, 300
    totals = [np.sum(ginibre_matrix_sample(m, seed=50, stream_id=i).moduli() ** 2)
              for i in range(reps)]
    mean = float(np.mean(totals))
    target = m * (m + 1) / 2.0
    sigma = math.sqrt(target / reps)  # variance of the gamma ladder sum
    assert abs(mean - target) < 4.5 * sigma
    with pytest.raises(ValueError):
        ginibre_matrix_sample(0, seed=1)


def test_projection_sampler_counts():
    assert truncated_ginibre_sample(7, seed=5).count == 7
    assert truncated_palm_sample(7, seed=5).count == 6
    direct = hkpv_sample(TruncatedGinibreKernel(7), seed=5)
    again = truncated_ginibre_sample(7, seed=5)
    assert np.array_equal(direct.points, again.points)
    palm = hkpv_sample(TruncatedPalmKernel(7), seed=5)
    assert palm.count == 6


def test_projection_sampler_reproducible_and_stream_independent():
    a = truncated_ginibre_sample(10, seed=11, stream_id=3)
    b = truncated_ginibre_sample(10, seed=11, stream_id=3)
    assert np.array_equal(a.points, b.points)
    c = truncated_ginibre_sample(10, seed=11, stream_id=4)
    assert not np.array_equal(a.points, c.points)


def test_samplers_agree_on_extreme_moduli():
    # matrix eigenvalues, projection sampler, and the radial ladder must share
    # the law of every modulus order statistic; smoke-check min and max at
    # M = 8 (the full grid runs in the acceptance suite)
    m, reps = 8, 800
    mat = np.empty((reps, m))
    prj = np.empty((reps, m))
    rad = np.empty((reps, m))
    for i in range(reps):
        mat[i] = ginibre_matrix_sample(m, seed=60, stream_id=i).moduli()
        prj[i] = truncated_ginibre_sample(m, seed=61, stream_id=i).moduli()
        rad[i] = np.sort(kostlan_radii(m, seed=62, stream_id=i))
    for col in (0, m - 1):
        for a, b in ((mat, prj), (mat, rad), (prj, rad)):
            p = stats.ks_2samp(a[:, col], b[:, col]).pvalue
            assert p > 1e-4, f"order statistic {col} mismatch, p={p}"


def test_palm_sampler_distribution_matches_shifted_ladder():
    # reduced truncation drops mode 0: moduli ladder starts at Gamma(2, 1)
    m, reps = 6, 1500
    smallest = np.empty(reps)
    for i in range(reps):
        smallest[i] = truncated_palm_sample(m, seed=70, stream_id=i).moduli()[0]
    ladder = np.empty(reps)
    for i in range(reps):
        ladder[i] = np.sort(kostlan_radii(m - 1, seed=71, stream_id=i,
                                          start_index=2))[0]
    p = stats.ks_2samp(smallest**2, ladder**2).pvalue
    assert p > 1e-4


def test_thin_and_rescale_identity_and_counts():
    parent = truncated_ginibre_sample(20, seed=8)
    whole = thin_and_rescale(parent, 1.0, seed=9)
    assert np.array_equal(whole.points, parent.points)
    half = thin_and_rescale(parent, 0.5, seed=9)
    # every kept point is a sqrt(alpha)-scaled parent point
    scaled = parent.points * math.sqrt(0.5)
    for z in half.points:
        assert np.min(np.abs(scaled - z)) < 1e-15
    assert half.meta["kept"] == half.count
    assert half.model == "thinned(projection_sampler)"
    with pytest.raises(ValueError):
        thin_and_rescale(parent, 0.0, seed=1)
    with pytest.raises(ValueError):
        thin_and_rescale(parent, 1.5, seed=1)


def test_thinning_keeps_binomial_counts():
    parent = truncated_ginibre_sample(20, seed=8)
    reps, alpha = 400, 0.5
    kept = [thin_and_rescale(parent, alpha, seed=15, stream_id=i).count
            for i in range(reps)]
    total = float(np.sum(kept))
    target = reps * 20 * alpha
    sigma = math.sqrt(reps * 20 * alpha * (1 - alpha))
    assert abs(total - target) < 4.5 * sigma


def test_poisson_sample_law():
    radius, intensity = 4.0, 1.0 / math.pi
    lam = intensity * math.pi * radius**2
    reps = 500
    counts = np.array([poisson_sample(intensity, radius, seed=16, stream_id=i).count
                       for i in range(reps)])
    assert abs(counts.sum() - reps * lam) < 4.5 * math.sqrt(reps * lam)
    s = poisson_sample(intensity, radius, seed=16, stream_id=0)
    assert np.all(np.abs(s.points) <= radius)
    # uniform radial law: squared moduli uniform on [0, radius^2]
    sq = np.concatenate([
        np.abs(poisson_sample(intensity, radius, seed=17, stream_id=i).points) ** 2
        for i in range(200)
    ])
    p = stats.kstest(sq / radius**2, "uniform").pvalue
    assert p > 1e-4
    with pytest.raises(ValueError):
        poisson_sample(0.0, 1.0, seed=1)
    with pytest.raises(ValueError):
        poisson_sample(1.0, -2.0, seed=1)
