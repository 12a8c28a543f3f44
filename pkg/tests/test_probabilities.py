"""Oracle tests for the incomplete-gamma ladder and disk-event closed forms.

scipy.special serves as the independent oracle for the self-contained
log-space implementation; production code never imports it for these values.
"""
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sp

from ginibre_lab import probabilities as pr

# frozen cross-validated constants (quadrature + independent simulation)
EV_GERM_CELL = 2.160893155168226
AREA_GAP = 0.980699498421568
CAPTURE_NUMERATOR = 0.312166345723070
CAPTURE_DENOMINATOR = 0.907070203438695

_N_GRID = [0, 1, 2, 5, 13, 50, 211, 1000]
_T_GRID = [1e-8, 0.31, 1.0, 3.7, 12.0, 61.5, 153.0, 900.0]


def test_regularized_pair_against_scipy():
    ns = np.array(_N_GRID)
    for t in _T_GRID:
        low = pr.lower_regularized(ns, t)
        up = pr.upper_regularized(ns, t)
        ref_low = sp.gammainc(ns + 1.0, t)
        ref_up = sp.gammaincc(ns + 1.0, t)
        # 2e-12 covers the slow series regime t ~ n+1 at t = 900, where both
        # implementations sit a few ulp apart
        keep = ref_low > 1e-290
        assert np.allclose(low[keep], ref_low[keep], rtol=2e-12, atol=0.0)
        keep = ref_up > 1e-290
        assert np.allclose(up[keep], ref_up[keep], rtol=2e-12, atol=0.0)


def test_log_pair_deep_tails_finite_and_ordered():
    # far below/above the Poisson bulk both logs stay finite and consistent
    for n, t in [(1000, 1.0), (0, 700.0), (400, 40.0), (40, 400.0)]:
        log_low, log_up = pr.log_incgamma_pair(np.array([n]), t)
        assert np.isfinite(log_low).all() and np.isfinite(log_up).all()
        assert log_low[0] <= 1e-15 and log_up[0] <= 1e-15
        total = np.exp(log_low[0]) + np.exp(log_up[0])
        assert math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-13)


def test_log_lower_deep_tail_against_scipy_log():
    # log comparison where the linear value underflows float64
    n, t = 800, 3.0
    log_low = float(pr.log_lower_regularized(np.array([n]), t)[0])
    # Poisson upper tail at 800 with mean 3: leading term dominates
    lead = pr.poisson_log_pmf(np.array([n + 1]), t)[0]
    assert log_low < -3000.0
    assert abs(log_low - lead) < 0.01


def test_pair_at_zero():
    log_low, log_up = pr.log_incgamma_pair([0, 3], 0.0)
    assert np.all(np.isneginf(log_low))
    assert np.all(log_up == 0.0)


def test_pair_rejects_bad_args():
    with pytest.raises(ValueError):
        pr.log_incgamma_pair([-1], 1.0)
    with pytest.raises(ValueError):
        pr.log_incgamma_pair([0], -1.0)


@settings(max_examples=150, deadline=None)
@given(
    st.integers(min_value=0, max_value=300),
    st.floats(min_value=1e-6, max_value=100.0),
    st.floats(min_value=1e-6, max_value=100.0),
)
def test_lower_tail_monotonicity(n, t1, t2):
    lo, hi = sorted((t1, t2))
    ns = np.array([n, n + 1])
    a = pr.lower_regularized(ns, lo)
    b = pr.lower_regularized(ns, hi)
    assert 0.0 <= a[0] <= 1.0 and 0.0 <= b[0] <= 1.0
    assert b[0] >= a[0] - 1e-14          # increasing in t
    assert a[1] <= a[0] + 1e-14          # decreasing in mode index
    total = a[0] + float(pr.upper_regularized(np.array([n]), lo)[0])
    assert math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-12)


def test_poisson_log_pmf_against_scipy():
    from scipy.stats import poisson

    ns = np.arange(0, 40)
    for t in (0.5, 3.0, 17.0):
        mine = pr.poisson_log_pmf(ns, t)
        ref = poisson.logpmf(ns, t)
        assert np.allclose(mine, ref, rtol=1e-12, atol=1e-12)
    assert pr.poisson_log_pmf(np.array([0]), 0.0)[0] == 0.0
    assert np.isneginf(pr.poisson_log_pmf(np.array([2]), 0.0)[0])


def test_log_lower_unnormalized_against_scipy():
    ns = np.array([0, 3, 20, 90])
    for t in (0.2, 5.0, 50.0):
        mine = pr.log_lower_unnormalized(ns, t)
        ref = sp.gammaln(ns + 1.0) + np.log(sp.gammainc(ns + 1.0, t))
        assert np.allclose(mine, ref, rtol=1e-12, atol=1e-12)


def test_mode_cutoff_certifies_tail():
    for t in (0.5, 4.0, 25.0, 400.0):
        tol = 1e-12
        n_top = pr.mode_cutoff(t, tol=tol)
        ns = np.arange(n_top + 1, n_top + int(10 * t) + 200)
        dropped = float(np.sum(sp.gammainc(ns + 1.0, t)))
        assert dropped < tol * max(t, 1.0)
    assert pr.mode_cutoff(0.0) == 0
    assert pr.mode_cutoff(-1.0) == 0


def test_mode_cutoff_scales_mildly():
    # cutoff should stay O(t + sqrt(t)); guards the mode-basis sizes downstream
    assert pr.mode_cutoff(1.0) < 80
    assert pr.mode_cutoff(100.0) < 320
    assert pr.mode_cutoff(900.0) < 1400


def test_incgamma_table_build_and_check():
    table = pr.IncGammaTable.build(40, np.linspace(0.05, 30.0, 25))
    table.check(atol=1e-12)
    ref = sp.gammainc(np.arange(41)[:, None] + 1.0, table.t_grid[None, :])
    assert np.allclose(np.exp(table.log_low), ref, rtol=1e-11, atol=1e-13)


def test_incgamma_table_check_catches_corruption():
    table = pr.IncGammaTable.build(10, np.linspace(0.5, 5.0, 8))
    table.log_low[3, 4] = math.log(2.0)  # breaks complement identity
    with pytest.raises(pr.IncGammaError):
        table.check()
    table = pr.IncGammaTable.build(10, np.linspace(0.5, 5.0, 8))
    table.log_low[:, [2, 3]] = table.log_low[:, [3, 2]]  # breaks t monotonicity
    with pytest.raises(pr.IncGammaError):
        table.check()


def test_log_void_product_against_scipy():
    for t in (0.25, 1.0, 4.0, 16.0):
        n_top = pr.mode_cutoff(t) + 50
        ref = float(np.sum(np.log(sp.gammaincc(np.arange(n_top + 1) + 1.0, t))))
        mine = pr.log_void_product(t)
        assert math.isclose(mine, ref, rel_tol=1e-11, abs_tol=1e-13)
        ref_palm = ref - math.log(sp.gammaincc(1.0, t))
        assert math.isclose(pr.log_void_product(t, n_min=1), ref_palm,
                            rel_tol=1e-11, abs_tol=1e-13)


def test_void_prob_disk_basics():
    assert pr.void_prob_disk(0.0) == 1.0
    assert pr.void_prob_disk(0.0, family="palm") == 1.0
    radii = np.linspace(0.1, 3.0, 12)
    vals = [pr.void_prob_disk(r) for r in radii]
    assert all(0.0 < v <= 1.0 for v in vals)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    # removing the mode-0 constraint can only raise the void probability
    for r in (0.5, 1.0, 2.0):
        assert pr.void_prob_disk(r, family="palm") >= pr.void_prob_disk(r)
    with pytest.raises(ValueError):
        pr.void_prob_disk(1.0, family="uniform")
    with pytest.raises(ValueError):
        pr.void_prob_disk(-0.5)


def test_resolvent_origin_disk_against_scipy_series():
    for r in (0.3, 1.0, 2.0, 3.5):
        t = r * r
        ns = np.arange(pr.mode_cutoff(t) + 60)
        terms = np.exp(ns * math.log(t) - t - sp.gammaln(ns + 1.0))
        ref = float(np.sum(terms / sp.gammaincc(ns + 1.0, t))) / math.pi
        assert math.isclose(pr.resolvent_origin_disk(r), ref, rel_tol=1e-11)
    # r -> 0 recovers the intensity 1/pi
    assert math.isclose(pr.resolvent_origin_disk(1e-8), 1.0 / math.pi, rel_tol=1e-9)


def test_resolvent_origin_disk_increasing():
    vals = [pr.resolvent_origin_disk(r) for r in np.linspace(0.01, 4.0, 25)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_area_gap_density_shape():
    assert pr.area_gap_density_radial(0.0) == 0.0
    ts = np.linspace(0.05, 20.0, 60)
    vals = np.array([pr.area_gap_density_radial(t) for t in ts])
    assert np.all(vals >= 0.0)
    assert vals[-1] < 1e-12
    assert math.isclose(
        pr.area_gap_density(1.3), pr.area_gap_density_radial(1.69), rel_tol=1e-12
    )


def test_ev_typical_cell_is_pi():
    q = pr.ev_typical_cell()
    assert abs(q.value - math.pi) < 1e-9
    assert q.quad_error < 1e-8
    assert float(q) == q.value


def test_ev_inserted_germ_cell_frozen_value():
    q = pr.ev_inserted_germ_cell()
    assert abs(q.value - EV_GERM_CELL) < 1e-9
    assert q.quad_error < 1e-8
    assert q.value < 3.0 * math.pi / 4.0 - 0.19  # strict envelope slack


def test_area_gap_two_path_identity():
    gap = pr.area_gap_radial()
    assert abs(gap.value - AREA_GAP) < 1e-9
    assert abs(gap.value - (math.pi - pr.ev_inserted_germ_cell().value)) < 1e-9


def test_mehta_envelope_bounds_void_product():
    ts = np.linspace(0.01, 10.0, 60)
    for t in ts:
        prod = math.exp(pr.log_void_product(float(t)))
        assert prod <= pr.mehta_envelope(float(t)) * (1.0 + 1e-12)


def test_neighbor_capture_chain():
    cb = pr.neighbor_capture_bound()
    assert abs(cb.numerator - CAPTURE_NUMERATOR) < 1e-9
    assert abs(cb.denominator - CAPTURE_DENOMINATOR) < 1e-7
    assert cb.denominator <= 1.0
    assert cb.value >= cb.simple_lower >= cb.floor
    assert math.isclose(cb.simple_lower, cb.numerator**2, rel_tol=1e-12)
    assert cb.floor == 1.0 / 16.0


def test_extra_point_disk_closed_form():
    for r in (0.0, 0.5, 1.0, 2.0):
        assert math.isclose(
            pr.extra_point_prob_disk(r), 1.0 - math.exp(-r * r), rel_tol=1e-14
        )
    assert math.isclose(
        pr.extra_point_prob_annulus(0.5, 2.0),
        pr.extra_point_prob_disk(2.0) - pr.extra_point_prob_disk(0.5),
        rel_tol=1e-12,
    )
    with pytest.raises(ValueError):
        pr.extra_point_prob_annulus(2.0, 0.5)
    with pytest.raises(ValueError):
        pr.extra_point_prob_disk(-1.0)


def test_count_pmf_from_bernoulli_brute_force():
    rng = np.random.default_rng(7)
    alphas = rng.uniform(0.05, 0.95, size=6)
    pmf = pr.count_pmf_from_bernoulli(alphas)
    brute = np.zeros(7)
    for bits in itertools.product([0, 1], repeat=6):
        p = math.prod(a if b else 1.0 - a for a, b in zip(alphas, bits))
        brute[sum(bits)] += p
    assert np.allclose(pmf, brute, rtol=0.0, atol=1e-14)
    assert math.isclose(float(pmf.sum()), 1.0, abs_tol=1e-12)


def test_extra_point_via_counts_matches_closed_form():
    for r in (0.5, 1.0, 2.0):
        value, bound = pr.extra_point_prob_disk_via_counts(r)
        assert abs(value - pr.extra_point_prob_disk(r)) <= bound
        assert bound < 1e-9
    assert pr.extra_point_prob_disk_via_counts(0.0) == (0.0, 0.0)


def test_extra_point_given_void_consistency():
    assert pr.extra_point_prob_given_void(0.0) == 0.0
    rs = np.linspace(0.05, 3.0, 20)
    vals = [pr.extra_point_prob_given_void(r) for r in rs]
    assert all(0.0 <= v < 1.0 for v in vals)
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    r = 1.3
    expect = 1.0 - 1.0 / (math.pi * pr.resolvent_origin_disk(r))
    assert math.isclose(pr.extra_point_prob_given_void(r), expect, rel_tol=1e-12)


def _brute_annulus_law(p_table, counts):
    """Exact joint annulus-count law by enumerating per-mode outcomes.

    p_table[i] lists mode i's probabilities for each annulus; the leftover
    mass is the outside outcome.
    """
    k = len(counts)
    total = 0.0
    outcomes = list(range(k + 1))  # annulus index, or k = outside
    for combo in itertools.product(outcomes, repeat=len(p_table)):
        prob = 1.0
        hits = [0] * k
        for mode, out in enumerate(combo):
            probs = p_table[mode]
            if out < k:
                prob *= probs[out]
                hits[out] += 1
            else:
                prob *= 1.0 - sum(probs)
        if hits == list(counts):
            total += prob
    return total


def test_radial_counting_law_brute_force_truncated():
    m = 5
    radii = [0.8, 1.6]
    t_edges = [r * r for r in radii]
    for family, modes in [(("truncated", m), range(0, m)),
                          (("truncated_palm", m), range(1, m))]:
        p_table = []
        for n in modes:
            lows = [float(sp.gammainc(n + 1.0, t)) for t in t_edges]
            p_table.append([lows[0], lows[1] - lows[0]])
        for counts in itertools.product(range(3), repeat=2):
            mine = pr.radial_counting_law(radii, counts, family=family)
            ref = _brute_annulus_law(p_table, counts)
            assert abs(mine - ref) < 1e-12


def test_radial_counting_law_total_mass():
    m = 4
    total = 0.0
    for counts in itertools.product(range(m + 1), repeat=2):
        total += pr.radial_counting_law([0.7, 1.9], counts, family=("truncated", m))
    assert math.isclose(total, 1.0, abs_tol=1e-10)


def test_radial_counting_law_matches_void_products():
    for r in (0.6, 1.2, 2.0):
        p0 = pr.radial_counting_law([r], [0], family="ginibre")
        assert math.isclose(p0, pr.void_prob_disk(r), rel_tol=1e-10)
        p0_palm = pr.radial_counting_law([r], [0], family="palm")
        assert math.isclose(p0_palm, pr.void_prob_disk(r, family="palm"), rel_tol=1e-10)


def test_radial_counting_law_rejects_bad_input():
    with pytest.raises(ValueError):
        pr.radial_counting_law([1.0, 0.5], [0, 0])
    with pytest.raises(ValueError):
        pr.radial_counting_law([1.0], [0, 1])
    with pytest.raises(ValueError):
        pr.radial_counting_law([1.0], [-1])
    with pytest.raises(ValueError):
        pr.radial_counting_law([1.0], [0], family="hexagonal")
