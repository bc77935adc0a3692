import itertools
import math
import random

import numpy as np
import pytest
import scipy.stats
import sklearn.metrics

from glassboard.analytics.stats import StatResult, cohen_kappa, mann_whitney_u, t_test
from glassboard.errors import ZeroVariance


# -- independent Mann-Whitney oracle ------------------------------------------------
#
# Enumerates every assignment of the pooled sorted values to group a by position
# (tie-free), computing U by pairwise comparison counts. Completely separate
# route from the implementation's rank-sum DP.

def mw_exact_oracle(a, b):
    n1, n2 = len(a), len(b)
    pooled = sorted(a + b)
    assert len(set(pooled)) == len(pooled), "oracle assumes tie-free data"

    def u_of(group_a, group_b):
        return sum(1 for x in group_a for y in group_b if x > y)

    u_obs = u_of(a, b)
    dist = {}
    for positions in itertools.combinations(range(n1 + n2), n1):
        ga = [pooled[i] for i in positions]
        gb = [pooled[i] for i in range(n1 + n2) if i not in positions]
        u = u_of(ga, gb)
        dist[u] = dist.get(u, 0) + 1
    total = sum(dist.values())
    le = sum(c for u, c in dist.items() if u <= u_obs)
    ge = sum(c for u, c in dist.items() if u >= u_obs)
    return u_obs, min(1.0, 2.0 * min(le, ge) / total)


def test_mw_complete_separation_small():
    # oracle first: all 6 assignments of {1,2,3,4} into two pairs
    u_oracle, p_oracle = mw_exact_oracle([1, 2], [3, 4])
    assert u_oracle == 0
    assert p_oracle == pytest.approx(2 / 6)
    res = mann_whitney_u([1, 2], [3, 4])
    assert res.statistic == 0
    assert res.p_value == pytest.approx(p_oracle, abs=1e-12)
    assert res.effect_size == pytest.approx(1.0)


def test_mw_identical_multisets():
    res = mann_whitney_u([3, 1, 2], [3, 1, 2])
    assert res.statistic == pytest.approx(9 / 2)
    assert res.effect_size == pytest.approx(0.0)


def test_mw_three_vs_three_separated():
    u_oracle, p_oracle = mw_exact_oracle([1, 2, 3], [4, 5, 6])
    assert p_oracle == pytest.approx(0.1)
    res = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert res.statistic == 0
    assert res.p_value == pytest.approx(0.1, abs=1e-12)


def test_mw_exact_matches_oracle_exhaustively_small():
    # every tie-free rank pattern with n1, n2 <= 4
    for n1 in range(1, 5):
        for n2 in range(1, 5):
            n = n1 + n2
            for positions in itertools.combinations(range(n), n1):
                a = [float(i + 1) for i in positions]
                b = [float(i + 1) for i in range(n) if i not in positions]
                u_oracle, p_oracle = mw_exact_oracle(a, b)
                res = mann_whitney_u(a, b)
                assert res.statistic == pytest.approx(u_oracle, abs=1e-12)
                assert res.p_value == pytest.approx(p_oracle, abs=1e-12)


def test_mw_exact_matches_oracle_random():
    rng = random.Random(2024)
    for _ in range(200):
        n1 = rng.randint(1, 8)
        n2 = rng.randint(1, min(8, 12 - n1))
        vals = rng.sample(range(1000), n1 + n2)
        a = [float(v) for v in vals[:n1]]
        b = [float(v) for v in vals[n1:]]
        u_oracle, p_oracle = mw_exact_oracle(a, b)
        res = mann_whitney_u(a, b)
        assert res.statistic == pytest.approx(u_oracle, abs=1e-12)
        assert res.p_value == pytest.approx(p_oracle, abs=1e-12)
        assert res.details["exact"]


def test_mw_u_complement_identity():
    rng = random.Random(7)
    for _ in range(500):
        n1 = rng.randint(1, 20)
        n2 = rng.randint(1, 20)
        a = [rng.randint(0, 8) * 0.5 for _ in range(n1)]  # ties likely
        b = [rng.randint(0, 8) * 0.5 for _ in range(n2)]
        ua = mann_whitney_u(a, b).statistic
        ub = mann_whitney_u(b, a).statistic
        assert ua + ub == n1 * n2


def test_mw_rank_biserial_bounds_and_separation():
    rng = random.Random(12)
    for _ in range(300):
        n1 = rng.randint(2, 12)
        n2 = rng.randint(2, 12)
        a = [rng.gauss(0, 1) for _ in range(n1)]
        b = [rng.gauss(0.5, 1) for _ in range(n2)]
        r = mann_whitney_u(a, b).effect_size
        assert -1.0 <= r <= 1.0
        separated = max(a) < min(b) or max(b) < min(a)
        assert (abs(r) == pytest.approx(1.0)) == separated


def test_mw_degenerate_all_identical():
    res = mann_whitney_u([2.0, 2.0, 2.0], [2.0, 2.0])
    assert res.p_value == 1.0
    assert res.effect_size == 0.0
    assert res.details["degenerate"]


def test_mw_normal_approximation_matches_scipy():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n1 = int(rng.integers(8, 30))
        n2 = int(rng.integers(8, 30))
        a = rng.integers(0, 10, n1).astype(float)
        b = rng.integers(0, 12, n2).astype(float)
        if np.all(a == a[0]) and np.all(b == b[0]) and a[0] == b[0]:
            continue
        res = mann_whitney_u(list(a), list(b))
        ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided",
                                       method="asymptotic", use_continuity=True)
        assert res.statistic == pytest.approx(ref.statistic, abs=1e-9)
        if not res.details["exact"]:
            assert res.p_value == pytest.approx(ref.pvalue, abs=1e-9)


def test_mw_exact_vs_approx_agreement():
    # tie-free small samples: enumeration and normal approximation stay close
    rng = random.Random(99)
    worst = 0.0
    for _ in range(300):
        n1 = rng.randint(3, 9)
        n2 = rng.randint(3, min(9, 12 - n1))
        if n2 < 3:
            continue
        vals = rng.sample(range(10_000), n1 + n2)
        a = [float(v) for v in vals[:n1]]
        b = [float(v) for v in vals[n1:]]
        exact = mann_whitney_u(a, b).p_value
        approx = scipy.stats.mannwhitneyu(a, b, alternative="two-sided",
                                          method="asymptotic", use_continuity=True).pvalue
        worst = max(worst, abs(exact - approx))
    assert worst <= 0.05


# -- t-test -------------------------------------------------------------------------

def test_t_identical_groups():
    res = t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert res.statistic == 0.0
    assert res.p_value == pytest.approx(1.0)


def test_t_pooled_hand_computation():
    # hand derivation with sample variances (ddof=1):
    #   means 0.5 and 1.5; both variances 1/3; pooled s^2 = 1/3
    #   se = sqrt(s^2 (1/4 + 1/4)) = sqrt(1/6); t = -1/sqrt(1/6) = -sqrt(6)
    a, b = [0.0, 0.0, 1.0, 1.0], [1.0, 1.0, 2.0, 2.0]
    res = t_test(a, b, variant="pooled")
    assert res.statistic == pytest.approx(-math.sqrt(6.0), abs=1e-12)
    assert res.details["df"] == 6
    ref = scipy.stats.ttest_ind(a, b, equal_var=True)
    assert res.statistic == pytest.approx(ref.statistic, abs=1e-12)
    assert res.p_value == pytest.approx(ref.pvalue, abs=1e-10)


def test_t_welch_matches_scipy():
    rng = np.random.default_rng(17)
    for _ in range(200):
        n1 = int(rng.integers(2, 40))
        n2 = int(rng.integers(2, 40))
        a = rng.normal(0, 1, n1)
        b = rng.normal(0.3, 2, n2)
        res = t_test(list(a), list(b), variant="welch")
        ref = scipy.stats.ttest_ind(a, b, equal_var=False)
        assert res.statistic == pytest.approx(ref.statistic, rel=1e-10)
        assert res.p_value == pytest.approx(ref.pvalue, rel=1e-8, abs=1e-12)


def test_t_translation_invariance():
    rng = random.Random(3)
    a = [rng.gauss(0, 1) for _ in range(10)]
    b = [rng.gauss(1, 1) for _ in range(12)]
    t0 = t_test(a, b).statistic
    c = 17.25
    t1 = t_test([x + c for x in a], [x + c for x in b]).statistic
    assert t1 == pytest.approx(t0, rel=1e-9)


def test_t_cohens_d_hand_check():
    a, b = [0.0, 0.0, 1.0, 1.0], [1.0, 1.0, 2.0, 2.0]
    res = t_test(a, b, variant="pooled")
    # d = (0.5 - 1.5) / sqrt(1/3) = -sqrt(3)
    assert res.effect_size == pytest.approx(-math.sqrt(3.0), abs=1e-12)


def test_t_zero_variance_raises():
    with pytest.raises(ZeroVariance):
        t_test([1.0, 1.0, 1.0], [2.0, 2.0])


def test_t_identical_constants_report_null():
    res = t_test([1.0, 1.0], [1.0, 1.0])
    assert res.p_value == 1.0 and res.statistic == 0.0


# -- kappa --------------------------------------------------------------------------

def kappa_closed_form(matrix):
    m = np.asarray(matrix, dtype=float)
    total = m.sum()
    p_o = np.trace(m) / total
    p_e = float(np.dot(m.sum(axis=1), m.sum(axis=0))) / total**2
    return (p_o - p_e) / (1.0 - p_e)


def matrix_to_labels(matrix):
    r1, r2 = [], []
    for i, row in enumerate(matrix):
        for j, c in enumerate(row):
            r1.extend([i] * c)
            r2.extend([j] * c)
    return r1, r2


def test_kappa_diagonal_exactly_one():
    assert cohen_kappa([[7, 0], [0, 13]]).statistic == 1.0
    assert cohen_kappa([[5, 0, 0], [0, 1, 0], [0, 0, 9]]).statistic == 1.0


def test_kappa_hand_arithmetic():
    # p_o = 35/50 = 0.7; p_e = (25*30 + 25*20)/2500 = 0.5; kappa = 0.2/0.5
    res = cohen_kappa([[20, 5], [10, 15]])
    assert res.statistic == pytest.approx(0.4, abs=1e-15)
    assert res.summary_a["p_o"] == pytest.approx(0.7)
    assert res.summary_b["p_e"] == pytest.approx(0.5)


def test_kappa_independent_raters_zero():
    rows = [2, 3, 5]
    cols = [4, 1, 5]
    matrix = [[r * c for c in cols] for r in rows]
    assert abs(cohen_kappa(matrix).statistic) <= 1e-12


def test_kappa_matches_closed_form_and_sklearn():
    rng = random.Random(41)
    for _ in range(300):
        k = rng.randint(2, 6)
        matrix = [[rng.randint(0, 9) for _ in range(k)] for _ in range(k)]
        if sum(map(sum, matrix)) == 0:
            matrix[0][0] = 1
        m = np.asarray(matrix, dtype=float)
        p_e = float(np.dot(m.sum(axis=1), m.sum(axis=0))) / m.sum() ** 2
        if p_e == 1.0:
            continue
        res = cohen_kappa(matrix)
        assert res.statistic == pytest.approx(kappa_closed_form(matrix), abs=1e-12)
        r1, r2 = matrix_to_labels(matrix)
        assert res.statistic == pytest.approx(
            sklearn.metrics.cohen_kappa_score(r1, r2), abs=1e-10)


def test_kappa_single_shared_category():
    res = cohen_kappa([[4]])
    assert res.statistic == 1.0


def test_stat_result_rejects_bad_p():
    with pytest.raises(ValueError):
        StatResult("t_test", 0.0, 1.5, None, 2, 2)
