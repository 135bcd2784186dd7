import math
from math import factorial, lgamma

import numpy as np
import pytest
from scipy.special import logsumexp

from dihplab.audit import checks, sums
from dihplab.audit.sums import AuditParams, bound_branch_ratio, bound_fn, eval_S, eval_sum, eval_T, rhs_log
from dihplab.bitcube import CubeFunction, indicator_spectrum
from dihplab.dihp import ContradictionError, Forest
from dihplab.matchings import Matching, sample_matching
from oracles import direct_tilde


def lb(a: int, b: int) -> float:
    if b < 0 or b > a:
        return -math.inf
    if min(b, a - b) <= 2000:
        return math.log(math.comb(a, b))  # exact integer, one rounding
    return lgamma(a + 1) - lgamma(b + 1) - lgamma(a - b + 1)


def log_bound_ref(C, s, n, k):
    if k == 0:
        return 0.0
    if k <= s:
        return k * math.log(C * math.sqrt(s * n) / k)
    return 0.5 * k * math.log(C * C * n / k)


def direct_sum(family: str, p: AuditParams, lvl: int) -> float:
    """Double loop over (k, i) straight from the definitions."""
    n, C, s = p.n, p.C, p.s_star
    A = math.floor(p.alpha * n)
    k_lo, k_hi = {
        "s0": (0, 0), "s1": (1, 100 * s), "s2": (100 * s + 1, n // C**2), "s3": (n // C**2, n // 100),
        "t1": (1, n // C**2), "t2": (n // C**2 + 1, n // 100),
    }[family]
    terms = []
    # i >= k - lvl and i <= A leave nothing once k > A + lvl
    for k in range(k_lo, min(k_hi, A + lvl) + 1):
        if family in ("s0", "s1", "s2"):
            outer = log_bound_ref(C, s, n, k)
        elif family == "t1":
            outer = s * math.log(2) + 0.5 * k * math.log(C * C * n / k)
        else:
            outer = 0.5 * (s * math.log(2) + lb(n, 2 * k))
        total = lb(n, 2 * k)
        for i in range(max(0, k - lvl), min(k, A) + 1):
            j = lvl - k + i
            q = lb(A, i) + lb(n - 2 * A, 2 * (k - i)) - total
            if family[0] == "s":
                inner = j * math.log(15 * math.sqrt(s * A) / j) if j else 0.0
            else:
                inner = 0.5 * j * math.log(3 * A / j) if j else 0.0
            terms.append(outer + q + inner)
    return float(logsumexp(terms)) if terms else -math.inf


SMALL = AuditParams(10**7, 10, 3, 1e-4)  # no preconditions, every sum small


# ---- bound function ----------------------------------------------------------


def test_bound_fn_examples():
    assert bound_fn(2, 4, 100, 0) == 0.0
    assert math.exp(bound_fn(2, 4, 100, 1)) == pytest.approx(40.0, rel=1e-12)


@pytest.mark.parametrize("C,s,n", [(2.0, 4, 100.0), (1e7, 10, 1e40), (3.0, 1, 50.0), (1e8, 100, 1e45)])
def test_branch_continuity(C, s, n):
    direct, via_fn = bound_branch_ratio(C, s, n)
    assert abs(direct) < 1e-9 * max(1.0, s * math.log(n))
    assert abs(via_fn) < 1e-9 * max(1.0, s * math.log(n))


def test_rhs_constants():
    p = AuditParams(10**40, 10**7, 10, 1e-11)
    for lvl in (1, 5, 10):
        assert rhs_log("s0", p, lvl) == pytest.approx(log_bound_ref(15, 10, 1e40, lvl), rel=1e-12)
        assert rhs_log("s1", p, lvl) == pytest.approx(log_bound_ref(1e15, 10, 1e40, lvl), rel=1e-12)
        assert rhs_log("s2", p, lvl) == pytest.approx(log_bound_ref(1e14, 10, 1e40, lvl), rel=1e-12)
        assert rhs_log("s3", p, lvl) == 0.0
    assert rhs_log("t2", p, 20) == pytest.approx(10 * math.log(1e30 * 1e40 / 20), rel=1e-12)


# ---- sums against the direct loop -----------------------------------------------


@pytest.mark.parametrize("family", ["s0", "s1", "s2", "s3", "t1"])
@pytest.mark.parametrize("lvl", [1, 2, 3])
def test_sums_match_direct_loop(family, lvl):
    row = eval_sum(family, SMALL, lvl)
    assert row.exact
    # float log-gamma near n = 1e7 is good to roughly 1e-16 * n log n
    assert row.lhs_log == pytest.approx(direct_sum(family, SMALL, lvl), rel=1e-9, abs=1e-7)


def test_t2_direct_loop():
    p = AuditParams(10**5, 10, 3, 1e-3)
    for lvl in (3, 5, 10):
        assert eval_sum("t2", p, lvl).lhs_log == pytest.approx(direct_sum("t2", p, lvl), rel=1e-9, abs=1e-7)


@pytest.mark.parametrize("family", ["s1", "s2", "t1", "t2"])
def test_bracket_contains_exact(family):
    p = AuditParams(10**6, 20, 3, 5e-3)  # every range nonempty, alpha n above n / C^2
    lvl = 8 if family[0] == "t" else 3
    exact = eval_sum(family, p, lvl)
    forced = eval_sum(family, p, lvl, exact_terms=0)
    assert exact.exact and not forced.exact and exact.terms > 0
    assert forced.lhs_log_lower <= exact.lhs_log + 1e-9
    assert exact.lhs_log <= forced.lhs_log + 1e-9
    assert forced.terms == exact.terms


def test_s0_single_term():
    p = sums.STANDARD_TUPLES[0]
    for lvl in (1, 3, 10):
        row = eval_sum("s0", p, lvl)
        expect = lvl * math.log(15 * math.sqrt(p.s_star * p.alpha_n) / lvl)
        assert row.terms == 1 and row.lhs_log == pytest.approx(expect, rel=1e-12)
        assert row.passed


def test_preconditions_of_standard_tuples():
    assert len(sums.STANDARD_TUPLES) >= 5
    for p in sums.STANDARD_TUPLES:
        assert all(p.preconditions().values()), p


def test_standard_tuple_passes():
    p = sums.STANDARD_TUPLES[1]
    for j in range(4):
        rep = eval_S(j, p)
        assert rep.asserted and rep.passed
    for j in (1, 2):
        rep = eval_T(j, p)
        assert rep.asserted and rep.passed
        assert len(rep.rows) >= 10


def test_small_example_tuple():
    # the desk example n = 1e10 misses the size preconditions: alpha n rounds to 0
    p = AuditParams(10**10, 10**7, 10, 1e-11)
    pre = p.preconditions()
    assert pre["P1"] and pre["P2"] and not pre["P3"] and not pre["P4"]
    assert p.alpha_n == 0
    for j in (1, 2):
        rep = eval_S(j, p, [1, 2, 5, 10])
        assert rep.passed and not rep.asserted
    # reported, never asserted
    assert not eval_S(3, p, [1]).asserted
    with pytest.raises(ValueError):
        eval_T(1, p, [10])


def test_level_range_errors():
    p = sums.STANDARD_TUPLES[0]
    with pytest.raises(ValueError):
        eval_S(1, p, [0])
    with pytest.raises(ValueError):
        eval_S(4, p)
    with pytest.raises(ValueError):
        eval_T(1, p, [p.s_star - 1])


def test_integer_cut_points_are_exact():
    p = AuditParams(10**60, 10**10, 50, 5e-20)
    assert p.k_low_cut() == 10**40 and p.k_top() == 10**58 and p.t_level_max() == 5 * 10**39
    assert p.alpha_n == 5 * 10**40


# ---- single message ------------------------------------------------------------


def test_full_reduced_set_gives_full_cube():
    M = sample_matching(10, 3, np.random.default_rng(0))
    B = checks.preimage_set(M, np.ones(8))
    assert B.values.all()
    assert checks.structure_mismatch(M, np.ones(8)) == (True, 1)


def test_single_message_reports():
    rep = checks.check_single_message(12, 3, 3, 100, np.random.default_rng(1))
    assert rep.passed and rep.bounded_failures == 0 and rep.structure_failures == 0
    assert rep.max_odd_mass == 0.0
    assert all(r.support <= 2**3 for r in rep.rows)


def test_lift_support_via_restriction():
    g = np.random.default_rng(2)
    from dihplab.matchings import match_restriction

    for _ in range(20):
        M = sample_matching(10, 3, g)
        red = checks.random_reduced_set(3, 2, g)
        spec = indicator_spectrum(checks.preimage_set(M, red))
        for v in spec.support():
            assert match_restriction(M, int(v)) is not None


def test_random_reduced_set_density():
    g = np.random.default_rng(3)
    for _ in range(200):
        s = int(g.integers(1, 5))
        assert checks.random_reduced_set(6, s, g).sum() >= 2**6 * 2.0**-s


# ---- closeness ------------------------------------------------------------------


def test_closeness_examples():
    n = 8
    full = CubeFunction(n, np.ones(1 << n))
    g = np.random.default_rng(4)
    for _ in range(10):
        assert checks.label_deviation(full, sample_matching(n, 3, g)) == 0.0
    x1_zero = CubeFunction(n, np.array([0.0 if x & 1 else 1.0 for x in range(1 << n)]))
    avoid = Matching(n, ((1, 2), (3, 4), (5, 6)))
    assert checks.label_deviation(x1_zero, avoid) == pytest.approx(0.0, abs=1e-12)
    pair_even = CubeFunction(n, np.array([1.0 if (x & 1) == (x >> 1 & 1) else 0.0 for x in range(1 << n)]))
    assert checks.label_deviation(pair_even, Matching(n, ((0, 1), (2, 3)))) == pytest.approx(1.0)


def test_closeness_is_diagnostic():
    rep = checks.check_pdf_closeness(10, 2, 2, 3.0, 0.5, 30, np.random.default_rng(5))
    assert not rep.preconditions_met
    assert 0.0 <= rep.fraction_within <= 1.0


# ---- forest spectrum ------------------------------------------------------------


def test_single_edge_spectrum():
    for w in (0, 1):
        spec = checks.component_spectrum([(0, 1, w)], n=2)
        assert spec.coeffs.tolist() == [1.0, 0.0, 0.0, (-1.0) ** w]


def test_path_spectrum():
    for w1 in (0, 1):
        for w2 in (0, 1):
            spec = checks.component_spectrum([(0, 1, w1), (1, 2, w2)], n=3)
            assert spec.coeffs[0b101] == (-1.0) ** (w1 + w2)
            # odd intersection with the component
            assert spec.coeffs[0b001] == 0.0 and spec.coeffs[0b111] == 0.0


def test_forest_spectrum_vs_sign_average():
    g = np.random.default_rng(6)
    for _ in range(200):
        n = int(g.integers(2, 11))
        F = Forest(n)
        for _ in range(int(g.integers(0, n))):
            a, b = g.choice(n, 2, replace=False)
            F.add_edge(int(a), int(b), int(g.integers(2)))
        members = np.flatnonzero(checks.forest_constraint_set(n, F.edges()).values)
        assert np.array_equal(checks.component_spectrum(F).coeffs, direct_tilde(n, members))


def test_inconsistent_labels_rejected():
    with pytest.raises(ContradictionError):
        checks.component_spectrum([(0, 1, 1), (1, 2, 0), (0, 2, 0)], n=3)


# ---- inequalities ------------------------------------------------------------------


def test_binomial_entropy_example():
    assert 1024 / 11 <= math.comb(10, 5) == 252 <= 1024


def test_factorial_quotient_example():
    prod = 3**3 * 4**4
    assert prod == 6912
    assert (7 / 6) ** 7 <= prod <= 7**7
    # x! branch too
    assert (7 / 6) ** 7 <= factorial(3) * factorial(4) <= 7**7


def test_partition_into_singletons():
    n = 6
    sizes = np.ones(1 << n)
    assert float(np.mean(1 / sizes)) == (1 << n) / (1 << n)


def test_misc_inequalities_clean():
    rep = checks.misc_inequalities(np.random.default_rng(7))
    assert rep.passed
    names = {r.name for r in rep.rows}
    assert names == {"binom_entropy", "factorial_quotient", "partition", "cauchy_schwarz"}
    assert all(r.checked > 0 for r in rep.rows)


def test_kkl_sweep_small():
    sw = checks.kkl_sweep(8, 100, np.random.default_rng(8))
    assert sw.failures == 0 and sw.worst_l1_ratio <= 1 and sw.worst_l2_ratio <= 1


# ---- drift process -------------------------------------------------------------------


def test_martingale_constant_process():
    rep = checks.martingale_check(1000, 3, 200, np.random.default_rng(9), noise="none")
    assert rep.exceed == 0 and rep.passed


def test_martingale_multiplicative():
    rep = checks.martingale_check(2000, 4, 500, np.random.default_rng(10), noise="multiplicative")
    assert rep.frequency <= 2.0**-4 + 3 * rep.se
    assert rep.threshold == 2000 / 16
    assert abs(rep.drift_ratio - 1) <= 3 * rep.drift_se + 1e-12


def test_martingale_jump_noise_respects_drift():
    rep = checks.martingale_check(1000, 3, 500, np.random.default_rng(11), noise="jump")
    assert rep.drift_ratio <= 1 + 3 * rep.drift_se


def test_martingale_start_guard():
    with pytest.raises(ValueError):
        checks.martingale_check(100, 2, 10, np.random.default_rng(0), x0=1.0)
