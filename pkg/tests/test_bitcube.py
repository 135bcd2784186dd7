import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dihplab.bitcube import (
    BitVector,
    CapacityError,
    CubeFunction,
    EmptySetError,
    NormalizationError,
    PreconditionError,
    Spectrum,
    check_bounded,
    convolve_spectra,
    indicator_spectrum,
    kkl_level_check,
    level_l1,
    level_l2sq,
    log_bound,
    odd_level_mass,
    parity_function,
    tilde_normalize,
    wht_forward,
    wht_inverse,
)


def dot(x: int, v: int) -> int:
    return (x & v).bit_count() & 1


def slow_hat(values: np.ndarray, n: int) -> np.ndarray:
    """Defining sum, evaluated term by term."""
    N = 1 << n
    return np.array([sum(values[x] * (-1) ** dot(x, v) for x in range(N)) / N for v in range(N)])


# ---- forward / inverse ------------------------------------------------------


def test_constant_one_is_delta_at_zero():
    s = wht_forward(CubeFunction(3, np.ones(8)))
    assert s.coeffs[0] == 1.0
    assert np.all(s.coeffs[1:] == 0.0)


def test_two_point_indicator():
    s = wht_forward(CubeFunction(1, np.array([1.0, 0.0])))
    assert np.allclose(s.coeffs, [0.5, 0.5], atol=0)


def test_character_maps_to_delta():
    v0 = 0b1010
    s = wht_forward(parity_function(4, v0))
    expected = np.zeros(16)
    expected[v0] = 1.0
    assert np.allclose(s.coeffs, expected, atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 7])
def test_forward_matches_defining_sum(n):
    g = np.random.default_rng(n)
    vals = g.normal(size=1 << n)
    assert np.allclose(wht_forward(CubeFunction(n, vals)).coeffs, slow_hat(vals, n), atol=1e-12)


def test_inverse_of_delta_is_parity():
    v0 = 0b0110
    coeffs = np.zeros(16)
    coeffs[v0] = 1.0
    f = wht_inverse(Spectrum(4, coeffs))
    assert np.array_equal(f.values, [(-1.0) ** dot(x, v0) for x in range(16)])


def test_roundtrip_random_table():
    vals = np.random.default_rng(6).normal(size=64)
    back = wht_inverse(wht_forward(CubeFunction(6, vals))).values
    assert np.max(np.abs(back - vals)) < 1e-12


def test_inverse_rejects_tilde():
    spec = indicator_spectrum(CubeFunction(2, np.ones(4)))
    with pytest.raises(NormalizationError):
        wht_inverse(spec)


def test_capacity_error():
    with pytest.raises(CapacityError):
        CubeFunction(23, np.zeros(1))


# ---- convolution --------------------------------------------------------------


def test_convolve_with_identity():
    g = np.random.default_rng(1)
    p = wht_forward(CubeFunction(4, g.normal(size=16)))
    one = wht_forward(CubeFunction(4, np.ones(16)))
    assert np.allclose(convolve_spectra(p, one).coeffs, p.coeffs, atol=1e-15)


def test_convolve_is_transform_of_product():
    g = np.random.default_rng(2)
    f, h = g.normal(size=16), g.normal(size=16)
    lhs = convolve_spectra(wht_forward(CubeFunction(4, f)), wht_forward(CubeFunction(4, h))).coeffs
    assert np.allclose(lhs, slow_hat(f * h, 4), atol=1e-12)


def test_convolve_two_coordinate_subspaces():
    # {x: x1 = 0} and {x: x2 = 0} meet in {00}
    a = CubeFunction(2, np.array([1.0 if not x & 1 else 0.0 for x in range(4)]))
    b = CubeFunction(2, np.array([1.0 if not x & 2 else 0.0 for x in range(4)]))
    got = convolve_spectra(wht_forward(a), wht_forward(b)).coeffs
    assert np.allclose(got, [0.25, 0.25, 0.25, 0.25], atol=1e-15)
    assert np.allclose(got, wht_forward(CubeFunction.indicator(2, [0])).coeffs)


def test_convolve_dimension_mismatch():
    with pytest.raises(ValueError):
        convolve_spectra(wht_forward(CubeFunction(2, np.ones(4))), wht_forward(CubeFunction(3, np.ones(8))))


# ---- tilde normalization ---------------------------------------------------


def test_tilde_full_cube():
    s = indicator_spectrum(CubeFunction(5, np.ones(32)))
    assert s.coeffs[0] == 1.0 and np.all(s.coeffs[1:] == 0)


def test_tilde_singleton_has_unit_magnitudes():
    x0 = 0b10110
    s = indicator_spectrum(CubeFunction.indicator(5, [x0]))
    assert np.allclose(s.coeffs, [(-1.0) ** dot(x0, v) for v in range(32)], atol=1e-12)


def test_tilde_matches_sign_average():
    g = np.random.default_rng(5)
    A = g.choice(32, size=7, replace=False)
    s = indicator_spectrum(CubeFunction.indicator(5, A))
    oracle = [np.mean([(-1.0) ** dot(int(x), v) for x in A]) for v in range(32)]
    assert np.max(np.abs(s.coeffs - oracle)) < 1e-12
    assert s.set_size == 7


def test_tilde_empty_set_rejected():
    hat = wht_forward(CubeFunction(3, np.zeros(8)))
    with pytest.raises(EmptySetError):
        tilde_normalize(hat, 0)
    with pytest.raises(EmptySetError):
        indicator_spectrum(CubeFunction(3, np.zeros(8)))


# ---- level sums -------------------------------------------------------------


def test_level_sums_of_delta():
    coeffs = np.zeros(8)
    coeffs[0] = 1.0
    assert level_l1(Spectrum(3, coeffs), 0) == 1.0


def test_level_one_of_pair_parity_set():
    # {x : x1 xor x2 = 0}: the only weight-2 coefficient is at v = 1100
    B = CubeFunction(4, np.array([1.0 if (x & 1) == (x >> 1 & 1) else 0.0 for x in range(16)]))
    s = indicator_spectrum(B)
    assert level_l1(s, 1) == pytest.approx(1.0, abs=1e-12)
    assert s.coeffs[0b0011] == pytest.approx(1.0, abs=1e-12)


def test_levels_partition_l2_mass():
    g = np.random.default_rng(3)
    n = 7
    s = wht_forward(CubeFunction(n, g.normal(size=1 << n)))
    w = np.array([v.bit_count() for v in range(1 << n)])
    by_weight = sum(float(np.sum(s.coeffs[w == k] ** 2)) for k in range(n + 1))
    assert by_weight == pytest.approx(float(np.sum(s.coeffs**2)), rel=1e-12)
    even = sum(level_l2sq(s, lvl) for lvl in range(n // 2 + 1))
    assert even == pytest.approx(float(np.sum(s.coeffs[w % 2 == 0] ** 2)), rel=1e-12)


# ---- identities as properties -----------------------------------------------


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 9), seed=st.integers(0, 2**32 - 1))
def test_parseval(n, seed):
    vals = np.random.default_rng(seed).normal(size=1 << n)
    s = wht_forward(CubeFunction(n, vals))
    assert float(np.sum(s.coeffs**2)) == pytest.approx(float(np.mean(vals**2)), rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 9), seed=st.integers(0, 2**32 - 1))
def test_indicator_mass(n, seed):
    g = np.random.default_rng(seed)
    ind = (g.random(1 << n) < 0.4).astype(float)
    s = wht_forward(CubeFunction(n, ind))
    assert abs(float(np.sum(s.coeffs**2)) - ind.sum() / (1 << n)) < 1e-12


def test_convolution_theorem_grid():
    g = np.random.default_rng(11)
    for trial in range(100):
        n = 2 + trial % 7
        f, h = g.normal(size=1 << n), g.normal(size=1 << n)
        conv = convolve_spectra(wht_forward(CubeFunction(n, f)), wht_forward(CubeFunction(n, h)))
        assert np.max(np.abs(conv.coeffs - wht_forward(CubeFunction(n, f * h)).coeffs)) < 1e-12


# ---- boundedness -----------------------------------------------------------------


def test_log_bound_branches():
    assert log_bound(2, 4, 100, 0) == 0.0
    assert math.exp(log_bound(2, 4, 100, 1)) == pytest.approx(40.0, rel=1e-12)
    # above s*: (C^2 n / l)^{l/2}
    assert log_bound(2, 1, 100, 2) == pytest.approx(math.log(4 * 100 / 2), rel=1e-12)


@pytest.mark.parametrize("C,s_star", [(1, 1), (3, 2), (10, 5)])
def test_full_cube_bounded(C, s_star):
    assert check_bounded(indicator_spectrum(CubeFunction(8, np.ones(256))), C, s_star).overall


def test_singleton_level_one_mass_and_failure():
    s = indicator_spectrum(CubeFunction.indicator(8, [0b10010011]))
    assert level_l1(s, 1) == pytest.approx(28.0, abs=1e-9)
    rep = check_bounded(s, 0.5, 1)
    assert not rep.overall
    assert rep.per_level[0].l1 == pytest.approx(28.0)


def test_check_bounded_monotone_in_C():
    g = np.random.default_rng(8)
    for _ in range(20):
        members = g.choice(1 << 10, size=int(g.integers(1, 200)), replace=False)
        s = indicator_spectrum(CubeFunction.indicator(10, members))
        flags = [check_bounded(s, C, 2).overall for C in (0.3, 0.7, 1.0, 2.0, 5.0)]
        # once it passes it keeps passing
        assert flags == sorted(flags)


def test_check_bounded_errors():
    s = indicator_spectrum(CubeFunction(4, np.ones(16)))
    with pytest.raises(ValueError):
        check_bounded(s, 0.0, 1)
    with pytest.raises(ValueError):
        check_bounded(s, 1.0, 0)
    with pytest.raises(NormalizationError):
        check_bounded(wht_forward(CubeFunction(4, np.ones(16))), 1.0, 1)


def test_odd_mass_diagnostic():
    s = indicator_spectrum(CubeFunction.indicator(6, [1, 2, 4]))
    assert odd_level_mass(s) > 0
    rep = check_bounded(s, 100.0, 3)
    assert rep.odd_mass > 0
    assert rep.overall
    assert not check_bounded(s, 100.0, 3, strict_odd=True).overall


# ---- KKL level checks ---------------------------------------------------------


def test_kkl_half_subcube():
    m = 6
    A = [x for x in range(1 << m) if not x & 1]
    r = kkl_level_check(A, 0, 1, 1, m=m)
    assert r.lhs == pytest.approx(1.0, abs=1e-12)
    assert r.rhs == pytest.approx(math.sqrt(4 * m), rel=1e-12)
    assert r.passed


def test_kkl_density_precondition():
    with pytest.raises(PreconditionError):
        kkl_level_check([0], 0, 1, 1, m=6)


def test_kkl_affine_subspace_counts_dual_vectors():
    m, d = 8, 3
    g = np.random.default_rng(4)
    dual = []
    while len(dual) < d:
        v = int(g.integers(1, 1 << m))
        span = {0}
        for u in dual:
            span |= {s ^ u for s in span}
        if v not in span:
            dual.append(v)
    A = [x for x in range(1 << m) if all(dot(x, u) == 0 for u in dual)]
    span = [0]
    for u in dual:
        span += [s ^ u for s in span]
    for q in range(1, d + 1):
        r = kkl_level_check(A, 0, q, d, m=m)
        assert r.lhs == pytest.approx(sum(1 for s in span if s.bit_count() == q), abs=1e-9)
        assert r.passed


def test_kkl_random_sets_exhaustive():
    m = 10
    g = np.random.default_rng(9)
    for _ in range(15):
        d = int(g.integers(1, 5))
        size = int(g.integers(1 << (m - d), (1 << m) + 1))
        A = CubeFunction.indicator(m, g.choice(1 << m, size=size, replace=False))
        for q in range(1, d + 1):
            for y in g.integers(0, 1 << m, size=8):
                assert kkl_level_check(A, int(y), q, d).passed


def test_bitvector_strings():
    b = BitVector.from_string("1000")
    assert b.value == 1 and b.weight == 1 and b.to_string() == "1000"
    assert (b ^ BitVector.from_coords(4, [0, 3])).coords() == [3]
    with pytest.raises(ValueError):
        BitVector(3, 8)

