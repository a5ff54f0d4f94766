import math
import random

import numpy as np
import pytest
import scipy.integrate as si

from ncmodsym import iterint as ii
from ncmodsym import modgroup as mg

PARAMS = ii.EvalParams(L=2, tol=1e-10)


def test_unit_and_mul_identity(forms37):
    u = ii.unit_series(2, 2)
    j = ii.j_to_point(forms37, 0.2 + 0.5j, PARAMS)
    prod = ii.series_mul(j, u)
    assert max(abs(a - b) for a, b in zip(prod.coeffs, j.coeffs)) == 0


def test_mul_associative(forms37):
    a = ii.j_to_point(forms37, 0.1 + 0.4j, PARAMS)
    b = ii.j_to_point(forms37, 0.3 + 0.7j, PARAMS)
    c = ii.j_to_point(forms37, 0.5 + 1.1j, PARAMS)
    left = ii.series_mul(ii.series_mul(a, b), c)
    right = ii.series_mul(a, ii.series_mul(b, c))
    assert max(abs(x - y) for x, y in zip(left.coeffs, right.coeffs)) < 1e-14


def test_inverse(forms37):
    a = ii.j_to_point(forms37, 0.27 + 0.31j, PARAMS)
    inv = ii.series_inv(a)
    prod = ii.series_mul(a, inv)
    assert abs(prod.coeffs[0] - 1) < 1e-14
    assert max(abs(c) for c in prod.coeffs[1:]) < 1e-13
    prod2 = ii.series_mul(inv, a)
    assert max(abs(c) for c in prod2.coeffs[1:]) < 1e-13
    assert max(abs(c) for c in ii.series_inv(ii.unit_series(2, 2)).coeffs[1:]) == 0


def test_grouplike_and_reversal(forms37):
    j = ii.j_to_point(forms37, 0.15 + 0.21j, PARAMS)
    assert ii.grouplike_defect(j) < 1e-12
    assert ii.reversal_defect(j) < 1e-12


def test_point_value_against_adaptive_quadrature(forms37):
    z0 = 0.3 + 0.11j
    J = ii.j_to_point(forms37, z0, PARAMS)
    f = forms37[0]
    n = np.arange(1, 501)
    an = f.an_array(500)[1:]

    def leg(y, part):
        val = 1j * np.dot(an, np.exp(2j * math.pi * n * (z0.real + 1j * y)))
        return val.real if part == 0 else val.imag

    re, _ = si.quad(lambda y: leg(y, 0), z0.imag, 9.0, limit=300, epsabs=1e-13)
    im, _ = si.quad(lambda y: leg(y, 1), z0.imag, 9.0, limit=300, epsabs=1e-13)
    oracle = -(re + 1j * im)
    assert abs(J[(0,)] - oracle) < 1e-12


def test_point_value_against_gl_quadrature(forms37):
    z0 = 0.42 + 0.2j
    J = ii.j_to_point(forms37, z0, PARAMS)
    for word in [(0,), (1,), (0, 1), (0, 0)]:
        oracle = ii.quad_point(forms37, word, z0, PARAMS)
        assert abs(J[word] - oracle) < 1e-10, word


def test_high_point_decay(forms37):
    J = ii.j_to_point(forms37, 0.5 + 6.0j, PARAMS)
    assert max(abs(c) for c in J.coeffs[1:]) < 1e-14


def test_differential_relation(forms37):
    # d/dz0 J[v] = f_{v1}(z0) * J[v with first letter removed]
    z0 = 0.2 + 0.3j
    eps = 1e-5
    word = (0, 1)
    jp = ii.j_to_point(forms37, z0 + eps, PARAMS)
    jm = ii.j_to_point(forms37, z0 - eps, PARAMS)
    deriv = (jp[word] - jm[word]) / (2 * eps)
    n = np.arange(1, 2001)
    f0 = np.dot(forms37[0].an_array(2000)[1:], np.exp(2j * math.pi * n * z0))
    want = f0 * ii.j_to_point(forms37, z0, PARAMS)[(1,)]
    assert abs(deriv - want) < 1e-5 * (1 + abs(want))


def test_truncation_error_reported(forms37):
    params = ii.EvalParams(L=2, N=40, tol=1e-12)
    with pytest.raises(ii.TruncationError, match="need N >="):
        ii.j_to_point(forms37, 0.1 + 0.02j, params)


def test_path_composition_via_segment_quadrature(forms37):
    # J_{ioo}^{z1} = J_{z0}^{z1} * J_{ioo}^{z0} with the middle leg from an
    # independent straight-segment quadrature
    z0 = 0.2 + 0.6j
    z1 = 0.45 + 0.35j
    j0 = ii.j_to_point(forms37, z0, PARAMS)
    j1 = ii.j_to_point(forms37, z1, PARAMS)
    words, index, _ = ii.word_table(2, 2)
    mid = ii.unit_series(2, 2)
    for w in words:
        if w:
            mid.coeffs[index[w]] = ii.quad_segment(forms37, w, z0, z1, PARAMS)
    recomposed = ii.series_mul(mid, j0)
    for w in words:
        assert abs(recomposed.coeffs[index[w]] - j1.coeffs[index[w]]) < 1e-9


def test_cusp_direct_translation_is_unit(forms37):
    J = ii.cusp_j_direct(mg.T, forms37, PARAMS)
    assert max(abs(c) for c in J.coeffs[1:]) == 0


def test_cusp_direct_explicit_combination(forms37):
    # the L=1 and L=2 combinations of the two point series
    r = mg.make_cusp(5, 111)
    gam = ii.normalize_gamma(mg.cusp_to_matrix(r))
    a, b, c, d = gam
    jn = ii.j_to_point(forms37, a / c + 1j / c, PARAMS)
    jf = ii.j_to_point(forms37, -d / c + 1j / c, PARAMS)
    J = ii.cusp_j_direct(gam, forms37, PARAMS)
    assert abs(J[(0,)] - (-jf[(0,)] + jn[(0,)])) < 1e-14
    want = jf[(1, 0)] - jf[(0,)] * jn[(1,)] + jn[(0, 1)]
    assert abs(J[(0, 1)] - want) < 1e-14


def test_cusp_direct_split_height_invariance(forms37):
    r = mg.make_cusp(8, 185)
    gam = mg.cusp_to_matrix(r)
    j1 = ii.cusp_j_direct(gam, forms37, PARAMS)
    j2 = ii.cusp_j_direct(
        gam, forms37, ii.EvalParams(L=2, tol=1e-10, split_height=2.0)
    )
    assert max(abs(a - b) for a, b in zip(j1.coeffs, j2.coeffs)) < 1e-9


def test_word_to_j_empty_and_single(fs37, cache37):
    w = mg.GeneratorWord((), 1)
    J = ii.word_to_j(w, cache37)
    assert J.coeffs[0] == 1 and max(abs(c) for c in J.coeffs[1:]) == 0
    for gi in range(len(fs37.generators)):
        w = mg.GeneratorWord(((gi, 1),), 1)
        J = ii.word_to_j(w, cache37)
        base = cache37.base[gi]
        assert max(abs(a - b) for a, b in zip(J.coeffs, base.coeffs)) == 0


def test_fast_route_matches_direct(fs37, cache37, forms37):
    rng = random.Random(11)
    cusps = []
    for _ in range(12):
        c = 37 * rng.randrange(1, 14)
        a = rng.choice([x for x in range(1, c) if math.gcd(x, c) == 1])
        cusps.append(mg.make_cusp(a, c))
    worst = ii.validate_fast_route(cache37, cusps, 1e-8)
    assert worst < 1e-10


def test_generator_cache_grouplike(cache37):
    cache37.checked()


def test_batch_evaluate_counts_and_relations(forms37, fs37, cache37):
    words = [(0,), (1,), (0, 1), (1, 0), (0, 0)]
    cusps, vals = ii.batch_evaluate(
        37, forms37, words, 600, "c_le_M", PARAMS, fs=fs37, cache=cache37
    )
    assert len(cusps) == mg.count_T(37, 600)
    # shuffle relation at every cusp
    res = np.abs(vals[(0,)] * vals[(1,)] - vals[(0, 1)] - vals[(1, 0)])
    assert res.max() < 1e-12
    res2 = np.abs(vals[(0,)] ** 2 - 2 * vals[(0, 0)])
    assert res2.max() < 1e-12


def test_batch_shards_partition(forms37, fs37, cache37):
    words = [(0,)]
    full_c, full_v = ii.batch_evaluate(
        37, forms37, words, 200, "c_le_M", PARAMS, fs=fs37, cache=cache37
    )
    parts = []
    for k in range(3):
        c, v = ii.batch_evaluate(
            37, forms37, words, 200, "c_le_M", PARAMS,
            fs=fs37, cache=cache37, shard=(k, 3),
        )
        parts.append((c, v))
    assert sum(len(c) for c, _ in parts) == len(full_c)
    merged = {}
    for c, v in parts:
        for r, val in zip(c, v[(0,)]):
            merged[(r.a, r.c)] = val
    for r, val in zip(full_c, full_v[(0,)]):
        assert merged[(r.a, r.c)] == val


def test_required_N_monotone():
    n1 = ii.required_N(0.05, 1, 1e-10)
    n2 = ii.required_N(0.05, 2, 1e-10)
    n3 = ii.required_N(0.025, 2, 1e-10)
    assert n1 <= n2 <= n3
    assert ii.tail_bound(n2, 0.05, 2) <= 1e-10
