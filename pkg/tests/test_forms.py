import json
import math

import pytest

from ncmodsym import forms


def test_eta_normalization():
    f = forms.eta_product_coefficients(1)
    assert f.a(1) == 1


def test_eta_a2():
    # expand the four eta factors: a(2) = -2, cross-checked against 11a
    f = forms.eta_product_coefficients(12)
    assert f.a(2) == -2
    assert f.a(2) == forms.curve_ap(forms.CURVE_11A, 2)


def test_eta_multiplicativity_sample():
    f = forms.eta_product_coefficients(30)
    assert f.a(6) == f.a(2) * f.a(3)
    assert f.a(15) == f.a(3) * f.a(5)


def test_eta_matches_curve_11a():
    N = 2000
    f_eta = forms.eta_product_coefficients(N)
    aps = {p: forms.curve_ap(forms.CURVE_11A, p) for p in forms.primes_up_to(N)}
    f_crv = forms.hecke_extend(aps, 11, N, label="11a-curve")
    assert f_eta.coeffs == f_crv.coeffs


def test_curve_ap_37a_small():
    # y^2 + y = x^3 - x over F_2: all four affine pairs work, plus infinity
    assert forms.curve_ap(forms.CURVE_37A, 2) == -2
    assert forms.curve_ap(forms.CURVE_37A, 3) == -3


def test_curve_ap_hasse():
    for p in forms.primes_up_to(200):
        if forms.CURVE_37A.discriminant % p == 0:
            continue
        ap = forms.curve_ap(forms.CURVE_37A, p)
        assert abs(ap) <= 2 * math.sqrt(p)


def test_curve_ap_bruteforce_crosscheck():
    # O(p) squares-table count agrees with full F_p x F_p enumeration
    for curve in (forms.CURVE_11A, forms.CURVE_37B):
        for p in (3, 5, 7, 13):
            brute = 1
            for x in range(p):
                for y in range(p):
                    lhs = (y * y + curve.a1 * x * y + curve.a3 * y) % p
                    rhs = (x**3 + curve.a2 * x * x + curve.a4 * x + curve.a6) % p
                    brute += lhs == rhs
            assert forms.count_points(curve, p) == brute


def test_bad_prime_values():
    assert forms.curve_ap(forms.CURVE_11A, 11) == 1
    assert forms.curve_ap(forms.CURVE_37A, 37) == -1
    assert forms.curve_ap(forms.CURVE_37B, 37) == 1


def test_hecke_extend_recursion():
    aps = {p: forms.curve_ap(forms.CURVE_37A, p) for p in forms.primes_up_to(100)}
    f = forms.hecke_extend(aps, 37, 100, label="37a")
    assert f.a(1) == 1
    assert f.a(4) == (-2) ** 2 - 2  # a(p^2) = a(p)^2 - p
    assert f.a(6) == f.a(2) * f.a(3)
    f.validate()


def test_hecke_extend_bad_prime_rule():
    aps = {p: forms.curve_ap(forms.CURVE_37B, p) for p in forms.primes_up_to(37**2)}
    f = forms.hecke_extend(aps, 37, 37**2, label="37b")
    assert f.a(37) == 1
    assert f.a(37**2) == 1  # a(q^k) = a(q)^k


def test_hecke_extend_missing_prime():
    with pytest.raises(forms.MissingPrimeError, match="p=3"):
        forms.hecke_extend({2: -2}, 37, 10)


def _record(level=37, label="x", an=None, **extra):
    rec = {"level": level, "label": label,
           "an": an if an is not None else [1, -2, -3, 2, -2, 6]}
    rec.update(extra)
    return json.dumps(rec)


def test_ingest_roundtrip():
    aps = {p: forms.curve_ap(forms.CURVE_37A, p) for p in forms.primes_up_to(60)}
    f = forms.hecke_extend(aps, 37, 60, label="37a")
    rec = _record(an=list(f.coeffs), fricke=1)
    g = forms.ingest_newform(rec, 37)
    assert g.coeffs == f.coeffs
    assert g.fricke == 1
    assert g.a(2) == -2 and g.a(3) == -3


def test_ingest_rejects_malformed():
    with pytest.raises(forms.MalformedRecordError):
        forms.ingest_newform("not json {", 37)
    with pytest.raises(forms.MalformedRecordError):
        forms.ingest_newform(_record(an=[]), 37)


def test_ingest_rejects_level_mismatch():
    with pytest.raises(forms.LevelMismatchError):
        forms.ingest_newform(_record(level=41), 37)


def test_ingest_rejects_invariant_violation():
    # a(6) != a(2) a(3)
    with pytest.raises(forms.InvariantViolationError):
        forms.ingest_newform(_record(an=[1, -2, -3, 2, -2, 7]), 37)


def test_petersson_symmetry_and_diagonal():
    N = 400
    f = forms.curve_form(forms.CURVE_37A, 37, N, "37a")
    g = forms.curve_form(forms.CURVE_37B, 37, N, "37b")
    fg = forms.petersson_estimate(f, g, N)
    gf = forms.petersson_estimate(g, f, N)
    assert fg == gf.conjugate()
    ff = forms.petersson_estimate(f, f, N)
    assert ff.imag == 0 and ff.real > 0


def test_petersson_off_diagonal_small():
    # distinct newforms are orthogonal; the partial-sum estimate sees that
    # already at modest X (fluctuating, so no monotonicity asserted)
    N = 4000
    f = forms.curve_form(forms.CURVE_37A, 37, N, "37a")
    g = forms.curve_form(forms.CURVE_37B, 37, N, "37b")
    diag = forms.petersson_estimate(f, f, N).real
    off = abs(forms.petersson_estimate(f, g, N))
    assert off < 0.02 * diag


def test_level_mismatch_petersson():
    f = forms.eta_product_coefficients(200)
    g = forms.curve_form(forms.CURVE_37A, 37, 200, "37a")
    with pytest.raises(forms.LevelMismatchError):
        forms.petersson_estimate(f, g, 150)
