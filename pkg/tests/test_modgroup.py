import math
import random

import pytest

from ncmodsym import modgroup as mg


def test_index_values():
    assert mg.index_gamma0(1) == 1
    assert mg.index_gamma0(37) == 38  # 37 prime
    assert mg.index_gamma0(12) == 24  # 12 * (3/2) * (4/3)
    assert mg.index_gamma0(11) == 12


def test_volume_and_constant():
    assert mg.volume(1) == pytest.approx(math.pi / 3)
    assert mg.c_constant(37) == pytest.approx(38 * math.pi / 24)
    for q in (1, 5, 12, 37, 60):
        assert mg.c_constant(q) == pytest.approx(mg.volume(q) / 8, rel=1e-15)


def test_invariant_counts():
    # classical data: (q, nu2, nu3, cusps, genus)
    table = [
        (1, 1, 1, 1, 0),
        (11, 0, 0, 2, 1),
        (37, 2, 2, 2, 2),
        (41, 2, 0, 2, 3),
        (12, 0, 0, 6, 0),
    ]
    for q, n2, n3, nc, g in table:
        assert mg.nu2(q) == n2
        assert mg.nu3(q) == n3
        assert mg.ncusps(q) == nc
        assert mg.genus(q) == g


def test_group_element_arithmetic():
    g = mg.GroupElement(1, 1, 0, 1)
    h = mg.GroupElement(0, -1, 1, 0)
    assert tuple(g @ h) == (1, -1, 1, 0)
    assert tuple(g.inv() @ g) == (1, 0, 0, 1)
    with pytest.raises(mg.ModGroupError):
        mg.GroupElement(1, 1, 1, 1)


def test_farey_symbol_q1():
    fs = mg.farey_symbol(1)
    assert len(fs.generators) == 2
    # one has order 2, one order 3 (in PSL2): traces 0 and +-1
    traces = sorted(abs(g[0] + g[3]) for g in fs.generators)
    assert traces == [0, 1]


def test_farey_symbol_membership_and_unimodularity():
    for q in (11, 37, 41):
        fs = mg.farey_symbol(q)
        for g in fs.generators[1:]:
            assert g[2] % q == 0
        assert tuple(fs.generators[0]) == (1, 1, 0, 1)
        fr = fs.fractions
        for (a, b), (c, d) in zip(fr, fr[1:]):
            assert c * b - a * d == 1
        labels = [lab for lab in fs.labels if lab[0] == "pair"]
        for k in {lab[1] for lab in labels}:
            assert sum(1 for lab in labels if lab[1] == k) == 2


def test_farey_symbol_generator_counts():
    for q in (2, 3, 6, 11, 12, 37, 41, 49):
        fs = mg.farey_symbol(q)
        want = mg.nu2(q) + mg.nu3(q) + 2 * mg.genus(q) + mg.ncusps(q) - 1
        assert len(fs.generators) == want, q


@pytest.mark.parametrize("q", [1, 11, 37, 41])
def test_word_roundtrip(q):
    rng = random.Random(42 + q)
    fs = mg.farey_symbol(q)
    for _ in range(200):
        m = mg.IDENTITY
        for _ in range(rng.randrange(1, 21)):
            gi = rng.randrange(len(fs.generators))
            e = rng.choice([-3, -2, -1, 1, 2, 3])
            g = fs.generators[gi]
            m = m @ mg._mat_pow(g if e > 0 else g.inv(), abs(e))
        if rng.random() < 0.5:
            m = m.neg()
        w = mg.word_decompose(m, fs)
        assert tuple(w.evaluate(fs)) == tuple(m)


def test_word_decompose_identity_and_generators():
    fs = mg.farey_symbol(37)
    w = mg.word_decompose(mg.IDENTITY, fs)
    assert w.factors == () and w.sign == 1
    for gi, g in enumerate(fs.generators):
        w = mg.word_decompose(g, fs)
        assert tuple(w.evaluate(fs)) == tuple(g)


def test_word_decompose_rejects_nonmembers():
    fs = mg.farey_symbol(37)
    with pytest.raises(mg.MembershipError):
        mg.word_decompose(mg.GroupElement(0, -1, 1, 0), fs)


def test_enumerate_T_counts():
    got = list(mg.enumerate_T(37, 111))
    # phi(37) + phi(74) + phi(111) = 36 + 36 + 72
    assert len(got) == 144
    assert mg.count_T(37, 111) == 144
    assert [r for r in mg.enumerate_T(37, 36)] == []
    assert any(r.a == 1 and r.c == 37 for r in mg.enumerate_T(37, 37))


def test_enumerate_T_orderings():
    sq = list(mg.enumerate_T(37, 37**2, ordering="c_sq_le_M"))
    assert {r.c for r in sq} == {37}
    assert len(sq) == 36
    with pytest.raises(mg.ModGroupError):
        list(mg.enumerate_T(37, 100, ordering="bogus"))


def test_cusp_uniqueness():
    seen = set()
    for r in mg.enumerate_T(37, 200):
        assert math.gcd(r.a, r.c) == 1 and r.c % 37 == 0
        assert (r.a, r.c) not in seen
        seen.add((r.a, r.c))


def test_cusp_to_matrix():
    r = mg.make_cusp(1, 37)
    gam = mg.cusp_to_matrix(r)
    assert tuple(gam) == (1, 0, 37, 1)
    for r in mg.enumerate_T(37, 150):
        gam = mg.cusp_to_matrix(r)
        assert gam[2] % 37 == 0
        assert gam.apply_cusp(1, 0) == (r.a, r.c)
        assert tuple(gam @ gam.inv()) == (1, 0, 0, 1)
        # gamma^{-1}(oo) = -d/c up to reduction
        num, den = gam.inv().apply_cusp(1, 0)
        g = math.gcd(gam[3], gam[2])
        assert (num, den) == (-gam[3] // g, gam[2] // g)


def test_make_cusp_rejects_invalid():
    with pytest.raises(mg.ModGroupError):
        mg.CuspFraction(2, 4, 1)
