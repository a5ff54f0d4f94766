"""Gamma0(q) machinery: index, volume, Farey symbols, word problem, cusps.

The Farey symbol is built by the pseudo-Euclidean subdivision scheme: start
from the strip polygon over [0, 1], and repeatedly either label a boundary
arc (self-paired through an order-2 or order-3 element, or matched with a
partner arc) or insert the mediant. Side-pairing matrices come in closed
form from the endpoint fractions; all arithmetic is exact.
"""

import math
from dataclasses import dataclass
from fractions import Fraction


class ModGroupError(Exception):
    pass


class MembershipError(ModGroupError):
    pass


class GroupElement(tuple):
    """2x2 integer matrix of determinant 1 (entries a, b, c, d)."""

    __slots__ = ()

    def __new__(cls, a, b, c, d):
        if a * d - b * c != 1:
            raise ModGroupError(f"determinant != 1: {(a, b, c, d)}")
        return tuple.__new__(cls, (a, b, c, d))

    a = property(lambda s: s[0])
    b = property(lambda s: s[1])
    c = property(lambda s: s[2])
    d = property(lambda s: s[3])

    def __matmul__(self, o):
        a, b, c, d = self
        e, f, g, h = o
        return GroupElement(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inv(self):
        a, b, c, d = self
        return GroupElement(d, -b, -c, a)

    def neg(self):
        a, b, c, d = self
        return tuple.__new__(GroupElement, (-a, -b, -c, -d))

    def in_gamma0(self, q):
        return self[2] % q == 0

    def apply(self, z):
        """Moebius action on a point of the upper half-plane."""
        a, b, c, d = self
        return (a * z + b) / (c * z + d)

    def apply_cusp(self, num, den):
        """Action on a cusp num/den (den >= 0; infinity is (1, 0))."""
        a, b, c, d = self
        n2, d2 = a * num + b * den, c * num + d * den
        if d2 < 0:
            n2, d2 = -n2, -d2
        g = math.gcd(n2, d2)
        if g:
            n2, d2 = n2 // g, d2 // g
        return n2, d2


IDENTITY = GroupElement(1, 0, 0, 1)
T = GroupElement(1, 1, 0, 1)
S = GroupElement(0, -1, 1, 0)


def t_power(m):
    return GroupElement(1, m, 0, 1)


def index_gamma0(q):
    """psi(q) = [PSL2(Z) : Gamma0(q)] = q prod_{p|q} (1 + 1/p), exactly."""
    if q < 1:
        raise ModGroupError("q >= 1 required")
    psi = q
    for p in _prime_divisors(q):
        psi = psi // p * (p + 1)
    return psi


def volume(q):
    """Hyperbolic area of Gamma0(q) \\ H, namely (pi/3) psi(q)."""
    return math.pi / 3.0 * index_gamma0(q)


def c_constant(q):
    """C_q = pi * psi(q) / 24; equals volume(q)/8."""
    return math.pi * index_gamma0(q) / 24.0


def _prime_divisors(n):
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def nu2(q):
    if q % 4 == 0:
        return 0
    v = 1
    for p in _prime_divisors(q):
        if p == 2:
            continue
        v *= 1 + (1 if p % 4 == 1 else -1)
    return v


def nu3(q):
    if q % 9 == 0:
        return 0
    v = 1
    for p in _prime_divisors(q):
        if p == 3:
            continue
        v *= 1 + (1 if p % 3 == 1 else -1)
    return v


def ncusps(q):
    total = 0
    for d in range(1, q + 1):
        if q % d == 0:
            total += _phi(math.gcd(d, q // d))
    return total


def genus(q):
    g12 = 12 + index_gamma0(q) - 3 * nu2(q) - 4 * nu3(q) - 6 * ncusps(q)
    assert g12 % 12 == 0
    return g12 // 12


def _phi(n):
    out = n
    for p in _prime_divisors(n):
        out = out // p * (p - 1)
    return out


# ---------------------------------------------------------------------------
# Farey symbols


def _pairing_matrix(side_i, side_j):
    """Element mapping side_i = (a/b, c/d) onto side_j = (a'/b', c'/d').

    Sends a/b -> c'/d' and c/d -> a'/b'; determinant 1 by the unimodularity
    of both sides. Lies in Gamma0(q) exactly when q | (b b' + d d').
    """
    (a, b), (c, d) = side_i
    (a2, b2), (c2, d2) = side_j
    return GroupElement(
        -(a2 * b + c2 * d), a2 * a + c2 * c, -(b2 * b + d2 * d), b2 * a + d2 * c
    )


def _odd_matrix(side):
    """Order-3 element attached to a side, rotating the triangle above it."""
    (a, b), (c, d) = side
    return GroupElement(
        c * d + a * b - c * b, -(c * c) - a * a + a * c,
        d * d + b * b - d * b, -(d * c) - a * b + a * d,
    )


@dataclass(frozen=True)
class FareySymbol:
    """Fractions (with formal endpoints (-1,0) and (1,0)), side labels,
    side-pairing generators, and the side -> generator wiring."""

    level: int
    fractions: tuple      # ((num, den), ...), increasing, unimodular
    labels: tuple         # per side: ("even",) | ("odd",) | ("pair", k)
    generators: tuple     # GroupElement, generators[0] is the translation
    side_gen: tuple       # per side: (generator index, exponent of stored gen
                          #            mapping this side onto its partner)

    @property
    def n_sides(self):
        return len(self.fractions) - 1

    def side(self, i):
        return (self.fractions[i], self.fractions[i + 1])

    def check(self):
        q = self.level
        fr = self.fractions
        for (a, b), (c, d) in zip(fr, fr[1:]):
            if c * b - a * d != 1:
                raise ModGroupError(f"fractions not unimodular at {(a, b, c, d)}")
        for g in self.generators:
            if not g.in_gamma0(q):
                raise ModGroupError(f"generator outside Gamma0({q}): {g}")
        counts = {}
        for lab in self.labels:
            if lab[0] == "pair":
                counts[lab[1]] = counts.get(lab[1], 0) + 1
        if any(v != 2 for v in counts.values()):
            raise ModGroupError("each pairing label must occur exactly twice")
        # adjacent odd sides may share one elliptic vertex and generator, so
        # count distinct generators rather than side labels
        evens = {fs_gen for fs_gen, lab in zip(self.side_gen, self.labels)
                 if lab[0] == "even"}
        odds = {fs_gen[0] for fs_gen, lab in zip(self.side_gen, self.labels)
                if lab[0] == "odd"}
        if len(evens) != nu2(q):
            raise ModGroupError(f"even generator count {len(evens)} != nu2 = {nu2(q)}")
        if len(odds) != nu3(q):
            raise ModGroupError(f"odd generator count {len(odds)} != nu3 = {nu3(q)}")
        expected_pairs = 2 * genus(q) + ncusps(q) - 1
        if len(counts) != expected_pairs:
            raise ModGroupError(
                f"free pairing count {len(counts)} != 2g + ncusps - 1 = {expected_pairs}"
            )
        if len(self.generators) != len(evens) + len(odds) + len(counts):
            raise ModGroupError("generator count mismatch")
        return self


def farey_symbol(q, max_subdivisions=None):
    """Farey symbol and side-pairing generators for Gamma0(q)."""
    if q < 1:
        raise ModGroupError("q >= 1 required")
    if q == 1:
        # classical two-generator presentation: one even side folded at i,
        # one odd side through the order-3 point; no strip translation
        fractions = ((-1, 0), (0, 1), (1, 0))
        labels = (("even",), ("odd",))
        sides = [(fractions[0], fractions[1]), (fractions[1], fractions[2])]
        gens = (_pairing_matrix(sides[0], sides[0]), _odd_matrix(sides[1]))
        fs = FareySymbol(1, fractions, labels, gens, ((0, 1), (1, 1)))
        return fs.check()
    if max_subdivisions is None:
        max_subdivisions = 30 * index_gamma0(q) + 100
    fractions = [(-1, 0), (0, 1), (1, 1), (1, 0)]
    labels = [None] * 3
    labels[0] = ("pair", 0)
    labels[2] = ("pair", 0)
    pair_partner = {0: (0, 2)}
    subdivisions = 0
    while True:
        progressed = False
        unlabeled = [i for i, lab in enumerate(labels) if lab is None]
        if not unlabeled:
            break
        for i in unlabeled:
            (a, b), (c, d) = fractions[i], fractions[i + 1]
            if (b * b + d * d - b * d) % q == 0:
                labels[i] = ("odd",)
                progressed = True
            elif (b * b + d * d) % q == 0:
                labels[i] = ("even",)
                progressed = True
        unlabeled = [i for i, lab in enumerate(labels) if lab is None]
        for i in unlabeled:
            if labels[i] is not None:
                continue
            (a, b), (c, d) = fractions[i], fractions[i + 1]
            partners = []
            for j in unlabeled:
                if j == i or labels[j] is not None:
                    continue
                (a2, b2), (c2, d2) = fractions[j], fractions[j + 1]
                if (b * b2 + d * d2) % q == 0:
                    partners.append(j)
            if partners:
                # deterministic: first eligible partner; the closing count
                # validation catches any mis-pairing
                j = partners[0]
                k = len(pair_partner)
                labels[i] = ("pair", k)
                labels[j] = ("pair", k)
                pair_partner[k] = (i, j)
                progressed = True
        if progressed:
            continue
        # no side could be labeled: subdivide the unlabeled side with the
        # flattest mediant (keeps denominators, hence generator entries, small)
        unlabeled = [i for i, lab in enumerate(labels) if lab is None]
        if not unlabeled:
            break
        i = min(unlabeled, key=lambda k: fractions[k][1] + fractions[k + 1][1])
        (a, b), (c, d) = fractions[i], fractions[i + 1]
        fractions.insert(i + 1, (a + c, b + d))
        labels.insert(i + 1, None)
        pair_partner = {
            k: tuple(x if x <= i else x + 1 for x in pr)
            for k, pr in pair_partner.items()
        }
        subdivisions += 1
        if subdivisions > max_subdivisions:
            raise ModGroupError(f"Farey construction did not close for q={q}")
    # assemble generators: translation first, then left-to-right
    fractions = tuple(fractions)
    sides = [(fractions[i], fractions[i + 1]) for i in range(len(fractions) - 1)]
    generators = []
    side_gen = [None] * len(sides)
    seen_pair = {}
    seen_odd = {}
    for i, lab in enumerate(labels):
        if lab[0] == "even":
            g = _pairing_matrix(sides[i], sides[i])
            generators.append(g)
            side_gen[i] = (len(generators) - 1, 1)
        elif lab[0] == "odd":
            # adjacent odd sides around one elliptic vertex share the element
            g = _odd_matrix(sides[i])
            key = tuple(g)
            if key not in seen_odd and tuple(g.inv()) not in seen_odd:
                generators.append(g)
                seen_odd[key] = len(generators) - 1
                side_gen[i] = (len(generators) - 1, 1)
            else:
                idx = seen_odd.get(key, seen_odd.get(tuple(g.inv())))
                side_gen[i] = (idx, 1 if key in seen_odd else -1)
        else:
            k = lab[1]
            if k not in seen_pair:
                j = [x for x in pair_partner[k] if x != i][0]
                g = _pairing_matrix(sides[i], sides[j])
                generators.append(g)
                seen_pair[k] = (len(generators) - 1, i)
                side_gen[i] = (len(generators) - 1, 1)
            else:
                side_gen[i] = (seen_pair[k][0], -1)
    # the strip pairing is +-T; normalize its stored sign to T itself
    if tuple(generators[0]) == (-1, -1, 0, -1):
        generators[0] = T
    fs = FareySymbol(q, fractions, tuple(labels), tuple(generators), tuple(side_gen))
    return fs.check()


# ---------------------------------------------------------------------------
# Word problem


@dataclass(frozen=True)
class GeneratorWord:
    """gamma = sign * prod generators[i]^e over the factors, exactly."""

    factors: tuple  # ((generator index, nonzero exponent), ...)
    sign: int

    def evaluate(self, fs):
        out = IDENTITY
        for idx, e in self.factors:
            g = fs.generators[idx]
            if e < 0:
                g, e = g.inv(), -e
            out = out @ _mat_pow(g, e)
        if self.sign < 0:
            out = out.neg()
        return out


def _mat_pow(g, e):
    out = IDENTITY
    base = g
    while e:
        if e & 1:
            out = out @ base
        base = base @ base
        e >>= 1
    return out


def _cusp_of(mat):
    a, _, c, _ = mat
    if c < 0:
        a, c = -a, -c
    g = math.gcd(abs(a), c)
    if g:
        a, c = a // g, c // g
    return a, c


def word_decompose(gamma, fs, max_steps=20000):
    """Express gamma in the Farey-symbol generators, verified exactly.

    Pseudo-Euclidean descent: translate the image cusp gamma(oo) into
    [0, 1), then apply the pairing element of the arc below it; the cusp
    denominator strictly drops. A bounded breadth-first fallback finishes
    off small denominators (needed e.g. for q = 1 where the descent can
    tie).
    """
    q = fs.level
    if not isinstance(gamma, GroupElement):
        gamma = GroupElement(*gamma)
    if not gamma.in_gamma0(q):
        raise MembershipError(f"element not in Gamma0({q}): {tuple(gamma)}")
    if q == 1:
        return _word_decompose_q1(gamma, fs)
    factors = []
    cur = gamma
    seen = set()
    for _ in range(max_steps):
        a, b, c, d = cur
        if c == 0:
            break
        num, den = _cusp_of(cur)
        # translate the cusp into [0, 1)
        k = num // den
        if k != 0:
            _push(factors, 0, k)
            cur = t_power(-k) @ cur
            num -= k * den
        seen.add(tuple(cur) if cur[2] > 0 else tuple(cur.neg()))
        # cross the arc below the cusp: the adjacent tile is g^{-orient} P,
        # so peel g^{-orient} and move the cusp by g^{orient}; below an odd
        # side the region splits in two, so allow the reverse rotation too
        i = _containing_side(fs, num, den)
        if i is None:
            raise ModGroupError(f"no containing arc for cusp {num}/{den}")
        idx, orient = fs.side_gen[i]
        candidates = [(idx, orient)]
        if fs.labels[i][0] == "odd":
            candidates.append((idx, -orient))
        chosen = None
        for cidx, cor in candidates:
            g = fs.generators[cidx]
            step = g if cor > 0 else g.inv()
            nxt = step @ cur
            key = tuple(nxt) if nxt[2] > 0 else tuple(nxt.neg())
            if key not in seen or nxt[2] == 0:
                chosen = (cidx, cor, nxt)
                break
        if chosen is None:
            cur, extra = _bfs_finish(fs, cur)
            if extra is None:
                raise ModGroupError(
                    f"word reduction cycled at {tuple(cur)} for q={q}"
                )
            factors.extend(extra)
            break
        cidx, cor, nxt = chosen
        _push(factors, cidx, -cor)
        cur = nxt
    a, b, c, d = cur
    if c != 0:
        raise ModGroupError(f"word reduction failed for q={q}")
    sign = 1 if a == 1 else -1
    m = b * sign
    if m != 0:
        _push(factors, 0, m)
    word = GeneratorWord(tuple(factors), sign)
    check = word.evaluate(fs)
    if tuple(check) != tuple(gamma) and tuple(check.neg()) != tuple(gamma):
        raise ModGroupError("internal: word does not reproduce the element")
    if tuple(check) != tuple(gamma):
        word = GeneratorWord(word.factors, -word.sign)
        assert tuple(word.evaluate(fs)) == tuple(gamma)
    return word


def _word_decompose_q1(gamma, fs, max_quotient_mass=10**6):
    """PSL2(Z) decomposition into the even/odd pair via Euclid.

    With E = generators[0] (order 2) and O = generators[1] (order 3) the
    translation satisfies T = -E O^2, so an (S, T)-continued-fraction word
    rewrites directly; the global sign is fixed at the end.
    """
    factors = []
    cur = gamma
    mass = 0

    def emit_t(k):
        nonlocal mass
        mass += abs(k)
        if mass > max_quotient_mass:
            raise ModGroupError("q=1 word too long to expand")
        for _ in range(abs(k)):
            if k > 0:
                _push(factors, 0, 1)
                _push(factors, 1, 2)
            else:
                _push(factors, 1, -2)
                _push(factors, 0, -1)

    for _ in range(10000):
        a, b, c, d = cur
        if c == 0:
            break
        if c < 0:
            cur = cur.neg()
            a, b, c, d = cur
        k = a // c
        emit_t(k)
        _push(factors, 0, 1)
        # gamma = T^k E (E^{-1} T^{-k} gamma); E acts like S in PSL2
        cur = fs.generators[0].inv() @ (t_power(-k) @ cur)
    a, b, c, d = cur
    if c != 0:
        raise ModGroupError("q=1 reduction failed")
    emit_t(b if a == 1 else -b)
    word = GeneratorWord(tuple(factors), 1)
    check = word.evaluate(fs)
    if tuple(check) == tuple(gamma):
        return word
    if tuple(check.neg()) == tuple(gamma):
        return GeneratorWord(word.factors, -1)
    raise ModGroupError("internal: q=1 word does not reproduce the element")


def _push(factors, idx, e):
    if e == 0:
        return
    if factors and factors[-1][0] == idx:
        combined = factors[-1][1] + e
        if combined == 0:
            factors.pop()
        else:
            factors[-1] = (idx, combined)
    else:
        factors.append((idx, e))


def _containing_side(fs, num, den):
    """Index of the arc whose interval contains num/den in [0, 1)."""
    fr = fs.fractions
    lo, hi = 1, len(fr) - 2  # interior fractions run 0/1 .. 1/1
    # linear scan is fine: symbols stay small
    for i in range(1, len(fr) - 2):
        (a, b), (c, d) = fr[i], fr[i + 1]
        # a/b <= num/den < c/d
        if a * den <= num * b and num * d < c * den:
            return i
    # exactly at the right endpoint cannot happen for num/den in [0,1)
    return None


def _bfs_finish(fs, cur, max_depth=14):
    """Bounded search over generator moves to reach c = 0."""
    import heapq

    def key(m):
        return (m[2] * m[2], m[3] * m[3], m[0] * m[0])

    start = tuple(cur)
    heap = [(key(start), 0, start, ())]
    seen = {start}
    counter = 0
    while heap:
        _, depth, mat, path = heapq.heappop(heap)
        if mat[2] == 0:
            out = []
            for idx, e in path:
                _push(out, idx, e)
            return GroupElement(*mat), out
        if depth >= max_depth:
            continue
        for gi, g in enumerate(fs.generators):
            for e in (1, -1):
                mv = g if e > 0 else g.inv()
                nxt = tuple(mv @ GroupElement(*mat))
                norm = nxt if nxt[2] > 0 or (nxt[2] == 0 and nxt[0] > 0) else tuple(-x for x in nxt)
                if norm in seen:
                    continue
                seen.add(norm)
                counter += 1
                if counter > 200000:
                    return cur, None
                heapq.heappush(
                    heap, (key(nxt), depth + 1, nxt, path + ((gi, -e),))
                )
    return cur, None


# ---------------------------------------------------------------------------
# Cusp families


@dataclass(frozen=True)
class CuspFraction:
    """Reduced a/c in [0, 1) with q | c, plus d with a d = 1 (mod c)."""

    a: int
    c: int
    d: int

    def __post_init__(self):
        if self.c < 1 or math.gcd(self.a, self.c) != 1:
            raise ModGroupError(f"invalid cusp {self.a}/{self.c}")
        if (self.a * self.d - 1) % self.c != 0:
            raise ModGroupError(f"bad companion for {self.a}/{self.c}")

    @property
    def value(self):
        return Fraction(self.a, self.c)


def make_cusp(a, c):
    d = pow(a, -1, c)
    return CuspFraction(a, c, d)


def enumerate_T(q, M, ordering="c_le_M"):
    """All reduced a/c in [0,1), q | c, ordered by c <= M or c^2 <= M."""
    if M < 1:
        raise ModGroupError("M >= 1 required")
    if ordering == "c_le_M":
        cmax = M
    elif ordering == "c_sq_le_M":
        cmax = math.isqrt(M)
    else:
        raise ModGroupError(f"unknown ordering {ordering!r}")
    for c in range(q, cmax + 1, q):
        for a in range(c):
            if math.gcd(a, c) == 1:
                yield make_cusp(a, c)


def count_T(q, M, ordering="c_le_M"):
    cmax = M if ordering == "c_le_M" else math.isqrt(M)
    total = 0
    for c in range(q, cmax + 1, q):
        total += _phi(c)
    return total


def cusp_to_matrix(r):
    """gamma in Gamma0(q) with gamma(oo) = a/c; gamma^{-1}(oo) = -d/c."""
    d = r.d % r.c if r.c > 1 else 0
    b = (r.a * d - 1) // r.c
    return GroupElement(r.a, b, r.c, d)
