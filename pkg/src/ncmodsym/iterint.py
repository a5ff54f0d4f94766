"""Iterated integrals of cusp-form 1-forms as truncated Chen series.

A TruncatedJSeries holds the coefficients I(v) of the generating series of
iterated integrals from i*infinity, for every word v of length <= L over
the active forms. Values at points come from the nested Fourier expansion

    I(v1...vl; z0) = sum_{0 < m_l < ... < m_1 <= N}
        prod_i a_{v_i}(m_i - m_{i+1}) * e(m_1 z0) / ((2 pi i)^l m_1...m_l),

evaluated by convolution chains with a certified geometric tail bound.
Values at cusps a/c come either from the two-point split at
z0 = a/c + i/|c| (direct route) or from products of cached generator
series along a Farey-symbol word (fast route).
"""

import cmath
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .modgroup import GroupElement, cusp_to_matrix, word_decompose

TWO_PI = 2.0 * math.pi


class IterIntError(Exception):
    pass


class TruncationError(IterIntError):
    pass


class ValidationError(IterIntError):
    """Fast-route value disagrees with the direct evaluation."""

    def __init__(self, msg, fast=None, direct=None):
        super().__init__(msg)
        self.fast = fast
        self.direct = direct


@dataclass(frozen=True)
class EvalParams:
    L: int = 2
    N: int | None = None  # Fourier truncation; None = choose from tol
    tol: float = 1e-10
    split_height: float = 1.0
    quad_order: int = 24

    def __post_init__(self):
        if self.L < 1 or self.tol <= 0:
            raise IterIntError("need L >= 1 and tol > 0")
        if self.N is not None and self.N < 1:
            raise IterIntError("N >= 1 required")


@lru_cache(maxsize=None)
def word_table(nletters, L):
    """All words of length <= L, their index map, and product split table."""
    words = [()]
    last = [()]
    for _ in range(L):
        nxt = []
        for w in last:
            for x in range(nletters):
                nxt.append(w + (x,))
        words.extend(nxt)
        last = nxt
    index = {w: i for i, w in enumerate(words)}
    splits = []
    for w in words:
        sp = []
        for k in range(len(w) + 1):
            sp.append((index[w[:k]], index[w[k:]]))
        splits.append(tuple(sp))
    return tuple(words), index, tuple(splits)


class TruncatedJSeries:
    """Grouplike-normalized series: coefficient 1 on the empty word."""

    __slots__ = ("nletters", "L", "coeffs", "errs")

    def __init__(self, nletters, L, coeffs=None, errs=None):
        self.nletters = nletters
        self.L = L
        nwords = len(word_table(nletters, L)[0])
        if coeffs is None:
            coeffs = [0j] * nwords
            coeffs[0] = 1.0 + 0j
        if len(coeffs) != nwords:
            raise IterIntError("coefficient table has wrong size")
        self.coeffs = coeffs
        self.errs = errs if errs is not None else [0.0] * nwords

    @property
    def words(self):
        return word_table(self.nletters, self.L)[0]

    def __getitem__(self, word):
        return self.coeffs[word_table(self.nletters, self.L)[1][tuple(word)]]

    def err(self, word):
        return self.errs[word_table(self.nletters, self.L)[1][tuple(word)]]

    def copy(self):
        return TruncatedJSeries(self.nletters, self.L, list(self.coeffs), list(self.errs))

    def as_dict(self):
        return dict(zip(self.words, self.coeffs))


def unit_series(nletters, L):
    return TruncatedJSeries(nletters, L)


def series_mul(A, B):
    """Concatenation product truncated at L: (AB)[w] = sum A[w'] B[w'']."""
    if (A.nletters, A.L) != (B.nletters, B.L):
        raise IterIntError("series shape mismatch")
    words, _, splits = word_table(A.nletters, A.L)
    ca, cb, ea, eb = A.coeffs, B.coeffs, A.errs, B.errs
    out = [0j] * len(words)
    oerr = [0.0] * len(words)
    for wi in range(len(words)):
        acc = 0j
        err = 0.0
        for ui, vi in splits[wi]:
            acc += ca[ui] * cb[vi]
            err += abs(ca[ui]) * eb[vi] + ea[ui] * abs(cb[vi]) + ea[ui] * eb[vi]
        out[wi] = acc
        oerr[wi] = err
    return TruncatedJSeries(A.nletters, A.L, out, oerr)


def series_inv(A):
    """Inverse under concatenation; exact Neumann sum in <= L steps."""
    if abs(A.coeffs[0] - 1.0) > 1e-9:
        raise IterIntError("series must have unit constant term")
    x = A.copy()
    x.coeffs[0] = 0j  # augmentation part
    out = unit_series(A.nletters, A.L)
    term = unit_series(A.nletters, A.L)
    for _ in range(A.L):
        term = series_mul(term, x)
        term.coeffs = [-c for c in term.coeffs]
        out = _series_add(out, term)
    return out


def _series_add(A, B):
    return TruncatedJSeries(
        A.nletters, A.L,
        [a + b for a, b in zip(A.coeffs, B.coeffs)],
        [ea + eb for ea, eb in zip(A.errs, B.errs)],
    )


def grouplike_defect(A):
    """max |A[u] A[w] - sum_x c_{u sh w}(x) A[x]| over len(u)+len(w) <= L."""
    from .shuffle import shuffle

    words, index, _ = word_table(A.nletters, A.L)
    worst = 0.0
    for u in words:
        for w in words:
            if len(u) + len(w) > A.L or (not u and not w):
                continue
            rhs = sum(c * A.coeffs[index[x]] for x, c in shuffle(u, w).items())
            worst = max(worst, abs(A.coeffs[index[u]] * A.coeffs[index[w]] - rhs))
    return worst


def reversal_defect(A):
    """max |A^{-1}[v] - (-1)^len(v) A[reverse v]|; zero for grouplike A."""
    inv = series_inv(A)
    words, index, _ = word_table(A.nletters, A.L)
    worst = 0.0
    for v in words:
        want = (-1) ** len(v) * A.coeffs[index[v[::-1]]]
        worst = max(worst, abs(inv.coeffs[index[v]] - want))
    return worst


# ---------------------------------------------------------------------------
# Tail bounds and evaluation at points


def _coeff_bound_const(l):
    # |G_v(m)| <= pi^{-l} m^{2l-2} / (l^l ((l-1)!)^2), from |a(n)| <= 2n
    return math.pi ** (-l) / (l**l * math.factorial(l - 1) ** 2)


def _poly_geom_tail(N, j, x):
    """Bound for sum_{m > N} m^j x^m, requiring the term ratio < 1."""
    if x >= 1.0:
        return math.inf
    ratio = ((N + 2) / (N + 1)) ** j * x
    if ratio >= 1.0:
        return math.inf
    lead = (N + 1) ** j * x ** (N + 1)
    return lead / (1.0 - ratio)


def tail_bound(N, y, l):
    """Certified truncation error of the length-l nested sum at height y."""
    x = math.exp(-TWO_PI * y)
    return _coeff_bound_const(l) * _poly_geom_tail(N, 2 * l - 2, x)


def required_N(y, l, tol):
    lo, hi = 1, 2
    while tail_bound(hi, y, l) > tol:
        hi *= 2
        if hi > 2 * 10**7:
            raise TruncationError(
                f"tail bound cannot reach tol={tol} at height {y}"
            )
    while lo < hi:
        mid = (lo + hi) // 2
        if tail_bound(mid, y, l) <= tol:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _nested_coefficient_tables(forms, letters_needed, N, L):
    """G_v(m) arrays for all words v (|v| <= L), index m = 0..N."""
    an = {i: forms[i].an_array(N) for i in letters_needed}
    m = np.arange(N + 1, dtype=float)
    inv_2pi_i_m = np.zeros(N + 1, dtype=complex)
    inv_2pi_i_m[1:] = 1.0 / (2j * math.pi * m[1:])
    tables = {(): None}
    for length in range(1, L + 1):
        for w in _words_of_length(letters_needed, length):
            if length == 1:
                g = an[w[0]] * inv_2pi_i_m
            else:
                inner = tables[w[1:]]
                conv = np.convolve(an[w[0]][: N + 1], inner[: N + 1])[: N + 1]
                g = conv * inv_2pi_i_m
            tables[w] = g
    return tables


def _words_of_length(letters, length):
    if length == 0:
        yield ()
        return
    for w in _words_of_length(letters, length - 1):
        for x in letters:
            yield w + (x,)


def j_to_point(forms, z0, params):
    """J series from i*infinity to z0, with certified per-word error.

    Fourier truncation comes from `params`; if the stated tolerance is not
    reachable at Im(z0) with the given N, a TruncationError names the N
    that would suffice.
    """
    y = z0.imag
    if y <= 0:
        raise IterIntError("z0 must lie in the upper half-plane")
    L = params.L
    need = required_N(y, L, params.tol)
    N = params.N if params.N is not None else need
    worst = max(tail_bound(N, y, l) for l in range(1, L + 1))
    if worst > params.tol:
        raise TruncationError(
            f"tol={params.tol} unreachable with N={N} at height {y:.4g}; "
            f"need N >= {need}"
        )
    nletters = len(forms)
    letters = tuple(range(nletters))
    tables = _nested_coefficient_tables(forms, letters, N, L)
    words, index, _ = word_table(nletters, L)
    phases = np.exp((2j * math.pi * z0) * np.arange(N + 1))
    coeffs = [0j] * len(words)
    errs = [0.0] * len(words)
    coeffs[0] = 1.0 + 0j
    for w in words:
        if not w:
            continue
        g = tables[w]
        val = complex(np.dot(g, phases))
        coeffs[index[w]] = val
        rounding = 1e-15 * float(np.abs(g * phases).sum())
        errs[index[w]] = tail_bound(N, y, len(w)) + rounding
    return TruncatedJSeries(nletters, L, coeffs, errs)


# ---------------------------------------------------------------------------
# Cusp values


def normalize_gamma(gamma):
    if gamma[2] == 0:
        return gamma
    return gamma if gamma[2] > 0 else gamma.neg()


def cusp_j_direct(gamma, forms, params):
    """J from i*infinity to gamma(oo) by splitting at z0 = a/c + i h/|c|.

    J = (J_{ioo}^{gamma^{-1} z0})^{-1} * J_{ioo}^{z0}; at L = 1 this is the
    two-term difference of point values and at L = 2 the three-term
    combination dictated by path composition.
    """
    gamma = normalize_gamma(gamma)
    a, b, c, d = gamma
    if c == 0:
        # translation: same endpoints, trivial series
        return unit_series(len(forms), params.L)
    h = params.split_height
    z0 = a / c + 1j * h / c
    ginvz0 = -d / c + 1j / (h * c)
    j_near = j_to_point(forms, z0, params)
    j_far = j_to_point(forms, ginvz0, params)
    return series_mul(series_inv(j_far), j_near)


class GeneratorCache:
    """Per-generator J series for a Farey symbol, plus integer powers."""

    def __init__(self, fs, forms, params):
        self.fs = fs
        self.forms = tuple(forms)
        self.params = params
        self.key = cache_key(fs.level, self.forms, params)
        self.base = {}
        self._powers = {}
        for gi, g in enumerate(fs.generators):
            self.base[gi] = cusp_j_direct(g, self.forms, self._gen_params(g))
        for gi in self.base:
            self._powers[(gi, 1)] = self.base[gi]
            self._powers[(gi, -1)] = series_inv(self.base[gi])

    # cached series are over-resolved so that first-order error propagation
    # through long word products stays inside the run budget of 10 * tol
    CACHE_REFINE = 1e-4

    def _gen_params(self, g):
        # truncation follows the evaluation heights h/|c| and 1/(h|c|)
        tol = self.params.tol * self.CACHE_REFINE
        if g[2] == 0:
            return self.params
        if self.params.N is not None:
            return replace(self.params, tol=tol)
        h = self.params.split_height
        y = min(h, 1.0 / h) / abs(g[2])
        need = max(required_N(y, l, tol) for l in range(1, self.params.L + 1))
        return replace(self.params, N=need, tol=tol)

    def power(self, gi, e):
        if e == 0:
            return unit_series(len(self.forms), self.params.L)
        key = (gi, e)
        if key not in self._powers:
            half = self.power(gi, e // 2)
            sq = series_mul(half, half)
            if e % 2:
                sq = series_mul(sq, self._powers[(gi, 1 if e > 0 else -1)])
            self._powers[key] = sq
        return self._powers[key]

    def checked(self, tol_factor=50.0):
        """Grouplike sanity check of every cached generator series."""
        for gi, ser in self.base.items():
            scale = max(1.0, max(abs(c) for c in ser.coeffs))
            if grouplike_defect(ser) > tol_factor * self.params.tol * scale**2:
                raise ValidationError(f"generator {gi} series fails grouplike check")
        return self


def cache_key(level, forms, params):
    return (
        level,
        tuple(f.label for f in forms),
        params.L,
        params.N if params.N is not None else 0,
        float(params.tol),
    )


def word_to_j(word, cache):
    """J(gamma) for gamma = sign * prod g_i^{e_i}.

    Path composition reverses the order: J(g1 g2) = J(g2) J(g1), so the
    product runs over the factors from right to left. The overall sign
    acts trivially.
    """
    out = None
    for gi, e in reversed(word.factors):
        if gi not in cache.base:
            raise IterIntError(f"cache miss for generator {gi}")
        p = cache.power(gi, e)
        out = p if out is None else series_mul(out, p)
    if out is None:
        out = unit_series(len(cache.forms), cache.params.L)
    return out


def j_at_cusp(r, cache):
    """Fast-route J at the cusp a/c through the word decomposition."""
    gamma = cusp_to_matrix(r)
    word = word_decompose(gamma, cache.fs)
    return word_to_j(word, cache)


def validate_fast_route(cache, cusps, tol):
    """Compare word products against direct evaluation on given cusps."""
    worst = 0.0
    for r in cusps:
        fast = j_at_cusp(r, cache)
        direct = cusp_j_direct(cusp_to_matrix(r), cache.forms, cache.params)
        delta = max(
            abs(x - y) for x, y in zip(fast.coeffs, direct.coeffs)
        )
        worst = max(worst, delta)
        if delta > tol:
            raise ValidationError(
                f"fast route deviates by {delta:.3g} at cusp {r.a}/{r.c}",
                fast=fast.as_dict(), direct=direct.as_dict(),
            )
    return worst


def batch_evaluate(q, forms, words, M, ordering, params, fs=None, cache=None,
                   shard=None):
    """Evaluate I at every cusp of T(M) for each requested word.

    Returns (cusps, values) where cusps is a list of CuspFraction and
    values maps each word to a complex numpy array. `shard` = (k, n)
    restricts to every n-th cusp starting at k, for parallel runs.
    Estimated coefficient errors beyond 10 * tol abort the batch.
    """
    from .modgroup import enumerate_T, farey_symbol

    if fs is None:
        fs = farey_symbol(q)
    if cache is None:
        cache = GeneratorCache(fs, forms, params)
    windex = word_table(len(forms), params.L)[1]
    for w in words:
        if len(w) > params.L:
            raise IterIntError(f"word {w} exceeds truncation length {params.L}")
    idxs = [windex[tuple(w)] for w in words]
    cusps = []
    values = {tuple(w): [] for w in words}
    err_budget = 10.0 * params.tol
    for k, r in enumerate(enumerate_T(q, M, ordering)):
        if shard is not None and k % shard[1] != shard[0]:
            continue
        ser = j_at_cusp(r, cache)
        for w, wi in zip(words, idxs):
            val = ser.coeffs[wi]
            est = ser.errs[wi]
            if est > err_budget * max(1.0, abs(val)):
                raise IterIntError(
                    f"estimated error {est:.3g} exceeds budget at cusp "
                    f"{r.a}/{r.c} for word {w}"
                )
            values[tuple(w)].append(val)
        cusps.append(r)
    return cusps, {w: np.array(v) for w, v in values.items()}


CACHE_FORMAT_VERSION = 1


def save_cache(cache, path):
    """Persist a generator cache as versioned JSON."""
    import json

    payload = {
        "format": CACHE_FORMAT_VERSION,
        "key": {
            "level": cache.key[0],
            "forms": list(cache.key[1]),
            "L": cache.key[2],
            "N": cache.key[3],
            "tol": cache.key[4],
        },
        "generators": {
            str(gi): {
                "coeffs": [[c.real, c.imag] for c in ser.coeffs],
                "errs": list(ser.errs),
            }
            for gi, ser in cache.base.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_cache(path, fs, forms, params):
    """Load a cache written by save_cache, validating its key."""
    import json

    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != CACHE_FORMAT_VERSION:
        raise IterIntError(
            f"cache format {payload.get('format')} != {CACHE_FORMAT_VERSION}"
        )
    want = cache_key(fs.level, tuple(forms), params)
    got = payload["key"]
    got_tuple = (got["level"], tuple(got["forms"]), got["L"], got["N"],
                 got["tol"])
    if got_tuple != want:
        raise IterIntError(f"cache key mismatch: {got_tuple} != {want}")
    cache = GeneratorCache.__new__(GeneratorCache)
    cache.fs = fs
    cache.forms = tuple(forms)
    cache.params = params
    cache.key = want
    cache.base = {}
    cache._powers = {}
    nletters = len(cache.forms)
    for gi_str, blob in payload["generators"].items():
        coeffs = [complex(re, im) for re, im in blob["coeffs"]]
        ser = TruncatedJSeries(nletters, params.L, coeffs, list(blob["errs"]))
        gi = int(gi_str)
        cache.base[gi] = ser
        cache._powers[(gi, 1)] = ser
        cache._powers[(gi, -1)] = series_inv(ser)
    if set(cache.base) != set(range(len(fs.generators))):
        raise IterIntError("cache does not cover all generators")
    return cache


# ---------------------------------------------------------------------------
# Quadrature oracle (independent of the nested closed form)


def _gl_grid(y0, y1, order, panels):
    """Gauss-Legendre nodes/weights on [y0, y1], geometric panel split."""
    base_x, base_w = np.polynomial.legendre.leggauss(order)
    edges = np.geomspace(y0, y1, panels + 1)
    ys, ws = [], []
    for a, b in zip(edges, edges[1:]):
        ys.append(0.5 * (b - a) * base_x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * base_w)
    return np.concatenate(ys), np.concatenate(ws)


def _form_values(form, zs, N):
    n = np.arange(1, N + 1)
    an = form.an_array(N)[1:]
    return np.exp(2j * math.pi * np.outer(zs, n)) @ an


def quad_point(forms, word, z_end, params, top=8.0):
    """I(word; i*infinity -> z_end) by nested Gauss-Legendre panels.

    The path is the vertical line through z_end, truncated at height `top`
    where every cusp form is far below the target tolerance. Purely
    numerical in the word length; no nested closed form is used.
    """
    word = tuple(word)
    if not word:
        return 1.0 + 0j
    x0 = z_end.real
    y_end = z_end.imag
    order, panels = params.quad_order, max(6, int(2 + math.log2(top / y_end)))
    ys, ws = _gl_grid(y_end, top, order, panels)
    zs = x0 + 1j * ys
    N = min(required_N(y_end, 1, params.tol * 1e-2), 200000)
    fvals = _form_values(forms[word[0]], zs, N)
    if len(word) == 1:
        inner = np.ones_like(ys, dtype=complex)
    else:
        inner = np.array(
            [quad_point(forms, word[1:], z, params, top=top) for z in zs]
        )
    # dz = i dy and the path runs downward from i*infinity to z_end
    return complex(-(1j) * np.sum(ws * fvals * inner))


def quad_segment(forms, word, z_from, z_to, params):
    """I(word; z_from -> z_to) along a straight segment, nested GL."""
    word = tuple(word)
    if not word:
        return 1.0 + 0j
    base_x, base_w = np.polynomial.legendre.leggauss(params.quad_order)
    ts = 0.5 * (base_x + 1.0)
    ws = 0.5 * base_w
    zs = z_from + ts * (z_to - z_from)
    N = min(required_N(min(z.imag for z in [z_from, z_to]), 1, params.tol * 1e-2),
            200000)
    fvals = _form_values(forms[word[0]], zs, N)
    if len(word) == 1:
        inner = np.ones_like(ts, dtype=complex)
    else:
        inner = np.array(
            [quad_segment(forms, word[1:], z_from, z, params) for z in zs]
        )
    return complex((z_to - z_from) * np.sum(ws * fvals * inner))
