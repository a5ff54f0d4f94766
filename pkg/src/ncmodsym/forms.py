"""Fourier coefficients of weight-2 newforms for Gamma0(q).

Three coefficient sources: the eta-product for level 11, point counting on
elliptic curves (levels with a rational newform), and ingestion of bundled
JSON records (the only route for level 41, whose newform orbit is a cubic
irrationality). Every constructed series re-verifies the newform
invariants: a(1) = 1, multiplicativity, the Hecke recursion at good primes
and the Deligne bound.
"""

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np


class FormError(Exception):
    pass


class MalformedRecordError(FormError):
    pass


class LevelMismatchError(FormError):
    pass


class InvariantViolationError(FormError):
    pass


class MissingPrimeError(FormError):
    pass


def primes_up_to(n):
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(n**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return [int(p) for p in np.nonzero(sieve)[0]]


def divisor_counts(n):
    d = np.zeros(n + 1, dtype=np.int64)
    for k in range(1, n + 1):
        d[k::k] += 1
    return d


@dataclass(frozen=True)
class FourierSeries:
    """a(1..N) of a weight-2 newform, with a(1) = 1."""

    level: int
    label: str
    coeffs: tuple  # coeffs[0] is a(1)
    source: str = "ingested"
    fricke: object = None  # W-eigenvalue mu with W f = mu * fhat

    def __post_init__(self):
        if not self.coeffs or self.coeffs[0] != 1:
            raise InvariantViolationError(f"{self.label}: a(1) must be 1")

    def a(self, n):
        return self.coeffs[n - 1]

    @property
    def nmax(self):
        return len(self.coeffs)

    def an_array(self, n=None):
        """a(0..n) as a complex numpy array with a(0) = 0."""
        n = self.nmax if n is None else n
        if n > self.nmax:
            raise FormError(
                f"{self.label}: need a(1..{n}) but only {self.nmax} known"
            )
        arr = np.zeros(n + 1, dtype=complex)
        arr[1:] = self.coeffs[:n]
        return arr

    def validate(self, tol=1e-9):
        verify_invariants(self.level, self.coeffs, self.label, tol)
        return self


def verify_invariants(level, coeffs, label="form", tol=1e-9):
    """Check multiplicativity, Hecke recursion and Deligne bound for a(1..N)."""
    N = len(coeffs)
    a = [0] + list(coeffs)
    is_exact = all(isinstance(x, int) for x in coeffs)

    def close(x, y):
        if is_exact:
            return x == y
        scale = 1 + abs(x) + abs(y)
        return abs(x - y) <= tol * scale

    if a[1] != 1:
        raise InvariantViolationError(f"{label}: a(1) != 1")
    d = divisor_counts(N)
    for n in range(1, N + 1):
        bound = d[n] * math.sqrt(n)
        if abs(a[n]) > bound * (1 + tol) + tol:
            raise InvariantViolationError(
                f"{label}: Deligne bound fails at n={n}: |{a[n]}| > {bound}"
            )
    for p in primes_up_to(N):
        # Hecke recursion a(p^(k+1)) = a(p) a(p^k) - p a(p^(k-1)) at p
        # not dividing the level; a(p^k) = a(p)^k at bad primes.
        pk = p * p
        prev, cur = a[1], a[p]
        while pk <= N:
            if level % p == 0:
                want = a[p] * cur
            else:
                want = a[p] * cur - p * prev
            if not close(a[pk], want):
                raise InvariantViolationError(
                    f"{label}: Hecke recursion fails at {p}^k = {pk}"
                )
            prev, cur = cur, a[pk]
            pk *= p
        # multiplicativity across coprime pairs
        m = p
        while m <= N:
            for n2 in range(2, N // m + 1):
                if math.gcd(m, n2) == 1:
                    if not close(a[m * n2], a[m] * a[n2]):
                        raise InvariantViolationError(
                            f"{label}: a({m})a({n2}) != a({m * n2})"
                        )
            m *= p


def eta_product_coefficients(N, level=11, label="11a"):
    """a(1..N) of eta(z)^2 eta(11z)^2 by multiplying pentagonal series.

    Exact integer arithmetic; the four eta factors are each expanded by the
    pentagonal number theorem and truncated at q^(N-1) (the leading q^1 of
    the product shifts indices by one).
    """
    if level != 11:
        raise FormError("eta-product source only covers level 11")
    if N < 1:
        raise FormError("N >= 1 required")
    M = N  # need coefficients of q^0..q^(N-1) in the quadruple product
    e1 = np.array(_pentagonal_series(M), dtype=np.int64)
    e11 = np.array(_stride_series(list(e1), 11, M), dtype=np.int64)
    # all intermediate coefficients stay far below 2^63 (divisor-bound size)
    prod = _sparse_square(e1, M)
    prod = _sparse_mul(prod, e11, M)
    prod = _sparse_mul(prod, e11, M)
    coeffs = tuple(int(c) for c in prod[:N])
    return FourierSeries(11, label, coeffs, source="eta-product", fricke=-1)


def _sparse_mul(dense, sparse, M):
    """dense * sparse truncated below q^M; sparse has few nonzero entries."""
    out = np.zeros(M, dtype=np.int64)
    for g in np.nonzero(sparse)[0]:
        s = int(sparse[g])
        if s == 1:
            out[g:] += dense[: M - g]
        elif s == -1:
            out[g:] -= dense[: M - g]
        else:
            out[g:] += s * dense[: M - g]
    return out


def _sparse_square(sparse, M):
    return _sparse_mul(sparse, sparse, M)


def _pentagonal_series(M):
    """prod (1-q^n) = sum_k (-1)^k q^(k(3k-1)/2), truncated below M."""
    out = [0] * M
    k = 0
    while True:
        done = True
        for kk in (k, -k) if k else (0,):
            g = kk * (3 * kk - 1) // 2
            if g < M:
                out[g] += (-1) ** kk
                done = False
        if done and k > 0:
            break
        k += 1
    return out


def _stride_series(series, stride, M):
    out = [0] * M
    for i, c in enumerate(series):
        if i * stride >= M:
            break
        out[i * stride] = c
    return out


@dataclass(frozen=True)
class EllipticCurveModel:
    """Integral Weierstrass model y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6."""

    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    conductor: int

    @property
    def discriminant(self):
        b2 = self.a1**2 + 4 * self.a2
        b4 = 2 * self.a4 + self.a1 * self.a3
        b6 = self.a3**2 + 4 * self.a6
        b8 = (
            self.a1**2 * self.a6
            + 4 * self.a2 * self.a6
            - self.a1 * self.a3 * self.a4
            + self.a2 * self.a3**2
            - self.a4**2
        )
        return -(b2**2) * b8 - 8 * b4**3 - 27 * b6**2 + 9 * b2 * b4 * b6

    def __post_init__(self):
        if self.discriminant == 0:
            raise FormError("singular Weierstrass model")


CURVE_11A = EllipticCurveModel(0, -1, 1, -10, -20, 11)
CURVE_37A = EllipticCurveModel(0, 0, 1, -1, 0, 37)
CURVE_37B = EllipticCurveModel(0, 1, 1, -23, -50, 37)


def count_points(curve, p):
    """Projective points of the reduction mod p, including infinity.

    O(p) per prime: for odd p complete the square and use a squares table;
    p = 2 is brute-forced over the four affine pairs.
    """
    a1, a2, a3, a4, a6 = curve.a1, curve.a2, curve.a3, curve.a4, curve.a6
    if p == 2:
        count = 1
        for x in range(2):
            for y in range(2):
                lhs = (y * y + a1 * x * y + a3 * y) % 2
                rhs = (x**3 + a2 * x * x + a4 * x + a6) % 2
                if lhs == rhs:
                    count += 1
        return count
    x = np.arange(p, dtype=np.int64)
    f = (((x * x % p) * x + a2 * x * x + a4 * x + a6) % p).astype(np.int64)
    h = (a1 * x + a3) % p
    # y^2 + h y = f  <=>  (2y + h)^2 = 4f + h^2
    rhs = (4 * f + h * h) % p
    sq = np.zeros(p, dtype=np.int64)
    sq[(x * x) % p] = 1
    chi = np.where(rhs == 0, 0, 2 * sq[rhs] - 1)
    return int(1 + p + chi.sum())


def curve_ap(curve, p, flag_bad=None):
    """a_p = p + 1 - #E(F_p); at bad primes via the nonsingular-point count.

    The reduction's unique singular point is F_p-rational, so the smooth
    locus has #E(F_p) - 1 points and a_p = p - (#E(F_p) - 1) lands in
    {-1, 0, 1} (split / additive / nonsplit).
    """
    n = count_points(curve, p)
    if curve.discriminant % p == 0:
        ap = p - (n - 1)
        if flag_bad is not None:
            flag_bad(p, ap)
        if ap not in (-1, 0, 1):
            raise FormError(f"bad-prime count inconsistent at p={p}: {ap}")
        return ap
    return p + 1 - n


def hecke_extend(ap_values, q, N, label="form", source="elliptic-curve"):
    """Fill a(1..N) from prime data via the Hecke recursion.

    a(p^(k+1)) = a(p) a(p^k) - p a(p^(k-1)) at good primes, a(p^k) = a(p)^k
    for p | q, and multiplicativity everywhere else.
    """
    a = [None] * (N + 1)
    a[1] = 1
    for p in primes_up_to(N):
        if p not in ap_values:
            raise MissingPrimeError(f"{label}: no a_p supplied for p={p}")
        ap = ap_values[p]
        a[p] = ap
        pk, prev, cur = p * p, 1, ap
        while pk <= N:
            if q % p == 0:
                nxt = ap * cur
            else:
                nxt = ap * cur - p * prev
            a[pk] = nxt
            prev, cur = cur, nxt
            pk *= p
    for n in range(2, N + 1):
        if a[n] is None:
            m = _smallest_prime_power_factor(n)
            a[n] = a[m] * a[n // m]
    return FourierSeries(q, label, tuple(a[1:]), source=source)


def _smallest_prime_power_factor(n):
    p = 2
    while p * p <= n:
        if n % p == 0:
            m = p
            while n % (m * p) == 0:
                m *= p
            return m
        p += 1
    return n


def curve_form(curve, q, N, label):
    aps = {p: curve_ap(curve, p) for p in primes_up_to(N)}
    f = hecke_extend(aps, q, N, label=label)
    # Fricke eigenvalue mu = -a_q for a prime-level rational newform
    mu = -aps[q] if q in aps and q <= N else None
    if mu is None and q >= 2:
        mu = -curve_ap(curve, q)
    return FourierSeries(q, label, f.coeffs, source="elliptic-curve", fricke=mu)


def ingest_newform(stream, expected_level, tol=1e-8):
    """Parse and validate a newform record.

    Record format (UTF-8 JSON): {"level": int, "label": str,
    "an": [int or [re, im], ...], "fricke": optional number}, with an[0] = a(1).
    """
    try:
        if isinstance(stream, (bytes, str)):
            rec = json.loads(stream)
        else:
            rec = json.load(stream)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedRecordError(f"unparsable record: {exc}") from exc
    if not isinstance(rec, dict) or "level" not in rec or "an" not in rec:
        raise MalformedRecordError("record must carry 'level' and 'an'")
    if not isinstance(rec["an"], list) or not rec["an"]:
        raise MalformedRecordError("empty coefficient list")
    if rec["level"] != expected_level:
        raise LevelMismatchError(
            f"expected level {expected_level}, record has {rec['level']}"
        )
    coeffs = []
    for entry in rec["an"]:
        if isinstance(entry, (int, float)):
            coeffs.append(entry if isinstance(entry, int) else float(entry))
        elif isinstance(entry, list) and len(entry) == 2:
            re, im = entry
            coeffs.append(complex(re, im) if im else float(re))
        else:
            raise MalformedRecordError(f"bad coefficient entry {entry!r}")
    if coeffs[0] != 1:
        raise InvariantViolationError("a(1) != 1 in record")
    label = rec.get("label", f"level{rec['level']}")
    verify_invariants(rec["level"], coeffs, label, tol=tol)
    return FourierSeries(
        rec["level"], label, tuple(coeffs), source="ingested",
        fricke=rec.get("fricke"),
    )


def load_fixture(name, expected_level=None):
    """Load a bundled newform record by label, e.g. '37a'."""
    data = resources.files("ncmodsym").joinpath(f"fixtures/{name}.json")
    raw = data.read_bytes()
    if expected_level is None:
        expected_level = json.loads(raw)["level"]
    return ingest_newform(raw, expected_level)


COMPUTED_SOURCES = {
    "11a": lambda N: eta_product_coefficients(N, label="11a"),
    "37a": lambda N: curve_form(CURVE_37A, 37, N, "37a"),
    "37b": lambda N: curve_form(CURVE_37B, 37, N, "37b"),
}


def get_form(label, N):
    """Resolve a form label to coefficients.

    Labels with an in-repo computed source (eta product, curve counts) are
    built fresh to any N; everything else loads from the bundled fixtures,
    which bound the available truncation.
    """
    if label in COMPUTED_SOURCES:
        return COMPUTED_SOURCES[label](N)
    f = load_fixture(label.replace(".", "_"))
    if f.nmax < N:
        raise FormError(
            f"fixture {label} has {f.nmax} coefficients; {N} requested"
        )
    return f


def petersson_estimate(f, g, X):
    """Rankin-Selberg partial-sum estimate of <y f, y g> (weight 2).

    (2/X^2) sum_{n<=X} a_f(n) conj(a_g(n)) * Gamma(2) vol(Gamma0(q)\\H) / (4 pi)^2.
    Converges like 1/log X at best; sanity checks only, never used by the
    moment pipeline (which works with scale-free ratios).
    """
    if f.level != g.level:
        raise LevelMismatchError("forms must share a level")
    if X < 100:
        raise FormError("X >= 100 required")
    from .modgroup import volume

    s = 0.0 + 0.0j
    for n in range(1, X + 1):
        s += complex(f.a(n)) * complex(g.a(n)).conjugate()
    return (2.0 / X**2) * s * math.gamma(2) * volume(f.level) / (4 * math.pi) ** 2
