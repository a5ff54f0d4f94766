"""Additively twisted (multiple) L-functions of weight-2 newforms.

Central values come from iterated integrals via
L(f_1,...,f_l, a/c, 1) = (2 pi i)^l I_{ioo}^{a/c}(f_1 dz ... f_l dz).
The analytic continuation of the length-1 twist splits the defining
integral at z0 = a/c + i h/c: the leg to i*infinity is a termwise
incomplete-gamma sum at s, and the remaining leg transforms under the
matrix completing a/c into a second incomplete-gamma sum at 2 - s:

  I(f dz; a/c; s) = -i^s sum a(n) e(n a/c) G(s, 2 pi n/c) / (2 pi n)^s
      + i^s c^(2-2s) sum a(n) e(-n d/c) G(2-s, 2 pi n/c) / (2 pi n)^(2-s)

with G the upper incomplete gamma function (principal powers throughout;
the path variable stays on the positive imaginary axis, so no branch
ambiguity arises). The completed function Lambda_{a/c}(f, s) =
(c/2pi)^s Gamma(s) L(f, a/c, s) then satisfies
Lambda_{a/c}(f, s) = -Lambda_{-d/c}(f, 2-s) identically in this
representation, so the numeric functional-equation checks exercise the
companion-cusp bookkeeping, the split-point independence, and the
agreement with the Dirichlet series in its convergence region.
"""

import cmath
import math

import numpy as np
from scipy.special import gamma as cgamma

from .iterint import EvalParams
from .modgroup import cusp_to_matrix, make_cusp

TWO_PI = 2.0 * math.pi


class LSeriesError(Exception):
    pass


# ---------------------------------------------------------------------------
# Upper incomplete gamma for complex s, x > 0


def incomplete_gamma_upper(s, x, tol=1e-14, max_iter=600):
    """Gamma(s, x) for complex s and real x > 0, relative error ~1e-12.

    Series around 0 through gamma(s, x) = x^s e^{-x} sum x^k / (s)_(k+1)
    for small x, Lentz continued fraction for large x; near nonpositive
    integer s the series route degenerates, so a downward recurrence from
    Gamma(0, x) = E_1(x) takes over.
    """
    s = complex(s)
    if x <= 0:
        raise LSeriesError("x > 0 required")
    # the continued fraction converges for x beyond Re(s): using it as soon
    # as x >= max(1, Re s + 1) also avoids the cancellation Gamma(s) - gamma
    # suffers once the lower integral carries most of the mass
    switch = max(1.0, s.real + 1.0)
    if x >= switch:
        return _igamma_cf(s, x, tol, max_iter)
    near_int = round(s.real)
    if abs(s - near_int) < 1e-9 and near_int <= 0:
        return _igamma_nonpos_int(int(near_int), x, tol)
    return _igamma_series(s, x, tol, max_iter)


def _igamma_series(s, x, tol, max_iter):
    # gamma(s,x) = x^s e^{-x} sum_{k>=0} x^k / (s(s+1)...(s+k))
    term = 1.0 / s
    total = term
    for k in range(1, max_iter):
        term *= x / (s + k)
        total += term
        if abs(term) < tol * abs(total):
            lower = cmath.exp(s * cmath.log(x) - x) * total
            return cgamma(s) - lower
    raise LSeriesError("incomplete gamma series did not converge")


def _igamma_cf(s, x, tol, max_iter):
    # modified Lentz on Gamma(s,x) = e^{-x} x^s / (x+1-s- 1(1-s)/(x+3-s- ...))
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b if b != 0 else 1.0 / tiny
    h = d
    for i in range(1, max_iter):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return cmath.exp(-x + s * cmath.log(x)) * h
    raise LSeriesError("incomplete gamma continued fraction did not converge")


def _igamma_nonpos_int(m, x, tol):
    # Gamma(0, x) = E_1(x); recur down with Gamma(s-1,x) = (Gamma(s,x) - x^{s-1}e^{-x})/(s-1)
    val = _e1(x, tol)
    s = 0
    while s > m:
        s -= 1
        val = (val - x**s * math.exp(-x)) / s
    return complex(val)


def _e1(x, tol):
    if x > 30:
        return _igamma_cf(complex(0.0), x, tol, 600).real
    # -gamma - log x + sum_{k>=1} (-1)^{k+1} x^k / (k k!)
    total = -np.euler_gamma - math.log(x)
    term = 1.0
    for k in range(1, 400):
        term *= -x / k
        total -= term / k
        if abs(term / k) < tol * max(1.0, abs(total)):
            return total
    raise LSeriesError("E1 series did not converge")


# ---------------------------------------------------------------------------
# Partial sums (oracle only)


def multiple_L_partial(form_list, r, s, N):
    """Nested Dirichlet sum over m_1 <= N; requires Re(s) > 1 + l/2.

    L(f, a/c, s) = sum_{0=m_{l+1}<m_l<...<m_1} prod a_i(m_i - m_{i+1})
                   e(a/c m_1) / (m_1^s m_2 ... m_l).
    """
    l = len(form_list)
    s = complex(s)
    if s.real <= 1 + l / 2:
        raise LSeriesError(
            f"partial sums need Re(s) > 1 + l/2 = {1 + l / 2} (got {s.real})"
        )
    # weights w_j(m) for the inner chain: w_l(m) = a_l(m)/m, then convolve
    a_arrays = [f.an_array(N) for f in form_list]
    m = np.arange(N + 1, dtype=float)
    inv_m = np.zeros(N + 1)
    inv_m[1:] = 1.0 / m[1:]
    # inner levels carry 1/m_j; the top level only carries m_1^{-s}
    w = a_arrays[-1] * (inv_m if l > 1 else 1.0)
    for j in range(l - 2, -1, -1):
        conv = np.convolve(a_arrays[j][: N + 1], w[: N + 1])[: N + 1]
        if j > 0:
            w = conv * inv_m
        else:
            w = conv
    twist = np.exp(2j * math.pi * (r.a / r.c) * np.arange(N + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        powers = np.zeros(N + 1, dtype=complex)
        powers[1:] = np.arange(1, N + 1) ** (-s)
    return complex(np.sum(w * twist * powers))


# ---------------------------------------------------------------------------
# Central values


def central_value(form_list, r, params=None, cache=None):
    """(2 pi i)^l I_{ioo}^{a/c}(f_1 dz ... f_l dz).

    With a GeneratorCache the fast word-product route is used and the word
    is located inside the cache's alphabet by form label; otherwise the
    two-point direct split evaluates the forms as given.
    """
    from .iterint import cusp_j_direct

    l = len(form_list)
    if params is None:
        params = EvalParams(L=l, tol=1e-10)
    if cache is not None:
        from .iterint import j_at_cusp

        labels = [f.label for f in cache.forms]
        try:
            word = tuple(labels.index(f.label) for f in form_list)
        except ValueError as exc:
            raise LSeriesError(f"form not in cache alphabet: {exc}") from exc
        ser = j_at_cusp(r, cache)
    else:
        word = tuple(range(l))
        ser = cusp_j_direct(cusp_to_matrix(r), form_list, params)
    return (2j * math.pi) ** l * ser[word]


# ---------------------------------------------------------------------------
# Continuation of the length-1 additive twist


def _twisted_legs(form, r, s, h, tol):
    """The two incomplete-gamma sums of the split representation."""
    s = complex(s)
    c = r.c
    n_terms = _leg_terms(c / min(h, 1.0 / h), tol)
    n = np.arange(1, n_terms + 1)
    an = form.an_array(n_terms)[1:]
    x_near = TWO_PI * n * (h / c)
    x_far = TWO_PI * n * (1.0 / (h * c))
    g_near = np.array([incomplete_gamma_upper(s, x) for x in x_near])
    g_far = np.array([incomplete_gamma_upper(2 - s, x) for x in x_far])
    e_near = np.exp(2j * math.pi * (r.a / c) * n)
    e_far = np.exp(-2j * math.pi * (r.d / c) * n)
    i_pow_s = cmath.exp(0.5j * math.pi * s)
    leg_a = -i_pow_s * np.sum(an * e_near * g_near * (TWO_PI * n) ** (-s))
    leg_b = i_pow_s * c ** (2 - 2 * s) * np.sum(
        an * e_far * g_far * (TWO_PI * n) ** (s - 2.0)
    )
    return complex(leg_a), complex(leg_b)


def _leg_terms(scale, tol):
    # Gamma(s, 2 pi n / scale) decays like e^{-2 pi n / scale}
    return max(16, int(scale * (math.log(1.0 / tol) + 8.0) / TWO_PI) + 8)


def twisted_L_continued(form, r, s, h=1.0, tol=1e-12):
    """Entire continuation of L(f, a/c, s) via the split integral.

    Independent of the split height h up to the working tolerance; the
    default h = 1 balances the decay of the two legs.
    """
    s = complex(s)
    if form.level and r.c % form.level != 0:
        raise LSeriesError(f"cusp {r.a}/{r.c} not valid for level {form.level}")
    leg_a, leg_b = _twisted_legs(form, r, s, h, tol)
    ivalue = leg_a + leg_b
    # I = -i^s (2 pi)^{-s} Gamma(s) L  =>  L = -(2 pi)^s / (i^s Gamma(s)) I
    i_pow_s = cmath.exp(0.5j * math.pi * s)
    return -((TWO_PI) ** s) / (i_pow_s * cgamma(s)) * ivalue


def completed_twisted(form, r, s, h=1.0, tol=1e-12):
    """Lambda_{a/c}(f, s) = (c/2pi)^s Gamma(s) L(f, a/c, s)."""
    s = complex(s)
    lval = twisted_L_continued(form, r, s, h=h, tol=tol)
    return (r.c / TWO_PI) ** s * cgamma(s) * lval


def companion_cusp(r):
    """The cusp -d/c mod 1 with its own companion, i.e. gamma^{-1}(oo)."""
    a2 = (-r.d) % r.c if r.c > 1 else 0
    return make_cusp(a2, r.c)


def twisted_fe_residual(form, r, s, h=1.0, tol=1e-12):
    """|Lambda_{a/c}(f,s) + Lambda_{-d/c}(f,2-s)| and the comparison scale.

    The scale is floored at 1: self-companion cusps can carry identically
    vanishing central values, where a pure ratio would be 0/0 noise.
    """
    lhs = completed_twisted(form, r, s, h=h, tol=tol)
    rhs = completed_twisted(form, companion_cusp(r), 2 - complex(s), h=h, tol=tol)
    scale = max(abs(lhs), abs(rhs), 1.0)
    return abs(lhs + rhs), scale


# ---------------------------------------------------------------------------
# Untwisted functional equations (Fricke route, cusp 0)


def _untwisted_legs(form, s, q, tol, conjugate=False):
    """Legs of I_{ioo}^0(f dz, s) split at i/sqrt(q); leg B carries eps."""
    s = complex(s)
    rq = math.sqrt(q)
    n_terms = _leg_terms(rq, tol)
    n = np.arange(1, n_terms + 1)
    an = form.an_array(n_terms)[1:]
    if conjugate:
        an = np.conj(an)
    x = TWO_PI * n / rq
    g_s = np.array([incomplete_gamma_upper(s, xx) for xx in x])
    g_2ms = np.array([incomplete_gamma_upper(2 - s, xx) for xx in x])
    i_pow_s = cmath.exp(0.5j * math.pi * s)
    leg_a = -i_pow_s * np.sum(an * g_s * (TWO_PI * n) ** (-s))
    leg_b_unit = i_pow_s * q ** (1 - s) * np.sum(
        np.conj(an) * g_2ms * (TWO_PI * n) ** (s - 2.0)
    )
    return complex(leg_a), complex(leg_b_unit)


def untwisted_L_continued(form, s, eps=None, tol=1e-12):
    """L(f, s) everywhere, given (or using the stored) Fricke eigenvalue."""
    if eps is None:
        eps = form.fricke
    if eps is None:
        raise LSeriesError(f"{form.label}: no Fricke eigenvalue available")
    q = form.level
    leg_a, leg_b_unit = _untwisted_legs(form, s, q, tol)
    ivalue = leg_a + eps * leg_b_unit
    s = complex(s)
    i_pow_s = cmath.exp(0.5j * math.pi * s)
    return -((TWO_PI) ** s) / (i_pow_s * cgamma(s)) * ivalue


def fit_fricke(form, s_fit=3.0, n_partial=400000, tol=1e-12):
    """Solve for eps from the Dirichlet series in the convergence region.

    I(s) = A(s) + eps * B(s) must match the termwise value
    -i^s (2pi)^{-s} Gamma(s) L_partial(f, s); linear in eps.
    """
    s = complex(s_fit)
    if s.real <= 1.5:
        raise LSeriesError("fit point must lie in the convergence region")
    q = form.level
    leg_a, leg_b_unit = _untwisted_legs(form, s, q, tol)
    n_partial = min(n_partial, form.nmax)
    n = np.arange(1, n_partial + 1)
    an = form.an_array(n_partial)[1:]
    lpartial = complex(np.sum(an * n ** (-s)))
    i_pow_s = cmath.exp(0.5j * math.pi * s)
    target = -i_pow_s * (TWO_PI) ** (-s) * cgamma(s) * lpartial
    eps = (target - leg_a) / leg_b_unit
    return complex(eps)


def untwisted_FE_check(f1, f2=None, s_grid=(0.5, 1.0, 1.5, 2.5), tol=1e-12):
    """Residual report for the length-1 (and optionally length-2) FE.

    Fricke eigenvalues are taken from the form records when present and
    fitted from the Dirichlet series otherwise; a fitted eps must land on
    the unit circle to 1e-6. Hat forms have conjugated coefficients, the
    identity for rational newforms.
    """
    report = {"form": f1.label, "level": f1.level}
    eps1 = f1.fricke if f1.fricke is not None else fit_fricke(f1)
    report["eps1"] = complex(eps1)
    report["eps1_unit_defect"] = abs(abs(complex(eps1)) - 1.0)
    if report["eps1_unit_defect"] > 1e-6:
        raise LSeriesError(f"fitted Fricke eigenvalue off the unit circle: {eps1}")
    q = f1.level
    rows = []
    for s in s_grid:
        s = complex(s)
        lam = _completed_untwisted(f1, s, eps1, tol)
        lam_hat = _completed_untwisted(f1, 2 - s, eps1, tol, conjugate=True)
        resid = abs(lam + complex(eps1) * lam_hat)
        scale = max(abs(lam), abs(lam_hat), 1e-30)
        rows.append({"s": s, "residual": resid, "scale": scale,
                     "relative": resid / scale})
    report["length1"] = rows
    if f2 is not None:
        eps2 = f2.fricke if f2.fricke is not None else fit_fricke(f2)
        report["eps2"] = complex(eps2)
        rows2 = []
        for s in s_grid:
            s = complex(s)
            lam = completed_double(f1, f2, s, eps1, eps2, tol)
            lam_hat = completed_double(f1, f2, 2 - s, eps1, eps2, tol,
                                       conjugate=True)
            lam1_hat = _completed_untwisted(f1, 2 - s, eps1, tol, conjugate=True)
            lam2_hat_1 = _completed_untwisted(f2, 1.0, eps2, tol, conjugate=True)
            resid = abs(lam + complex(eps1) * complex(eps2)
                        * (lam_hat - lam1_hat * lam2_hat_1))
            scale = max(abs(lam), abs(lam_hat), abs(lam1_hat * lam2_hat_1), 1e-30)
            rows2.append({"s": s, "residual": resid, "scale": scale,
                          "relative": resid / scale})
        report["length2"] = rows2
    return report


def _completed_untwisted(form, s, eps, tol, conjugate=False):
    """(sqrt(q)/2pi)^s Gamma(s) L(g, s) with g = f or fhat."""
    s = complex(s)
    q = form.level
    leg_a, leg_b_unit = _untwisted_legs(form, s, q, tol, conjugate=conjugate)
    eps_used = np.conj(complex(eps)) if conjugate else complex(eps)
    ivalue = leg_a + eps_used * leg_b_unit
    i_pow_s = cmath.exp(0.5j * math.pi * s)
    lval = -((TWO_PI) ** s) / (i_pow_s * cgamma(s)) * ivalue
    return (math.sqrt(q) / TWO_PI) ** s * cgamma(s) * lval


def double_L_continued(f1, f2, s, eps1=None, eps2=None, tol=1e-12):
    """L(f1, f2, s, 1) everywhere via the iterated-integral split.

    I(v, s, 1) = LegA(s) + C2 * B1(s) + eps1 eps2 * LegB2(s) with
    C2 = -i L(f2, 1)/(2 pi): the inner integral contributes its full value
    at the Fricke point plus a transformed tail.
    """
    s = complex(s)
    eps1 = eps1 if eps1 is not None else (f1.fricke or fit_fricke(f1))
    eps2 = eps2 if eps2 is not None else (f2.fricke or fit_fricke(f2))
    ivalue = _double_ivalue(f1, f2, s, eps1, eps2, tol)
    # I(v, s, 1) = i^{s+1} (2 pi)^{-(s+1)} Gamma(s) L(f1, f2, s, 1)
    i_pow = cmath.exp(0.5j * math.pi * (s + 1))
    return (TWO_PI) ** (s + 1) / (i_pow * cgamma(s)) * ivalue


def _double_ivalue(f1, f2, s, eps1, eps2, tol, conjugate=False):
    q = f1.level
    if f2.level != q:
        raise LSeriesError("forms must share a level")
    rq = math.sqrt(q)
    n_terms = _leg_terms(rq, tol)
    n = np.arange(1, n_terms + 1)
    a1 = f1.an_array(n_terms)[1:]
    a2 = f2.an_array(n_terms)[1:]
    if conjugate:
        a1, a2 = np.conj(a1), np.conj(a2)
    # coefficients of f1(z) * F2(z) with F2(z) = sum a2(k) e(kz)/(2 pi i k)
    inner = a2 / (2j * math.pi * n)
    full1 = np.concatenate([[0.0 + 0j], a1])
    fulli = np.concatenate([[0.0 + 0j], inner])
    cvals = np.convolve(full1, fulli)[: n_terms + 1][1:]
    x = TWO_PI * n / rq
    g_s = np.array([incomplete_gamma_upper(s, xx) for xx in x])
    g_2ms = np.array([incomplete_gamma_upper(2 - complex(s), xx) for xx in x])
    i_pow_s = cmath.exp(0.5j * math.pi * complex(s))
    leg_a = -i_pow_s * np.sum(cvals * g_s * (TWO_PI * n) ** (-complex(s)))
    # the transformed leg carries the hats of the working coefficients
    # (so the original ones again when `conjugate` is set)
    chat = np.convolve(np.concatenate([[0j], np.conj(a1)]),
                       np.concatenate([[0j], np.conj(a2) / (2j * math.pi * n)]),
                       )[: n_terms + 1][1:]
    leg_b2 = i_pow_s * q ** (1 - complex(s)) * np.sum(
        chat * g_2ms * (TWO_PI * n) ** (complex(s) - 2.0)
    )
    # inner integral's constant: C2 = I_{ioo}^0(f2 dz) = -i/(2pi) L(f2, 1)
    l2_at_1 = untwisted_L_continued(
        _conj_form(f2) if conjugate else f2, 1.0,
        eps=np.conj(complex(eps2)) if conjugate else eps2, tol=tol,
    )
    c2 = -1j / TWO_PI * l2_at_1
    leg_b1_unit = _untwisted_legs(f1, s, q, tol, conjugate=conjugate)[1]
    eps1_used = np.conj(complex(eps1)) if conjugate else complex(eps1)
    eps2_used = np.conj(complex(eps2)) if conjugate else complex(eps2)
    leg_a_f1 = _untwisted_legs(f1, s, q, tol, conjugate=conjugate)[0]
    # I(v,s,1) = [LegA_double] + C2 * [LegA_f1 + eps1 LegB_f1] ... careful:
    # the split of the double integral is
    #   int_{ioo}^{z0} f1 z^{s-1} F2 dz  (termwise: LegA_double)
    # + int_{z0}^{0} f1 z^{s-1} (C2 + eps2 F2hat(w)) dz
    #   = C2 * LegB_f1(unit, eps1 direction) * eps1 + eps1 eps2 LegB2
    return (leg_a + c2 * eps1_used * leg_b1_unit
            + eps1_used * eps2_used * leg_b2)


def _conj_form(f):
    from .forms import FourierSeries

    coeffs = tuple(np.conj(np.array(f.coeffs)).tolist()) if any(
        isinstance(c, complex) for c in f.coeffs
    ) else f.coeffs
    return FourierSeries(f.level, f.label + "^", coeffs, source=f.source,
                         fricke=f.fricke)


def completed_double(f1, f2, s, eps1, eps2, tol=1e-12, conjugate=False):
    """Lambda(f1, f2, s) = (sqrt(q)/2pi)^{s+1} Gamma(s) L(f1, f2, s, 1)."""
    s = complex(s)
    ivalue = _double_ivalue(f1, f2, s, eps1, eps2, tol, conjugate=conjugate)
    i_pow = cmath.exp(0.5j * math.pi * (s + 1))
    lval = (TWO_PI) ** (s + 1) / (i_pow * cgamma(s)) * ivalue
    q = f1.level
    return (math.sqrt(q) / TWO_PI) ** (s + 1) * cgamma(s) * lval
