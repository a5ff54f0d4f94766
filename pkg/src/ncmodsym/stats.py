"""Sample normalization, empirical complex moments, and model densities.

Raw samples are iterated-integral values over a cusp family. The two
normalizations (vol/(4 log c^2))^{l/2} * I and (C_q/log c)^{l/2} * L agree
up to the exact factor (2 pi i)^l because C_q / log c = vol / (4 log c^2).
Comparisons against limit moments run on scale-free ratios, so no absolute
Petersson norm ever enters.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import quad

from . import shuffle as sh
from .modgroup import c_constant, volume


class StatsError(Exception):
    pass


@dataclass
class SampleSet:
    """Raw or normalized complex samples of one word over a cusp family."""

    config: dict            # q, forms, word, ordering, M, fingerprint, ...
    cusps: np.ndarray       # shape (n, 2): numerators and denominators
    values: np.ndarray      # complex, shape (n,)
    normalized: str = "raw"  # "raw" | "Y_M" | "Z_M"

    def __post_init__(self):
        if len(self.cusps) != len(self.values):
            raise StatsError("cusp/value length mismatch")

    @property
    def word(self):
        return tuple(self.config["word"])

    @property
    def denominators(self):
        return self.cusps[:, 1].astype(float)


def normalize(samples, convention="Y_M"):
    """Scale raw values by (vol/(4 log c^2))^{l/2} or (C_q/log c)^{l/2}.

    Y_M applies to the iterated integrals I themselves; Z_M applies to the
    L-values (2 pi i)^l I, so Z_M output = (2 pi i)^l * Y_M output.
    """
    if samples.normalized != "raw":
        raise StatsError("samples already normalized")
    q = samples.config["q"]
    l = len(samples.word)
    cs = samples.denominators
    if cs.min() < 2:
        raise StatsError("normalization needs c(r) >= 2")
    vol = volume(q)
    factor = (vol / (4.0 * np.log(cs**2))) ** (l / 2.0)
    vals = factor * samples.values
    if convention == "Y_M":
        pass
    elif convention == "Z_M":
        vals = (2j * math.pi) ** l * vals
    else:
        raise StatsError(f"unknown convention {convention!r}")
    cfg = dict(samples.config)
    cfg["normalization"] = convention
    return SampleSet(cfg, samples.cusps, vals, normalized=convention)


@dataclass
class MomentTable:
    """Complex moments m[n1][n2] up to a maximal order."""

    entries: dict  # (n1, n2) -> complex or Fraction
    max_order: int
    kind: str = "empirical"

    def __getitem__(self, key):
        return self.entries[key]

    def diagonal(self):
        return [self.entries[(n, n)] for n in range(self.max_order + 1)]


def _tree_sum(arr):
    """Pairwise (tree) summation: deterministic and well-conditioned."""
    arr = np.asarray(arr)
    if len(arr) == 0:
        return 0j
    while len(arr) > 1:
        half = len(arr) // 2
        arr = np.concatenate([arr[:half] + arr[half : 2 * half], arr[2 * half :]])
    return complex(arr[0])


def empirical_moments(samples, max_order):
    """m_hat[n1][n2] = mean of z^n1 conj(z)^n2, pairwise-summed."""
    z = samples.values
    n = len(z)
    if n == 0:
        raise StatsError("empty sample set")
    entries = {}
    powers = [np.ones_like(z)]
    for _ in range(max_order):
        powers.append(powers[-1] * z)
    conj_powers = [np.ones_like(z)]
    for _ in range(max_order):
        conj_powers.append(conj_powers[-1] * np.conj(z))
    for n1 in range(max_order + 1):
        for n2 in range(max_order + 1):
            entries[(n1, n2)] = _tree_sum(powers[n1] * conj_powers[n2]) / n
    return MomentTable(entries, max_order, kind="empirical")


def predicted_moments(word, max_order, gram=None):
    """Limit moments of the normalized symbols; zero off the diagonal."""
    entries = {}
    for n1 in range(max_order + 1):
        for n2 in range(max_order + 1):
            if n1 != n2:
                entries[(n1, n2)] = Fraction(0)
            else:
                entries[(n1, n2)] = sh.moment_m(tuple(word), n1, n1, gram=gram)
    return MomentTable(entries, max_order, kind="predicted")


def scale_free_ratios(table, orders=None):
    """m[n][n] / m[1][1]^n for n >= 2; invariant under sample rescaling."""
    m11 = table[(1, 1)]
    if m11 == 0:
        raise StatsError("vanishing second moment")
    orders = orders if orders is not None else range(2, table.max_order + 1)
    out = {}
    for n in orders:
        val = table[(n, n)]
        if isinstance(val, Fraction) and isinstance(m11, Fraction):
            out[n] = val / m11**n
        else:
            out[n] = complex(val).real / complex(m11).real ** n
    return out


def kotz_density(l, z):
    """(l!)^2/(l pi) exp(-|l! z|^(2/l)) |l! z|^(2(1/l - 1)); complex normal at l=1."""
    if l < 1:
        raise StatsError("l >= 1 required")
    fl = math.factorial(l)
    r = abs(fl * z)
    if r == 0 and l > 1:
        return math.inf
    return fl**2 / (l * math.pi) * math.exp(-(r ** (2.0 / l))) * r ** (2.0 / l - 2.0)


def kotz_moments(l, n):
    """Diagonal moments (l n)! / (l!)^(2n) of the Kotz-like law, exactly."""
    return Fraction(math.factorial(l * n), math.factorial(l) ** (2 * n))


def carleman_partial(table, K):
    """sum_{k <= K} m[k][k]^(-1/(2k)); divergence certifies determinacy."""
    total = 0.0
    for k in range(1, K + 1):
        mkk = table[(k, k)] if isinstance(table, MomentTable) else table(k)
        total += float(mkk) ** (-1.0 / (2 * k))
    return total


def candidate_density_h(r):
    """Radial density candidate for two orthonormal forms, length 2.

    h(r) = (1/4) * int_0^1 (y(1-y))^{-1} sinh(x)/cosh(x)^2 dy with
    x = pi r / (2 sqrt(y(1-y))). The substitution u = pi r cosh(v) removes
    both endpoint singularities; the integrand then decays exponentially.
    """
    if r < 0:
        raise StatsError("r >= 0 required")
    if r == 0:
        # limiting value: int_0^oo sinh(u)/(u cosh^2 u) du
        val, _ = quad(lambda u: math.sinh(u) / (u * math.cosh(u) ** 2)
                      if u > 1e-12 else 1.0, 0, 40, limit=200)
        return val
    def g(v):
        u = math.pi * r * math.cosh(v)
        if u > 250:
            return 0.0
        if u > 25:
            return 2.0 * math.exp(-u)  # sinh/cosh^2 to relative 1e-20
        return math.sinh(u) / math.cosh(u) ** 2
    top = math.acosh(max(2.0, 250.0 / (math.pi * r)))
    val, _ = quad(g, 0, top, limit=200, epsabs=1e-12)
    return val


def histogram2d(samples, bins, bounds):
    """2D counts of (Re z, Im z) plus the versioned CSV block."""
    xmin, xmax, ymin, ymax = bounds
    nx, ny = (bins, bins) if isinstance(bins, int) else bins
    z = samples.values
    counts, _, _ = np.histogram2d(
        z.real, z.imag, bins=[nx, ny],
        range=[[xmin, xmax], [ymin, ymax]],
    )
    return Histogram2D(bounds=tuple(bounds), nx=nx, ny=ny,
                       counts=counts.astype(np.int64),
                       total=len(z), config=dict(samples.config))


@dataclass
class Histogram2D:
    bounds: tuple
    nx: int
    ny: int
    counts: np.ndarray  # shape (nx, ny); [i, j] = x-bin i, y-bin j
    total: int
    config: dict = field(default_factory=dict)

    SCHEMA_VERSION = 1

    def inside(self):
        return int(self.counts.sum())

    def to_csv(self):
        meta = dict(self.config)
        meta["schema"] = self.SCHEMA_VERSION
        meta["total"] = self.total
        items = ";".join(f"{k}={_meta_str(v)}" for k, v in sorted(meta.items()))
        lines = [f"#meta {items}"]
        xmin, xmax, ymin, ymax = self.bounds
        lines.append(f"#bounds {xmin!r} {xmax!r} {ymin!r} {ymax!r} {self.nx} {self.ny}")
        for j in range(self.ny):
            lines.append(" ".join(str(int(self.counts[i, j])) for i in range(self.nx)))
        return "\n".join(lines) + "\n"


def _meta_str(v):
    s = str(v)
    return s.replace(";", ",").replace("=", ":").replace("\n", " ")


def parse_histogram_csv(text):
    """Inverse of Histogram2D.to_csv, validating the schema version."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3 or not lines[0].startswith("#meta ") \
            or not lines[1].startswith("#bounds "):
        raise StatsError("not a histogram CSV: missing #meta/#bounds header")
    meta = {}
    for item in lines[0][len("#meta "):].split(";"):
        if "=" in item:
            k, v = item.split("=", 1)
            meta[k] = v
    if meta.get("schema") != str(Histogram2D.SCHEMA_VERSION):
        raise StatsError(
            f"histogram schema {meta.get('schema')!r} != expected "
            f"{Histogram2D.SCHEMA_VERSION}"
        )
    parts = lines[1].split()
    xmin, xmax, ymin, ymax = (float(x) for x in parts[1:5])
    nx, ny = int(parts[5]), int(parts[6])
    rows = [[int(x) for x in ln.split()] for ln in lines[2:]]
    if len(rows) != ny or any(len(row) != nx for row in rows):
        raise StatsError("histogram CSV body has wrong shape")
    counts = np.array(rows, dtype=np.int64).T  # rows are y-lines
    total = int(meta.get("total", counts.sum()))
    return Histogram2D((xmin, xmax, ymin, ymax), nx, ny, counts, total, meta)
