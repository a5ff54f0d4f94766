"""Command-line entry point.

Exit codes: 0 success, 2 verification failure, 3 configuration error.
Every output file embeds the configuration fingerprint; `moments` and
`shuffle-check` refuse sample files whose fingerprints disagree.
"""

import argparse
import hashlib
import json
import math
import random
import string
import struct
import sys

import numpy as np

from . import forms, iterint, lseries, modgroup, shuffle, stats


class ConfigError(Exception):
    pass


class VerificationFailure(Exception):
    pass


LETTERS = string.ascii_lowercase


def parse_word(text, nforms):
    word = []
    for ch in text.strip():
        if ch not in LETTERS[:nforms]:
            raise ConfigError(
                f"word letter {ch!r} outside the {nforms} declared forms"
            )
        word.append(LETTERS.index(ch))
    return tuple(word)


def word_name(word):
    return "".join(LETTERS[i] for i in word) or "1"


def fingerprint(cfg):
    blob = json.dumps(cfg, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def required_form_N(fs, tol, L, extra_c=0):
    """Fourier truncation covering the generator cache (and one direct cusp)."""
    refine = iterint.GeneratorCache.CACHE_REFINE
    cs = [abs(g[2]) for g in fs.generators if g[2] != 0] + [max(1, extra_c)]
    return max(iterint.required_N(1.0 / c, L, tol * refine) for c in cs)


def load_forms(labels, q, N):
    out = []
    for label in labels:
        f = forms.get_form(label, N)
        if f.level != q:
            raise ConfigError(f"form {label} has level {f.level}, not {q}")
        out.append(f)
    return tuple(out)


# ---------------------------------------------------------------------------
# sample files


SAMPLE_MAGIC = b"NCMODSYM-SAMPLES-1\n"


def write_samples_binary(path, cfg, cusps, values, words):
    header = json.dumps(cfg).encode()
    with open(path, "wb") as fh:
        fh.write(SAMPLE_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(struct.pack("<Q", len(cusps)))
        for i, r in enumerate(cusps):
            fh.write(struct.pack("<qq", r.a, r.c))
            for w in words:
                v = values[w][i]
                fh.write(struct.pack("<dd", v.real, v.imag))


def write_samples_csv(path, cfg, cusps, values, words):
    with open(path, "w", encoding="utf-8") as fh:
        items = ";".join(f"{k}={stats._meta_str(v)}" for k, v in sorted(cfg.items()))
        fh.write(f"#meta {items}\n")
        cols = " ".join(f"re_{word_name(w)} im_{word_name(w)}" for w in words)
        fh.write(f"#columns a c {cols}\n")
        for i, r in enumerate(cusps):
            row = [str(r.a), str(r.c)]
            for w in words:
                v = values[w][i]
                row.append(repr(float(v.real)))
                row.append(repr(float(v.imag)))
            fh.write(" ".join(row) + "\n")


def read_samples(path):
    with open(path, "rb") as fh:
        start = fh.read(len(SAMPLE_MAGIC))
        if start == SAMPLE_MAGIC:
            (hlen,) = struct.unpack("<I", fh.read(4))
            cfg = json.loads(fh.read(hlen).decode())
            (n,) = struct.unpack("<Q", fh.read(8))
            words = [tuple(w) for w in cfg["words"]]
            cusps = np.empty((n, 2), dtype=np.int64)
            values = {w: np.empty(n, dtype=complex) for w in words}
            rec = struct.Struct("<qq" + "dd" * len(words))
            for i in range(n):
                fields = rec.unpack(fh.read(rec.size))
                cusps[i] = fields[:2]
                for k, w in enumerate(words):
                    values[w][i] = complex(fields[2 + 2 * k], fields[3 + 2 * k])
            return cfg, cusps, values
    # CSV fallback
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("#meta "):
        raise ConfigError(f"{path}: not a sample file")
    cfg = {}
    for item in lines[0][len("#meta "):].split(";"):
        if "=" in item:
            k, v = item.split("=", 1)
            cfg[k] = v
    cfg["words"] = _parse_words_meta(cfg.get("words", "[]"))
    cfg["q"] = int(cfg["q"])
    words = [tuple(w) for w in cfg["words"]]
    rows = [ln.split() for ln in lines[2:] if ln.strip()]
    cusps = np.array([[int(r[0]), int(r[1])] for r in rows], dtype=np.int64)
    values = {}
    for k, w in enumerate(words):
        re = np.array([float(r[2 + 2 * k]) for r in rows])
        im = np.array([float(r[3 + 2 * k]) for r in rows])
        values[w] = re + 1j * im
    return cfg, cusps, values


def _parse_words_meta(text):
    text = text.strip()
    if text.startswith("["):
        return [tuple(w) for w in json.loads(text.replace("(", "[").replace(")", "]"))]
    return [tuple(LETTERS.index(ch) for ch in w) for w in text.split(",") if w]


def sample_set_for(cfg, cusps, values, word):
    sub = dict(cfg)
    sub["word"] = list(word)
    return stats.SampleSet(sub, cusps, values[word])


# ---------------------------------------------------------------------------
# subcommands


def cmd_coeffs(args):
    q = args.level
    f = forms.get_form(args.label, args.n)
    f.validate()
    dual_checked = False
    if args.label == "11a":
        aps = {p: forms.curve_ap(forms.CURVE_11A, p)
               for p in forms.primes_up_to(args.n)}
        g = forms.hecke_extend(aps, 11, args.n, label="11a-curve")
        if g.coeffs != f.coeffs:
            raise VerificationFailure("eta product and curve counts disagree")
        dual_checked = True
    elif args.label in ("37a", "37b"):
        try:
            fixture = forms.load_fixture(args.label)
            n = min(f.nmax, fixture.nmax)
            if fixture.coeffs[:n] != f.coeffs[:n]:
                raise VerificationFailure(
                    f"{args.label}: curve counts and fixture disagree"
                )
            dual_checked = True
        except FileNotFoundError:
            pass
    payload = {
        "level": f.level, "label": f.label, "source": f.source,
        "fricke": f.fricke, "dual_source_checked": dual_checked,
        "an": list(f.coeffs[: args.n]),
    }
    _emit(args, payload,
          f"{f.label}: {args.n} coefficients ok"
          + (", dual sources agree" if dual_checked else ""))
    return 0


def cmd_generators(args):
    fs = modgroup.farey_symbol(args.level)
    rng = random.Random(args.seed)
    n_trials = 200
    for _ in range(n_trials):
        m = modgroup.IDENTITY
        for _ in range(rng.randrange(1, 16)):
            gi = rng.randrange(len(fs.generators))
            e = rng.choice([-2, -1, 1, 2])
            g = fs.generators[gi]
            m = m @ modgroup._mat_pow(g if e > 0 else g.inv(), abs(e))
        w = modgroup.word_decompose(m, fs)
        if tuple(w.evaluate(fs)) != tuple(m):
            raise VerificationFailure("word decomposition round-trip failed")
    payload = {
        "level": args.level,
        "fractions": [f"{a}/{b}" for a, b in fs.fractions],
        "labels": [lab[0] if lab[0] != "pair" else f"pair{lab[1]}"
                   for lab in fs.labels],
        "generators": [list(g) for g in fs.generators],
        "roundtrip_trials": n_trials,
    }
    _emit(args, payload,
          f"Gamma0({args.level}): {len(fs.generators)} generators, "
          f"{n_trials} random round-trips verified")
    return 0


def cmd_integral(args):
    q = args.level
    labels = args.forms.split(",")
    params = iterint.EvalParams(L=args.trunc_len, tol=args.tol)
    num, den = (int(x) for x in args.cusp.split("/"))
    if den % q or math.gcd(num, den) != 1:
        raise ConfigError(f"cusp {args.cusp} invalid for level {q}")
    r = modgroup.make_cusp(num % den, den)
    fs = modgroup.farey_symbol(q)
    N = required_form_N(fs, args.tol, args.trunc_len, extra_c=den)
    fl = load_forms(labels, q, N)
    cache = _get_cache(args, fs, fl, params)
    ser = iterint.j_at_cusp(r, cache)
    payload = {
        "level": q, "forms": labels, "cusp": f"{r.a}/{r.c}", "L": params.L,
        "coefficients": {word_name(w): [ser[w].real, ser[w].imag]
                          for w in ser.words},
    }
    if args.oracle:
        direct = iterint.cusp_j_direct(modgroup.cusp_to_matrix(r), fl, params)
        worst = max(abs(a - b) for a, b in zip(ser.coeffs, direct.coeffs))
        payload["oracle_residual"] = worst
        if worst > 100 * args.tol:
            _emit(args, payload, f"oracle residual {worst:.3g} too large")
            raise VerificationFailure("fast route disagrees with direct route")
    _emit(args, payload, f"I at {r.a}/{r.c}: "
          + ", ".join(f"{word_name(w)}={ser[w]:.6g}" for w in ser.words if w))
    return 0


def cmd_sample(args):
    q = args.level
    labels = args.forms.split(",")
    words = [parse_word(w, len(labels)) for w in args.word.split(",")]
    params = iterint.EvalParams(L=args.trunc_len, tol=args.tol)
    if any(len(w) > params.L for w in words):
        raise ConfigError("word longer than the truncation length")
    if modgroup.count_T(q, args.max_c, args.ordering) == 0:
        raise ConfigError("empty cusp family: raise --max-c")
    fs = modgroup.farey_symbol(q)
    N = required_form_N(fs, args.tol, args.trunc_len)
    fl = load_forms(labels, q, N)
    cache = _get_cache(args, fs, fl, params)
    shards = max(1, args.shards)
    merged = {}
    for k in range(shards):
        cusps, values = iterint.batch_evaluate(
            q, fl, words, args.max_c, args.ordering, params,
            fs=fs, cache=cache, shard=(k, shards) if shards > 1 else None,
        )
        for i, r in enumerate(cusps):
            merged[(r.c, r.a)] = (r, [values[w][i] for w in words])
    keys = sorted(merged)
    cusps = [merged[k][0] for k in keys]
    values = {w: np.array([merged[k][1][j] for k in keys])
              for j, w in enumerate(words)}
    cfg = {
        "q": q, "forms": labels, "words": [list(w) for w in words],
        "ordering": args.ordering, "M": args.max_c, "L": params.L,
        "tol": params.tol, "shards": shards,
    }
    cfg["fingerprint"] = fingerprint(cfg)
    if args.format == "binary":
        write_samples_binary(args.out, cfg, cusps, values, words)
    else:
        write_samples_csv(args.out, cfg, cusps, values, words)
    print(f"wrote {len(cusps)} cusps x {len(words)} words -> {args.out} "
          f"[{cfg['fingerprint']}]")
    return 0


def cmd_moments(args):
    sets = [read_samples(p) for p in args.samples]
    fps = {cfg.get("fingerprint") for cfg, _, _ in sets}
    if len(fps) > 1:
        raise ConfigError(f"sample files disagree: fingerprints {sorted(fps)}")
    cfg, cusps, values = sets[0]
    for other_cfg, other_cusps, other_values in sets[1:]:
        cusps = np.concatenate([cusps, other_cusps])
        for w in values:
            values[w] = np.concatenate([values[w], other_values[w]])
    report = {"fingerprint": cfg.get("fingerprint"), "words": {}}
    lines = []
    for w in (tuple(x) for x in cfg["words"]):
        raw = sample_set_for(cfg, cusps, values, w)
        norm = stats.normalize(raw, args.normalize)
        emp = stats.empirical_moments(norm, args.max_order)
        pred = stats.predicted_moments(w, args.max_order)
        ratios_emp = stats.scale_free_ratios(emp)
        ratios_pred = stats.scale_free_ratios(pred)
        carleman = stats.carleman_partial(
            lambda k: shuffle.moment_m(w, k, k), 40
        )
        entry = {
            "empirical_diagonal": [
                [complex(x).real, complex(x).imag] for x in emp.diagonal()
            ],
            "predicted_diagonal": [str(x) for x in pred.diagonal()],
            "offdiag_10": abs(emp[(1, 0)]),
            "offdiag_21": abs(emp[(2, 1)]),
            "scale_free_empirical": {n: complex(v).real
                                      for n, v in ratios_emp.items()},
            "scale_free_predicted": {n: float(v) for n, v in ratios_pred.items()},
            "carleman_partial_40": carleman,
            "fitted_scale_m11": complex(emp[(1, 1)]).real,
        }
        report["words"][word_name(w)] = entry
        lines.append(
            f"word {word_name(w)}: m11={entry['fitted_scale_m11']:.5f} "
            + " ".join(
                f"r{n}={entry['scale_free_empirical'][n]:.3f}"
                f"(pred {entry['scale_free_predicted'][n]:.3f})"
                for n in sorted(ratios_emp)
            )
        )
    _emit(args, report, "\n".join(lines))
    return 0


def cmd_fe_check(args):
    q = args.level
    labels = args.forms.split(",")
    N = max(30000, 4 * q)
    fl = load_forms(labels, q, N)
    s_grid = [complex(s) for s in args.s_grid.split(",")]
    report = {"level": q, "twisted": [], "untwisted": None}
    worst = 0.0
    if args.cusp:
        num, den = (int(x) for x in args.cusp.split("/"))
        r = modgroup.make_cusp(num % den, den)
        for s in s_grid:
            resid, scale = lseries.twisted_fe_residual(fl[0], r, s)
            rel = resid / scale
            worst = max(worst, rel)
            report["twisted"].append(
                {"s": str(s), "residual": resid, "scale": scale, "relative": rel}
            )
        v1 = lseries.twisted_L_continued(fl[0], r, 1.3, h=1.0)
        v2 = lseries.twisted_L_continued(fl[0], r, 1.3, h=2.0)
        report["split_independence"] = abs(v1 - v2)
        worst = max(worst, report["split_independence"])
    rep = lseries.untwisted_FE_check(
        fl[0], fl[1] if len(fl) > 1 else None,
        s_grid=tuple(s.real if s.imag == 0 else s for s in s_grid),
    )
    rep["length1"] = [
        {**row, "s": str(row["s"])} for row in rep["length1"]
    ]
    if "length2" in rep:
        rep["length2"] = [
            {**row, "s": str(row["s"])} for row in rep["length2"]
        ]
        worst = max(worst, max(r["relative"] for r in rep["length2"]))
    worst = max(worst, max(r["relative"] for r in rep["length1"]))
    for key in ("eps1", "eps2"):
        if key in rep:
            rep[key] = str(rep[key])
    report["untwisted"] = rep
    ok = worst <= args.fe_tol
    _emit(args, report,
          f"worst relative FE residual {worst:.3g} "
          f"({'ok' if ok else 'FAIL'} at {args.fe_tol:g})")
    if not ok:
        raise VerificationFailure("functional equation residual too large")
    return 0


def cmd_shuffle_check(args):
    cfg, cusps, values = read_samples(args.samples)
    words = [tuple(w) for w in cfg["words"]]
    u, v = (parse_word(w, 26) for w in args.pair.split("|"))
    needed = shuffle.shuffle(u, v)
    for w in list(needed) + [u, v]:
        if w not in words:
            raise ConfigError(
                f"sample file lacks word {word_name(w)}; re-run sample"
            )
    lhs = values[u] * values[v]
    rhs = np.zeros_like(lhs)
    for w, cwt in needed.items():
        rhs = rhs + cwt * values[w]
    resid = np.abs(lhs - rhs)
    scale = 1.0 + np.abs(lhs)
    rel = (resid / scale).max()
    payload = {
        "pair": args.pair, "n": len(lhs),
        "max_residual": float(resid.max()), "max_relative": float(rel),
    }
    ok = rel <= args.fe_tol
    _emit(args, payload,
          f"shuffle relation {word_name(u)}*{word_name(v)}: "
          f"max relative residual {rel:.3g} over {len(lhs)} cusps "
          f"({'ok' if ok else 'FAIL'})")
    if not ok:
        raise VerificationFailure("shuffle relation violated")
    return 0


def cmd_hist(args):
    cfg, cusps, values = read_samples(args.samples)
    words = [tuple(w) for w in cfg["words"]]
    w = parse_word(args.word, 26) if args.word else words[0]
    if w not in words:
        raise ConfigError(f"sample file lacks word {args.word}")
    raw = sample_set_for(cfg, cusps, values, w)
    norm = stats.normalize(raw, args.normalize)
    if args.bounds:
        b = [float(x) for x in args.bounds.split(",")]
    else:
        lim = 1.05 * float(np.quantile(np.abs(norm.values), 0.995))
        b = [-lim, lim, -lim, lim]
    h = stats.histogram2d(norm, args.bins, tuple(b))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(h.to_csv())
    print(f"wrote {h.nx}x{h.ny} histogram ({h.inside()} of {h.total} inside) "
          f"-> {args.out}")
    return 0


def cmd_conjecture(args):
    rows = []
    all_equal = True
    for n in range(1, args.n_max + 1):
        lhs, rhs, equal = shuffle.conjecture_check(n)
        m_nn = shuffle.moment_m((0, 1), n, n)
        all_equal = all_equal and equal
        rows.append({
            "n": n, "m_nn": str(m_nn), "coeff_square_sum": str(lhs),
            "secant_side": str(rhs), "equal": equal,
        })
    payload = {"rows": rows, "all_equal": all_equal}
    text = "\n".join(
        f"n={r['n']:2d}  m_nn = {r['m_nn']:>24}  match={r['equal']}"
        for r in rows
    )
    _emit(args, payload, text)
    if not all_equal:
        raise VerificationFailure("moment table mismatch")
    return 0


def _get_cache(args, fs, fl, params):
    path = getattr(args, "cache", None)
    if path:
        import os

        if os.path.exists(path):
            try:
                return iterint.load_cache(path, fs, fl, params)
            except iterint.IterIntError as exc:
                print(f"cache ignored: {exc}", file=sys.stderr)
        cache = iterint.GeneratorCache(fs, fl, params)
        iterint.save_cache(cache, path)
        return cache
    return iterint.GeneratorCache(fs, fl, params)


def _emit(args, payload, human):
    print(human)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1, default=str)
        print(f"report -> {out}")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="ncmodsym",
        description="iterated integrals of cusp forms, twisted L-values, "
                    "and their statistics over cusp families",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, forms_flag=True):
        p.add_argument("--level", "-q", type=int, required=True)
        if forms_flag:
            p.add_argument("--forms", required=True,
                           help="comma-separated labels, e.g. 37a,37b")
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--trunc-len", type=int, default=2)
        p.add_argument("--cache", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("coeffs", help="print/validate Fourier coefficients")
    p.add_argument("--level", "-q", type=int, required=True)
    p.add_argument("--label", required=True)
    p.add_argument("-n", type=int, default=100)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("generators", help="Farey symbol and generators")
    p.add_argument("--level", "-q", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generators)

    p = sub.add_parser("integral", help="J series at one cusp")
    common(p)
    p.add_argument("--cusp", required=True, help="a/c with q | c")
    p.add_argument("--oracle", action="store_true",
                   help="compare against the direct two-point evaluation")
    p.set_defaults(func=cmd_integral)

    p = sub.add_parser("sample", help="evaluate a cusp family to a file")
    common(p)
    p.add_argument("--word", required=True,
                   help="comma-separated words over the form letters, "
                        "e.g. a,b,ab,ba")
    p.add_argument("--ordering", choices=["c_le_M", "c_sq_le_M"],
                   default="c_le_M")
    p.add_argument("--max-c", type=int, required=True)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--format", choices=["csv", "binary"], default="csv")
    p.set_defaults(func=cmd_sample)
    p.set_defaults(out="samples.csv")

    p = sub.add_parser("moments", help="empirical vs predicted moments")
    p.add_argument("samples", nargs="+")
    p.add_argument("--max-order", type=int, default=3)
    p.add_argument("--normalize", choices=["Y_M", "Z_M"], default="Y_M")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("fe-check", help="functional equation residuals")
    common(p)
    p.add_argument("--cusp", default=None)
    p.add_argument("--s-grid", default="0.7,1.0,1.3")
    p.add_argument("--fe-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_fe_check)

    p = sub.add_parser("shuffle-check", help="per-cusp shuffle residuals")
    p.add_argument("samples")
    p.add_argument("--pair", required=True, help="two words, e.g. a|b")
    p.add_argument("--fe-tol", type=float, default=1e-6)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_shuffle_check)

    p = sub.add_parser("hist", help="histogram CSV from a sample file")
    p.add_argument("samples")
    p.add_argument("--word", default=None)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--bounds", default=None,
                   help="xmin,xmax,ymin,ymax (default: 99.5% quantile box)")
    p.add_argument("--normalize", choices=["Y_M", "Z_M"], default="Y_M")
    p.add_argument("--out", default="hist.csv")
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("conjecture", help="orthonormal length-2 moment table")
    p.add_argument("n_max", type=int, nargs="?", default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_conjecture)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (VerificationFailure, iterint.ValidationError,
            forms.InvariantViolationError) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, forms.FormError, modgroup.ModGroupError,
            stats.StatsError, lseries.LSeriesError,
            iterint.IterIntError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
