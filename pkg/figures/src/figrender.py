"""Render histogram CSVs into log-color-graded density panels.

Consumes the versioned histogram CSV schema emitted by the sampling
pipeline (and nothing else from it):

    #meta key=value;...          -- must carry schema=1
    #bounds xmin xmax ymin ymax nx ny
    ny lines of nx integer counts (line j = y-bin j, entries = x-bins)

A figure spec is a JSON file:

    {"panels": [{"csv": "path", "title": "length 1"}, ...],
     "colormap": "viridis", "output": "panels.png", "log_floor": 0.0}

Rendering is a pure function of the CSVs: fixed layout, log(1 + count)
color scale, equal-aspect axes, no timestamps or randomness.
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SCHEMA_VERSION = 1


class RenderError(Exception):
    pass


@dataclass(frozen=True)
class HistogramGrid:
    bounds: tuple  # xmin, xmax, ymin, ymax
    counts: np.ndarray  # shape (nx, ny): [i, j] = x-bin i, y-bin j
    meta: dict

    @property
    def nx(self):
        return self.counts.shape[0]

    @property
    def ny(self):
        return self.counts.shape[1]

    def bin_centers(self):
        xmin, xmax, ymin, ymax = self.bounds
        xs = xmin + (np.arange(self.nx) + 0.5) * (xmax - xmin) / self.nx
        ys = ymin + (np.arange(self.ny) + 0.5) * (ymax - ymin) / self.ny
        return xs, ys


def parse_histogram(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3 or not lines[0].startswith("#meta ") \
            or not lines[1].startswith("#bounds "):
        raise RenderError("not a histogram CSV (missing #meta/#bounds)")
    meta = {}
    for item in lines[0][len("#meta "):].split(";"):
        if "=" in item:
            k, v = item.split("=", 1)
            meta[k] = v
    if meta.get("schema") != str(SCHEMA_VERSION):
        raise RenderError(
            f"histogram schema {meta.get('schema')!r}; expected "
            f"{SCHEMA_VERSION}"
        )
    parts = lines[1].split()
    xmin, xmax, ymin, ymax = (float(x) for x in parts[1:5])
    nx, ny = int(parts[5]), int(parts[6])
    rows = [[int(x) for x in ln.split()] for ln in lines[2:]]
    if len(rows) != ny or any(len(r) != nx for r in rows):
        raise RenderError("histogram body has the wrong shape")
    counts = np.array(rows, dtype=np.int64).T
    if (counts < 0).any():
        raise RenderError("negative counts")
    return HistogramGrid((xmin, xmax, ymin, ymax), counts, meta)


def load_spec(path):
    with open(path, encoding="utf-8") as fh:
        spec = json.load(fh)
    if "panels" not in spec or not spec["panels"]:
        raise RenderError("spec needs a nonempty 'panels' list")
    if "output" not in spec:
        raise RenderError("spec needs an 'output' image path")
    spec.setdefault("colormap", "viridis")
    spec.setdefault("log_floor", 0.0)
    return spec


def render(spec):
    """Render one image with the spec's panels in a grid; returns the path."""
    panels = []
    for panel in spec["panels"]:
        with open(panel["csv"], encoding="utf-8") as fh:
            grid = parse_histogram(fh.read())
        panels.append((panel.get("title", ""), grid))
    n = len(panels)
    ncols = min(2, n)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(5.2 * ncols, 4.6 * nrows), squeeze=False
    )
    floor = float(spec["log_floor"])
    for k, (title, grid) in enumerate(panels):
        ax = axes[k // ncols][k % ncols]
        img = np.log1p(np.maximum(grid.counts.T.astype(float), floor))
        xmin, xmax, ymin, ymax = grid.bounds
        ax.imshow(
            img, origin="lower", extent=(xmin, xmax, ymin, ymax),
            cmap=spec["colormap"], aspect="equal", interpolation="nearest",
        )
        ax.set_title(title)
        ax.set_xlabel("Re")
        ax.set_ylabel("Im")
    for k in range(n, nrows * ncols):
        axes[k // ncols][k % ncols].axis("off")
    fig.tight_layout()
    fig.savefig(spec["output"], dpi=140, metadata={"Software": None})
    plt.close(fig)
    return spec["output"]


def annulus_symmetry(grid, sectors=8, annuli=12, min_count=200,
                     reference="total"):
    """Average over well-filled annuli of the max sector deviation.

    Splits the inscribed disk into `annuli` radial shells and `sectors`
    angular wedges; an annulus qualifies when it holds at least
    `min_count` points. Per annulus the deviation is
    max_k |n_k - mean| / (annulus total); a perfectly radial histogram
    gives ~sqrt(sectors/total) noise, all mass in one wedge gives
    (sectors-1)/sectors. `reference="mean"` divides by the sector mean
    instead (a much harsher measure dominated by thin annuli).
    """
    xs, ys = grid.bin_centers()
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    rr = np.hypot(xx, yy)
    theta = np.mod(np.arctan2(yy, xx), 2 * math.pi)
    if not (grid.counts > 0).any():
        return 0.0
    # stay inside the inscribed disk: annuli clipped by the box corners
    # would be asymmetric by construction
    xmin, xmax, ymin, ymax = grid.bounds
    rmax = min(abs(xmin), abs(xmax), abs(ymin), abs(ymax))
    edges = np.linspace(0.0, rmax, annuli + 1)
    sector_idx = np.minimum((theta / (2 * math.pi) * sectors).astype(int),
                            sectors - 1)
    devs = []
    for a0, a1 in zip(edges, edges[1:]):
        ring = (rr >= a0) & (rr < a1)
        total = grid.counts[ring].sum()
        if total < min_count:
            continue
        counts = np.array([
            grid.counts[ring & (sector_idx == k)].sum() for k in range(sectors)
        ], dtype=float)
        mean = counts.mean()
        if mean == 0:
            continue
        denom = total if reference == "total" else mean
        devs.append(float(np.abs(counts - mean).max() / denom))
    return float(np.mean(devs)) if devs else 0.0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="ncmodsym-render", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render panels from a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--print-symmetry", action="store_true",
                   help="also print the annulus-symmetry statistic per panel")
    args = ap.parse_args(argv)
    try:
        spec = load_spec(args.spec)
        out = render(spec)
    except (RenderError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {out}")
    if args.print_symmetry:
        for panel in spec["panels"]:
            with open(panel["csv"], encoding="utf-8") as fh:
                grid = parse_histogram(fh.read())
            stat = annulus_symmetry(grid)
            print(f"  {panel.get('title', panel['csv'])}: "
                  f"annulus symmetry {stat:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
