import json
from pathlib import Path

import numpy as np
import pytest

import figrender

FIXTURES = Path(__file__).parent / "fixtures"


def make_csv(counts, bounds=(-2, 2, -2, 2), meta="q=37"):
    nx, ny = counts.shape
    lines = [f"#meta schema=1;{meta}",
             "#bounds %r %r %r %r %d %d" % (*bounds, nx, ny)]
    for j in range(ny):
        lines.append(" ".join(str(int(counts[i, j])) for i in range(nx)))
    return "\n".join(lines) + "\n"


def test_parse_roundtrip():
    counts = np.arange(12, dtype=np.int64).reshape(3, 4)
    grid = figrender.parse_histogram(make_csv(counts))
    assert grid.nx == 3 and grid.ny == 4
    assert np.array_equal(grid.counts, counts)
    assert grid.bounds == (-2, 2, -2, 2)


def test_schema_mismatch_named():
    counts = np.zeros((2, 2), dtype=np.int64)
    text = make_csv(counts).replace("schema=1", "schema=7")
    with pytest.raises(figrender.RenderError, match="expected 1"):
        figrender.parse_histogram(text)


def test_negative_counts_rejected():
    text = make_csv(np.array([[-1, 0], [0, 0]]))
    with pytest.raises(figrender.RenderError, match="negative"):
        figrender.parse_histogram(text)


def test_render_all_zero(tmp_path):
    csv = tmp_path / "zero.csv"
    csv.write_text(make_csv(np.zeros((16, 16), dtype=np.int64)))
    spec = {"panels": [{"csv": str(csv), "title": "empty"}],
            "output": str(tmp_path / "zero.png")}
    out = figrender.render(spec | {"colormap": "viridis", "log_floor": 0.0})
    assert Path(out).stat().st_size > 0


def test_render_single_spike(tmp_path):
    counts = np.zeros((16, 16), dtype=np.int64)
    counts[8, 8] = 500
    csv = tmp_path / "spike.csv"
    csv.write_text(make_csv(counts))
    spec = {"panels": [{"csv": str(csv), "title": "spike"}],
            "colormap": "magma", "log_floor": 0.0,
            "output": str(tmp_path / "spike.png")}
    figrender.render(spec)
    assert (tmp_path / "spike.png").stat().st_size > 0


def test_render_deterministic(tmp_path):
    csv = FIXTURES / "hist_len1_q37_M6000.csv"
    out1 = tmp_path / "a.png"
    out2 = tmp_path / "b.png"
    base = {"panels": [{"csv": str(csv), "title": "length 1"}],
            "colormap": "viridis", "log_floor": 0.0}
    figrender.render(base | {"output": str(out1)})
    figrender.render(base | {"output": str(out2)})
    assert out1.read_bytes() == out2.read_bytes()


def test_render_panel_grid(tmp_path):
    panels = [
        {"csv": str(FIXTURES / "hist_len1_q37_M6000.csv"), "title": "length 1"},
        {"csv": str(FIXTURES / "hist_len2_q37_M6000.csv"),
         "title": "length 2, orthogonal forms"},
    ]
    spec = {"panels": panels, "colormap": "viridis", "log_floor": 0.0,
            "output": str(tmp_path / "grid.png")}
    figrender.render(spec)
    assert (tmp_path / "grid.png").stat().st_size > 10000


def test_cli_spec_file(tmp_path):
    spec = {"panels": [{"csv": str(FIXTURES / "hist_len1_q37_M6000.csv"),
                        "title": "length 1"}],
            "output": str(tmp_path / "cli.png")}
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    assert figrender.main(["render", "--spec", str(spec_path),
                           "--print-symmetry"]) == 0
    assert (tmp_path / "cli.png").exists()
    assert figrender.main(["render", "--spec", str(tmp_path / "nope.json")]) == 3


def test_symmetry_statistic_ideal_and_lopsided():
    # radially symmetric synthetic data stays near the Poisson floor
    rng = np.random.default_rng(0)
    z = rng.normal(size=200000) + 1j * rng.normal(size=200000)
    counts, _, _ = np.histogram2d(z.real, z.imag, bins=64,
                                  range=[[-4, 4], [-4, 4]])
    grid = figrender.HistogramGrid((-4, 4, -4, 4),
                                   counts.astype(np.int64), {})
    assert figrender.annulus_symmetry(grid) < 0.05
    # everything in one quadrant is flagged well above the 0.25 gate
    w = np.abs(rng.normal(size=50000)) + 1j * np.abs(rng.normal(size=50000))
    counts, _, _ = np.histogram2d(w.real, w.imag, bins=64,
                                  range=[[-4, 4], [-4, 4]])
    grid = figrender.HistogramGrid((-4, 4, -4, 4),
                                   counts.astype(np.int64), {})
    assert figrender.annulus_symmetry(grid) > 0.35


def test_acceptance_10_radial_symmetry():
    """[SECONDARY] annulus-symmetry statistic of the sample CSVs <= 0.25."""
    stats = {}
    for name in ("hist_len1_q37_M6000.csv", "hist_len2_q37_M6000.csv"):
        with open(FIXTURES / name, encoding="utf-8") as fh:
            grid = figrender.parse_histogram(fh.read())
        stats[name] = figrender.annulus_symmetry(grid)
        assert stats[name] <= 0.25, (name, stats[name])
    print("ACCEPTANCE 10: PASS - annulus symmetry "
          + ", ".join(f"{k.split('_')[1]}={v:.3f}" for k, v in stats.items()))
