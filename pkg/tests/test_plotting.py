import numpy as np

from harqnp.plotting import plot_curves, plot_from_csv


def test_svg_written(tmp_path):
    curves = {("np_exact", 19): ([0, 0.1, 1], [1, 0.01, 0]),
              ("llr_mean", 21): ([0, 0.5, 1], [1, 0.1, 0])}
    path = plot_curves(curves, tmp_path / "f.svg", points={("decode_based", 21): (0.05, 0.02)},
                       title="t")
    text = path.read_text()
    assert "<svg" in text and "decode-based" in text


def test_deterministic(tmp_path):
    curves = {("np_exact", 19): (np.linspace(0, 1, 5), np.linspace(1, 0, 5))}
    a = plot_curves(curves, tmp_path / "a.svg").read_bytes()
    b = plot_curves(curves, tmp_path / "b.svg").read_bytes()
    assert a == b


def test_from_csv_points(tmp_path):
    rows = {("decode_based", 19): [(0, 1), (0.1, 0.05), (1, 0)],
            ("np_exact", 19): [(0, 1), (0.05, 0.04), (1, 0)]}
    path = plot_from_csv(rows, tmp_path / "c.svg")
    assert "decode-based" in path.read_text()
