import os

import pytest

from vesselplots.cli import main
from vesselplots.schemas import SchemaError, read_matrix_csv, read_stats_csv

SAMPLES = os.path.join(os.path.dirname(__file__), "..", "samples")


def sample(name):
    return os.path.join(SAMPLES, name)


def _check_image(path):
    assert os.path.exists(path)
    assert os.path.getsize(path) > 0


def test_band_1d_renders(tmp_path):
    out = tmp_path / "band.png"
    rc = main(["render", "--kind", "band-1d",
               "--in", sample("band1d_stats.csv"), sample("band1d_truth.csv"),
               "--measurements", sample("measurements.csv"),
               "--out", str(out), "--title", "1d posterior"])
    assert rc == 0
    _check_image(out)


def test_band_1d_zero_sd_band_collapses(tmp_path):
    # truth file has sd == 0 everywhere; it must still render
    out = tmp_path / "flat.png"
    rc = main(["render", "--kind", "band-1d",
               "--in", sample("band1d_truth.csv"), "--out", str(out)])
    assert rc == 0
    _check_image(out)


def test_surface_2d_renders(tmp_path):
    out = tmp_path / "surf.png"
    rc = main(["render", "--kind", "surface-2d",
               "--in", sample("surface2d_stats.csv"),
               "--measurements", sample("measurements.csv"),
               "--out", str(out)])
    assert rc == 0
    _check_image(out)


def test_contour_2d_renders(tmp_path):
    out = tmp_path / "contour.png"
    rc = main(["render", "--kind", "contour-2d",
               "--in", sample("surface2d_stats.csv"), sample("surface2d_truth.csv"),
               "--measurements", sample("measurements.csv"),
               "--out", str(out)])
    assert rc == 0
    _check_image(out)


def test_heatmap_renders_and_matches_matrix(tmp_path):
    out = tmp_path / "heat.png"
    rc = main(["render", "--kind", "heatmap",
               "--in", sample("sweep_matrix.csv"), "--out", str(out)])
    assert rc == 0
    _check_image(out)
    noise, counts, matrix = read_matrix_csv(sample("sweep_matrix.csv"))
    assert matrix.shape == (4, 4)
    assert list(counts) == [3, 5, 10, 15]
    assert noise[0] == 0.0 and noise[-1] == 0.2


def test_curve_renders(tmp_path):
    out = tmp_path / "curve.png"
    rc = main(["render", "--kind", "curve",
               "--in", sample("ood_curve.csv"), "--out", str(out),
               "--shade", "15", "20"])
    assert rc == 0
    _check_image(out)


def test_schema_violations_exit_nonzero(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,stats,file\n1,2,3,4\n")
    rc = main(["render", "--kind", "band-1d", "--in", str(bad),
               "--out", str(tmp_path / "x.png")])
    assert rc == 2
    rc = main(["render", "--kind", "heatmap", "--in", str(bad),
               "--out", str(tmp_path / "y.png")])
    assert rc == 2
    rc = main(["render", "--kind", "curve", "--in", str(tmp_path / "missing.csv"),
               "--out", str(tmp_path / "z.png")])
    assert rc == 2
    assert not (tmp_path / "x.png").exists()


def test_stats_reader_unit_and_masking():
    stats = read_stats_csv(sample("band1d_stats.csv"))
    assert stats["unit"] == "0.1MPa"
    assert stats["mean_sigma_z"] is None
    assert stats["grid_shape"] is None
    grid = read_stats_csv(sample("surface2d_stats.csv"))
    assert grid["grid_shape"] == (9, 9)
    assert grid["mean_W"] is not None


def test_stats_reader_rejects_ragged(tmp_path):
    bad = tmp_path / "ragged.csv"
    bad.write_text("# unit: 0.1MPa\n"
                   "lambda_theta,lambda_z,mean_sigma_theta,sd_sigma_theta,"
                   "mean_sigma_z,sd_sigma_z\n1.0,1.44,0.5\n")
    with pytest.raises(SchemaError, match="expected 6 columns"):
        read_stats_csv(bad)


def test_determinism(tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    for out in (a, b):
        assert main(["render", "--kind", "heatmap",
                     "--in", sample("sweep_matrix.csv"), "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
