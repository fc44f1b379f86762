"""Walk an experiment output tree and render every file kind it recognizes.

Used by the main package's ``report --figures`` path, but importable on its
own; only the documented file names and schemas are inspected.
"""

from __future__ import annotations

import os

from . import render
from .schemas import SchemaError, read_stats_csv


def _is_line(stats) -> bool:
    return stats["grid_shape"] is None


def render_tree(root) -> list[str]:
    """Render figures next to the files they come from; returns image paths.
    Unrenderable files are skipped silently (the tree may hold partial runs)."""
    images = []
    for dirpath, _dirs, files in sorted(os.walk(root)):
        meas = (os.path.join(dirpath, "measurements.csv")
                if "measurements.csv" in files else None)
        truth = (os.path.join(dirpath, "truth_stats.csv")
                 if "truth_stats.csv" in files else None)
        for name in sorted(files):
            path = os.path.join(dirpath, name)
            out = None
            try:
                if name.endswith("_stats.csv") and name != "truth_stats.csv":
                    stats = read_stats_csv(path)
                    out = path[:-4] + ".png"
                    if _is_line(stats):
                        render.render_band_1d(path, out, measurements_path=meas,
                                              truth_path=truth)
                    else:
                        render.render_contour_2d(path, out, truth_path=truth,
                                                 measurements_path=meas)
                elif name == "sweep_matrix.csv":
                    out = path[:-4] + ".png"
                    render.render_heatmap(path, out)
                elif name == "ood_curve.csv":
                    out = path[:-4] + ".png"
                    render.render_curve(path, out)
            except SchemaError:
                continue
            if out is not None:
                images.append(out)
    return images
