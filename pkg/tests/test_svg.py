import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from vinetherm import heatfield as hf
from vinetherm import svg
from vinetherm.errors import ValidationError

NS = "{http://www.w3.org/2000/svg}"


def paths(doc):
    return ET.fromstring(doc.encode()).findall(f"{NS}path")


class TestEmit:
    def test_single_polyline(self):
        pts = np.column_stack([np.zeros(7), np.linspace(0, 1, 7)])
        found = paths(svg.emit_svg([svg.Polyline(pts)]))
        assert len(found) == 1
        d = found[0].get("d")
        assert d.startswith("M ") and d.count(" L ") == 6

    def test_closed_and_labelled(self):
        doc = svg.emit_svg([svg.Polyline([[0, 0], [1, 0], [1, 1]], closed=True, label="wall <a>")],
                           [svg.Marker((0.5, 0.5), label="heater")])
        root = ET.fromstring(doc.encode())
        p = root.find(f"{NS}path")
        assert p.get("d").endswith(" Z")
        assert p.find(f"{NS}title").text == "wall <a>"
        assert root.find(f"{NS}circle") is not None and root.find(f"{NS}text").text == "heater"

    def test_y_axis_up(self):
        p = paths(svg.emit_svg([svg.Polyline([[0, 0], [0, 1]])], width=100, height=100, margin=10))[0]
        (x0, y0), (x1, y1) = [tuple(map(float, s.split(","))) for s in p.get("d")[2:].split(" L ")]
        assert y1 < y0 and x0 == x1

    def test_deterministic(self):
        lines = [svg.Polyline(np.random.default_rng(1).random((5, 2)))]
        assert svg.emit_svg(lines) == svg.emit_svg(lines)

    def test_rejects_empty_or_nonfinite(self):
        with pytest.raises(ValidationError):
            svg.emit_svg([])
        with pytest.raises(ValidationError):
            svg.emit_svg([svg.Polyline([[0, 0], [np.nan, 1]])])


class TestContours:
    XS = np.linspace(-1, 1, 41)
    YS = np.linspace(-1, 1, 41)

    def test_constant_grid(self):
        g = np.full((41, 41), 3.0)
        for level in (1.0, 3.0, 5.0):
            assert svg.contour_lines(self.XS, self.YS, g, level) == []

    def test_shape_check(self):
        with pytest.raises(ValidationError):
            svg.contour_lines(self.XS, self.YS[:-1], np.zeros((41, 41)), 0.5)

    def test_inverse_square_circle(self):
        scene = hf.HeatScene([hf.Heater((0.0, 0.0), 400.0, 0.5)])
        xs, ys, grid = hf.isoflux_grid(scene, (-1.0, 1.0, -1.0, 1.0), (80, 80))
        cell = xs[1] - xs[0]
        for level in (200.0, 400.0, 1000.0):
            lines = svg.contour_lines(xs, ys, grid, level)
            assert len(lines) == 1
            radius = 0.5 * math.sqrt(400.0 / level)
            r = np.hypot(lines[0][:, 0], lines[0][:, 1])
            assert np.max(np.abs(r - radius)) < 0.5 * cell

    def test_heater_nan_is_tolerated(self):
        scene = hf.HeatScene([hf.Heater((0.0125, 0.0125), 400.0, 0.5)])
        xs, ys, grid = hf.isoflux_grid(scene, (-1.0, 1.0, -1.0, 1.0), (80, 80))
        assert np.isnan(grid).any()
        assert len(svg.contour_lines(xs, ys, grid, 500.0)) == 1
