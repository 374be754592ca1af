"""Mesh container, geometry, generators and file round trips."""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from polyvem.mesh import (
    MeshError,
    PolyMesh,
    generate_annulus,
    generate_arch,
    generate_mesh,
    generate_rect,
    load_mesh,
    polygon_geometry,
    save_mesh,
    validate_mesh,
)

from helpers import edge_normal_oracle, lshape_hexagon, random_polygon, rotation

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def single_polygon_mesh(coords):
    return PolyMesh(coords, [np.arange(len(coords))], {})


class TestPolygonGeometry:
    def test_unit_square(self):
        g = polygon_geometry(single_polygon_mesh(UNIT_SQUARE), 0)
        assert g.area == pytest.approx(1.0, abs=0.0)
        assert_allclose(g.centroid, [0.5, 0.5])
        assert g.diameter == pytest.approx(np.sqrt(2.0))
        assert_allclose(g.edge_lengths, np.ones(4))

    def test_scaled_square(self):
        g = polygon_geometry(single_polygon_mesh(2.0 * UNIT_SQUARE), 0)
        assert g.area == pytest.approx(4.0)
        assert g.diameter == pytest.approx(2.0 * np.sqrt(2.0))

    def test_lshape_normals_against_oracle(self):
        coords = lshape_hexagon()
        g = polygon_geometry(single_polygon_mesh(coords), 0)
        assert g.area == pytest.approx(3.0)
        # frozen expected normals (edge j from vertex j to j+1)
        expected = np.array(
            [[0, -1], [1, 0], [0, 1], [1, 0], [0, 1], [-1, 0]], dtype=float
        )
        assert_allclose(g.edge_normals, expected, atol=1e-14)
        assert_allclose(g.edge_normals, edge_normal_oracle(coords), atol=1e-14)

    def test_unit_normals_and_closure(self):
        rng = np.random.default_rng(7)
        for k in range(50):
            coords = random_polygon(rng, int(rng.integers(3, 11)), convex=bool(k % 2))
            g = polygon_geometry(single_polygon_mesh(coords), 0)
            assert_allclose(np.linalg.norm(g.edge_normals, axis=1), 1.0, atol=1e-12)
            closure = (g.edge_lengths[:, None] * g.edge_normals).sum(axis=0)
            assert np.linalg.norm(closure) <= 1e-12 * g.edge_lengths.sum()

    def test_degenerate_polygon_raises(self):
        collinear = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        with pytest.raises(MeshError, match="element 0"):
            polygon_geometry(single_polygon_mesh(collinear), 0)

    def test_translation_invariance_rotation_equivariance(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            coords = random_polygon(rng, 6, convex=False)
            g0 = polygon_geometry(single_polygon_mesh(coords), 0)
            shift = rng.uniform(-5, 5, size=2)
            g1 = polygon_geometry(single_polygon_mesh(coords + shift), 0)
            assert g1.area == pytest.approx(g0.area, rel=1e-12)
            assert g1.diameter == pytest.approx(g0.diameter, rel=1e-12)
            assert_allclose(g1.edge_lengths, g0.edge_lengths, rtol=1e-12)
            assert_allclose(g1.edge_normals, g0.edge_normals, atol=1e-12)
            th = rng.uniform(0, 2 * np.pi)
            R = rotation(th)
            g2 = polygon_geometry(single_polygon_mesh(coords @ R.T), 0)
            assert g2.area == pytest.approx(g0.area, rel=1e-12)
            assert_allclose(g2.edge_normals, g0.edge_normals @ R.T, atol=1e-10)


class TestValidateMesh:
    def test_valid_strip_empty_report(self):
        mesh = generate_rect(2.0, 1.0, 2, 1)
        assert validate_mesh(mesh) == []

    def test_clockwise_polygon_flagged(self):
        mesh = PolyMesh(UNIT_SQUARE, [np.array([0, 3, 2, 1])], {})
        report = validate_mesh(mesh)
        assert len(report) == 1 and "element 0" in report[0] and "area" in report[0]

    def test_dangling_node_set_flagged(self):
        mesh = PolyMesh(UNIT_SQUARE, [np.arange(4)], {"bad": np.array([9])})
        report = validate_mesh(mesh)
        assert any("node set 'bad'" in line for line in report)

    def test_short_polygon_flagged(self):
        mesh = PolyMesh(UNIT_SQUARE, [np.array([0, 1])], {})
        assert any("fewer than 3" in line for line in validate_mesh(mesh))

    def test_repeated_index_flagged(self):
        mesh = PolyMesh(UNIT_SQUARE, [np.array([0, 1, 1, 2])], {})
        assert any("repeated" in line for line in validate_mesh(mesh))

    def test_self_intersection_flagged(self):
        bowtie = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
        mesh = PolyMesh(bowtie, [np.arange(4)], {})
        report = validate_mesh(mesh)
        assert report  # flagged as CW/self-intersecting

    def test_out_of_range_index_flagged(self):
        mesh = PolyMesh(UNIT_SQUARE, [np.array([0, 1, 7])], {})
        assert any("out of range" in line for line in validate_mesh(mesh))


class TestGenerators:
    def test_rect_counts(self):
        mesh = generate_rect(2.0, 1.0, 2, 1)
        assert mesh.n_nodes == 6
        assert mesh.n_elements == 2
        assert validate_mesh(mesh) == []

    def test_rect_area_exact(self):
        mesh = generate_rect(3.0, 2.0, 5, 4)
        total = sum(polygon_geometry(mesh, e).area for e in range(mesh.n_elements))
        assert total == pytest.approx(6.0, rel=1e-10)

    def test_rect_grading(self):
        mesh = generate_mesh({"shape": "rect", "lx": 1.0, "ly": 1.0, "nx": 4, "ny": 1, "grade_x": 8.0})
        xs = np.unique(mesh.vertices[:, 0])
        widths = np.diff(xs)
        assert widths[-1] / widths[0] == pytest.approx(8.0, rel=1e-9)
        assert xs[-1] == pytest.approx(1.0, rel=1e-12)

    def test_annulus_matches_ring_radii(self):
        # benchmark ring: inner radius 2.0, outer radius 2.5
        mesh = generate_annulus(2.0, 2.5, 16, 2)
        r = np.linalg.norm(mesh.vertices, axis=1)
        assert r.min() == pytest.approx(2.0)
        assert r.max() == pytest.approx(2.5)
        assert validate_mesh(mesh) == []
        # seam merged by index identification: exactly n_circ * (n_rad + 1) vertices
        assert mesh.n_nodes == 16 * 3
        assert mesh.n_elements == 16 * 2

    def test_annulus_set_locations(self):
        mesh = generate_annulus(2.0, 2.5, 16, 2, load_width=1, support_width=3)
        top = mesh.vertices[mesh.node_sets["top"]]
        assert_allclose(top, [[0.0, 2.5]], atol=1e-12)
        bot = mesh.vertices[mesh.node_sets["bottom"]]
        assert bot.shape == (3, 2)
        assert np.all(bot[:, 1] < 0)

    def test_annulus_area_converges_monotonically(self):
        exact = np.pi * (2.5**2 - 2.0**2)
        areas = []
        for n_circ in (16, 32, 64):
            mesh = generate_annulus(2.0, 2.5, n_circ, 2)
            areas.append(sum(polygon_geometry(mesh, e).area for e in range(mesh.n_elements)))
        assert areas[0] < areas[1] < areas[2] < exact
        assert areas[2] == pytest.approx(exact, rel=5e-3)

    def test_arch_midspan_rise(self):
        # the arch map lifts every y by sin(pi x / span); midspan rises by 1
        mesh = generate_arch(12.0, 1.0, 8, 2)
        load_node = mesh.node_sets["load"][0]
        assert_allclose(mesh.vertices[load_node], [6.0, 1.0 + np.sin(np.pi * 0.5)])
        left = mesh.node_sets["support_left"][0]
        right = mesh.node_sets["support_right"][0]
        assert_allclose(mesh.vertices[left], [0.0, 0.0], atol=1e-12)
        assert_allclose(mesh.vertices[right], [12.0, np.sin(np.pi)], atol=1e-12)
        assert validate_mesh(mesh) == []

    def test_generator_spec_errors(self):
        with pytest.raises(MeshError):
            generate_rect(0.0, 1.0, 2, 2)
        with pytest.raises(MeshError):
            generate_rect(1.0, 1.0, 0, 2)
        with pytest.raises(MeshError):
            generate_arch(12.0, 1.0, 7, 2)
        with pytest.raises(MeshError):
            generate_annulus(2.5, 2.0, 16, 2)
        with pytest.raises(MeshError):
            generate_mesh({"shape": "hexgrid"})
        with pytest.raises(MeshError):
            generate_mesh({"shape": "rect", "lx": 1.0, "ly": 1.0, "nx": 1, "ny": 1, "bogus": 3})


class TestMeshIO:
    def test_round_trip_bit_exact(self, tmp_path):
        mesh = generate_arch(12.0, 1.0, 8, 2)
        path = tmp_path / "arch.json"
        save_mesh(mesh, path)
        loaded = load_mesh(path)
        assert np.array_equal(loaded.vertices, mesh.vertices)
        assert all(np.array_equal(a, b) for a, b in zip(loaded.polygons, mesh.polygons))
        assert set(loaded.node_sets) == set(mesh.node_sets)
        for name in mesh.node_sets:
            assert np.array_equal(loaded.node_sets[name], mesh.node_sets[name])

    def test_invalid_polygon_in_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"vertices": [[0, 0], [1, 0], [1, 1]], "polygons": [[0, 1]]}))
        with pytest.raises(MeshError, match="element 0"):
            load_mesh(path)

    def test_parse_error_has_line(self, tmp_path):
        path = tmp_path / "syntax.json"
        path.write_text('{"vertices": [[0, 0],\n  broken')
        with pytest.raises(MeshError, match="line"):
            load_mesh(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "extra.json"
        path.write_text(
            json.dumps({"vertices": [[0, 0], [1, 0], [1, 1]], "polygons": [[0, 1, 2]], "colour": 1})
        )
        with pytest.raises(MeshError, match="unknown keys"):
            load_mesh(path)

    def test_voronoi_style_mesh_loads(self, tmp_path):
        # a small hand-built centroidal-Voronoi-style patch: one hexagonal
        # cell surrounded by pentagons (schema-conformant arbitrary polygons)
        hexagon = [
            (np.cos(a), np.sin(a)) for a in np.linspace(0, 2 * np.pi, 7)[:-1]
        ]
        outer = [
            (2 * np.cos(a), 2 * np.sin(a)) for a in np.linspace(0, 2 * np.pi, 7)[:-1]
        ]
        vertices = [list(p) for p in hexagon + outer]
        polygons = [[0, 1, 2, 3, 4, 5]]
        for j in range(6):
            polygons.append([j, 6 + j, 6 + ((j + 1) % 6), (j + 1) % 6])
        payload = {"vertices": vertices, "polygons": polygons, "node_sets": {"rim": list(range(6, 12))}}
        path = tmp_path / "voronoi.json"
        path.write_text(json.dumps(payload))
        mesh = load_mesh(path)
        assert mesh.n_elements == 7
        assert validate_mesh(mesh) == []
