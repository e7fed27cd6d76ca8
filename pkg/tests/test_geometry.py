"""Layout construction and distance plumbing."""

import csv

import numpy as np
import pytest

from twotier.geometry import (NetworkGeometry, distance, distance_matrix,
                              gain_distance, layout_to_csv, make_grid_layout,
                              make_random_layout, normalized_ap_distances)

# Published normalized AP distances for the 4x4 reference grid
# (D = D_f = 0.1, grid extent 500 m, cell radius 1000 m), in AP order.
REFERENCE_DISTANCES = np.array([
    0.2915, 0.1716, 0.1716, 0.2915, 0.2506, 0.0850, 0.0850, 0.2506,
    0.3100, 0.2014, 0.2014, 0.3100, 0.4301, 0.3598, 0.3598, 0.4301,
])


class TestGridLayout:
    def test_reference_grid_distances(self):
        geom = make_grid_layout(16, 0.1, 0.1)
        assert np.max(np.abs(normalized_ap_distances(geom) - REFERENCE_DISTANCES)) < 5e-5

    def test_grid_offsets_n16(self):
        geom = make_grid_layout(16, 0.1, 0.1)
        xs = np.unique(np.round(geom.femto_aps[:, 0] - 100.0, 6))
        assert np.allclose(sorted(xs), [-250.0, -250.0 / 3, 250.0 / 3, 250.0])

    def test_grid_spacing_n4(self):
        geom = make_grid_layout(4, 0.5, 0.5)
        offs = np.unique(np.round(geom.femto_aps[:, 1], 9))
        assert np.allclose(offs, [-250.0, 250.0])

    def test_single_femtocell_at_center(self):
        geom = make_grid_layout(1, 0.5, 0.5)
        assert np.allclose(geom.femto_aps[0], [500.0, 0.0])

    def test_cellular_user_position(self):
        geom = make_grid_layout(4, 0.3, 0.7)
        assert np.allclose(geom.cellular_user, [300.0, 0.0])
        assert distance(geom.cellular_user, geom.macro_bs) <= geom.cell_radius

    def test_femto_users_on_radius(self):
        geom = make_grid_layout(16, 0.1, 0.1)
        own = np.linalg.norm(geom.femto_users - geom.femto_aps, axis=1)
        assert np.allclose(own, geom.femto_radius, atol=1e-9)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            make_grid_layout(5, 0.5, 0.5)

    def test_rejects_bad_fractions(self):
        with pytest.raises(ValueError):
            make_grid_layout(4, 0.0, 0.5)
        with pytest.raises(ValueError):
            make_grid_layout(4, 0.5, 1.5)

    def test_pure_function_of_parameters(self):
        a = make_grid_layout(9, 0.4, 0.6)
        b = make_grid_layout(9, 0.4, 0.6)
        assert np.array_equal(a.femto_aps, b.femto_aps)
        assert np.array_equal(a.femto_users, b.femto_users)


class TestRandomLayout:
    def test_deterministic_under_seed(self):
        a = make_random_layout(64, 0.5, 0.5, seed=7)
        b = make_random_layout(64, 0.5, 0.5, seed=7)
        assert np.array_equal(a.femto_aps, b.femto_aps)
        assert np.array_equal(a.femto_users, b.femto_users)

    def test_different_seed_differs(self):
        a = make_random_layout(8, 0.5, 0.5, seed=1)
        b = make_random_layout(8, 0.5, 0.5, seed=2)
        assert not np.array_equal(a.femto_aps, b.femto_aps)

    def test_support_bound(self):
        geom = make_random_layout(256, 0.5, 0.5, seed=3)
        center = np.array([500.0, 0.0])
        r = np.linalg.norm(geom.femto_aps - center, axis=1)
        assert np.all(r <= geom.grid_extent / np.sqrt(np.pi) + 1e-9)

    def test_mean_radius_matches_uniform_disc(self):
        # mean distance from center of a uniform disc of radius R is 2R/3
        geom = make_random_layout(1000, 0.5, 0.5, seed=11)
        disc_r = geom.grid_extent / np.sqrt(np.pi)
        r = np.linalg.norm(geom.femto_aps - np.array([500.0, 0.0]), axis=1)
        assert abs(r.mean() - 2 * disc_r / 3) / (2 * disc_r / 3) < 0.02

    def test_users_on_radius(self):
        geom = make_random_layout(32, 0.2, 0.8, seed=5)
        own = np.linalg.norm(geom.femto_users - geom.femto_aps, axis=1)
        assert np.allclose(own, geom.femto_radius, atol=1e-9)

    def test_rejects_zero_femtocells(self):
        with pytest.raises(ValueError):
            make_random_layout(0, 0.5, 0.5, seed=1)


class TestDistances:
    def test_euclidean(self):
        assert distance((0.0, 0.0), (3.0, 4.0)) == pytest.approx(5.0)

    def test_gain_distance_clamps_at_reference(self):
        assert gain_distance((1.0, 1.0), (1.0, 1.0)) == 1.0
        assert gain_distance((0.0, 0.0), (0.3, 0.4)) == 1.0

    def test_outer_grid_corner_distance(self):
        # outermost AP of the reference grid sits 430.116 m from the macro BS
        assert distance((0.0, 0.0), (350.0, 250.0)) == pytest.approx(430.116, abs=5e-4)

    def test_distance_matrix_layout(self):
        geom = make_grid_layout(4, 0.5, 0.5, femto_radius=30.0)
        d = distance_matrix(geom)
        assert d.shape == (5, 5)
        assert d[0, 0] == pytest.approx(500.0)
        idx = np.arange(1, 5)
        assert np.allclose(d[idx, idx], 30.0)
        assert np.all(d >= 1.0)

    def test_distance_matrix_ap_convention(self):
        geom = make_grid_layout(4, 0.5, 0.5)
        d = distance_matrix(geom, tx_at_ap=True)
        ap_dist = np.linalg.norm(geom.femto_aps - geom.macro_bs, axis=1)
        assert np.allclose(d[0, 1:], ap_dist)
        assert np.allclose(d[np.arange(1, 5), np.arange(1, 5)], geom.femto_radius)


class TestValidationAndExport:
    def test_validate_rejects_displaced_user(self):
        geom = make_grid_layout(4, 0.5, 0.5)
        geom.femto_users = geom.femto_users + 5.0
        with pytest.raises(ValueError):
            geom.validate()

    def test_validate_rejects_user_outside_cell(self):
        geom = make_grid_layout(4, 0.5, 0.5)
        geom.cellular_user = np.array([2000.0, 0.0])
        with pytest.raises(ValueError):
            geom.validate()

    def test_layout_csv(self, tmp_path):
        geom = make_grid_layout(4, 0.5, 0.5)
        path = tmp_path / "layout.csv"
        layout_to_csv(geom, path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["id", "x_m", "y_m", "kind"]
        kinds = [r[3] for r in rows[1:]]
        assert kinds.count("macro_bs") == 1
        assert kinds.count("femto_ap") == 4
        assert kinds.count("cell_user") == 1
        assert kinds.count("femto_user") == 4
