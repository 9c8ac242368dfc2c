"""
Unit tests for signed distance grids and mesh conversion.
"""

import numpy as np
import pytest

from src.core.mesh import TriMesh, euler_characteristic, is_watertight
from src.core.primitives import box, icosphere, sphere_sdf
from src.core.raycast import point_mesh_distance
from src.core.sdf import (
    SdfGrid,
    grid_from_function,
    marching_cubes,
    mesh_to_sdf,
    resample_grid,
    sample_sdf,
    sdf_gradient,
)
from src.exceptions import EmptySurfaceError, NonWatertightError, ValidationError


def _constant_grid(value: float = 0.05) -> SdfGrid:
    return SdfGrid(np.zeros(3), 0.01, np.full((4, 4, 4), value))


class TestSdfGrid:
    """Tests for grid validation and helpers."""

    @pytest.mark.parametrize("shape", [(1, 4, 4), (4, 4), (4, 4, 4, 1)])
    def test_bad_dims_rejected(self, shape):
        with pytest.raises(ValidationError):
            SdfGrid(np.zeros(3), 0.01, np.zeros(shape))

    @pytest.mark.parametrize("spacing", [0.0, -0.01, float("nan")])
    def test_bad_spacing_rejected(self, spacing):
        with pytest.raises(ValidationError):
            SdfGrid(np.zeros(3), spacing, np.zeros((2, 2, 2)))

    def test_non_finite_values_rejected(self):
        values = np.zeros((2, 2, 2))
        values[1, 1, 1] = np.inf

        with pytest.raises(ValidationError):
            SdfGrid(np.zeros(3), 0.01, values)

    def test_values_are_read_only(self):
        grid = _constant_grid()

        with pytest.raises(ValueError):
            grid.values[0, 0, 0] = 1.0

    def test_upper_corner(self):
        grid = SdfGrid((1.0, 2.0, 3.0), 0.5, np.zeros((3, 4, 5)))

        np.testing.assert_allclose(grid.upper, [2.0, 3.5, 5.0])

    def test_sphere_grid_encloses_surface(self, analytic_sphere_grid):
        assert analytic_sphere_grid.encloses_surface()

    def test_constant_negative_grid_does_not_enclose(self):
        assert not _constant_grid(-0.01).encloses_surface()


class TestSampleSdf:
    """Tests for trilinear sampling."""

    def test_constant_field(self, rng):
        # Arrange
        grid = _constant_grid(0.05)
        points = rng.uniform(0.0, 0.03, (20, 3))

        # Act
        values = sample_sdf(grid, points)

        # Assert
        np.testing.assert_allclose(values, 0.05, atol=1e-12)

    def test_node_returns_stored_value(self, rng):
        values = rng.normal(size=(4, 5, 6))
        grid = SdfGrid((0.1, -0.2, 0.3), 0.02, values)

        sample = sample_sdf(grid, grid.origin + np.array([2, 3, 4]) * 0.02)

        assert sample == pytest.approx(values[2, 3, 4], abs=1e-12)

    def test_matches_analytic_sphere(self, analytic_sphere_grid):
        assert sample_sdf(analytic_sphere_grid, (0.05, 0.0, 0.0)) == pytest.approx(-0.05, abs=2.5e-3)

    def test_outside_grid_adds_box_distance(self, analytic_sphere_grid):
        boundary = sample_sdf(analytic_sphere_grid, analytic_sphere_grid.upper * np.array([1.0, 0.0, 0.0]))

        far = sample_sdf(analytic_sphere_grid, (1.0, 0.0, 0.0))

        assert far == pytest.approx(boundary + 1.0 - analytic_sphere_grid.upper[0], abs=1e-9)
        assert far > 0

    def test_batch_shape_is_kept(self, analytic_sphere_grid):
        values = sample_sdf(analytic_sphere_grid, np.zeros((2, 5, 3)))

        assert values.shape == (2, 5)


class TestSdfGradient:
    """Tests for central-difference gradients."""

    def test_constant_field_has_zero_gradient(self):
        np.testing.assert_allclose(sdf_gradient(_constant_grid(), (0.015, 0.015, 0.015)), 0.0, atol=1e-9)

    def test_linear_ramp_is_exact(self, rng):
        # Arrange
        grid = grid_from_function(lambda p: p[:, 0], (-0.1,) * 3, (0.1,) * 3, 0.01)
        points = rng.uniform(-0.08, 0.08, (10, 3))

        # Act
        grad = sdf_gradient(grid, points)

        # Assert
        np.testing.assert_allclose(grad, np.tile([1.0, 0.0, 0.0], (10, 1)), atol=1e-9)

    def test_sphere_normal(self, analytic_sphere_grid):
        grad = sdf_gradient(analytic_sphere_grid, (0.05, 0.0, 0.0))

        np.testing.assert_allclose(grad, [1.0, 0.0, 0.0], atol=0.05)


class TestMeshToSdf:
    """Tests for mesh -> grid conversion."""

    def test_unit_sphere_center(self):
        # Arrange
        mesh = icosphere(1.0, subdivisions=3)

        # Act
        grid = mesh_to_sdf(mesh, padding=0.2, resolution=64)

        # Assert
        assert sample_sdf(grid, (0.0, 0.0, 0.0)) == pytest.approx(-1.0, abs=1.5 * grid.spacing)

    def test_box_face_center_is_near_zero(self):
        grid = mesh_to_sdf(box((0.1, 0.1, 0.1)), padding=0.02, resolution=32)

        assert sample_sdf(grid, (0.05, 0.0, 0.0)) == pytest.approx(0.0, abs=grid.spacing)

    def test_sign_agrees_with_analytic_sphere(self, small_sphere_grid, rng):
        # Arrange
        points = rng.uniform(-0.055, 0.055, (1000, 3))
        exact = sphere_sdf(points, 0.05)

        # Act
        sampled = sample_sdf(small_sphere_grid, points)

        # Assert
        disagree = np.sign(sampled) != np.sign(exact)
        assert np.all(np.abs(exact[disagree]) < small_sphere_grid.spacing)

    def test_error_against_analytic_sphere(self, small_sphere_grid, rng):
        points = rng.uniform(-0.06, 0.06, (1000, 3))

        error = np.abs(sample_sdf(small_sphere_grid, points) - sphere_sdf(points, 0.05))

        assert error.max() < 1.5 * small_sphere_grid.spacing

    def test_open_mesh_raises(self):
        fan = TriMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0), (-1, 0, 0)], [(0, 1, 2), (0, 2, 3)])

        with pytest.raises(NonWatertightError) as exc_info:
            mesh_to_sdf(fan, 0.1, 8)

        assert len(exc_info.value.edges) == 4


class TestMarchingCubes:
    """Tests for iso-surface extraction."""

    def test_all_positive_grid_raises(self):
        with pytest.raises(EmptySurfaceError):
            marching_cubes(_constant_grid(0.05))

    def test_analytic_sphere_surface(self):
        # Arrange
        grid = grid_from_function(lambda p: sphere_sdf(p, 0.1), (-0.12,) * 3, (0.12,) * 3, 0.0025)

        # Act
        mesh = marching_cubes(grid)

        # Assert
        radii = np.linalg.norm(mesh.vertices, axis=1)
        assert np.all(np.abs(radii - 0.1) < 2.5e-3)
        assert is_watertight(mesh)
        assert euler_characteristic(mesh) == 2

    def test_round_trip_stays_close(self, small_sphere, small_sphere_grid):
        # Act
        mesh = marching_cubes(small_sphere_grid)

        # Assert
        bound = 2 * small_sphere_grid.spacing
        assert point_mesh_distance(mesh.vertices, small_sphere).max() < bound
        assert point_mesh_distance(small_sphere.vertices, mesh).max() < bound


class TestResampleGrid:
    def test_same_lattice_is_identity(self, analytic_sphere_grid):
        g = analytic_sphere_grid

        out = resample_grid(g, g.origin, g.spacing, g.dims)

        np.testing.assert_allclose(out.values, g.values, atol=1e-12)

    def test_finer_lattice_matches_sampling(self, analytic_sphere_grid, rng):
        out = resample_grid(analytic_sphere_grid, (-0.05,) * 3, 0.0025, (41, 41, 41))
        points = rng.uniform(-0.05, 0.05, (50, 3))

        np.testing.assert_allclose(
            sample_sdf(out, points), sample_sdf(analytic_sphere_grid, points), atol=2e-3
        )
