"""
Unit tests for refinement energies and their analytic gradients.
"""

import numpy as np
import pytest

from src.config import EnergyWeights
from src.core.primitives import icosphere, sphere_sdf
from src.core.sdf import grid_from_function
from src.exceptions import EmptyContactsError
from src.hand.rig import N_JOINTS, N_PARTS, HandParams, HandState, forward
from src.services.contact import ContactnessField
from src.services.energies import (
    anat_terms,
    consis_terms,
    energy_anat,
    energy_consis,
    energy_intp,
    gradient_error,
    intp_terms,
    numeric_gradient,
    total_energy_and_gradient,
)
from src.services.fixtures import flexion_axes

WEIGHTS = EnergyWeights(consis=1.0, anat=0.1, intp=10.0)


@pytest.fixture(scope="module")
def target():
    return icosphere(0.03, subdivisions=2, center=(0.0, 0.1, -0.03))


@pytest.fixture(scope="module")
def contacts(target):
    n = target.n_vertices
    part = np.zeros(n, dtype=np.int64)
    gamma = np.zeros(n)
    part[: 2 * N_PARTS] = np.tile(np.arange(1, N_PARTS + 1), 2)
    gamma[: 2 * N_PARTS] = np.linspace(0.2, 1.0, 2 * N_PARTS)
    return ContactnessField(part, gamma, part)


@pytest.fixture(scope="module")
def plane_grid():
    """Half-space below z = 0; trilinear sampling reproduces it exactly."""
    return grid_from_function(lambda p: p[:, 2], (-0.3,) * 3, (0.3,) * 3, 0.01)


def random_params(rng) -> HandParams:
    return HandParams(
        rng.normal(scale=0.4, size=(N_JOINTS, 3)),
        rng.normal(scale=0.5, size=10),
        rng.normal(scale=0.01, size=3),
    )


class TestConsis:
    """Tests for the contact consistency term."""

    def test_zero_when_anchors_on_labeled_vertices(self, target):
        part = np.zeros(target.n_vertices, dtype=np.int64)
        part[[3, 7]] = [1, 2]
        field = ContactnessField(part, np.where(part > 0, 1.0, 0.0), part)
        anchors = np.zeros((N_PARTS, 3))
        anchors[0], anchors[1] = target.vertices[3], target.vertices[7]

        value, grad = consis_terms(anchors, field, target.vertices)

        assert value == 0.0
        assert not grad.any()

    def test_gamma_weighted_mean(self, target):
        part = np.zeros(target.n_vertices, dtype=np.int64)
        part[[0, 1]] = 1
        gamma = np.zeros(target.n_vertices)
        gamma[[0, 1]] = [1.0, 0.5]
        field = ContactnessField(part, gamma, part)
        anchors = np.zeros((N_PARTS, 3))
        anchors[0] = target.vertices[0]

        value, _ = consis_terms(anchors, field, target.vertices)

        expected = 0.5 * np.sum((target.vertices[0] - target.vertices[1]) ** 2) / 1.5
        assert value == pytest.approx(expected)

    def test_gradient_matches_finite_differences(self, contacts, target, rng):
        anchors = rng.normal(scale=0.05, size=(N_PARTS, 3))
        _, grad = consis_terms(anchors, contacts, target.vertices)
        h = 1e-7

        numeric = np.zeros_like(anchors)
        for i in range(N_PARTS):
            for a in range(3):
                plus, minus = anchors.copy(), anchors.copy()
                plus[i, a] += h
                minus[i, a] -= h
                numeric[i, a] = (
                    consis_terms(plus, contacts, target.vertices)[0] - consis_terms(minus, contacts, target.vertices)[0]
                ) / (2 * h)

        assert gradient_error(grad.ravel(), numeric.ravel()) < 1e-6

    def test_energy_reads_hand_anchors(self, contacts, target, rng):
        anchors = rng.normal(scale=0.05, size=(N_PARTS, 3))
        hand = HandState(joints=np.zeros((21, 3)), vertices=np.zeros((1, 3)), anchors=anchors)

        value = energy_consis(hand, contacts, target)

        assert value == pytest.approx(consis_terms(anchors, contacts, target.vertices)[0])
        assert value > 0

    def test_empty_contacts_raise(self, target):
        with pytest.raises(EmptyContactsError):
            consis_terms(np.zeros((N_PARTS, 3)), ContactnessField.empty(target.n_vertices), target.vertices)


class TestAnat:
    """Tests for the anatomical penalty."""

    def test_rest_pose_is_free(self, rig):
        assert energy_anat(HandParams.zeros(), rig) == 0.0

    def test_flexion_is_free(self, rig):
        theta = 0.9 * flexion_axes(rig)
        theta[0] = 0.0

        value, _ = anat_terms(theta, rig)

        assert value == pytest.approx(0.0, abs=1e-12)

    def test_root_rotation_is_free(self, rig):
        theta = np.zeros((N_JOINTS, 3))
        theta[0] = (0.3, 1.0, -0.5)

        assert anat_terms(theta, rig)[0] == 0.0

    def test_twist_is_penalized(self, rig):
        theta = np.zeros((N_JOINTS, 3))
        theta[2] = 0.5 * rig.twist_axes[2]

        value, _ = anat_terms(theta, rig)

        assert value == pytest.approx(1.0)

    def test_negative_twist_is_penalized(self, rig):
        theta = np.zeros((N_JOINTS, 3))
        theta[2] = -0.5 * rig.twist_axes[2]

        value, _ = anat_terms(theta, rig)

        assert value == pytest.approx(1.0)

    def test_twist_cost_is_even_and_non_negative(self, rig, rng):
        for _ in range(20):
            theta = rng.normal(scale=0.8, size=(N_JOINTS, 3))
            theta = np.clip(theta, -0.9, 0.9)

            plus, _ = anat_terms(theta, rig)
            minus, _ = anat_terms(-theta, rig)

            assert plus >= 0.0
            assert plus == pytest.approx(minus)

    def test_flexion_is_stationary(self, rig):
        theta = 0.9 * flexion_axes(rig)
        theta[0] = 0.0

        _, grad = anat_terms(theta, rig)

        np.testing.assert_allclose(grad, 0.0, atol=1e-12)

    def test_over_bend_is_penalized(self, rig):
        theta = np.zeros((N_JOINTS, 3))
        theta[2] = 2.0 * flexion_axes(rig)[2]

        value, _ = anat_terms(theta, rig)

        assert value == pytest.approx(2.0 - np.pi / 2)

    def test_mcp_splay_is_free(self, rig):
        theta = np.zeros((N_JOINTS, 3))
        theta[1] = 0.3 * rig.splay_axes[1]

        assert anat_terms(theta, rig)[0] == pytest.approx(0.0, abs=1e-12)

    def test_gradient_matches_finite_differences(self, rig, rng):
        for _ in range(20):
            theta = rng.normal(scale=0.8, size=(N_JOINTS, 3))
            _, grad = anat_terms(theta, rig)

            numeric = np.zeros(theta.size)
            h = 1e-7
            for i in range(theta.size):
                dx = np.zeros(theta.size)
                dx[i] = h
                numeric[i] = (
                    anat_terms(theta.ravel() + dx, rig)[0] - anat_terms(theta.ravel() - dx, rig)[0]
                ) / (2 * h)

            assert gradient_error(grad.ravel(), numeric) < 1e-3


class TestIntp:
    """Tests for the interpenetration term."""

    def test_outside_vertices_contribute_nothing(self):
        grid = grid_from_function(lambda p: sphere_sdf(p, 0.05), (-0.1,) * 3, (0.1,) * 3, 0.005)

        value, grad = intp_terms(np.array([[0.08, 0.0, 0.0], [0.0, 0.09, 0.0]]), grid)

        assert value == 0.0
        assert not grad.any()

    def test_depth_and_push_direction(self, plane_grid):
        vertices = np.array([[0.0, 0.0, -0.03], [0.0, 0.0, 0.05]])

        value, grad = intp_terms(vertices, plane_grid)

        assert value == pytest.approx(0.03)
        np.testing.assert_allclose(grad, [[0.0, 0.0, -1.0], [0.0, 0.0, 0.0]], atol=1e-9)

    def test_energy_sums_depth_over_hand_vertices(self, plane_grid):
        vertices = np.array([[0.0, 0.0, -0.01], [0.05, 0.0, -0.02], [0.0, 0.0, 0.04]])
        hand = HandState(joints=np.zeros((21, 3)), vertices=vertices, anchors=np.zeros((N_PARTS, 3)))

        assert energy_intp(hand, plane_grid) == pytest.approx(0.03)


class TestTotalGradient:
    """The chained objective gradient against central differences."""

    def test_random_states(self, rig, contacts, target, plane_grid, rng):
        def energy(x):
            params = HandParams.from_flat(x)
            state = forward(rig, params, jacobians=False)
            e_consis, _ = consis_terms(state.anchors, contacts, target.vertices)
            e_anat, _ = anat_terms(params.theta, rig)
            e_intp, _ = intp_terms(state.vertices, plane_grid)
            return WEIGHTS.consis * e_consis + WEIGHTS.anat * e_anat + WEIGHTS.intp * e_intp

        for _ in range(20):
            # Arrange
            x = random_params(rng).flat()

            # Act
            breakdown, grad = total_energy_and_gradient(x, rig, contacts, target, plane_grid, WEIGHTS)

            # Assert
            assert breakdown.total == pytest.approx(energy(x))
            assert breakdown.intp > 0
            assert gradient_error(grad, numeric_gradient(energy, x, step=1e-7)) < 1e-3

