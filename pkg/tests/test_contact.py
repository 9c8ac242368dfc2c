"""
Unit tests for ICP, contact derivation and contact mapping along a path.
"""

import numpy as np
import pytest

from src.config import IcpConfig
from src.core.primitives import icosphere, superellipsoid
from src.core.sdf import mesh_to_sdf
from src.exceptions import IcpDivergedError, ValidationError
from src.hand.axis_angle import rodrigues
from src.hand.rig import N_PARTS, HandState
from src.services.contact import (
    ContactnessField,
    contact_regions,
    contactness,
    derive_contact,
    map_contacts,
    transfer_labels,
)
from src.services.icp import icp_align, kabsch
from src.services.shape_path import build_path

FAR = np.array([1.0, 1.0, 1.0])


def hand_with_anchors(positions: dict[int, tuple[float, float, float]]) -> HandState:
    """State whose anchor ``i`` sits at ``positions[i]`` and every other anchor far away."""
    anchors = np.tile(FAR, (N_PARTS, 1))
    for i, p in positions.items():
        anchors[i] = p
    return HandState(joints=np.zeros((21, 3)), vertices=np.zeros((1, 3)), anchors=anchors)


def path_between(source, target, n_itpl: int = 2):
    return build_path(
        mesh_to_sdf(source, 0.01, 24),
        mesh_to_sdf(target, 0.01, 24),
        n_itpl,
        source_mesh=source,
        target_mesh=target,
    )


class TestContactnessField:
    """Tests for field validation."""

    def test_empty(self):
        field = ContactnessField.empty(5)

        assert field.vertex_count == 5
        assert field.n_labeled == 0
        assert field.total_gamma == 0.0

    @pytest.mark.parametrize(
        "part, gamma, anchor",
        [
            ([1, 0], [0.5], [1, 0]),  # length mismatch
            ([18, 0], [0.5, 0.0], [1, 0]),  # part out of range
            ([1, 0], [0.0, 0.0], [1, 0]),  # labeled with zero gamma
            ([1, 0], [1.5, 0.0], [1, 0]),  # gamma above one
            ([0, 0], [0.2, 0.0], [0, 0]),  # unlabeled with gamma
        ],
    )
    def test_invalid_fields_rejected(self, part, gamma, anchor):
        with pytest.raises(ValidationError):
            ContactnessField(part, gamma, anchor)

    def test_entries(self):
        field = ContactnessField([0, 3, 0], [0.0, 0.7, 0.0], [0, 3, 0])

        assert field.entries() == [(1, 3, 0.7, 3)]


class TestContactness:
    @pytest.mark.parametrize(
        "decay, d, expected",
        [
            ("linear", 0.005, 1.0),
            ("linear", 0.015, 0.5),
            ("linear", 0.025, 0.0),
            ("cosine", 0.015, 0.5),
            ("cosine", 0.030, 0.0),
        ],
    )
    def test_decay_profiles(self, decay, d, expected):
        value = contactness(np.array([d]), np.array([0.005]), 0.025, decay)

        assert value[0] == pytest.approx(expected)


class TestDeriveContact:
    """Tests for contact labelling from anchors."""

    def test_single_anchor_labels_nearby_vertices(self):
        # Arrange
        obj = icosphere(0.05, subdivisions=3)
        hand = hand_with_anchors({0: (0.06, 0.0, 0.0)})

        # Act
        field = derive_contact(hand, obj, threshold=0.025)

        # Assert
        distance = np.linalg.norm(obj.vertices - hand.anchors[0], axis=1)
        assert set(field.part[field.labeled]) == {1}
        np.testing.assert_array_equal(field.anchor, field.part)
        assert field.gamma[np.argmin(distance)] == 1.0
        assert not field.part[distance >= 0.025].any()
        assert contact_regions(field) == {1: field.n_labeled}

    def test_tie_goes_to_lower_anchor(self):
        obj = icosphere(0.05, subdivisions=2)
        hand = hand_with_anchors({2: (0.0, 0.0, 0.06), 5: (0.0, 0.0, 0.06)})

        field = derive_contact(hand, obj)

        assert set(field.part[field.labeled]) == {3}

    def test_strongest_anchor_wins(self):
        obj = icosphere(0.05, subdivisions=3)
        hand = hand_with_anchors({0: (0.055, 0.0, 0.0), 1: (-0.055, 0.0, 0.0)})

        field = derive_contact(hand, obj)

        assert field.part[np.argmax(obj.vertices[:, 0])] == 1
        assert field.part[np.argmin(obj.vertices[:, 0])] == 2

    def test_far_hand_gives_empty_field(self):
        obj = icosphere(0.05, subdivisions=2)

        field = derive_contact(hand_with_anchors({}), obj)

        assert field.n_labeled == 0


class TestTransferLabels:
    def test_collision_keeps_max_gamma(self):
        # Arrange
        target = icosphere(0.05, subdivisions=1)
        moved = np.tile(target.vertices[0], (3, 1))
        field = ContactnessField([2, 5, 0], [0.8, 0.3, 0.0], [2, 5, 0])

        # Act
        out = transfer_labels(field, moved, target)

        # Assert
        assert out.n_labeled == 1
        assert out.entries() == [(0, 2, 0.8, 2)]


class TestIcp:
    """Tests for rigid alignment."""

    def test_kabsch_recovers_transform(self, rng):
        points = rng.normal(size=(30, 3))
        rotation = rodrigues(np.array([0.3, -0.2, 0.5]))[0]
        translation = np.array([0.1, 0.2, -0.3])

        r, t = kabsch(points, points @ rotation.T + translation)

        np.testing.assert_allclose(r, rotation, atol=1e-12)
        np.testing.assert_allclose(t, translation, atol=1e-12)

    def test_pure_translation_is_exact(self):
        points = superellipsoid((0.04, 0.03, 0.05), subdivisions=2).vertices
        offset = np.array([0.01, -0.02, 0.005])

        result = icp_align(points, points + offset)

        np.testing.assert_allclose(result.translation, offset, atol=1e-6)
        assert result.rms < 1e-6
        assert result.converged

    def test_small_rotation_is_recovered(self):
        points = superellipsoid((0.04, 0.03, 0.05), subdivisions=2).vertices
        rotation = rodrigues(np.array([0.0, 0.0, 0.05]))[0]

        result = icp_align(points, points @ rotation.T + (0.003, 0.0, 0.0))

        assert result.rms < 1e-6
        np.testing.assert_allclose(result.rotation, rotation, atol=1e-6)


class TestMapContacts:
    """Tests for contact propagation along a landmark path."""

    @pytest.fixture
    def source(self):
        return icosphere(0.05, subdivisions=3)

    @pytest.fixture
    def field(self, source):
        hand = hand_with_anchors({0: (0.06, 0.0, 0.0), 4: (0.0, 0.06, 0.0)})
        return derive_contact(hand, source)

    def test_identical_mesh_is_label_exact(self, source, field):
        out = map_contacts(field, path_between(source, source))

        assert out.same_as(field)

    def test_translated_target_is_label_exact(self, source, field):
        target = source.translated((0.02, -0.01, 0.03))

        out = map_contacts(field, path_between(source, target))

        assert out.same_as(field)

    def test_scaled_target_keeps_regions(self, source, field):
        # Arrange
        target = icosphere(0.065, subdivisions=3)

        # Act
        out = map_contacts(field, path_between(source, target, n_itpl=3))

        # Assert
        assert out.vertex_count == target.n_vertices
        assert set(contact_regions(out)) == set(contact_regions(field))
        region = target.vertices[out.part == 1].mean(axis=0)
        assert region[0] > 0.05

    def test_vertex_count_mismatch_raises(self, source, field):
        other = icosphere(0.05, subdivisions=2)

        with pytest.raises(ValidationError):
            map_contacts(field, path_between(other, other))

    def test_divergence_raises(self, source, field):
        target = icosphere(0.065, subdivisions=3)
        config = IcpConfig(divergence_factor=1e-6, congruence_ratio=0.0)

        with pytest.raises(IcpDivergedError) as exc_info:
            map_contacts(field, path_between(source, target), config)

        assert exc_info.value.step == 0
