"""
Integration tests for API endpoints.
"""

from unittest.mock import patch

import pytest

from src.hand.template import default_rig
from src.schemas import HandParamsModel
from src.services.fixtures import fixture_mesh, place_hand, wrap_pose


class TestRootEndpoint:
    """Tests for the root endpoint."""

    def test_root_returns_200(self, client):
        """
        Test that root endpoint returns 200 OK.

        The 'client' parameter is automatically injected by pytest
        from the fixture defined in conftest.py.
        """
        response = client.get("/")

        assert response.status_code == 200

    def test_root_returns_expected_json(self, client):
        """Test root endpoint response content."""
        response = client.get("/")
        data = response.json()

        assert data["message"] == "TINK Transfer API"
        assert data["version"] == "0.1.0"
        assert "docs" in data


class TestAuditEndpoint:
    """Tests for POST /audit."""

    def test_audit_returns_rows_and_mean(self, client, fast_config):
        body = {
            "records": [
                {"hand_mesh": "fixture:sphere:0.02", "object_mesh": "fixture:sphere:0.05", "source_id": "g1"},
            ]
        }

        with patch("src.api.routes.get_config", return_value=fast_config):
            response = client.post("/audit", json=body)

        assert response.status_code == 200
        data = response.json()
        assert data["rows"][0]["source_id"] == "g1"
        assert data["rows"][0]["quality"]["penet_depth"] > 0
        assert data["mean"]["penet_depth"] == data["rows"][0]["quality"]["penet_depth"]

    def test_missing_records_is_422(self, client):
        response = client.post("/audit", json={})

        assert response.status_code == 422

    def test_unknown_fixture_is_reported(self, client, fast_config):
        body = {"records": [{"hand_mesh": "fixture:cube:0.02", "object_mesh": "fixture:sphere:0.05"}]}

        with patch("src.api.routes.get_config", return_value=fast_config):
            response = client.post("/audit", json=body)

        assert response.status_code == 400
        assert response.json()["error"] == "StageError"


class TestTransferEndpoint:
    """Tests for POST /transfer."""

    def test_bad_params_is_422(self, client):
        body = {
            "id": "x",
            "source_mesh": "fixture:sphere:0.05",
            "target_mesh": "fixture:sphere:0.06",
            "source_params": {"theta": [[0.0, 0.0, 0.0]], "wrist": [0.0, 0.0, 0.0]},
        }

        response = client.post("/transfer", json=body)

        assert response.status_code == 422

    @pytest.mark.slow
    def test_transfer_between_spheres(self, client, fast_config):
        # Arrange
        rig = default_rig()
        params = place_hand(rig, wrap_pose(rig, 0.05), fixture_mesh("sphere", 0.05))
        body = {
            "id": "spheres",
            "source_mesh": "fixture:sphere:0.05",
            "target_mesh": "fixture:sphere:0.06",
            "source_params": HandParamsModel.from_params(params).model_dump(),
        }

        # Act
        with patch("src.api.routes.get_config", return_value=fast_config):
            response = client.post("/transfer", json=body)

        # Assert
        assert response.status_code == 200
        data = response.json()
        assert data["job_id"] == "spheres"
        assert data["mapped_contacts"] > 0
        assert data["refine"]["iterations"] == 30
        assert len(data["refined_params"]["theta"]) == 16
