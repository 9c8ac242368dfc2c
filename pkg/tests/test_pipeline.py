"""
Integration tests for the transfer pipeline, batches and audits.
"""

import csv
import json

import numpy as np
import pytest

from src.config import TinkConfig
from src.core.primitives import icosphere
from src.exceptions import StageError, ValidationError
from src.hand.rig import HandParams
from src.schemas import AuditRecordSpec, HandParamsModel, TransferJobSpec
from src.services.fixtures import fixture_mesh, fixture_pairs, place_hand, wrap_pose
from src.services.pipeline import (
    EXIT_OK,
    EXIT_PARTIAL,
    direct_copy,
    job_from_spec,
    load_object,
    run_audit,
    run_batch,
    run_transfer,
)
from src.services.refiner import windowed_non_increasing


@pytest.fixture(scope="module")
def placed_params(rig):
    obj = fixture_mesh("sphere", 0.05)
    return place_hand(rig, wrap_pose(rig, 0.05), obj)


def sphere_spec(placed_params, job_id="spheres", target="fixture:sphere:0.06") -> TransferJobSpec:
    return TransferJobSpec(
        id=job_id,
        source_mesh="fixture:sphere:0.05",
        target_mesh=target,
        source_params=HandParamsModel.from_params(placed_params),
        intent="hold",
    )


class TestDirectCopy:
    def test_identical_objects_keep_wrist(self, small_sphere):
        params = HandParams.zeros().with_wrist((0.01, 0.02, 0.08))

        out = direct_copy(params, small_sphere, small_sphere)

        np.testing.assert_allclose(out.wrist, params.wrist, atol=1e-12)

    def test_scaled_target_scales_offset(self, small_sphere):
        # Arrange
        params = HandParams.zeros().with_wrist((0.0, 0.0, 0.08))
        target = icosphere(0.1, subdivisions=3, center=(0.5, 0.0, 0.0))

        # Act
        out = direct_copy(params, small_sphere, target)

        # Assert
        np.testing.assert_allclose(out.wrist, [0.5, 0.0, 0.16], atol=1e-9)
        np.testing.assert_array_equal(out.theta, params.theta)


class TestLoadObject:
    def test_fixture_and_file(self, small_sphere, tmp_path):
        from src.storage import mesh_io

        path = mesh_io.save_mesh(small_sphere, tmp_path / "s.ply")

        assert load_object("fixture:sphere:0.05").n_vertices == small_sphere.n_vertices
        assert load_object(str(path)).n_faces == small_sphere.n_faces


class TestRunTransfer:
    """End-to-end transfer between two spheres."""

    @pytest.mark.slow
    def test_transfer_writes_artifacts(self, rig, fast_config, placed_params, tmp_path):
        # Arrange
        job = job_from_spec(sphere_spec(placed_params), fast_config, tmp_path, rig=rig)

        # Act
        result = run_transfer(job, rig)

        # Assert
        assert result.contacts.n_labeled > 0
        assert result.contacts.vertex_count == result.refined.object_mesh.n_vertices
        assert result.refine_report.iterations == 30
        assert np.isfinite(result.refined_consis)
        out = tmp_path / "spheres"
        for name in ["inputs.json", "contacts.json", "metrics.csv", "landmarks/path.json", "refine/trace.csv"]:
            assert (out / name).is_file()
        with (out / "metrics.csv").open() as fh:
            assert [row["variant"] for row in csv.DictReader(fh)] == ["refined", "direct_copy"]
        assert json.loads((out / "landmarks" / "path.json").read_text())["n_itpl"] == 2

    @pytest.mark.slow
    def test_same_seed_is_deterministic(self, rig, fast_config, placed_params):
        job = job_from_spec(sphere_spec(placed_params), fast_config, rig=rig)

        a = run_transfer(job, rig)
        b = run_transfer(job, rig)

        assert a.refined_params.max_abs_diff(b.refined_params) == 0.0
        assert a.refined_quality == b.refined_quality

    def test_unknown_target_fails_in_load_stage(self, rig, fast_config, placed_params):
        job = job_from_spec(sphere_spec(placed_params, target="fixture:cube:0.05"), fast_config, rig=rig)

        with pytest.raises(StageError) as exc_info:
            run_transfer(job, rig)

        assert exc_info.value.stage == "load"
        assert isinstance(exc_info.value.cause, ValidationError)


class TestJobFromSpec:
    def test_seed_precedence(self, rig, fast_config, placed_params):
        spec = sphere_spec(placed_params)

        assert job_from_spec(spec, fast_config, seed=5, rig=rig).seed == 5
        assert job_from_spec(spec.model_copy(update={"seed": 8}), fast_config, seed=5, rig=rig).seed == 8
        assert job_from_spec(spec, fast_config, rig=rig).seed == 0

    def test_overrides_apply_per_job(self, rig, fast_config, placed_params):
        spec = sphere_spec(placed_params).model_copy(update={"overrides": {"refine": {"iterations": 7}}})

        job = job_from_spec(spec, fast_config, rig=rig)

        assert job.config.refine.iterations == 7
        assert fast_config.refine.iterations == 30


class TestRunBatch:
    """Tests for batch exit codes and the summary table."""

    def write_manifest(self, tmp_path, specs):
        path = tmp_path / "jobs.json"
        path.write_text(json.dumps([spec.model_dump() for spec in specs]))
        return path

    def test_failed_jobs_give_partial_exit(self, tmp_path, fast_config):
        # Arrange
        specs = [
            TransferJobSpec(id="bad-family", source_mesh="fixture:cube:0.05", target_mesh="fixture:sphere:0.06"),
            TransferJobSpec(id="missing", source_mesh=str(tmp_path / "none.obj"), target_mesh="fixture:sphere:0.06"),
        ]

        # Act
        summary = run_batch(self.write_manifest(tmp_path, specs), 1, fast_config, tmp_path / "out")

        # Assert
        assert summary.exit_code == EXIT_PARTIAL
        assert summary.failures == 2
        assert all(row["error"].startswith("StageError") for row in summary.rows)
        with (tmp_path / "out" / "summary.csv").open() as fh:
            assert [row["job"] for row in csv.DictReader(fh)] == ["bad-family", "missing"]

    @pytest.mark.slow
    def test_mixed_batch(self, tmp_path, fast_config, placed_params):
        specs = [sphere_spec(placed_params, "good"), sphere_spec(placed_params, "bad", target="fixture:cube:0.05")]

        summary = run_batch(self.write_manifest(tmp_path, specs), 2, fast_config, tmp_path / "out")

        assert summary.exit_code == EXIT_PARTIAL
        assert [row["status"] for row in summary.rows] == ["ok", "error"]
        assert summary.rows[0]["iterations"] == 30

    @pytest.mark.slow
    def test_parallelism_and_reruns_are_bit_identical(self, tmp_path, fast_config):
        # Arrange
        specs = [
            TransferJobSpec(id=f"pair-{k}", source_mesh=source, target_mesh=target)
            for k, (source, target) in enumerate(fixture_pairs(3, seed=11))
        ]
        manifest = self.write_manifest(tmp_path, specs)

        # Act
        serial = run_batch(manifest, 1, fast_config, tmp_path / "serial", seed=3)
        pooled = run_batch(manifest, 4, fast_config, tmp_path / "pooled", seed=3)
        again = run_batch(manifest, 4, fast_config, tmp_path / "again", seed=3)

        # Assert
        assert [row["status"] for row in serial.rows] == ["ok"] * 3
        assert serial.rows == pooled.rows == again.rows
        summaries = [(tmp_path / run / "summary.csv").read_bytes() for run in ("serial", "pooled", "again")]
        assert summaries[0] == summaries[1] == summaries[2]

    def test_empty_batch_is_ok(self, tmp_path):
        summary = run_batch(self.write_manifest(tmp_path, []), 1)

        assert summary.exit_code == EXIT_OK
        assert summary.rows == []

    def test_zero_parallelism_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            run_batch(self.write_manifest(tmp_path, []), 0)


class TestRunAudit:
    def test_audit_with_mean(self, fast_config):
        specs = [
            AuditRecordSpec(hand_mesh="fixture:sphere:0.02", object_mesh="fixture:sphere:0.05", source_id="inside"),
            AuditRecordSpec(hand_mesh="fixture:mug:0.02", object_mesh="fixture:sphere:0.05", source_id="mug"),
        ]

        result = run_audit(specs, fast_config)

        assert [spec.source_id for spec, _ in result.rows] == ["inside", "mug"]
        assert result.mean is not None
        assert result.rows[0][1].penet_depth > 0
        assert result.mean.penet_depth == pytest.approx(
            np.mean([quality.penet_depth for _, quality in result.rows])
        )


def accuracy_config() -> TinkConfig:
    """Full refinement budget; metrics that do not enter the acceptance checks stay coarse."""
    return TinkConfig().with_overrides(
        {
            "sdf": {"resolution": 48},
            "shape_path": {"n_itpl": 3, "max_resolution": 64, "mesh_workers": 2},
            "metrics": {"voxel": 0.004},
            "simulation": {"steps": 20, "repeats": 1, "hand_sdf_resolution": 16, "max_samples": 64},
        }
    )


class TestSphereScaling:
    @pytest.mark.slow
    def test_half_again_larger_sphere(self, rig):
        # Arrange
        spec = TransferJobSpec(id="grow", source_mesh="fixture:sphere:0.05", target_mesh="fixture:sphere:0.075")
        job = job_from_spec(spec, accuracy_config(), rig=rig)

        # Act
        report = run_transfer(job, rig).refine_report

        # Assert
        assert report.final.consis <= 0.1 * report.initial.consis
        assert report.final.intp < 1e-4


@pytest.fixture(scope="module")
def family_outcomes(rig):
    """Refined and direct-copy figures for fifty fixture pairs."""
    config = accuracy_config()
    outcomes = []
    for k, (source, target) in enumerate(fixture_pairs(50)):
        spec = TransferJobSpec(id=f"family-{k}", source_mesh=source, target_mesh=target)
        result = run_transfer(job_from_spec(spec, config, rig=rig), rig)
        outcomes.append(
            {
                "refined_penetration": result.refined_quality.penet_depth,
                "baseline_penetration": result.baseline_quality.penet_depth,
                "refined_consis": result.refined_consis,
                "baseline_consis": result.baseline_consis,
                "final_intp": result.refine_report.final.intp,
                "totals": result.refine_report.trace[:, 3],
            }
        )
    return outcomes


@pytest.mark.slow
class TestFixtureFamilies:
    """Transfers across sphere, mug and bottle families."""

    def test_covers_fifty_pairs(self, family_outcomes):
        assert len(family_outcomes) >= 50

    def test_refined_beats_direct_copy(self, family_outcomes):
        wins = [
            o["refined_penetration"] <= o["baseline_penetration"] and o["refined_consis"] < o["baseline_consis"]
            for o in family_outcomes
        ]

        assert np.mean(wins) >= 0.95

    def test_mean_penetration_is_small(self, family_outcomes):
        assert np.mean([o["refined_penetration"] for o in family_outcomes]) < 0.3

    def test_final_penetration_energy_is_small(self, family_outcomes):
        assert max(o["final_intp"] for o in family_outcomes) < 1e-4

    def test_traces_decrease_over_windows(self, family_outcomes):
        for outcome in family_outcomes:
            assert windowed_non_increasing(outcome["totals"], window=50)
