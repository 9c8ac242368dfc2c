"""
Command-line entry point: ``tink <subcommand> [options]``.

Exit codes: 0 success, 1 fatal error, 2 batch finished with failed jobs.
"""

import argparse
import logging
from pathlib import Path

from dotenv import load_dotenv

from .config import TinkConfig, load_config
from .core.sdf import mesh_to_sdf
from .exceptions import AppException
from .hand.rig import forward, hand_mesh
from .hand.template import default_rig
from .observability import setup_observability
from .schemas import RefineManifest, TransferJobSpec
from .services.contact import contact_regions, derive_contact
from .services.mokap import fit_sequence
from .services.pipeline import EXIT_FATAL, EXIT_OK, job_from_spec, load_object, run_audit, run_batch, run_transfer
from .services.refiner import RefineProblem, refine
from .services.shape_path import build_path
from .storage import grid_io, mesh_io, records

logger = logging.getLogger(__name__)


def _cmd_path(args, config: TinkConfig) -> int:
    source = load_object(args.source)
    target = load_object(args.target)
    path = build_path(
        mesh_to_sdf(source, config.sdf.padding, config.sdf.resolution),
        mesh_to_sdf(target, config.sdf.padding, config.sdf.resolution),
        args.n_itpl or config.shape_path.n_itpl,
        source_mesh=source,
        target_mesh=target,
        max_resolution=config.shape_path.max_resolution,
        workers=config.shape_path.mesh_workers,
    )
    records.write_path_artifacts(path, args.out)
    grid_io.save_grid(path.source_grid, Path(args.out) / "source.sdfg")
    grid_io.save_grid(path.target_grid, Path(args.out) / "target.sdfg")
    print(f"Wrote {path.n_itpl} landmarks to {args.out}")
    return EXIT_OK


def _cmd_contact(args, config: TinkConfig) -> int:
    rig = default_rig()
    obj = load_object(args.object)
    state = forward(rig, records.read_hand_params(args.params), jacobians=False)
    field = derive_contact(state, obj, args.threshold or config.contact.threshold, config.contact.decay)
    out = Path(args.out)
    records.write_contacts(field, out / "contacts.json")
    mesh_io.save_colored_ply(obj, records.contact_colors(field), out / "contacts.ply")
    print(f"{field.n_labeled} labeled vertices, parts {contact_regions(field)}")
    return EXIT_OK


def _cmd_refine(args, config: TinkConfig) -> int:
    manifest = records.read_model(args.manifest, RefineManifest)
    config = config.with_overrides(manifest.overrides)
    rig = default_rig()
    params = (
        records.read_hand_params(manifest.source_params)
        if isinstance(manifest.source_params, str)
        else manifest.source_params.to_params()
    )
    target = load_object(manifest.target_mesh)
    sdf = mesh_to_sdf(target, config.sdf.padding, config.sdf.resolution)
    contacts = records.read_contacts(manifest.contacts)
    report = refine(RefineProblem(rig, params, target, sdf, contacts, config.refine))

    out = Path(args.out)
    records.write_hand_params(report.params, out / "final_params.json")
    records.write_trace_csv(report.trace, out / "trace.csv")
    mesh_io.save_mesh(hand_mesh(rig, forward(rig, report.params, jacobians=False)), out / "hand_mesh.obj")
    print(f"Refined in {report.iterations} iterations, total {report.final.total:.4e}")
    return EXIT_OK


def _cmd_audit(args, config: TinkConfig) -> int:
    specs = records.read_audit_manifest(args.manifest)
    result = run_audit(specs, config, config.pipeline.seed)
    target = records.write_audit_csv(result.rows, result.mean, Path(args.out) / "audit.csv")
    print(f"Audited {len(result.rows)} grasps -> {target}")
    return EXIT_OK


def _cmd_transfer(args, config: TinkConfig) -> int:
    spec = records.read_model(args.job, TransferJobSpec)
    job = job_from_spec(spec, config, Path(args.out), config.pipeline.seed)
    result = run_transfer(job)
    print(
        f"{result.job_id}: penetration {result.baseline_quality.penet_depth:.3f} -> "
        f"{result.refined_quality.penet_depth:.3f} cm"
    )
    return EXIT_OK


def _cmd_batch(args, config: TinkConfig) -> int:
    summary = run_batch(args.manifest, args.jobs or config.pipeline.jobs, config, args.out, config.pipeline.seed)
    print(f"{len(summary.rows)} jobs, {summary.failures} failed")
    return summary.exit_code


def _cmd_mokap(args, config: TinkConfig) -> int:
    sequence = records.read_sequence(args.sequence)
    fit = fit_sequence(default_rig(), sequence, config.mokap)
    out = Path(args.out)
    records.write_fits(fit.smoothed, out / "fits.json")
    records.write_residuals_csv(fit.residuals, out / "residuals.csv")
    print(f"Fitted {len(fit.raw)} frames")
    return EXIT_OK


def _cmd_rig(args, config: TinkConfig) -> int:
    checksum = records.write_rig(default_rig(), Path(args.out) / "rig.json")
    print(checksum)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (default: $TINK_CONFIG or built-in defaults)")
    common.add_argument("--out", default="out", help="Output directory")
    common.add_argument("--seed", type=int, help="Seed for simulation jitter")
    common.add_argument("--jobs", type=int, help="Parallel jobs")
    common.add_argument("--log-level", help="Overrides LOG_LEVEL")

    parser = argparse.ArgumentParser(prog="tink", description="Interaction transfer between object shapes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("path", parents=[common], help="Build a landmark shape path")
    p.add_argument("--source", required=True, help="Source mesh (path or fixture:<family>:<size>)")
    p.add_argument("--target", required=True, help="Target mesh")
    p.add_argument("--n-itpl", type=int, help="Number of landmarks")
    p.set_defaults(handler=_cmd_path)

    p = sub.add_parser("contact", parents=[common], help="Derive contacts of a posed hand on an object")
    p.add_argument("--params", required=True, help="Hand params JSON")
    p.add_argument("--object", required=True, help="Object mesh")
    p.add_argument("--threshold", type=float, help="Contact distance threshold (m)")
    p.set_defaults(handler=_cmd_contact)

    p = sub.add_parser("refine", parents=[common], help="Refine a hand on a target with mapped contacts")
    p.add_argument("manifest", help="Refine manifest JSON")
    p.set_defaults(handler=_cmd_refine)

    p = sub.add_parser("audit", parents=[common], help="Quality metrics of stored grasps")
    p.add_argument("manifest", help="JSON list of grasp records")
    p.set_defaults(handler=_cmd_audit)

    p = sub.add_parser("transfer", parents=[common], help="Run one transfer job")
    p.add_argument("job", help="Transfer job JSON")
    p.set_defaults(handler=_cmd_transfer)

    p = sub.add_parser("batch", parents=[common], help="Run a manifest of transfer jobs")
    p.add_argument("manifest", help="JSON list of transfer jobs")
    p.set_defaults(handler=_cmd_batch)

    p = sub.add_parser("mokap", parents=[common], help="Fit hands to multi-view keypoints")
    p.add_argument("sequence", help="Observation sequence JSON")
    p.set_defaults(handler=_cmd_mokap)

    p = sub.add_parser("rig", parents=[common], help="Export the default rig and print its checksum")
    p.set_defaults(handler=_cmd_rig)
    return parser


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_observability(args.log_level)

    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.with_overrides({"pipeline": {"seed": args.seed}})
        return args.handler(args, config)
    except AppException as e:
        logger.error(f"❌ {e.error_type}: {e.message}")
        return EXIT_FATAL
    except Exception:
        logger.exception("❌ Unexpected failure")
        return EXIT_FATAL


if __name__ == "__main__":
    raise SystemExit(main())
