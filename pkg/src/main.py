"""
Command-line interface for semdepth.

Subcommands:
    gen-scene      render a synthetic scene into frames and a manifest
    compute-loss   evaluate the total loss of one target frame
    fit-synthetic  recover depth and poses of a snippet by direct fitting
    eval-depth     depth metrics of predicted against ground-truth rasters
    eval-pose      snippet ATE of a predicted against a ground-truth trajectory
    selftest       oracle-equivalence and gradient checks

Exit codes: 0 success, 1 usage error, 2 data error, 3 selftest failure.
Every command assembles its outputs in memory and writes them atomically
once all computation succeeded.
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import torch
from pydantic import ValidationError

from src.config import get_settings
from src.data.loader import LoadedSnippet, ManifestLoader, load_run_overrides, load_scene_spec
from src.data.poses import format_intrinsics, format_poses, read_poses
from src.data.rasters import encode_f32, encode_pgm_labels, encode_ppm, read_f32, write_all
from src.data.reports import (
    ate_report_payload,
    convergence_log,
    depth_report_payload,
    format_table,
    loss_report_payload,
    loss_report_text,
    to_json,
    visualization_ppm,
)
from src.exceptions import DimensionMismatchError, ManifestError, SelftestFailure, SemDepthError
from src.fit.optimizer import fit_snippet, perturbed_pose, source_indices
from src.geometry.se3 import relative_pose
from src.losses.total import total_loss
from src.metrics.depth import evaluate_depth_set
from src.metrics.trajectory import SNIPPET_LENGTHS, ate_sequence, mean_odometry_baseline
from src.models.evaluation import DepthEvalResult
from src.models.fit import FitConfig
from src.models.losses import ABLATION_PRESETS
from src.models.manifest import FrameEntry, RunConfig, SnippetManifest
from src.models.snippet import SnippetInputs
from src.scene.presets import dyadic_plane_scene, moving_box_scene, street_scene
from src.scene.renderer import render_all
from src.utils.logger import set_level, setup_logger
from src.verification.selftest import run_selftest

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SELFTEST = 3

SCENE_PRESETS = {
    "dyadic": dyadic_plane_scene,
    "street": street_scene,
    "moving-box": moving_box_scene,
}


class UsageError(Exception):
    """Invalid flags or an invalid configuration."""


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _stdout(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")
    sys.stdout.flush()


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides = load_run_overrides(args.config)
    try:
        return RunConfig.from_settings(get_settings(), getattr(args, "ablation", None), overrides)
    except (ValidationError, KeyError, ValueError) as e:
        raise UsageError(f"invalid configuration: {e}") from e


# ============================================================================
# gen-scene
# ============================================================================

def cmd_gen_scene(args: argparse.Namespace) -> int:
    if args.scene:
        spec = load_scene_spec(args.scene)
    else:
        spec = SCENE_PRESETS[args.preset](n_frames=args.frames, seed=args.seed)

    frames = render_all(spec)
    out = Path(args.output)
    files: Dict[Path, bytes] = {}
    entries = []
    for frame in frames:
        stem = f"frame_{frame.index:03d}"
        files[out / f"{stem}.ppm"] = encode_ppm(frame.image)
        files[out / f"{stem}.pgm"] = encode_pgm_labels(frame.labels)
        files[out / f"{stem}.depth.f32"] = encode_f32(frame.depth)
        entries.append(FrameEntry(image=f"{stem}.ppm", labels=f"{stem}.pgm", depth=f"{stem}.depth.f32"))

    manifest = SnippetManifest(
        frames=entries,
        intrinsics="intrinsics.txt",
        gt_poses="poses.txt",
        snippet_length=5 if len(frames) >= 5 else 3,
    )
    files[out / "intrinsics.txt"] = format_intrinsics(spec.intrinsics).encode("ascii")
    files[out / "poses.txt"] = format_poses([frame.pose for frame in frames]).encode("ascii")
    files[out / "scene.json"] = to_json(spec.model_dump(mode="json"))
    files[out / "manifest.json"] = to_json(manifest.model_dump(mode="json"))
    write_all(files)

    logger.info(f"Scene with {len(frames)} frames written to {out}")
    _stdout(str(out / "manifest.json"))
    return EXIT_OK


# ============================================================================
# compute-loss
# ============================================================================

def _snippet_depths(snippet: LoadedSnippet, depth_files: Optional[Sequence[str]]) -> List[torch.Tensor]:
    if depth_files:
        if len(depth_files) != len(snippet.images):
            raise DimensionMismatchError(f"{len(depth_files)} depth files for {len(snippet.images)} frames")
        depths = [read_f32(path) for path in depth_files]
    elif snippet.depths is not None:
        depths = snippet.depths
    else:
        raise ManifestError("no depth available: list depth rasters in the manifest or pass --depth")
    size = tuple(snippet.images[0].shape[-2:])
    for path, depth in zip(depth_files or [f"frame {i}" for i in range(len(depths))], depths):
        if tuple(depth.shape) != size:
            raise DimensionMismatchError(f"{path}: depth {tuple(depth.shape)} does not match frames {size}")
    return depths


def _snippet_poses(snippet: LoadedSnippet, pose_file: Optional[str]):
    trajectory = read_poses(pose_file) if pose_file else snippet.gt_trajectory
    if trajectory is None:
        raise ManifestError("no poses available: add gt_poses to the manifest or pass --poses")
    if len(trajectory) != len(snippet.images):
        raise DimensionMismatchError(f"{len(trajectory)} poses for {len(snippet.images)} frames")
    return trajectory.poses


def cmd_compute_loss(args: argparse.Namespace) -> int:
    run = _run_config(args)
    snippet = ManifestLoader().load_snippet(args.manifest)
    depths = _snippet_depths(snippet, args.depth)
    camera_to_world = _snippet_poses(snippet, args.poses)

    n_frames = len(snippet.images)
    target = n_frames // 2 if args.target is None else args.target
    if not 0 <= target < n_frames:
        raise UsageError(f"--target {target} outside [0, {n_frames - 1}]")
    sources = source_indices(target, n_frames)

    inputs = SnippetInputs(
        K=snippet.K,
        target_image=snippet.images[target],
        target_labels=snippet.labels[target],
        target_depth=depths[target],
        source_images=[snippet.images[s] for s in sources],
        source_labels=[snippet.labels[s] for s in sources],
        source_depths=[depths[s] for s in sources],
        poses=[relative_pose(camera_to_world[target], camera_to_world[s]) for s in sources],
    )
    terms = run.terms.model_copy(update={"use_automask": not args.no_automask})
    with torch.no_grad():
        report = total_loss(inputs, run.weights, terms)
    logger.info(f"Loss computed for frame {target} against {sources}: {report}")

    payload = loss_report_payload(report, target=target, sources=sources, preset=args.ablation)
    files: Dict[Path, bytes] = {}
    if args.output:
        out = Path(args.output)
        files[out / "report.json"] = to_json(payload)
        files[out / "report.txt"] = loss_report_text(report).encode("utf-8")
        for name in ("re", "mre", "pe", "mpe"):
            if name not in report.maps:
                continue
            valid = report.maps["valid"]
            for k, source in enumerate(sources):
                raster = report.maps[name][k]
                files[out / f"{name}_src{source:03d}.f32"] = encode_f32(raster)
                if args.visualize:
                    files[out / f"{name}_src{source:03d}.ppm"] = visualization_ppm(raster, valid[k])
        files[out / "identity_re.f32"] = encode_f32(report.maps["identity_re"].min(dim=0).values)
        files[out / "keep.pgm"] = encode_pgm_labels(report.maps["keep"].long())
        files[out / "semantic_mask.pgm"] = encode_pgm_labels(report.maps["M"].any(dim=0).long())
    write_all(files)

    _stdout(to_json(payload).decode("utf-8") if args.json else loss_report_text(report))
    return EXIT_OK


# ============================================================================
# fit-synthetic
# ============================================================================

def cmd_fit_synthetic(args: argparse.Namespace) -> int:
    run = _run_config(args)
    settings = get_settings()
    snippet = ManifestLoader().load_snippet(args.manifest)
    n_frames = len(snippet.images)

    if args.fix_depth and args.fix_pose:
        raise UsageError("--fix-depth and --fix-pose leave nothing to fit")
    gt_adjacent = None
    if snippet.gt_trajectory is not None:
        poses = snippet.gt_trajectory.poses
        gt_adjacent = [relative_pose(poses[k], poses[k + 1]) for k in range(n_frames - 1)]
    if (args.fix_pose or args.pose_init == "gt") and gt_adjacent is None:
        raise ManifestError("ground-truth poses are required to fix or initialise poses")
    if args.fix_depth and snippet.depths is None:
        raise ManifestError("ground-truth depth is required by --fix-depth")

    init_poses = None
    if args.fix_pose or args.pose_init == "gt":
        init_poses = gt_adjacent
        if args.pose_noise and not args.fix_pose:
            angle, distance = args.pose_noise
            init_poses = [
                perturbed_pose(p, angle, distance, seed=run.seed + k) for k, p in enumerate(gt_adjacent)
            ]
    init_depth = snippet.depths if args.fix_depth else (args.init_depth or settings.init_depth)

    terms = run.terms.model_copy(update={"use_automask": not args.no_automask})
    if init_poses is None and terms.use_automask:
        logger.warning("Zero-motion initialisation: the auto-mask rejects every pixel until the poses move; "
                       "consider --no-automask or --pose-init gt")
    fit_overrides = {"max_iterations": args.max_iterations} if args.max_iterations is not None else {}
    config = FitConfig.from_config(
        {**settings.get_fit_config(), **fit_overrides},
        weights=run.weights,
        terms=terms,
        optimize_depth=not args.fix_depth,
        optimize_pose=not args.fix_pose,
        target_frames=args.target_frames,
    )

    result = fit_snippet(snippet.images, snippet.labels, snippet.K, config, init_depth, init_poses)
    state = result.state
    depths = state.depths()

    summary = {
        "iterations": state.iteration,
        "converged": state.converged,
        "halted": state.halted,
        "final": loss_report_payload(result.report),
    }
    if snippet.depths is not None:
        metrics = evaluate_depth_set(
            list(depths), snippet.depths, cap=run.depth_cap, median_scaling=not args.fix_pose
        )
        summary["depth"] = metrics.mean().to_dict()

    out = Path(args.output)
    files: Dict[Path, bytes] = {
        out / f"depth_{k:03d}.f32": encode_f32(depth) for k, depth in enumerate(depths)
    }
    files[out / "poses.txt"] = format_poses(state.trajectory().poses).encode("ascii")
    files[out / "convergence.csv"] = convergence_log(state.history)
    files[out / "fit.json"] = to_json(summary)
    write_all(files)

    _stdout(
        f"sweeps: {state.iteration}  converged: {state.converged}"
        + (f"  halted: {state.halted}" if state.halted else "")
        + "\n"
        + loss_report_text(result.report)
        + (f"abs_rel: {summary['depth']['abs_rel']:.6f}\n" if "depth" in summary else "")
    )
    return EXIT_OK


# ============================================================================
# eval-depth / eval-pose
# ============================================================================

def cmd_eval_depth(args: argparse.Namespace) -> int:
    if len(args.pred) != len(args.gt):
        raise UsageError(f"{len(args.pred)} predictions for {len(args.gt)} ground-truth rasters")
    cap = args.cap if args.cap is not None else get_settings().depth_cap
    median_scaling = args.median_scaling == "on"
    preds = [read_f32(path) for path in args.pred]
    gts = [read_f32(path) for path in args.gt]

    table = evaluate_depth_set(preds, gts, cap=cap, median_scaling=median_scaling, names=args.pred)
    result = DepthEvalResult(**{**table.mean().to_dict(), "n_pixels": int(table["n_pixels"].sum())})
    payload = depth_report_payload(result, table.reset_index(), median_scaling=median_scaling, cap=cap)
    if args.output:
        write_all({Path(args.output): to_json(payload)})

    if args.json:
        _stdout(to_json(payload).decode("utf-8"))
    else:
        _stdout(format_table([result.as_row()], "{:.4f}"))
    return EXIT_OK


def cmd_eval_pose(args: argparse.Namespace) -> int:
    pred = read_poses(args.pred)
    gt = read_poses(args.gt)
    summary = ate_sequence(pred, gt, snippet_len=args.snippet_len)
    baseline = mean_odometry_baseline(gt, args.snippet_len) if args.baseline == "mean-odometry" else None

    payload = ate_report_payload(summary, baseline)
    if args.output:
        write_all({Path(args.output): to_json(payload)})
    if args.json:
        _stdout(to_json(payload).decode("utf-8"))
    else:
        text = f"ATE ({args.snippet_len}-frame snippets, n={summary.n_snippets}): {summary}"
        if baseline is not None:
            text += f"\nmean-odometry baseline: {baseline}"
        _stdout(text)
    return EXIT_OK


# ============================================================================
# selftest
# ============================================================================

def cmd_selftest(args: argparse.Namespace) -> int:
    report = run_selftest(
        n_instances=args.instances, seed=args.seed, include_gradient=not args.no_gradient, raise_on_failure=False
    )
    _stdout(str(report))
    if not report.passed:
        raise SelftestFailure(f"{len(report.failures())} selftest checks failed")
    return EXIT_OK


# ============================================================================
# Parser
# ============================================================================

def _pose_noise(value: str) -> float:
    number = float(value)
    if number < 0:
        raise argparse.ArgumentTypeError("pose noise must be non-negative")
    return number


def build_parser() -> CommandParser:
    parser = CommandParser(prog="semdepth", description="Semantic-consistency depth and ego-motion toolkit")
    parser.add_argument("--log-level", default=None, help="Override SEMDEPTH_LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CommandParser)

    gen = commands.add_parser("gen-scene", help="Render a synthetic scene")
    source = gen.add_mutually_exclusive_group()
    source.add_argument("--scene", help="JSON scene configuration")
    source.add_argument("--preset", choices=sorted(SCENE_PRESETS), default="street")
    gen.add_argument("--frames", type=int, default=3)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", required=True, help="Output directory")
    gen.set_defaults(handler=cmd_gen_scene)

    loss = commands.add_parser("compute-loss", help="Evaluate the total loss of one target frame")
    loss.add_argument("--manifest", required=True)
    loss.add_argument("--config", help="JSON run configuration")
    loss.add_argument("--ablation", choices=sorted(ABLATION_PRESETS))
    loss.add_argument("--target", type=int, help="Target frame (default: middle frame)")
    loss.add_argument("--depth", nargs="+", help="Depth rasters per frame (default: manifest depth)")
    loss.add_argument("--poses", help="Camera-to-world pose file (default: manifest poses)")
    loss.add_argument("--no-automask", action="store_true")
    loss.add_argument("--output", help="Directory for the report and per-pixel maps")
    loss.add_argument("--visualize", action="store_true", help="Also write colour-mapped PPM maps")
    loss.add_argument("--json", action="store_true", help="Print the JSON report")
    loss.set_defaults(handler=cmd_compute_loss)

    fit = commands.add_parser("fit-synthetic", help="Recover depth and poses by direct fitting")
    fit.add_argument("--manifest", required=True)
    fit.add_argument("--config", help="JSON run configuration")
    fit.add_argument("--ablation", choices=sorted(ABLATION_PRESETS))
    fit.add_argument("--output", required=True)
    fit.add_argument("--fix-pose", action="store_true", help="Keep poses at the ground truth")
    fit.add_argument("--fix-depth", action="store_true", help="Keep depth at the ground truth")
    fit.add_argument("--init-depth", type=float, help="Uniform initial depth (meters)")
    fit.add_argument("--pose-init", choices=["zero", "gt"], default="zero")
    fit.add_argument("--pose-noise", nargs=2, type=_pose_noise, metavar=("RADIANS", "METERS"))
    fit.add_argument("--no-automask", action="store_true")
    fit.add_argument("--max-iterations", type=int)
    fit.add_argument("--target-frames", choices=["all", "reference"], default="all")
    fit.set_defaults(handler=cmd_fit_synthetic)

    depth = commands.add_parser("eval-depth", help="Depth metrics")
    depth.add_argument("--pred", nargs="+", required=True)
    depth.add_argument("--gt", nargs="+", required=True)
    depth.add_argument("--median-scaling", choices=["on", "off"], default="on")
    depth.add_argument("--cap", type=float, help="Maximum evaluated depth (meters)")
    depth.add_argument("--output", help="JSON report file")
    depth.add_argument("--json", action="store_true")
    depth.set_defaults(handler=cmd_eval_depth)

    pose = commands.add_parser("eval-pose", help="Snippet ATE")
    pose.add_argument("--pred", required=True)
    pose.add_argument("--gt", required=True)
    pose.add_argument("--snippet-len", type=int, choices=list(SNIPPET_LENGTHS), default=5)
    pose.add_argument("--baseline", choices=["mean-odometry"])
    pose.add_argument("--output", help="JSON report file")
    pose.add_argument("--json", action="store_true")
    pose.set_defaults(handler=cmd_eval_pose)

    selftest = commands.add_parser("selftest", help="Oracle-equivalence and gradient checks")
    selftest.add_argument("--instances", type=int, default=200)
    selftest.add_argument("--seed", type=int, default=0)
    selftest.add_argument("--no-gradient", action="store_true")
    selftest.set_defaults(handler=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        if args.log_level:
            set_level(args.log_level)
        if getattr(args, "cap", None) is not None and args.cap <= 0:
            raise UsageError("--cap must be positive")
        return args.handler(args)
    except UsageError as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except SelftestFailure as e:
        logger.error(str(e))
        return EXIT_SELFTEST
    except (SemDepthError, OSError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
