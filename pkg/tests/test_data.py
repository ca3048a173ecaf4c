"""
Tests for raster and text formats, manifests, the class table and reports.
"""

import json

import numpy as np
import pandas as pd
import pytest
import torch

from src.data.loader import ManifestLoader, load_class_table, load_run_overrides, road_class_ids
from src.data.poses import format_poses, parse_poses, read_intrinsics
from src.data.rasters import (
    atomic_write,
    decode_f32,
    decode_pgm_labels,
    decode_ppm,
    encode_f32,
    encode_pgm_labels,
    encode_ppm,
    write_f32,
    write_pgm_labels,
    write_ppm,
)
from src.data.reports import colorize, convergence_log, loss_report_payload, to_json
from src.exceptions import (
    DimensionMismatchError,
    DomainError,
    ManifestError,
    RasterFormatError,
    TrajectoryError,
)
from src.geometry.se3 import exp6
from src.losses.total import total_loss
from src.models.camera import Intrinsics


# ============================================================================
# Rasters
# ============================================================================

def test_f32_layout():
    data = encode_f32(np.array([[5.0]]))
    assert data == b"F32 1 1\n" + bytes([0x00, 0x00, 0xA0, 0x40])
    assert decode_f32(data).tolist() == [[5.0]]


def test_f32_keeps_float32_values():
    raster = torch.tensor([[0.5, 1.25, 3.0], [7.75, 0.125, 80.0]], dtype=torch.float64)
    assert torch.equal(decode_f32(encode_f32(raster)), raster)


def test_f32_rejects_truncated_payload():
    with pytest.raises(RasterFormatError):
        decode_f32(b"F32 2 2\n" + bytes(12))
    with pytest.raises(RasterFormatError):
        decode_f32(b"F64 1 1\n" + bytes(4))


def test_ppm_quantises_to_eight_bits():
    image = torch.zeros(3, 2, 3, dtype=torch.float64)
    image[0, 0, 0] = 1.0
    image[1, 1, 2] = 0.5
    decoded = decode_ppm(encode_ppm(image))
    assert decoded.shape == (3, 2, 3)
    assert float(decoded[0, 0, 0]) == 1.0
    assert float(decoded[1, 1, 2]) == 128 / 255


def test_ppm_header_comments_are_skipped():
    data = b"P6\n# comment\n1 1\n255\n" + bytes([255, 0, 0])
    assert decode_ppm(data)[:, 0, 0].tolist() == [1.0, 0.0, 0.0]


def test_ppm_rejects_sixteen_bit_files():
    with pytest.raises(RasterFormatError):
        decode_ppm(b"P6\n1 1\n65535\n" + bytes(6))


def test_labels_round_trip_and_range():
    labels = torch.tensor([[0, 18], [255, 13]])
    assert torch.equal(decode_pgm_labels(encode_pgm_labels(labels)), labels)
    with pytest.raises(RasterFormatError):
        encode_pgm_labels(torch.tensor([[19]]))
    with pytest.raises(RasterFormatError):
        decode_pgm_labels(b"P5\n1 1\n255\n" + bytes([19]))


def test_atomic_write_replaces_without_leftovers(tmp_path):
    target = tmp_path / "sub" / "file.bin"
    atomic_write(target, b"one")
    atomic_write(target, b"two")
    assert target.read_bytes() == b"two"
    assert [p.name for p in target.parent.iterdir()] == ["file.bin"]


# ============================================================================
# Poses and intrinsics
# ============================================================================

def test_pose_text_round_trip():
    poses = [exp6([0.01, -0.02, 0.03, 0.4, 0.1, -2.5]), exp6([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])]
    parsed = parse_poses(format_poses(poses))
    assert len(parsed) == 2
    for original, recovered in zip(poses, parsed.poses):
        torch.testing.assert_close(original.rotation, recovered.rotation, atol=1e-15, rtol=0)
        assert torch.equal(original.translation, recovered.translation)


def test_rounded_rotations_are_reprojected():
    pose = exp6([0.1, -0.2, 0.3, 1.0, 2.0, 3.0])
    line = " ".join(f"{v:.6f}" for v in pose.matrix34().reshape(-1))
    parsed = parse_poses(line + "\n# trailing comment\n")
    assert float((parsed.poses[0].rotation - pose.rotation).abs().max()) < 1e-5


def test_pose_file_errors():
    with pytest.raises(TrajectoryError):
        parse_poses("\n\n")
    with pytest.raises(RasterFormatError):
        parse_poses("1 0 0 0 0 1 0 0 0 0 1")
    with pytest.raises(DomainError):
        parse_poses("2 0 0 0 0 2 0 0 0 0 2 0")


def test_read_intrinsics(tmp_path):
    path = tmp_path / "intrinsics.txt"
    path.write_text("64 64 31.5 15.5\n")
    assert read_intrinsics(path) == Intrinsics(fx=64.0, fy=64.0, cx=31.5, cy=15.5)
    path.write_text("64 64 31.5\n")
    with pytest.raises(RasterFormatError):
        read_intrinsics(path)
    with pytest.raises(FileNotFoundError):
        read_intrinsics(tmp_path / "missing.txt")


# ============================================================================
# Manifests
# ============================================================================

def _write_snippet(directory, frames, spec, with_depth=True, poses=True):
    entries = []
    for frame in frames:
        name = f"frame_{frame.index:03d}"
        write_ppm(directory / f"{name}.ppm", frame.image)
        write_pgm_labels(directory / f"{name}.pgm", frame.labels)
        entry = {"image": f"{name}.ppm", "labels": f"{name}.pgm"}
        if with_depth:
            write_f32(directory / f"{name}.depth.f32", frame.depth)
            entry["depth"] = f"{name}.depth.f32"
        entries.append(entry)
    (directory / "intrinsics.txt").write_text(spec.intrinsics.to_text() + "\n")
    manifest = {"frames": entries, "intrinsics": "intrinsics.txt"}
    if poses:
        (directory / "poses.txt").write_text(format_poses([f.pose for f in frames]))
        manifest["gt_poses"] = "poses.txt"
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


def test_load_snippet(tmp_path, street_spec, street_frames):
    path = _write_snippet(tmp_path, street_frames, street_spec)
    snippet = ManifestLoader().load_snippet(path)
    assert len(snippet.images) == 3
    assert snippet.K == street_spec.intrinsics
    assert torch.equal(snippet.labels[1], street_frames[1].labels)
    assert len(snippet.gt_trajectory) == 3
    assert float((snippet.depths[0] - street_frames[0].depth).abs().max()) < 1e-5


def test_depth_is_optional(tmp_path, street_spec, street_frames):
    path = _write_snippet(tmp_path, street_frames, street_spec, with_depth=False, poses=False)
    snippet = ManifestLoader().load_snippet(path)
    assert snippet.depths is None
    assert snippet.gt_trajectory is None


def test_manifest_errors(tmp_path, street_spec, street_frames):
    loader = ManifestLoader()
    with pytest.raises(FileNotFoundError):
        loader.load_manifest(tmp_path / "nothing.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ManifestError):
        loader.load_manifest(broken)

    single = tmp_path / "single.json"
    single.write_text(json.dumps({"frames": [{"image": "a.ppm", "labels": "a.pgm"}], "intrinsics": "k.txt"}))
    with pytest.raises(ManifestError):
        loader.load_manifest(single)

    path = _write_snippet(tmp_path, street_frames, street_spec)
    (tmp_path / "frame_001.pgm").unlink()
    with pytest.raises(ManifestError):
        loader.load_manifest(path)


def test_mismatched_frame_sizes(tmp_path, street_spec, street_frames):
    path = _write_snippet(tmp_path, street_frames, street_spec)
    write_pgm_labels(tmp_path / "frame_002.pgm", street_frames[2].labels[:, :-1])
    with pytest.raises(DimensionMismatchError):
        ManifestLoader().load_snippet(path)


def test_pose_count_must_match_frames(tmp_path, street_spec, street_frames):
    path = _write_snippet(tmp_path, street_frames, street_spec)
    (tmp_path / "poses.txt").write_text(format_poses([f.pose for f in street_frames[:2]]))
    with pytest.raises(ManifestError):
        ManifestLoader().load_snippet(path)


def test_run_overrides(tmp_path):
    assert load_run_overrides(None) == {}
    path = tmp_path / "run.json"
    path.write_text("[1, 2]")
    with pytest.raises(ManifestError):
        load_run_overrides(path)


# ============================================================================
# Class table
# ============================================================================

def test_shipped_class_table():
    table = load_class_table()
    assert len(table) == 19
    assert table.loc[0, "name"] == "road"
    assert road_class_ids(table) == (0, 1)


def test_class_table_validation(tmp_path):
    path = tmp_path / "classes.csv"
    pd.DataFrame({"id": [0, 0], "name": ["a", "b"], "is_road": [1, 0]}).to_csv(path, index=False)
    with pytest.raises(RasterFormatError):
        load_class_table(path)
    pd.DataFrame({"id": [0], "name": ["a"]}).to_csv(path, index=False)
    with pytest.raises(RasterFormatError):
        load_class_table(path)


# ============================================================================
# Reports
# ============================================================================

def test_loss_report_json_is_deterministic(instance):
    report = total_loss(instance)
    first = to_json(loss_report_payload(report, target=0))
    second = to_json(loss_report_payload(total_loss(instance), target=0))
    assert first == second
    payload = json.loads(first)
    assert payload["kind"] == "loss"
    assert payload["target"] == 0
    assert set(payload["terms"]) == {"L_img", "L_ss", "L_3d", "L_road", "L_smooth", "total"}


def test_convergence_log_columns():
    history = [{"iteration": 0.0, "total": 1.5, "depth_step": 1.0}, {"iteration": 1.0, "total": 1.25, "depth_step": 0.5}]
    text = convergence_log(history).decode()
    assert text.splitlines() == ["iteration,total,depth_step", "0,1.5,1", "1,1.25,0.5"]


def test_colorize_blackens_invalid_pixels():
    values = np.array([[0.0, 1.0], [np.inf, 0.5]])
    rgb = colorize(values, valid=np.array([[True, True], [True, False]]))
    assert rgb.shape == (3, 2, 2)
    assert rgb[:, 1, 0].tolist() == [0.0, 0.0, 0.0]
    assert rgb[:, 1, 1].tolist() == [0.0, 0.0, 0.0]
    assert rgb[:, 0, 1].sum() > 0.0
