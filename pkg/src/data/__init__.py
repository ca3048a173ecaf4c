"""
Data package for semdepth.

This package contains the on-disk formats (rasters, pose and intrinsics
files), the manifest and class-table loaders, and the report writers.
"""

from src.data.loader import (
    LoadedSnippet,
    ManifestLoader,
    load_class_table,
    load_run_overrides,
    load_scene_spec,
    road_class_ids,
)
from src.data.poses import format_intrinsics, format_poses, parse_poses, read_intrinsics, read_poses
from src.data.rasters import (
    atomic_write,
    decode_f32,
    decode_pgm_labels,
    decode_ppm,
    encode_f32,
    encode_pgm_labels,
    encode_ppm,
    read_f32,
    read_pgm_labels,
    read_ppm,
    write_all,
    write_f32,
    write_pgm_labels,
    write_ppm,
)
from src.data.reports import (
    colorize,
    convergence_log,
    format_table,
    loss_report_payload,
    to_json,
    visualization_ppm,
)

__all__ = [
    "LoadedSnippet",
    "ManifestLoader",
    "load_class_table",
    "load_run_overrides",
    "load_scene_spec",
    "road_class_ids",
    "format_intrinsics",
    "format_poses",
    "parse_poses",
    "read_intrinsics",
    "read_poses",
    "atomic_write",
    "decode_f32",
    "decode_pgm_labels",
    "decode_ppm",
    "encode_f32",
    "encode_pgm_labels",
    "encode_ppm",
    "read_f32",
    "read_pgm_labels",
    "read_ppm",
    "write_all",
    "write_f32",
    "write_pgm_labels",
    "write_ppm",
    "colorize",
    "convergence_log",
    "format_table",
    "loss_report_payload",
    "to_json",
    "visualization_ppm",
]
