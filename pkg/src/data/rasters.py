"""
Raster file formats.

- Images: binary PPM (P6, maxval 255), converted to/from [0, 1].
- Label maps: binary PGM (P5, maxval 255) holding class ids 0-18 or 255.
- Depth and other float rasters: "F32 <width> <height>\\n" followed by
  row-major little-endian float32 values.

Encoders build the complete file in memory; atomic_write puts it in place
with write-temp-then-rename so a failed command never leaves a partial file.
"""

import os
import tempfile
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np
import torch

from src.exceptions import RasterFormatError
from src.models.losses import IGNORE_LABEL, NUM_CLASSES

PathLike = Union[str, Path]

F32_MAGIC = b"F32"


def _to_numpy(values) -> np.ndarray:
    if isinstance(values, torch.Tensor):
        return values.detach().cpu().numpy()
    return np.asarray(values)


def atomic_write(path: PathLike, payload: bytes) -> Path:
    """Write bytes to `path` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def write_all(files: Dict[Path, bytes]) -> None:
    """Atomically write every prepared file."""
    for path, payload in files.items():
        atomic_write(path, payload)


def _read_netpbm_header(data: bytes, magic: bytes, path: PathLike) -> Tuple[int, int, int, int]:
    """Parse magic, width, height, maxval; returns them with the payload offset."""
    if not data.startswith(magic):
        raise RasterFormatError(f"{path}: expected {magic.decode()} header")
    tokens = []
    pos = len(magic)
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise RasterFormatError(f"{path}: truncated header")
        tokens.append(data[start:pos])
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as e:
        raise RasterFormatError(f"{path}: malformed header ({e})") from e
    if width <= 0 or height <= 0:
        raise RasterFormatError(f"{path}: invalid size {width}x{height}")
    if maxval != 255:
        raise RasterFormatError(f"{path}: only 8-bit rasters are supported (maxval {maxval})")
    return width, height, maxval, pos + 1


def encode_ppm(image) -> bytes:
    """(3, H, W) image in [0, 1] -> P6 bytes."""
    array = _to_numpy(image).astype(np.float64)
    if array.ndim != 3 or array.shape[0] != 3:
        raise RasterFormatError(f"image must be (3, H, W), got {array.shape}")
    _, height, width = array.shape
    pixels = np.clip(np.round(array * 255.0), 0, 255).astype(np.uint8)
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(pixels.transpose(1, 2, 0)).tobytes()


def decode_ppm(data: bytes, path: PathLike = "<bytes>") -> torch.Tensor:
    width, height, _, offset = _read_netpbm_header(data, b"P6", path)
    expected = width * height * 3
    payload = data[offset:]
    if len(payload) != expected:
        raise RasterFormatError(f"{path}: expected {expected} pixel bytes, found {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return torch.from_numpy(pixels.transpose(2, 0, 1).astype(np.float64) / 255.0)


def encode_pgm_labels(labels) -> bytes:
    """(H, W) class ids -> P5 bytes; ids must be 0-18 or 255."""
    array = _to_numpy(labels)
    if array.ndim != 2:
        raise RasterFormatError(f"label map must be (H, W), got {array.shape}")
    check_labels(array, "<labels>")
    height, width = array.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(array.astype(np.uint8)).tobytes()


def check_labels(array: np.ndarray, path: PathLike) -> None:
    bad = ((array >= NUM_CLASSES) & (array != IGNORE_LABEL)) | (array < 0)
    if bad.any():
        values = sorted(set(int(v) for v in np.unique(array[bad])))
        raise RasterFormatError(
            f"{path}: label values {values} outside 0-{NUM_CLASSES - 1} (and {IGNORE_LABEL} = ignore)"
        )


def decode_pgm_labels(data: bytes, path: PathLike = "<bytes>") -> torch.Tensor:
    width, height, _, offset = _read_netpbm_header(data, b"P5", path)
    payload = data[offset:]
    if len(payload) != width * height:
        raise RasterFormatError(f"{path}: expected {width * height} label bytes, found {len(payload)}")
    array = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    check_labels(array, path)
    return torch.from_numpy(array.astype(np.int64))


def encode_f32(raster) -> bytes:
    """(H, W) float raster -> F32 bytes."""
    array = _to_numpy(raster)
    if array.ndim != 2:
        raise RasterFormatError(f"F32 raster must be (H, W), got {array.shape}")
    height, width = array.shape
    header = f"F32 {width} {height}\n".encode("ascii")
    return header + np.ascontiguousarray(array, dtype="<f4").tobytes()


def decode_f32(data: bytes, path: PathLike = "<bytes>") -> torch.Tensor:
    newline = data.find(b"\n")
    if newline < 0:
        raise RasterFormatError(f"{path}: missing F32 header line")
    parts = data[:newline].split()
    if len(parts) != 3 or parts[0] != F32_MAGIC:
        raise RasterFormatError(f"{path}: header must be 'F32 <width> <height>'")
    try:
        width, height = int(parts[1]), int(parts[2])
    except ValueError as e:
        raise RasterFormatError(f"{path}: malformed F32 size ({e})") from e
    if width <= 0 or height <= 0:
        raise RasterFormatError(f"{path}: invalid size {width}x{height}")
    payload = data[newline + 1:]
    if len(payload) != 4 * width * height:
        raise RasterFormatError(f"{path}: expected {4 * width * height} bytes, found {len(payload)}")
    array = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    return torch.from_numpy(array.astype(np.float64))


def _read_bytes(path: PathLike) -> bytes:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"raster not found: {path}")
    return path.read_bytes()


def read_ppm(path: PathLike) -> torch.Tensor:
    return decode_ppm(_read_bytes(path), path)


def read_pgm_labels(path: PathLike) -> torch.Tensor:
    return decode_pgm_labels(_read_bytes(path), path)


def read_f32(path: PathLike) -> torch.Tensor:
    return decode_f32(_read_bytes(path), path)


def write_ppm(path: PathLike, image) -> Path:
    return atomic_write(path, encode_ppm(image))


def write_pgm_labels(path: PathLike, labels) -> Path:
    return atomic_write(path, encode_pgm_labels(labels))


def write_f32(path: PathLike, raster) -> Path:
    return atomic_write(path, encode_f32(raster))
