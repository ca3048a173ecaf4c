"""
Procedural band-limited textures evaluated at 3D points.
"""

from typing import NamedTuple

import numpy as np

from src.models.scene import Texture

CHANNELS = 3


class WaveSet(NamedTuple):
    """Per-channel wave parameters: directions (C, N, 3), phases (C, N), amplitudes (C, N)."""

    directions: np.ndarray
    phases: np.ndarray
    amplitudes: np.ndarray


def draw_waves(texture: Texture, seed: int, primitive_index: int) -> WaveSet:
    """Deterministic wave parameters for one primitive."""
    rng = np.random.default_rng([seed, primitive_index])
    n = texture.n_waves
    directions = rng.normal(size=(CHANNELS, n, 3))
    directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
    frequencies = rng.uniform(0.3, 1.0, size=(CHANNELS, n, 1)) * texture.frequency
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(CHANNELS, n))
    weights = rng.uniform(0.5, 1.0, size=(CHANNELS, n))
    amplitudes = texture.amplitude * weights / weights.sum(axis=1, keepdims=True)
    return WaveSet(directions=directions * frequencies, phases=phases, amplitudes=amplitudes)


def evaluate(texture: Texture, waves: WaveSet, points: np.ndarray) -> np.ndarray:
    """
    Texture colour at local points.

    Args:
        points: (..., 3) points in the primitive's own frame

    Returns:
        (3, ...) intensities in [0, 1]
    """
    # elementwise, so equal points get bit-identical colours
    x = points[..., 0, None]
    y = points[..., 1, None]
    z = points[..., 2, None]
    colour = np.full(points.shape[:-1] + (CHANNELS,), texture.base)
    for n in range(waves.phases.shape[1]):
        d = waves.directions[:, n, :]
        angle = x * d[:, 0] + y * d[:, 1] + z * d[:, 2] + waves.phases[:, n]
        colour = colour + waves.amplitudes[:, n] * np.sin(angle)
    return np.moveaxis(np.clip(colour, 0.0, 1.0), -1, 0)
