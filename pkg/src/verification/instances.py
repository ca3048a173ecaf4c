"""
Random small loss instances for oracle comparisons.

Each instance is an 8x8 target frame with two sources: images in [0, 1],
label maps drawn from a few classes (some pixels ignored), depths in [2, 10]
and small random motions, so a fair share of warps leave the frame.
"""

from typing import NamedTuple

import numpy as np
import torch

from src.geometry.se3 import exp6
from src.models.camera import DTYPE, Intrinsics
from src.models.losses import IGNORE_LABEL
from src.models.snippet import SnippetInputs

INSTANCE_SIZE = 8
INSTANCE_SOURCES = 2
INSTANCE_CLASSES = (0, 1, 2, 13)


class Instance(NamedTuple):
    index: int
    inputs: SnippetInputs


def random_instance(seed: int, index: int, size: int = INSTANCE_SIZE, n_sources: int = INSTANCE_SOURCES) -> Instance:
    rng = np.random.default_rng([seed, index])
    K = Intrinsics(fx=float(size), fy=float(size), cx=(size - 1) / 2.0, cy=(size - 1) / 2.0)

    def image() -> torch.Tensor:
        return torch.from_numpy(rng.uniform(0.0, 1.0, size=(3, size, size))).to(DTYPE)

    def labels() -> torch.Tensor:
        values = rng.choice(INSTANCE_CLASSES, size=(size, size))
        values[rng.uniform(size=(size, size)) < 0.1] = IGNORE_LABEL
        return torch.from_numpy(values.astype(np.int64))

    def depth() -> torch.Tensor:
        return torch.from_numpy(rng.uniform(2.0, 10.0, size=(size, size))).to(DTYPE)

    def pose():
        omega = rng.normal(scale=0.05, size=3)
        translation = rng.normal(scale=0.3, size=3)
        return exp6(np.concatenate([omega, translation]))

    inputs = SnippetInputs(
        K=K,
        target_image=image(),
        target_labels=labels(),
        target_depth=depth(),
        source_images=[image() for _ in range(n_sources)],
        source_labels=[labels() for _ in range(n_sources)],
        source_depths=[depth() for _ in range(n_sources)],
        poses=[pose() for _ in range(n_sources)],
    )
    return Instance(index=index, inputs=inputs)


def random_instances(count: int, seed: int = 0):
    for index in range(count):
        yield random_instance(seed, index)
