"""
Shared fixtures: rendered synthetic scenes and random small instances.
"""

import pytest
import torch

from src.geometry.se3 import relative_pose
from src.models.snippet import SnippetInputs
from src.scene.presets import dyadic_plane_scene, moving_box_scene, street_scene
from src.scene.renderer import render_all
from src.verification.instances import random_instance


@pytest.fixture(scope="session")
def dyadic_spec():
    return dyadic_plane_scene(n_frames=2)


@pytest.fixture(scope="session")
def dyadic_frames(dyadic_spec):
    return render_all(dyadic_spec)


@pytest.fixture(scope="session")
def street_spec():
    return street_scene(n_frames=3)


@pytest.fixture(scope="session")
def street_frames(street_spec):
    return render_all(street_spec)


@pytest.fixture(scope="session")
def box_spec():
    return moving_box_scene()


@pytest.fixture(scope="session")
def box_frames(box_spec):
    return render_all(box_spec)


@pytest.fixture
def instance():
    return random_instance(seed=0, index=0).inputs


def snippet_from_frames(spec, frames, target, sources, depths=None) -> SnippetInputs:
    """Ground-truth SnippetInputs of a rendered scene."""
    depths = depths if depths is not None else [f.depth for f in frames]
    return SnippetInputs(
        K=spec.intrinsics,
        target_image=frames[target].image,
        target_labels=frames[target].labels,
        target_depth=depths[target],
        source_images=[frames[s].image for s in sources],
        source_labels=[frames[s].labels for s in sources],
        source_depths=[depths[s] for s in sources],
        poses=[relative_pose(frames[target].pose, frames[s].pose) for s in sources],
    )


@pytest.fixture
def dyadic_snippet(dyadic_spec, dyadic_frames):
    return snippet_from_frames(dyadic_spec, dyadic_frames, target=0, sources=[1])


@pytest.fixture
def street_snippet(street_spec, street_frames):
    return snippet_from_frames(street_spec, street_frames, target=1, sources=[0, 2])


@pytest.fixture(autouse=True)
def _deterministic_torch():
    torch.manual_seed(0)
    yield


@pytest.fixture
def make_snippet():
    return snippet_from_frames
