import numpy as np
import pytest

from dynocc.synthetic import SceneSpec, Sprite, default_scene, render_scene


@pytest.fixture(scope="session")
def disc_scene():
    """The default acceptance scene (disc sprite, (4, 0) px/frame)."""
    return render_scene(default_scene())


@pytest.fixture(scope="session")
def rect_scene():
    """A square sprite variant for geometry-sensitive checks."""
    spec = SceneSpec(
        width=128,
        height=128,
        frame_count=10,
        background_seed=7,
        sprites=(
            Sprite(x=20, y=40, width=48, height=48, layer=0, velocity=(4, 0), texture_seed=11),
        ),
    )
    return render_scene(spec)


@pytest.fixture(scope="session")
def static_scene():
    spec = SceneSpec(
        width=96,
        height=96,
        frame_count=6,
        background_seed=3,
        sprites=(
            Sprite(x=30, y=30, width=30, height=30, layer=0, velocity=(0, 0), texture_seed=5),
        ),
    )
    return render_scene(spec)


def gt_flows(scene, baseline=2):
    """Per-frame two-way ground-truth flow lists (None where out of range)."""
    gt = scene.ground_truth
    n = gt.frame_count
    prev = [gt.flow(t, -baseline) if t - baseline >= 0 else None for t in range(n)]
    nxt = [gt.flow(t, baseline) if t + baseline < n else None for t in range(n)]
    return prev, nxt


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
