import numpy as np
import pytest

from amodalseg.data.io import quantize_image
from amodalseg.data.types import Conversation, SceneSample, SegTarget
from amodalseg.synth.scenes import SceneConfig, attach_conversations, generate_scene
from amodalseg.synth.templates import default_templates, generate_conversations


def make_sample(sample_id="s0", size=(8, 8)):
    """Hand-built two-object sample: a front square occluding a back square."""
    h, w = size
    front_a = np.zeros((h, w), bool)
    front_a[1:4, 1:4] = True
    back_a = np.zeros((h, w), bool)
    back_a[2:6, 2:6] = True
    back_v = back_a & ~front_a
    image = quantize_image(np.full((h, w, 3), 0.5, dtype=np.float32))
    objects = {
        "red-rectangle": SegTarget.from_masks(front_a, front_a, "rectangle"),
        "blue-rectangle": SegTarget.from_masks(back_v, back_a, "rectangle"),
    }
    conv = Conversation(
        question="Which object is partially hidden from view?",
        answer="The blue rectangle[SEG] is partially hidden behind the red rectangle[SEG].",
        target_ids=("blue-rectangle", "red-rectangle"),
    )
    return SceneSample(
        sample_id=sample_id,
        image=image,
        objects=objects,
        conversations=(conv,),
        depth_order=("red-rectangle", "blue-rectangle"),
    )


@pytest.fixture
def sample():
    return make_sample()


@pytest.fixture(scope="session")
def small_scene():
    scene = generate_scene(SceneConfig(object_count=(2, 3)), seed=11)
    convs = generate_conversations(scene, default_templates(), 6, seed=11)
    return attach_conversations(scene, convs)


def random_mask_pair(rng, h, w):
    """Random valid (visible, amodal) pair with a nonempty amodal mask."""
    amodal = rng.random((h, w)) < rng.uniform(0.2, 0.8)
    if not amodal.any():
        amodal[rng.integers(h), rng.integers(w)] = True
    visible = amodal & (rng.random((h, w)) < rng.uniform(0.0, 1.0))
    return visible, amodal
