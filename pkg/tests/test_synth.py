import numpy as np
import pytest

from amodalseg.data.types import samples_equal
from amodalseg.data.validate import validate_sample
from amodalseg.errors import GenerationError
from amodalseg.synth.scenes import PALETTE, SceneConfig, compose_scene, generate_scene
from amodalseg.synth.shapes import ShapeSpec, raster
from amodalseg.synth.templates import default_templates, generate_conversations


def rect(color, cx, cy, hw, hh):
    return ShapeSpec("rectangle", color, PALETTE[color], (cx, cy, hw, hh, 0.0))


def test_disjoint_shapes_have_zero_rates():
    scene = compose_scene(
        "t", [rect("red", 4, 4, 2, 2), rect("blue", 12, 12, 2, 2)], (16, 16)
    )
    for tgt in scene.objects.values():
        assert tgt.occlusion_rate == 0.0
        assert not (tgt.spatial_map == 2).any()


def test_full_cover_limit():
    scene = compose_scene(
        "t", [rect("red", 8, 8, 5, 5), rect("blue", 8, 8, 2, 2)], (16, 16)
    )
    hidden = scene.objects["blue-rectangle"]
    assert hidden.occlusion_rate == 1.0
    assert int(hidden.visible_mask.sum()) == 0


def test_generate_scene_deterministic():
    config = SceneConfig()
    a = generate_scene(config, 7)
    b = generate_scene(config, 7)
    assert samples_equal(a, b)
    c = generate_scene(config, 8)
    assert not samples_equal(a, c)


def test_generated_scene_valid_and_in_band():
    config = SceneConfig(rate_band=(0.2, 0.7))
    for seed in range(5):
        scene = generate_scene(config, seed)
        assert validate_sample(scene) == []
        rates = [t.occlusion_rate for t in scene.objects.values()]
        assert any(0.2 <= r <= 0.7 for r in rates)


def test_visible_masks_pairwise_disjoint_and_conserved():
    for seed in range(5):
        scene = generate_scene(SceneConfig(), seed)
        ids = list(scene.objects)
        union_visible = np.zeros(scene.image_size, bool)
        union_amodal = np.zeros(scene.image_size, bool)
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                assert not (
                    scene.objects[a].visible_mask & scene.objects[b].visible_mask
                ).any()
            union_visible |= scene.objects[a].visible_mask
            union_amodal |= scene.objects[a].amodal_mask
        # every covered pixel is visible for exactly the front-most shape
        assert np.array_equal(union_visible, union_amodal)


def test_depth_oracle_brute_force():
    """Recompute visible masks per pixel: the nearest shape containing p wins."""
    scene = generate_scene(SceneConfig(), 13)
    h, w = scene.image_size
    amodals = {oid: scene.objects[oid].amodal_mask for oid in scene.depth_order}
    for r in range(h):
        for c in range(w):
            winner = None
            for oid in scene.depth_order:  # front to back
                if amodals[oid][r, c]:
                    winner = oid
                    break
            for oid in scene.depth_order:
                expected = winner == oid
                assert bool(scene.objects[oid].visible_mask[r, c]) == expected


def test_impossible_band_raises_generation_error():
    config = SceneConfig(rate_band=(0.999, 1.0), max_attempts=5)
    with pytest.raises(GenerationError, match="relax"):
        generate_scene(config, 3)


def test_raster_is_exact_for_axis_aligned_rect():
    mask = raster(rect("red", 4, 4, 2, 2), 8, 8)
    expect = np.zeros((8, 8), bool)
    expect[2:6, 2:6] = True  # centers within [2, 6] in both axes
    assert np.array_equal(mask, expect)


class TestConfigValidation:
    def test_inverted_band_rejected(self):
        with pytest.raises(ValueError, match="r_min"):
            SceneConfig(rate_band=(0.8, 0.2))

    def test_occlusion_needs_two_objects(self):
        with pytest.raises(ValueError, match="object_count"):
            SceneConfig(object_count=(1, 1), rate_band=(0.2, 0.5))
        SceneConfig(object_count=(1, 1), rate_band=(0.0, 0.0))  # fine unoccluded

    def test_unknown_shape_rejected(self):
        with pytest.raises(ValueError, match="unknown shape"):
            SceneConfig(shapes=("rectangle", "hexagon"))

    def test_template_seg_arity_enforced(self):
        from amodalseg.errors import ConfigurationError
        from amodalseg.synth.templates import QATemplate

        with pytest.raises(ConfigurationError, match="seg roles"):
            QATemplate(
                name="broken", question="q?", answer="one {a}[SEG] mark",
                seg_roles=("a", "b"), bind=lambda scene: [],
            )


class TestConversations:
    def test_occlusion_pair_template_orders_targets(self, sample):
        templates = [t for t in default_templates() if t.name == "identify-occludee"]
        convs = generate_conversations(sample, templates, 5, seed=0)
        assert len(convs) == 1
        conv = convs[0]
        assert conv.answer.count("[SEG]") == 2
        assert conv.target_ids == ("blue-rectangle", "red-rectangle")

    def test_rich_scene_yields_ten_distinct(self):
        scene = generate_scene(SceneConfig(object_count=(3, 4)), seed=21)
        convs = generate_conversations(scene, default_templates(), 10, seed=21)
        assert len(convs) == 10
        assert len({(c.question, c.answer) for c in convs}) == 10

    def test_unsatisfiable_templates_give_empty_list(self):
        scene = compose_scene(
            "t", [rect("red", 4, 4, 2, 2), rect("blue", 12, 12, 2, 2)], (16, 16)
        )
        occlusion_only = [t for t in default_templates() if t.name == "identify-occludee"]
        assert generate_conversations(scene, occlusion_only, 10, seed=0) == []

    def test_multi_object_answers_present(self):
        scene = generate_scene(SceneConfig(object_count=(3, 4)), seed=21)
        convs = generate_conversations(scene, default_templates(), 10, seed=21)
        assert any(len(c.target_ids) >= 2 for c in convs)

    def test_every_conversation_passes_validation(self, small_scene):
        assert validate_sample(small_scene) == []

    def test_seeded_selection_deterministic(self, small_scene):
        a = generate_conversations(small_scene, default_templates(), 6, seed=4)
        b = generate_conversations(small_scene, default_templates(), 6, seed=4)
        assert a == b
