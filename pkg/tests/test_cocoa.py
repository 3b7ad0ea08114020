import json
import shutil
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from amodalseg.data.cocoa import decode_region, load_cocoa_style, rasterize_polygon
from amodalseg.data.validate import validate_sample
from amodalseg.errors import DatasetFormatError

FIXTURE = Path(__file__).parent / "fixtures" / "cocoa_fixture.json"


def write_image(path, size=(8, 8)):
    arr = np.zeros((*size, 3), dtype=np.uint8)
    arr[..., 0] = 120
    Image.fromarray(arr, "RGB").save(path)


@pytest.fixture
def fixture_dirs(tmp_path):
    ann = tmp_path / "annotations.json"
    shutil.copy(FIXTURE, ann)
    images = tmp_path / "images"
    images.mkdir()
    write_image(images / "img1.png")
    return ann, images


def test_fixture_loads_with_derived_ground_truth(fixture_dirs):
    ann, images = fixture_dirs
    samples, issues = load_cocoa_style(ann, images)
    assert issues == []
    assert len(samples) == 1
    sample = samples[0]
    assert validate_sample(sample) == []
    plate = sample.objects["obj0"]
    cup = sample.objects["obj1"]
    # Polygon square (2,2)-(6,6) covers pixel centers 2..5 in both axes.
    assert int(plate.amodal_mask.sum()) == 16
    assert plate.occlusion_rate == 0.5
    assert (plate.spatial_map == 2).sum() == 8
    assert cup.occlusion_rate == 0.0
    # No explicit depth order: least occluded first.
    assert sample.depth_order == ("obj1", "obj0")


def test_unoccluded_object_has_zero_rate(fixture_dirs):
    ann, images = fixture_dirs
    samples, _ = load_cocoa_style(ann, images)
    assert samples[0].objects["obj1"].occlusion_rate == 0.0


def test_two_by_two_rle_decodes_to_popcount_four():
    mask = decode_region({"type": "rle", "size": [2, 2], "counts": [0, 4]}, 2, 2)
    assert int(mask.sum()) == 4


def test_even_odd_polygon_with_hole():
    outer = [[0, 0], [6, 0], [6, 6], [0, 6]]
    inner = [[2, 2], [4, 2], [4, 4], [2, 4]]
    mask = rasterize_polygon([outer, inner], 6, 6)
    assert mask[0, 0] and not mask[3, 3]
    assert int(mask.sum()) == 36 - 4


def test_missing_image_skips_sample_with_warning(tmp_path):
    ann = tmp_path / "annotations.json"
    shutil.copy(FIXTURE, ann)
    (tmp_path / "images").mkdir()
    samples, issues = load_cocoa_style(ann, tmp_path / "images")
    assert samples == []
    assert len(issues) == 1
    assert issues[0].level == "warning"
    assert "missing image" in issues[0].message


def test_malformed_region_yields_object_error(fixture_dirs):
    ann, images = fixture_dirs
    doc = json.loads(ann.read_text())
    doc["annotations"][0]["amodal"] = {"type": "polygon", "points": [[[0, 0], [1, 1]]]}
    ann.write_text(json.dumps(doc))
    samples, issues = load_cocoa_style(ann, images)
    assert len(samples) == 1  # the cup still decodes
    assert "obj0" not in samples[0].objects
    assert any(i.level == "error" and i.annotation_index == 0 for i in issues)


def test_unparseable_annotation_file(tmp_path):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    with pytest.raises(DatasetFormatError):
        load_cocoa_style(bad, tmp_path)
