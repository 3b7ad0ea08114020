from .types import (
    SEG_TOKEN,
    SP_BACKGROUND,
    SP_OCCLUDED,
    SP_VISIBLE,
    Conversation,
    SceneSample,
    SegTarget,
    build_spatial_map,
    compute_occlusion_rate,
    mask_area,
    occlusion_pairs,
    samples_equal,
    targets_equal,
    tight_box,
)
from .validate import Violation, validate_sample
from .io import load_dataset, load_manifest, quantize_image, save_dataset
from .rle import decode_mask, encode_mask
from .cocoa import AdapterIssue, load_cocoa_style

__all__ = [
    "SEG_TOKEN",
    "SP_BACKGROUND",
    "SP_OCCLUDED",
    "SP_VISIBLE",
    "Conversation",
    "SceneSample",
    "SegTarget",
    "Violation",
    "AdapterIssue",
    "build_spatial_map",
    "compute_occlusion_rate",
    "decode_mask",
    "encode_mask",
    "load_cocoa_style",
    "load_dataset",
    "load_manifest",
    "mask_area",
    "occlusion_pairs",
    "quantize_image",
    "samples_equal",
    "save_dataset",
    "targets_equal",
    "tight_box",
    "validate_sample",
]
