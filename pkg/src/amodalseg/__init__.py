"""Amodal reasoning segmentation at desk scale.

Given an image and an implicit question, the model answers in text whose
[SEG] tokens each carry a visible mask, an amodal mask, a predicted occlusion
rate, and an occlusion-aware spatial map. The package also ships the
synthetic dataset generator, the QA generation pipeline, and the human
review workflow that produce such data.
"""

__version__ = "0.1.0"
