"""Checksummed checkpoint container.

File layout: a torch-serialized wrapper ``{"format_version", "sha256",
"payload"}`` where payload is the torch-serialized state bytes. The digest is
verified before deserializing the payload, so truncation or bit rot surfaces
as a CheckpointError rather than a pickle crash.
"""
from __future__ import annotations

import hashlib
import io
from pathlib import Path

import torch

from ..errors import CheckpointError

CHECKPOINT_VERSION = 1


def save_checkpoint(state: dict, path) -> Path:
    buffer = io.BytesIO()
    torch.save(state, buffer)
    payload = buffer.getvalue()
    wrapper = {
        "format_version": CHECKPOINT_VERSION,
        "sha256": hashlib.sha256(payload).hexdigest(),
        "payload": payload,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(wrapper, tmp)
    tmp.replace(path)
    return path


def load_checkpoint(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"no checkpoint at {path}")
    try:
        wrapper = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path.name}: {exc}") from exc
    if not isinstance(wrapper, dict) or "payload" not in wrapper:
        raise CheckpointError(f"checkpoint {path.name} has no payload")
    if wrapper.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {wrapper.get('format_version')!r}"
        )
    payload = wrapper["payload"]
    digest = hashlib.sha256(payload).hexdigest()
    if digest != wrapper.get("sha256"):
        raise CheckpointError(f"checkpoint {path.name} failed its integrity check")
    return torch.load(io.BytesIO(payload), map_location="cpu", weights_only=False)
