"""Clients for the text+image -> text generation service.

Two implementations ship: a generic HTTP client (credential from an
environment variable, never from config files) and a deterministic offline
mock that synthesizes a valid ten-pair response from the prompt's OBJECTS
section. ``vlm_generate`` wraps any client with bounded retries and
exponential backoff on transient failures; authentication errors fail fast.
"""
from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Protocol

from ..errors import ServiceAuthError, TransientServiceError, TransportError
from .prompts import QA_PAIR_COUNT

CREDENTIAL_ENV_VAR = "AMODALSEG_VLM_TOKEN"


@dataclass(frozen=True)
class VlmRequest:
    prompt: str
    image_ref: str | None = None  # path or opaque reference; HTTP client inlines bytes
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class VlmResponse:
    text: str
    latency_s: float
    attempts: int


class VlmClient(Protocol):
    def generate(self, request: VlmRequest) -> str: ...


class HttpVlmClient:
    """POSTs {"prompt", "image_b64", "params"} (JSON), expects {"text": ...}.

    5xx, 429, 408, and connection errors are transient; 401/403 raise
    ServiceAuthError immediately.
    """

    def __init__(self, endpoint: str, timeout_s: float = 60.0,
                 credential_env_var: str = CREDENTIAL_ENV_VAR):
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self.credential_env_var = credential_env_var

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.credential_env_var, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def generate(self, request: VlmRequest) -> str:
        import base64

        import requests

        body: dict = {"prompt": request.prompt, "params": request.params}
        if request.image_ref and os.path.exists(request.image_ref):
            with open(request.image_ref, "rb") as fh:
                body["image_b64"] = base64.b64encode(fh.read()).decode("ascii")
        try:
            resp = requests.post(
                self.endpoint, json=body, headers=self._headers(), timeout=self.timeout_s
            )
        except requests.RequestException as exc:
            raise TransientServiceError(f"connection failure: {exc}") from exc
        if resp.status_code in (401, 403):
            raise ServiceAuthError(f"service rejected credentials (HTTP {resp.status_code})")
        if resp.status_code in (408, 429) or resp.status_code >= 500:
            raise TransientServiceError(f"HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["text"]
        except (ValueError, KeyError) as exc:
            raise TransportError(f"service returned no text field: {exc}") from exc


class MockVlmClient:
    """Offline deterministic client: reads the machine-readable OBJECTS block
    out of the prompt and emits ten valid QA pairs referencing those ids."""

    _OBJECTS_RE = re.compile(r"OBJECTS\n(\[.*?\])\n\n", re.S)

    def generate(self, request: VlmRequest) -> str:
        match = self._OBJECTS_RE.search(request.prompt + "\n\n")
        if not match:
            raise TransientServiceError("mock client found no OBJECTS section")
        objects = json.loads(match.group(1))
        by_rate = sorted(objects, key=lambda o: (-o["occlusion_rate"], o["id"]))
        items = []
        for i in range(QA_PAIR_COUNT):
            focus = by_rate[i % len(by_rate)]
            other = by_rate[(i + 1) % len(by_rate)]
            if focus["occlusion_rate"] > 0 and focus["id"] != other["id"]:
                items.append(
                    {
                        "question": f"Variant {i}: which item cannot be seen in full, and why?",
                        "answer": (
                            f"The {focus['category']}[SEG] is partly hidden; "
                            f"the {other['category']}[SEG] sits in front of it."
                        ),
                        "targets": [focus["id"], other["id"]],
                    }
                )
            else:
                items.append(
                    {
                        "question": f"Variant {i}: what stands out here?",
                        "answer": f"The {focus['category']}[SEG] is clearly visible.",
                        "targets": [focus["id"]],
                    }
                )
        return json.dumps(items)


def vlm_generate(client: VlmClient, request: VlmRequest, max_attempts: int = 3,
                 backoff_s: float = 0.5, sleep=time.sleep) -> VlmResponse:
    """Call the client with retries; returns the raw text verbatim."""
    if max_attempts < 1:
        raise TransportError("max_attempts must be >= 1", attempts=0)
    last_error: Exception | None = None
    start = time.monotonic()
    for attempt in range(1, max_attempts + 1):
        try:
            text = client.generate(request)
            return VlmResponse(text=text, latency_s=time.monotonic() - start, attempts=attempt)
        except ServiceAuthError:
            raise
        except TransientServiceError as exc:
            last_error = exc
            if attempt < max_attempts:
                sleep(backoff_s * (2 ** (attempt - 1)))
    raise TransportError(
        f"service call failed after {max_attempts} attempt(s): {last_error}",
        attempts=max_attempts,
    )
