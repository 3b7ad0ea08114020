from .bundle import ObjectAnnotationBundle, ObjectInfo, build_bundle
from .client import (
    CREDENTIAL_ENV_VAR,
    HttpVlmClient,
    MockVlmClient,
    VlmRequest,
    VlmResponse,
    vlm_generate,
)
from .parse import ParseIssue, ParseResult, QAItem, parse_qa, serialize_items
from .prompts import DEFAULT_TEMPLATE, QA_PAIR_COUNT, PromptTemplate, assemble_prompt
from .pipeline import PipelineReport, run_pipeline

__all__ = [
    "CREDENTIAL_ENV_VAR",
    "DEFAULT_TEMPLATE",
    "HttpVlmClient",
    "MockVlmClient",
    "ObjectAnnotationBundle",
    "ObjectInfo",
    "ParseIssue",
    "ParseResult",
    "PipelineReport",
    "PromptTemplate",
    "QAItem",
    "QA_PAIR_COUNT",
    "VlmRequest",
    "VlmResponse",
    "assemble_prompt",
    "build_bundle",
    "parse_qa",
    "run_pipeline",
    "serialize_items",
    "vlm_generate",
]
