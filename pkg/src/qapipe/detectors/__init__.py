"""Defect taxonomy, prompt rendering, and detector endpoint clients."""

from .client import (
    ABSTAIN,
    FLAG,
    PASS,
    HttpVqaClient,
    MockVqaClient,
    TokenUsage,
    VqaResponse,
    build_request,
    coarse_decision,
    estimate_tokens,
    parse_response_body,
    parse_severity,
    query_detector,
)
from .taxonomy import (
    COARSE_DEFECTS,
    DEFAULT_TAXONOMY,
    DETAILED_DEFECTS,
    KNOWLEDGE_TEXT,
    OBJECTIVE_TEMPLATE,
    CoarseDefect,
    DefectTaxonomy,
    DetailedDefect,
    PromptBundle,
    render_prompt,
)

__all__ = [
    "ABSTAIN",
    "COARSE_DEFECTS",
    "DEFAULT_TAXONOMY",
    "DETAILED_DEFECTS",
    "FLAG",
    "KNOWLEDGE_TEXT",
    "OBJECTIVE_TEMPLATE",
    "PASS",
    "CoarseDefect",
    "DefectTaxonomy",
    "DetailedDefect",
    "HttpVqaClient",
    "MockVqaClient",
    "PromptBundle",
    "TokenUsage",
    "VqaResponse",
    "build_request",
    "coarse_decision",
    "estimate_tokens",
    "parse_response_body",
    "parse_severity",
    "query_detector",
    "render_prompt",
]
