"""Severity parsing, coarse decisions, and the detector endpoint client.

Detectors answer a question about one image with free text on the rater
scale (1 = no defect, 2 = some defect, 3 = significant defect). Parsing is
total: text that yields no severity becomes an unparseable response, never
an exception. The endpoint contract is a small versioned JSON schema; a mock
client replays canned answers so nothing here needs a live model.
"""

from __future__ import annotations

import json
import re
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import EndpointError, EndpointTimeout
from .taxonomy import DefectTaxonomy, PromptBundle

SCHEMA_VERSION = 1

PASS = "pass"
FLAG = "flag"
ABSTAIN = "abstain"

DEFAULT_FLAG_THRESHOLD = 2

# A severity digit counts only when standalone: not part of a longer number,
# a word, or a decimal like "2.5" (a sentence-ending period is fine).
_SEVERITY_DIGIT = re.compile(r"(?<![\w.])([123])(?!\w|\.\d)")
_WORD_FORMS = (
    (re.compile(r"\bno defects?\b", re.IGNORECASE), 1),
    (re.compile(r"\bsome defects?\b", re.IGNORECASE), 2),
    (re.compile(r"\bsignificant defects?\b", re.IGNORECASE), 3),
)


@dataclass(frozen=True)
class VqaResponse:
    """Raw endpoint answer plus the severity parsed from it, if any."""

    raw_text: str
    parsed_severity: int | None

    @property
    def parseable(self) -> bool:
        return self.parsed_severity is not None


def parse_severity(raw_text: str) -> VqaResponse:
    """Extract a severity from free text; never raises.

    The first standalone 1, 2, or 3 wins; recognized word forms are the
    fallback; anything else is unparseable.
    """
    match = _SEVERITY_DIGIT.search(raw_text)
    if match:
        return VqaResponse(raw_text, int(match.group(1)))
    for pattern, severity in _WORD_FORMS:
        if pattern.search(raw_text):
            return VqaResponse(raw_text, severity)
    return VqaResponse(raw_text, None)


def coarse_decision(
    severities: dict[str, int | None],
    threshold: int = DEFAULT_FLAG_THRESHOLD,
    taxonomy: DefectTaxonomy | None = None,
    unparseable_policy: str = FLAG,
) -> dict[str, str]:
    """Per-coarse-defect pass/flag from detailed severities.

    A coarse defect's severity is the max over its parseable detailed
    severities; it is flagged when that reaches the threshold. A coarse
    defect with no parseable answer at all follows the unparseable policy:
    flag (conservative default) or abstain.
    """
    if unparseable_policy not in (FLAG, ABSTAIN):
        raise ValueError(f"unparseable_policy must be '{FLAG}' or '{ABSTAIN}'")
    if taxonomy is None:
        from .taxonomy import DEFAULT_TAXONOMY

        taxonomy = DEFAULT_TAXONOMY
    decisions = {}
    seen_coarse = []
    for detailed_id in severities:
        coarse_id = taxonomy.get(detailed_id).coarse_id
        if coarse_id not in seen_coarse:
            seen_coarse.append(coarse_id)
    for coarse_id in seen_coarse:
        values = [
            severity
            for detailed_id, severity in severities.items()
            if severity is not None and taxonomy.get(detailed_id).coarse_id == coarse_id
        ]
        if not values:
            decisions[coarse_id] = FLAG if unparseable_policy == FLAG else ABSTAIN
        else:
            decisions[coarse_id] = FLAG if max(values) >= threshold else PASS
    return decisions


def estimate_tokens(text: str) -> int:
    """Crude token estimate (4 characters per token) for cost calibration."""
    return max(1, (len(text) + 3) // 4)


@dataclass
class TokenUsage:
    """Prompt/response token estimates accumulated over client calls."""

    calls: int = 0
    prompt_tokens: int = 0
    response_tokens: int = 0

    def record(self, prompt_text: str, response_text: str) -> None:
        self.calls += 1
        self.prompt_tokens += estimate_tokens(prompt_text)
        self.response_tokens += estimate_tokens(response_text)


def _prompt_text(bundle: PromptBundle) -> str:
    return "\n".join((bundle.knowledge_text, bundle.objective_text, bundle.question_text))


def build_request(bundle: PromptBundle, image_ref: str) -> dict:
    """Endpoint request body (versioned schema)."""
    return {
        "version": SCHEMA_VERSION,
        "system": bundle.knowledge_text,
        "objective": bundle.objective_text,
        "question": bundle.question_text,
        "image_ref": image_ref,
    }


def parse_response_body(body: bytes) -> str:
    """Extract the answer text from an endpoint response body."""
    try:
        payload = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise EndpointError(f"endpoint returned unparseable body: {exc}") from exc
    if not isinstance(payload, dict) or "answer" not in payload:
        raise EndpointError("endpoint response missing 'answer' field")
    if payload.get("version") != SCHEMA_VERSION:
        raise EndpointError(f"unsupported response schema version {payload.get('version')!r}")
    return str(payload["answer"])


@dataclass
class MockVqaClient:
    """Replays canned answers keyed by (detailed_defect_id, image_ref).

    Fixture directories hold one plain-text file per key, named
    ``<defect_id>__<image_id>.txt``.
    """

    responses: dict[tuple[str, str], str]
    usage: TokenUsage = field(default_factory=TokenUsage)

    @classmethod
    def from_dir(cls, path: str | Path) -> MockVqaClient:
        responses = {}
        for file in sorted(Path(path).glob("*__*.txt")):
            defect_id, _, image_id = file.stem.partition("__")
            responses[(defect_id, image_id)] = file.read_text(encoding="utf-8").rstrip("\n")
        return cls(responses)

    def query(self, bundle: PromptBundle, image_ref: str) -> str:
        key = (bundle.detailed_defect_id, str(image_ref))
        if key not in self.responses:
            raise EndpointError(f"no canned response for {key}", status=None)
        answer = self.responses[key]
        self.usage.record(_prompt_text(bundle), answer)
        return answer


@dataclass
class HttpVqaClient:
    """POSTs the versioned request schema to an HTTP endpoint, with retries.

    Transient failures (timeouts and 5xx statuses) are retried with
    exponential backoff: max_attempts tries, sleeping backoff_base seconds
    before the second try and growing by backoff_factor. Other statuses fail
    immediately. Retry state is per call, so one client instance may be used
    from concurrent callers.
    """

    endpoint: str
    timeout: float = 10.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    backoff_factor: float = 2.0
    usage: TokenUsage = field(default_factory=TokenUsage)
    _sleep: callable = time.sleep

    def query(self, bundle: PromptBundle, image_ref: str) -> str:
        body = json.dumps(build_request(bundle, str(image_ref))).encode("utf-8")
        delay = self.backoff_base
        last_error: EndpointError | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                self._sleep(delay)
                delay *= self.backoff_factor
            try:
                request = urllib.request.Request(
                    self.endpoint, data=body, headers={"Content-Type": "application/json"}
                )
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    answer = parse_response_body(response.read())
                self.usage.record(_prompt_text(bundle), answer)
                return answer
            except urllib.error.HTTPError as exc:
                error = EndpointError(f"endpoint returned status {exc.code}", status=exc.code)
                if exc.code < 500:
                    raise error from exc
                last_error = error
            except urllib.error.URLError as exc:
                if isinstance(exc.reason, TimeoutError):
                    last_error = EndpointTimeout(f"endpoint timed out after {self.timeout}s")
                else:
                    last_error = EndpointError(f"endpoint unreachable: {exc.reason}")
            except TimeoutError:
                last_error = EndpointTimeout(f"endpoint timed out after {self.timeout}s")
        raise last_error


def query_detector(client, bundle: PromptBundle, image_ref: str) -> VqaResponse:
    """Send one prompt bundle for one image and parse the answer.

    The client only needs a ``query(bundle, image_ref) -> str`` method; the
    mock and HTTP clients are interchangeable here.
    """
    return parse_severity(client.query(bundle, image_ref))
