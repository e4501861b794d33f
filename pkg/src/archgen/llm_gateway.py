"""Language-model gateway: prompt templates, request canonicalization, and the
live/replay provider pair.

Every completion request is reduced to a canonical JSON document and addressed
by its SHA-256 digest. The replay provider serves responses from a fixture
directory keyed by that digest, which makes every generation step reproducible
offline; the live provider talks to an OpenAI-style chat-completion endpoint
and can record fixtures for later replay.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, TypeVar

import requests

from .canonical import atomic_write_text, canonical_json, read_json, sha256_hex
from .errors import ArchgenError, OperationalError

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
DEFAULT_MODEL = "gpt-4.1-mini"
DEFAULT_MAX_TOKENS = 4096
DEFAULT_TIMEOUT = 120.0
API_KEY_ENV = "ARCHGEN_LLM_API_KEY"

_RETRY_DELAYS = (1.0, 2.0, 4.0)


class UnknownTemplate(ArchgenError):
    pass


class MissingBinding(ArchgenError):
    pass


class CacheMiss(OperationalError):
    def __init__(self, digest: str, cache_dir: Path) -> None:
        super().__init__(f"no fixture {digest}.json under {cache_dir}")
        self.digest = digest


class FixtureMismatch(OperationalError):
    """The stored fixture's request does not match the request that addressed it."""


class ProviderError(OperationalError):
    def __init__(self, message: str, status: int | None = None, body: str | None = None) -> None:
        super().__init__(message)
        self.status = status
        self.body = body


class MissingApiKey(OperationalError):
    pass


class NoModelFound(ArchgenError):
    """The completion contains no @startuml/@enduml block."""


class NoJsonFound(ArchgenError):
    """The completion contains no parseable JSON object."""


# ---------------------------------------------------------------------------
# Templates

_TEMPLATES: dict[str, str] = {
    "domain_model@1": (
        "You are assisting a software architect. From the numbered requirements"
        " below, derive a domain model of the system's subject area: the real-world"
        " concepts the system manages and the relations between them. Do not model"
        " the software system itself, its components, or its technology.\n"
        "\n"
        "Requirements:\n"
        "{{requirements}}\n"
        "\n"
        "Answer with exactly one PlantUML class diagram using only this notation:\n"
        "  class Name\n"
        "  A --> B : label     (association)\n"
        "  A o-- B             (aggregation)\n"
        "  A *-- B             (composition)\n"
        "  A <|-- B            (B specializes A)\n"
        "No attributes, no methods, no packages, no notes. Concept names are"
        " UpperCamelCase identifiers. Every concept takes part in at least one"
        " relation. Enclose the diagram in @startuml/@enduml."
    ),
    "scenarios@1": (
        "You are assisting a software architect. Given the functional requirements"
        " and the domain model below, write end-to-end use-case scenarios that"
        " exercise the model. Each step must reference at least one concept from"
        " the model by exact name.\n"
        "\n"
        "Functional requirements:\n"
        "{{requirements}}\n"
        "\n"
        "Domain model:\n"
        "{{domain_model}}\n"
        "\n"
        "Answer with exactly one JSON object of the form\n"
        '{"scenarios": [{"id": "UC-1", "title": "...", "actor": "...",'
        ' "quality_tags": [], "linked_requirements": ["R-1"],'
        ' "steps": [{"text": "...", "concept_refs": ["Concept"]}]}]}\n'
        "quality_tags entries must come from: Performance, Scalability,"
        " Maintainability, Security, Availability, Usability."
        " linked_requirements entries must be requirement ids from the list above."
        " Cover every functional requirement with at least one scenario."
    ),
    "refine_artifacts@1": (
        "You are assisting a software architect who wants to change the domain"
        " model and use-case scenarios below.\n"
        "\n"
        "Current domain model:\n"
        "{{domain_model}}\n"
        "\n"
        "Current scenarios:\n"
        "{{scenarios}}\n"
        "\n"
        "Instruction from the architect:\n"
        "{{instruction}}\n"
        "\n"
        "Apply the instruction. Answer with the complete updated domain model"
        " (same PlantUML notation, @startuml/@enduml) followed by the complete"
        " updated scenarios as one JSON object with the same schema. Keep"
        " everything the instruction does not touch unchanged."
    ),
    "repair@1": (
        "Your previous answer could not be parsed.\n"
        "\n"
        "Previous answer:\n"
        "{{previous}}\n"
        "\n"
        "Problem:\n"
        "{{problem}}\n"
        "\n"
        "Original task:\n"
        "{{original}}\n"
        "\n"
        "Answer again, fixing the problem. Output only the requested artifact."
    ),
    "rationale@1": (
        "You are assisting a software architect comparing architecture candidates."
        " Summarize, in at most four sentences of plain prose, why the candidate"
        " below scores the way it does and what trade-off it embodies.\n"
        "\n"
        "Candidate:\n"
        "{{candidate}}\n"
        "\n"
        "Metrics and scores:\n"
        "{{evaluation}}\n"
        "\n"
        "Architect notes to take into account (may be empty):\n"
        "{{notes}}\n"
        "\n"
        "Answer with prose only: no lists, no headings, no code."
    ),
}

_PLACEHOLDER_RE = re.compile(r"\{\{([a-z_]+)\}\}")


def template_ids() -> list[str]:
    return sorted(_TEMPLATES)


def render_template(template_id: str, bindings: dict[str, str]) -> str:
    """Fill a template's {{placeholders}} in a single pass."""
    if template_id not in _TEMPLATES:
        raise UnknownTemplate(f"unknown template {template_id!r}")
    template = _TEMPLATES[template_id]
    needed = set(_PLACEHOLDER_RE.findall(template))
    missing = needed - set(bindings)
    if missing:
        raise MissingBinding(
            f"template {template_id!r} is missing bindings: {', '.join(sorted(missing))}"
        )

    def substitute(match: re.Match[str]) -> str:
        return bindings[match.group(1)]

    return _PLACEHOLDER_RE.sub(substitute, template)


# ---------------------------------------------------------------------------
# Requests and providers


@dataclass(frozen=True)
class PromptRequest:
    template_id: str
    rendered_text: str
    model_name: str
    temperature: float = 0.0
    max_tokens: int = DEFAULT_MAX_TOKENS

    def to_dict(self) -> dict:
        return {
            "template_id": self.template_id,
            "rendered_text": self.rendered_text,
            "model_name": self.model_name,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    def digest(self) -> str:
        return sha256_hex(canonical_json(self.to_dict()).encode("utf-8"))


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "replay"
    endpoint: str = DEFAULT_ENDPOINT
    model: str = DEFAULT_MODEL
    record: bool = False
    cache_dir: str = "llm_cache"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "endpoint": self.endpoint,
            "model": self.model,
            "record": self.record,
            "cache_dir": self.cache_dir,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProviderConfig":
        known = {f: data[f] for f in ("kind", "endpoint", "model", "record", "cache_dir") if f in data}
        config = cls(**known)
        if config.kind not in ("live", "replay"):
            raise ValueError(f"provider kind must be 'live' or 'replay', got {config.kind!r}")
        return config


def _fixture_path(cache_dir: Path, digest: str) -> Path:
    return cache_dir / f"{digest}.json"


def write_fixture(cache_dir: Path, request: PromptRequest, response: str) -> Path:
    path = _fixture_path(cache_dir, request.digest())
    payload = {"request": request.to_dict(), "response": response}
    atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n")
    return path


class ReplayProvider:
    """Serves completions from recorded fixtures; never touches the network."""

    def __init__(self, cache_dir: Path) -> None:
        self.cache_dir = Path(cache_dir)

    def complete(self, request: PromptRequest) -> str:
        digest = request.digest()
        path = _fixture_path(self.cache_dir, digest)
        if not path.is_file():
            raise CacheMiss(digest, self.cache_dir)
        try:
            payload = read_json(path)
        except OperationalError:
            raise
        stored_request = payload.get("request") if isinstance(payload, dict) else None
        response = payload.get("response") if isinstance(payload, dict) else None
        if stored_request != request.to_dict() or not isinstance(response, str):
            raise FixtureMismatch(f"fixture {path.name} does not match its addressing request")
        return response


class LiveProvider:
    """OpenAI-style chat-completion client with retry and optional recording."""

    def __init__(
        self,
        endpoint: str,
        record: bool = False,
        cache_dir: Path | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.endpoint = endpoint
        self.record = record
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self.timeout = timeout
        self.session = session or requests.Session()
        self.sleep = sleep
        if record and self.cache_dir is None:
            raise ValueError("recording requires a cache directory")

    def complete(self, request: PromptRequest) -> str:
        api_key = os.environ.get(API_KEY_ENV)
        if not api_key:
            raise MissingApiKey(f"set {API_KEY_ENV} to use the live provider")
        body = {
            "model": request.model_name,
            "messages": [{"role": "user", "content": request.rendered_text}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"}

        last_error: ProviderError | None = None
        for attempt, delay in enumerate((*_RETRY_DELAYS, None)):
            try:
                response = self.session.post(
                    self.endpoint, json=body, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = ProviderError(f"request failed: {exc}")
            else:
                if response.status_code == 200:
                    text = _extract_choice(response)
                    if self.record and self.cache_dir is not None:
                        write_fixture(self.cache_dir, request, text)
                    return text
                last_error = ProviderError(
                    f"endpoint returned {response.status_code}",
                    status=response.status_code,
                    body=response.text[:2000],
                )
                # 4xx responses other than 429 will not improve on retry.
                if 400 <= response.status_code < 500 and response.status_code != 429:
                    break
            if delay is not None:
                self.sleep(delay)
        assert last_error is not None
        raise last_error


def _extract_choice(response: requests.Response) -> str:
    try:
        payload = response.json()
        text = payload["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ProviderError(f"malformed completion payload: {exc}") from exc
    if not isinstance(text, str):
        raise ProviderError("completion content is not a string")
    return text


# ---------------------------------------------------------------------------
# Gateway


T = TypeVar("T")


class LlmGateway:
    """Renders templates into requests and runs them against one provider,
    with a single repair round when the caller's parser rejects the answer."""

    def __init__(self, config: ProviderConfig, project_dir: Path) -> None:
        self.config = config
        cache_dir = Path(project_dir) / config.cache_dir
        if config.kind == "replay":
            self.provider: ReplayProvider | LiveProvider = ReplayProvider(cache_dir)
        else:
            self.provider = LiveProvider(
                endpoint=config.endpoint, record=config.record, cache_dir=cache_dir
            )

    def render(self, template_id: str, bindings: dict[str, str]) -> PromptRequest:
        return PromptRequest(
            template_id=template_id,
            rendered_text=render_template(template_id, bindings),
            model_name=self.config.model,
        )

    def complete(self, request: PromptRequest) -> str:
        return self.provider.complete(request)

    def complete_with_repair(
        self, request: PromptRequest, parse: Callable[[str], tuple[T, list[str]]]
    ) -> tuple[T, list[str]]:
        """Run a request and parse its answer; on a parse failure, issue one
        repair request quoting the problem, then re-raise if that fails too."""
        answer = self.complete(request)
        try:
            return parse(answer)
        except ArchgenError as first_failure:
            repair_request = self.render(
                "repair@1",
                {
                    "previous": answer,
                    "problem": str(first_failure),
                    "original": request.rendered_text,
                },
            )
            repaired = self.complete(repair_request)
            value, warnings = parse(repaired)
            return value, [f"first completion rejected ({first_failure}); repair succeeded"] + warnings


# ---------------------------------------------------------------------------
# Completion post-processing


_FENCE_RE = re.compile(r"^```[a-zA-Z0-9_-]*\s*$")


def _strip_fences(text: str) -> str:
    lines = [line for line in text.splitlines() if not _FENCE_RE.match(line.strip())]
    return "\n".join(lines)


def extract_model_block(text: str) -> tuple[str, list[str]]:
    """First @startuml..@enduml block of a completion, fences removed."""
    cleaned = _strip_fences(text)
    lines = cleaned.splitlines()
    starts = [i for i, line in enumerate(lines) if line.strip() == "@startuml"]
    if not starts:
        raise NoModelFound("no @startuml block in completion")
    start = starts[0]
    try:
        end = next(i for i in range(start + 1, len(lines)) if lines[i].strip() == "@enduml")
    except StopIteration:
        raise NoModelFound("@startuml without matching @enduml") from None
    warnings = []
    if len(starts) > 1:
        warnings.append("completion contains multiple model blocks; using the first")
    return "\n".join(lines[start : end + 1]) + "\n", warnings


def extract_json_block(text: str) -> object:
    """First JSON object in a completion, fences removed.

    Scans balanced braces from each opening brace so surrounding prose is
    tolerated; raises NoJsonFound when nothing parses.
    """
    cleaned = _strip_fences(text)
    decoder = json.JSONDecoder()
    index = cleaned.find("{")
    while index != -1:
        try:
            value, _ = decoder.raw_decode(cleaned, index)
        except ValueError:
            index = cleaned.find("{", index + 1)
        else:
            if isinstance(value, dict):
                return value
            index = cleaned.find("{", index + 1)
    raise NoJsonFound("no JSON object in completion")
