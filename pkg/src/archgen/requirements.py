"""Requirement ingestion and functional/non-functional classification.

Documents are Markdown. Each requirement is either a `- ` list item or a
paragraph (consecutive non-blank lines) separated by blank lines, optionally
prefixed with an explicit id in square brackets:

    - [FR-1] The driver can request a parking spot.
    - The system assigns the nearest free spot.

Items without an explicit id receive sequential ids "R-<n>" in document
order. Classification is a deterministic keyword table, not an LLM call, so
the pipeline's first step is reproducible by construction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .canonical import sha256_hex
from .errors import ArchgenError


class EmptyDocumentSet(ArchgenError):
    """No requirement items were found in any supplied document."""


class DuplicateId(ArchgenError):
    def __init__(self, req_id: str) -> None:
        super().__init__(f"duplicate requirement id: {req_id}")
        self.req_id = req_id


class RequirementKind(str, Enum):
    FUNCTIONAL = "Functional"
    NON_FUNCTIONAL = "NonFunctional"


class QualityAttribute(str, Enum):
    PERFORMANCE = "Performance"
    SCALABILITY = "Scalability"
    MAINTAINABILITY = "Maintainability"
    SECURITY = "Security"
    AVAILABILITY = "Availability"
    USABILITY = "Usability"


# Keyword groups in priority order; the first matching group wins and any
# further match marks the requirement ambiguous. "within * ms|s" is the one
# pattern entry, everything else is a case-insensitive substring.
_WITHIN_RE = re.compile(r"within\s+\S+\s*(ms|s)\b", re.IGNORECASE)

_KEYWORD_GROUPS: list[tuple[QualityAttribute, tuple[str, ...]]] = [
    (QualityAttribute.PERFORMANCE, ("latency", "throughput")),
    (QualityAttribute.SCALABILITY, ("concurrent users", "scale")),
    (QualityAttribute.MAINTAINABILITY, ("maintain", "modif", "extend")),
    (QualityAttribute.SECURITY, ("encrypt", "auth", "access control")),
    (QualityAttribute.AVAILABILITY, ("uptime", "available", "recover")),
    (QualityAttribute.USABILITY, ("usab", "accessib")),
]


@dataclass(frozen=True)
class Requirement:
    id: str
    text: str
    kind: RequirementKind
    quality_attribute: QualityAttribute | None
    source_path: str
    source_line: int
    ambiguous: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "kind": self.kind.value,
            "quality_attribute": self.quality_attribute.value if self.quality_attribute else None,
            "source": {"path": self.source_path, "line": self.source_line},
            "ambiguous": self.ambiguous,
        }


@dataclass
class RequirementSet:
    requirements: list[Requirement]
    document_digest: str

    def __post_init__(self) -> None:
        if not self.requirements:
            raise EmptyDocumentSet("a RequirementSet must contain at least one requirement")

    def __len__(self) -> int:
        return len(self.requirements)

    def ids(self) -> list[str]:
        return [r.id for r in self.requirements]

    def functional(self) -> list[Requirement]:
        return [r for r in self.requirements if r.kind is RequirementKind.FUNCTIONAL]

    def non_functional(self) -> list[Requirement]:
        return [r for r in self.requirements if r.kind is RequirementKind.NON_FUNCTIONAL]

    def by_id(self, req_id: str) -> Requirement | None:
        for req in self.requirements:
            if req.id == req_id:
                return req
        return None


def classify_requirement(text: str) -> tuple[RequirementKind, QualityAttribute | None, bool]:
    """Classify one requirement text via the fixed keyword table.

    Returns (kind, quality_attribute, ambiguous). Total on non-empty text and
    stable under surrounding whitespace and letter case.
    """
    normalized = text.strip().lower()
    if not normalized:
        raise ValueError("requirement text must be non-empty")

    matches: list[QualityAttribute] = []
    for attribute, keywords in _KEYWORD_GROUPS:
        hit = any(keyword in normalized for keyword in keywords)
        if attribute is QualityAttribute.PERFORMANCE:
            hit = hit or bool(_WITHIN_RE.search(normalized))
        if hit:
            matches.append(attribute)

    if not matches:
        return RequirementKind.FUNCTIONAL, None, False
    return RequirementKind.NON_FUNCTIONAL, matches[0], len(matches) > 1


_ITEM_RE = re.compile(r"^\s*-\s+(?:\[(?P<id>[A-Za-z0-9_.:-]+)\]\s*)?(?P<text>\S.*)$")
_PARA_ID_RE = re.compile(r"^\[(?P<id>[A-Za-z0-9_.:-]+)\]\s*(?P<text>\S.*)$", re.DOTALL)
_SKIP_RE = re.compile(r"^(#|```|---\s*$)")


@dataclass
class _RawItem:
    explicit_id: str | None
    text: str
    path: str
    line: int


def _scan_document(path: str, text: str) -> list[_RawItem]:
    items: list[_RawItem] = []
    paragraph: list[str] = []
    paragraph_line = 0
    last_was_list_item = False
    in_fence = False

    def flush_paragraph() -> None:
        nonlocal paragraph
        if not paragraph:
            return
        body = " ".join(part.strip() for part in paragraph).strip()
        paragraph = []
        if not body:
            return
        match = _PARA_ID_RE.match(body)
        if match:
            items.append(_RawItem(match.group("id"), match.group("text").strip(), path, paragraph_line))
        else:
            items.append(_RawItem(None, body, path, paragraph_line))

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if line.strip().startswith("```"):
            in_fence = not in_fence
            flush_paragraph()
            last_was_list_item = False
            continue
        if in_fence:
            continue
        if not line.strip():
            flush_paragraph()
            last_was_list_item = False
            continue
        if _SKIP_RE.match(line.strip()):
            flush_paragraph()
            last_was_list_item = False
            continue
        match = _ITEM_RE.match(line)
        if match:
            flush_paragraph()
            items.append(_RawItem(match.group("id"), match.group("text").strip(), path, number))
            last_was_list_item = True
            continue
        if last_was_list_item and not paragraph and line.startswith((" ", "\t")):
            # Indented continuation of the previous list item.
            previous = items[-1]
            items[-1] = _RawItem(
                previous.explicit_id, f"{previous.text} {line.strip()}", previous.path, previous.line
            )
            continue
        if not paragraph:
            paragraph_line = number
        paragraph.append(line)
        last_was_list_item = False
    flush_paragraph()
    return items


def parse_requirements(documents: list[tuple[str, str]]) -> RequirementSet:
    """Parse requirement documents into an identified, classified RequirementSet.

    documents: ordered (path, text) pairs. Deterministic: identical inputs
    yield identical sets, ids included.
    """
    raw_items: list[_RawItem] = []
    digest_parts: list[str] = []
    for path, text in documents:
        normalized = text.replace("\r\n", "\n").replace("\r", "\n")
        digest_parts.append(normalized)
        raw_items.extend(_scan_document(path, normalized))

    if not raw_items:
        raise EmptyDocumentSet("no requirement items found in the supplied documents")

    explicit_ids = [item.explicit_id for item in raw_items if item.explicit_id is not None]
    taken = set(explicit_ids)
    if len(explicit_ids) != len(taken):
        duplicate = next(x for x in explicit_ids if explicit_ids.count(x) > 1)
        raise DuplicateId(duplicate)

    requirements: list[Requirement] = []
    counter = 0
    for item in raw_items:
        if item.explicit_id is not None:
            req_id = item.explicit_id
        else:
            counter += 1
            while f"R-{counter}" in taken:
                counter += 1
            req_id = f"R-{counter}"
            taken.add(req_id)
        kind, attribute, ambiguous = classify_requirement(item.text)
        requirements.append(
            Requirement(
                id=req_id,
                text=item.text,
                kind=kind,
                quality_attribute=attribute,
                source_path=item.path,
                source_line=item.line,
                ambiguous=ambiguous,
            )
        )

    digest = sha256_hex("".join(digest_parts))
    return RequirementSet(requirements=requirements, document_digest=digest)
