"""Canonical serialization, digests, and atomic file writes.

Every digest in the project (audit payloads, prompt requests, document sets)
is a SHA-256 over the same canonical JSON form: UTF-8, sorted object keys,
no insignificant whitespace, LF newlines. Artifact files are written
atomically (temp file + rename) so a crash never leaves a torn file behind.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any

from .errors import OperationalError


class PersistenceFailure(OperationalError):
    """Raised when an artifact could not be written; the old file is intact."""


def canonical_json(value: Any) -> str:
    """Serialize to the canonical JSON form used for digesting."""
    return json.dumps(value, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def digest_payload(payload: Any) -> str:
    """SHA-256 of the canonical serialization of a JSON-compatible payload."""
    return sha256_hex(canonical_json(payload))


def atomic_write_text(path: Path, text: str) -> None:
    """Write text to path atomically; on failure the previous content survives."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        try:
            if tmp.exists():
                tmp.unlink()
        except OSError:
            pass
        raise PersistenceFailure(f"cannot write {path}: {exc}") from exc


def write_json(path: Path, value: Any) -> None:
    """Write human-inspectable JSON (sorted keys, 2-space indent, LF, final newline)."""
    text = json.dumps(value, ensure_ascii=False, sort_keys=True, indent=2) + "\n"
    atomic_write_text(path, text)


def read_json(path: Path) -> Any:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, ValueError) as exc:
        raise PersistenceFailure(f"cannot read {path}: {exc}") from exc


def tree_entries(root: Path, subdirs: list[str] | None = None) -> list[tuple[str, str]]:
    """Sorted (relative path, content digest) pairs of a directory tree.

    When subdirs is given, only those top-level directories are included.
    """
    root = Path(root)
    entries: list[tuple[str, str]] = []
    bases = [root / s for s in subdirs] if subdirs else [root]
    for base in bases:
        if not base.exists():
            continue
        for file in sorted(p for p in base.rglob("*") if p.is_file()):
            rel = file.relative_to(root).as_posix()
            entries.append((rel, sha256_hex(file.read_bytes())))
    entries.sort()
    return entries


def tree_digest(root: Path, subdirs: list[str] | None = None) -> str:
    """Recursive digest of a directory tree: stable over (relative path, content) pairs."""
    return sha256_hex(canonical_json(tree_entries(root, subdirs)))
