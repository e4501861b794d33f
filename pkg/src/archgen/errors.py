"""Exception hierarchy shared across the package.

Domain errors (bad input, illegal state) derive from ArchgenError directly;
anything operational (I/O, providers, locks) derives from OperationalError so
the CLI can map the two families onto distinct exit codes.
"""

from __future__ import annotations


class ArchgenError(Exception):
    """Base class for all errors raised by archgen."""


class OperationalError(ArchgenError):
    """I/O, provider, or environment failure (as opposed to a domain error)."""
