"""archgen: semi-automatic derivation of software architecture candidates.

The package turns textual requirements into a domain model and use-case
scenarios (via a pluggable, replayable LLM gateway), cuts the domain into
bounded contexts, enumerates architecture candidates with decision records,
evaluates and ranks them, and supports change-cost-aware iteration.
"""

__version__ = "0.1.0"
