"""Exception types raised across the harness."""

from __future__ import annotations


class HarnessError(Exception):
    """Base class for all harness errors."""


class ParseError(HarnessError):
    """A source file is malformed. Carries a locus (path, record/line) when known."""

    def __init__(self, message: str, *, path: str | None = None, locus: str | None = None):
        where = "".join(
            part for part in (f"{path}" if path else "", f" @ {locus}" if locus else "") if part
        )
        super().__init__(f"{message}{f' [{where}]' if where else ''}")
        self.path = path
        self.locus = locus


class SchemaError(HarnessError):
    """Data violates a structural invariant (duplicate ids, duplicate slot types, empty text)."""


class MissingDescription(HarnessError):
    """A label or slot type seen in the corpus has no entry in the description file."""

    def __init__(self, kind: str, label: str):
        super().__init__(f"no description for {kind} {label!r}")
        self.kind = kind
        self.label = label


class EmptyCorpus(HarnessError):
    """An operation that needs training examples received none."""


class TransportError(HarnessError):
    """Backend request failed at the transport level (retriable)."""


class BackendRefused(HarnessError):
    """Backend rejected the request (HTTP 4xx or contract violation); never retried."""


class UnrecognizedPrompt(HarnessError):
    """A mock backend received a prompt this harness's renderer did not produce."""


class AlignmentError(HarnessError):
    """Predictions and gold examples are not aligned 1:1."""


class ConfigError(HarnessError):
    """Run configuration is invalid."""


class MissingIcArtifact(HarnessError):
    """A predicted-intent SF run was requested without a completed IC run artifact."""


class IoError(HarnessError):
    """Writing a run artifact or export failed."""
