"""Exception types shared across the toolkit."""


class CitewardError(Exception):
    """Base class for all toolkit errors."""


class EmptyResponse(CitewardError):
    """The response text to segment is empty or whitespace-only."""


class OracleUnavailable(CitewardError):
    """An entailment backend could not be reached after bounded retries."""


class BoundaryMismatch(CitewardError):
    """Token boundaries disagree with the token count or reward breakdown."""


class SamplerAborted(CitewardError):
    """A generation backend failed mid-search.

    Carries whatever candidates were scored before the failure so callers
    can log partial progress.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = list(partial) if partial else []


class IngestError(CitewardError):
    """A dataset or fixture file could not be read at all."""


class EmptyDataset(CitewardError):
    """A dataset file yielded zero valid records."""
