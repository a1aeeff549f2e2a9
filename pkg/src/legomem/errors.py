"""Exception hierarchy shared across the package."""

from __future__ import annotations


class LegoMemError(Exception):
    """Base class for all package errors."""


# memory model
class MissingTags(LegoMemError):
    pass


class MalformedSchema(LegoMemError):
    pass


class MalformedAction(MalformedSchema):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class EmptyInput(LegoMemError):
    pass


# embedding / providers
class EmptyText(LegoMemError):
    pass


class DimensionMismatch(LegoMemError):
    pass


class ZeroVector(LegoMemError):
    pass


class ProviderUnavailable(LegoMemError):
    pass


# memory bank
class EmptyQuery(LegoMemError):
    pass


class IoFailure(LegoMemError):
    pass


class SchemaVersionMismatch(LegoMemError):
    pass


class DimMismatchOnLoad(LegoMemError):
    pass


# curation / retrieval
class CurationParseFailure(LegoMemError):
    def __init__(self, message: str, raw_responses: list[str] | None = None):
        super().__init__(message)
        self.raw_responses = raw_responses or []


class RewriteParseFailure(LegoMemError):
    pass


# orchestrator
class PlanParseFailure(LegoMemError):
    pass


class DirectiveParseFailure(LegoMemError):
    pass


class UnknownAgent(LegoMemError):
    pass


class AgentParseFailure(LegoMemError):
    pass


# gateway
class ScriptExhausted(LegoMemError):
    pass


class CassetteMiss(LegoMemError):
    pass


# harness
class TooFewFixtures(LegoMemError):
    pass


class MissingResult(LegoMemError):
    pass


class ConfigError(LegoMemError):
    pass
