"""Exception types raised across the package."""

from __future__ import annotations


class NWRobError(Exception):
    """Base class for all package errors."""


class InvalidWeight(NWRobError, ValueError):
    pass


class UnknownNode(NWRobError, KeyError):
    pass


class NoPath(NWRobError):
    pass


class Uncoverable(NWRobError):
    pass


class UnknownElement(NWRobError, KeyError):
    pass


class UniverseViolation(NWRobError):
    """An element arrived that was not part of the universe declared upfront."""


class OutOfRange(NWRobError, ValueError):
    pass


class InvalidConfig(NWRobError, ValueError):
    pass


class ConfigError(InvalidConfig):
    pass


class OracleRefused(NWRobError):
    """The exhaustive oracle would have to enumerate too many subsets."""


class InstanceFormatError(NWRobError, ValueError):
    pass
