"""Exception taxonomy shared across the package."""

from __future__ import annotations


class LatentProbeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(LatentProbeError):
    """Invalid configuration value, empty input set, or malformed box."""


class DimensionError(LatentProbeError):
    """Vector or tensor dimensions do not match the declared contract."""


class FormatError(LatentProbeError):
    """A persisted file violates its declared format.

    ``offset`` is the byte offset of the violation when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class BackendError(LatentProbeError):
    """A generator/embedder backend failed; carries the backend message.

    ``index`` identifies the failing item for batched calls when known.
    ``trace`` carries partial search trace records when a search aborted.
    """

    def __init__(self, message: str, index: int | None = None, trace=None):
        super().__init__(message)
        self.index = index
        self.trace = trace


class ProtocolError(LatentProbeError):
    """The remote side violated the wire protocol (bad id, missing field)."""


class TransportError(LatentProbeError):
    """The byte channel to a remote backend failed (timeout, EOF, refused)."""
