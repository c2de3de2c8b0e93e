"""Shared error taxonomy.

Every domain error carries a stable ``name`` (its class name) that travels
over the wire, and a ``category`` that drives the protocol-level split
between argument errors and execution errors.  Argument-class errors are
exactly those a validator can reproduce from the tool descriptor plus the
current workspace, without running the tool.
"""

from __future__ import annotations

ARGS = "args"
EXECUTION = "execution"


class CTKitError(Exception):
    """Base class for all domain errors raised by this package."""

    category = EXECUTION

    @property
    def name(self) -> str:
        return type(self).__name__


# --- volume / parsing ---------------------------------------------------

class MalformedHeader(CTKitError):
    pass


class UnsupportedDatatype(CTKitError):
    pass


class TruncatedPayload(CTKitError):
    pass


class InvalidWindow(CTKitError):
    category = ARGS


# --- rendering ----------------------------------------------------------

class SliceOutOfRange(CTKitError):
    category = ARGS


class PointOutOfRange(CTKitError):
    category = ARGS


class EmptyBody(CTKitError):
    pass


class InvalidImage(CTKitError):
    pass


# --- masks and measurements ----------------------------------------------

class GeometryMismatch(CTKitError):
    pass


class EmptyQuery(CTKitError):
    category = ARGS


class LabelNotFound(CTKitError):
    pass


class DisconnectedLabel(CTKitError):
    pass


class InvalidRadius(CTKitError):
    category = ARGS


class MaskRequired(CTKitError):
    pass


class VolumeRequired(CTKitError):
    pass


# --- radiomics ------------------------------------------------------------

class EmptyRoi(CTKitError):
    pass


class InvalidBins(CTKitError):
    category = ARGS


class EmptySignature(CTKitError):
    pass


# --- protocol / server -----------------------------------------------------

class PathDenied(CTKitError):
    category = ARGS


class InvalidCategory(CTKitError):
    category = ARGS


class FileNotFound(CTKitError):
    pass


# --- evaluation -------------------------------------------------------------

class ManifestError(CTKitError):
    def __init__(self, line: int, field: str, message: str):
        super().__init__(f"line {line}, field {field}: {message}")
        self.line = line
        self.field = field


class ValidationImpossible(CTKitError):
    pass


class EmptyInput(CTKitError):
    pass


class UnknownCase(CTKitError):
    pass


class SopUnavailable(CTKitError):
    pass


class InvalidAblation(CTKitError):
    pass
