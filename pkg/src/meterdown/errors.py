"""Exception types shared across the pipeline.

Every error the library raises on bad input derives from MeterdownError and
carries a machine-readable code plus structured details, so the CLI can emit
them as JSON on stderr.
"""

from __future__ import annotations


class MeterdownError(Exception):
    """Base class for all structured pipeline errors."""

    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self), "details": self.details}


class CsvFormatError(MeterdownError):
    """Malformed CSV input; details carry line (1-based, header = line 1) and column."""

    code = "csv-format"


class ConfigError(MeterdownError):
    """A configuration value violates its declared invariant."""

    code = "config"


class DataError(MeterdownError):
    """Input data violates a precondition (mixed meters, single class, empty set, ...)."""

    code = "data"


class ShapeError(MeterdownError):
    """Array dimensions inconsistent with the declared model/layer dims."""

    code = "shape"


class BundleError(MeterdownError):
    """A model bundle file is corrupt, incomplete, or from an unknown format version."""

    code = "bundle"
