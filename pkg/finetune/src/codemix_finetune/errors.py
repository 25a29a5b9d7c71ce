"""Error hierarchy for the fine-tuning tool.

The CLI maps these onto exit codes: ValidationError -> 2 (bad input or
configuration), DataError -> 3 (well-formed request, broken data), any
other FinetuneError -> 4. The classes deliberately mirror the detector
package's hierarchy without importing it: the two tools share files,
not code.
"""

from __future__ import annotations


class FinetuneError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(FinetuneError):
    """A precondition on arguments, configuration, or file syntax failed."""


class DataError(FinetuneError):
    """Input was syntactically fine but the data cannot be processed."""
