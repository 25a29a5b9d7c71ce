"""Error hierarchy shared across the package.

The CLI maps these onto exit codes: ValidationError -> 2 (bad input or
configuration), DataError -> 3 (well-formed request, broken data), any
other CodemixError -> 4.
"""

from __future__ import annotations


class CodemixError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CodemixError):
    """A precondition on arguments, configuration, or file syntax failed."""


class DataError(CodemixError):
    """Input was syntactically fine but the data cannot be processed."""


class SchemaMismatchError(ValidationError):
    """A feature vector does not match the schema a model was trained on."""
