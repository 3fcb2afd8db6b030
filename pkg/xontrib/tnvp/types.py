'''
Auxiliary types for the tnvp xontrib: the exception hierarchy, and the
type aliases re-exported for convenience.

Types for public use are re-exported from the tnvp module via `__init__.py`
and its `__all__` variable.
'''

from pathlib import Path
from typing import Optional

from xontrib.tnvp.type_aliases import (
    MaskStyle,  # noqa: F401
    TransitionStructure,  # noqa: F401
    PhaseFlag,  # noqa: F401
    DatasetKind,  # noqa: F401
    NoiseSpec,  # noqa: F401
    OpKind,  # noqa: F401
    JsonAtomic,  # noqa: F401
    JsonArray,  # noqa: F401
    JsonObject,  # noqa: F401
    JsonData,  # noqa: F401
    KeywordArity,  # noqa: F401
    KeywordSpec,  # noqa: F401
    KeywordSpecs,  # noqa: F401
    KeywordInputSpec,  # noqa: F401
    KeywordInputSpecs,  # noqa: F401
    Shape,
)


class TnvpException(Exception):
    """
    A base class for exceptions in the tnvp xontrib.
    """
    def __init__(self, message: str, /):
        super().__init__(message)
        self.message = message


class TnvpError(TnvpException):
    '''
    Thrown when an error is detected in a model, dataset, or command.
    '''


class TnvpValueError(TnvpError, ValueError):
    '''
    Thrown when a value supplied is invalid. Commands exit with status 1.
    '''
    def __init__(self, message: str, /):
        super().__init__(message)


class ShapeMismatchError(TnvpValueError):
    '''
    Thrown when operand shapes disagree. Both shapes are named.
    '''
    expected: Shape
    actual: Shape
    def __init__(self, expected: Shape, actual: Shape, what: str = 'operands'):
        super().__init__(
            f'Shape mismatch in {what}: {tuple(expected)} vs {tuple(actual)}'
        )
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        self.what = what


class ConfigError(TnvpValueError):
    '''
    Thrown when a run configuration fails validation.
    '''
    key: str
    def __init__(self, key: str, message: str):
        super().__init__(f'{key}: {message}' if key else message)
        self.key = key


class ArgumentError(TnvpValueError):
    '''
    An error that occurs when a command-line argument is invalid.
    '''


class NumericalError(TnvpError, ArithmeticError):
    '''
    Thrown when a computation produces a value that cannot be used.
    Commands exit with status 2.
    '''


class NonFiniteError(NumericalError):
    '''
    Thrown when a NaN or infinity escapes an operation.
    '''
    operation: str
    step: Optional[int]
    def __init__(self, operation: str, step: Optional[int] = None):
        where = f' at step {step}' if step is not None else ''
        super().__init__(f'Non-finite value in {operation}{where}')
        self.operation = operation
        self.step = step


class CouplingOverflowError(NumericalError):
    '''
    Thrown when a mapping unit's log-scale leaves the range where `exp`
    is safe to evaluate.
    '''
    unit: int
    magnitude: float
    def __init__(self, unit: int, magnitude: float):
        super().__init__(
            f'Scale overflow in mapping unit {unit}: |s| = {magnitude:.6g} > 50'
        )
        self.unit = unit
        self.magnitude = magnitude


class TnvpIOError(TnvpError, OSError):
    '''
    Thrown when a file cannot be read, written, or understood.
    Commands exit with status 3.
    '''
    def __init__(self, message: str, /):
        TnvpError.__init__(self, message)


class DatasetFormatError(TnvpIOError):
    '''
    Thrown when a dataset file has a malformed row.
    '''
    path: Path|None
    line: int
    def __init__(self, path: Path|None, line: int, message: str):
        super().__init__(f'{path or "<stream>"}:{line}: {message}')
        self.path = path
        self.line = line


class EmptyDatasetError(TnvpIOError):
    '''
    Thrown when a dataset has no pairs.
    '''
    def __init__(self, source: Path|str|None = None):
        where = f' in {source}' if source is not None else ''
        super().__init__(f'No pairs{where}')


class CheckpointError(TnvpIOError):
    '''
    Thrown when a checkpoint cannot be read.
    '''


class BadMagicError(CheckpointError):
    '''
    Thrown when a file does not start with the checkpoint magic.
    '''
    def __init__(self, found: bytes):
        super().__init__(f'Bad magic: {found!r}')
        self.found = found


class UnsupportedVersionError(CheckpointError):
    '''
    Thrown when a checkpoint was written by an unknown format version.
    '''
    def __init__(self, version: int, supported: int):
        super().__init__(f'Unsupported version: {version} (supported: {supported})')
        self.version = version
        self.supported = supported


class TruncatedCheckpointError(CheckpointError):
    '''
    Thrown when a checkpoint ends before all of its declared content.
    '''
    def __init__(self, what: str):
        super().__init__(f'Truncated checkpoint while reading {what}')
        self.what = what
