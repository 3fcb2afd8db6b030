'''
Dense float64 tensors and the handful of primitive operations the flows are
built from.

Tensors are plain `numpy` float64 arrays. Everything here is a pure function
of its arguments; results are fresh arrays. Reductions and products use
`numpy`'s own loops (never a threaded BLAS) so repeated evaluation on the
same inputs is bit-identical.
'''

from typing import Any

import numpy as np

from xontrib.tnvp.type_aliases import Tensor, OpKind, Shape
from xontrib.tnvp.types import (
    NonFiniteError, ShapeMismatchError, TnvpValueError,
)


def as_tensor(value: Any, /, *, what: str = 'tensor') -> Tensor:
    '''
    Convert `value` to a float64 array and verify that it is finite.

    Extents must be positive; a zero-length axis is rejected.
    '''
    arr = np.asarray(value, dtype=np.float64)
    if any(n <= 0 for n in arr.shape):
        raise TnvpValueError(f'{what} has an empty extent: {arr.shape}')
    return check_finite(arr, what)


def check_finite(value: Tensor, what: str) -> Tensor:
    '''
    Return `value` unchanged, or raise `NonFiniteError` naming `what`.
    '''
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(what)
    return value


def require_shape(value: Tensor, shape: Shape, what: str = 'operands') -> Tensor:
    '''
    Raise `ShapeMismatchError` unless `value` has exactly `shape`.
    '''
    if value.shape != tuple(shape):
        raise ShapeMismatchError(tuple(shape), value.shape, what)
    return value


def elementwise(op: OpKind, a: Tensor, b: Tensor|float|None = None) -> Tensor:
    '''
    Apply an elementwise operation.

    `add`, `sub` and `mul` take a second operand of identical shape or a
    scalar; `exp` and `neg` take none.

    PARAMETERS
    ----------
    op: OpKind
        One of `add`, `sub`, `mul`, `exp`, `neg`.
    a: Tensor
        The first operand.
    b: Tensor|float|None
        The second operand, if the operation is binary.
    RETURNS
    -------
    Tensor
        A new tensor of `a`'s shape.
    '''
    a = np.asarray(a, dtype=np.float64)
    match op:
        case 'exp' | 'neg' if b is not None:
            raise TnvpValueError(f'{op} takes one operand')
        case 'exp':
            with np.errstate(over='ignore'):
                result = np.exp(a)
        case 'neg':
            result = np.negative(a)
        case 'add' | 'sub' | 'mul':
            if b is None:
                raise TnvpValueError(f'{op} takes two operands')
            other = np.asarray(b, dtype=np.float64)
            if other.ndim != 0 and other.shape != a.shape:
                raise ShapeMismatchError(a.shape, other.shape, op)
            with np.errstate(over='ignore', invalid='ignore'):
                match op:
                    case 'add':
                        result = a + other
                    case 'sub':
                        result = a - other
                    case _:
                        result = a * other
        case _:
            raise TnvpValueError(f'Unknown elementwise operation: {op!r}')
    return check_finite(np.asarray(result, dtype=np.float64), op)


def matvec(w: Tensor, z: Tensor) -> Tensor:
    '''
    Square matrix times vector. Each row is accumulated left to right over
    the columns, so results do not depend on numpy's pairwise summation.
    '''
    w = np.asarray(w, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise TnvpValueError(f'matvec needs a square matrix, got {w.shape}')
    if z.shape != (w.shape[1],):
        raise ShapeMismatchError((w.shape[1],), z.shape, 'matvec')
    acc = np.zeros(w.shape[0])
    for j in range(w.shape[1]):
        acc = acc + w[:, j] * z[j]
    return check_finite(acc, 'matvec')


def dense(x: Tensor, w: Tensor) -> Tensor:
    '''
    Batched product `x @ w` for `x` of shape (..., n) and `w` of shape (n, m).
    '''
    return np.einsum('...i,ij->...j', x, w)


def outer_sum(a: Tensor, b: Tensor) -> Tensor:
    '''
    Σ_batch a[k]ᵀ b[k] for batches of row vectors: the weight gradient of `dense`.
    '''
    return np.einsum('ki,kj->ij', a, b)


def batched(x: Tensor, dim: int, what: str = 'input') -> tuple[Tensor, bool]:
    '''
    View a (D,) or (N, D) array as a batch (N, D).

    Returns the batch and whether the input was a single vector.
    '''
    x = np.asarray(x, dtype=np.float64)
    match x.ndim:
        case 1:
            require_shape(x, (dim,), what)
            return x[None, :], True
        case 2:
            if x.shape[1] != dim:
                raise ShapeMismatchError((x.shape[0], dim), x.shape, what)
            return x, False
        case _:
            raise ShapeMismatchError((dim,), x.shape, what)
