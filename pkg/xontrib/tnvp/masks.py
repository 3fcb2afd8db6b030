'''
Binary masks selecting which coordinates pass through a mapping unit.
'''

from collections.abc import Sequence
from typing import Optional

import numpy as np

from xontrib.tnvp.type_aliases import MaskStyle, Tensor
from xontrib.tnvp.types import TnvpValueError


class BinaryMask:
    '''
    A 0/1 vector `b`. Coordinates where `b == 1` pass through a unit
    unchanged; the rest are scaled and shifted.

    Degenerate masks (all ones or all zeros) are only constructed with
    `allow_degenerate=True`; `FlowStack` refuses them.
    '''
    __b: Tensor

    def __init__(self, bits: Sequence[float]|Tensor, /, *,
                 allow_degenerate: bool = False):
        b = np.array(bits, dtype=np.float64)
        if b.ndim != 1 or b.size == 0:
            raise TnvpValueError(f'A mask is a non-empty vector, got shape {b.shape}')
        if not np.all((b == 0.0) | (b == 1.0)):
            raise TnvpValueError(f'Mask elements must be 0 or 1: {b.tolist()}')
        d = int(b.sum())
        if not allow_degenerate and not 0 < d < b.size:
            raise TnvpValueError(
                f'Degenerate mask with {d} of {b.size} pass-through coordinates'
            )
        b.setflags(write=False)
        self.__b = b

    @property
    def b(self) -> Tensor:
        return self.__b

    @property
    def d(self) -> int:
        '''
        The number of pass-through coordinates.
        '''
        return int(self.__b.sum())

    @property
    def dim(self) -> int:
        return self.__b.size

    @property
    def degenerate(self) -> bool:
        return not 0 < self.d < self.dim

    @property
    def free(self) -> Tensor:
        '''
        `1 − b`: the coordinates a unit transforms.
        '''
        return 1.0 - self.__b

    def complement(self) -> 'BinaryMask':
        return BinaryMask(1.0 - self.__b, allow_degenerate=self.degenerate)

    @classmethod
    def half(cls, dim: int) -> 'BinaryMask':
        '''
        The first ⌊D/2⌋ coordinates pass through.
        '''
        d = dim // 2
        return cls([1.0] * d + [0.0] * (dim - d))

    @classmethod
    def even_odd(cls, dim: int) -> 'BinaryMask':
        '''
        Coordinates 0, 2, 4, ... pass through.
        '''
        return cls([1.0 if i % 2 == 0 else 0.0 for i in range(dim)])

    @classmethod
    def of_style(cls, style: MaskStyle, dim: int,
                 template: Optional[Sequence[float]] = None) -> 'BinaryMask':
        '''
        The first mask of a stack: an explicit template if given, otherwise
        the named style.
        '''
        if template is not None:
            mask = cls(template)
            if mask.dim != dim:
                raise TnvpValueError(f'Mask template has {mask.dim} entries, expected {dim}')
            return mask
        match style:
            case 'half':
                return cls.half(dim)
            case 'even-odd':
                return cls.even_odd(dim)
            case _:
                raise TnvpValueError(f'Unknown mask style: {style!r}')

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return bool(np.array_equal(self.__b, other.__b))

    def __hash__(self):
        return hash(self.__b.tobytes())

    def __repr__(self):
        bits = ''.join('1' if v else '0' for v in self.__b)
        return f'BinaryMask({bits!r})'
