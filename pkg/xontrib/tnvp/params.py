'''
Named parameter slots and the gradient records aligned with them.

A `ParameterStore` maps dotted names to float64 arrays. Stores compose: a
model's store is a view whose slots are the very arrays owned by its
sub-modules, so an in-place update through the composite store is seen by
every component. Shapes never change after a slot is created.
'''

from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from hashlib import sha256
from types import MappingProxyType
from typing import Optional

import numpy as np

from xontrib.tnvp.type_aliases import Tensor, Shape
from xontrib.tnvp.types import ShapeMismatchError, TnvpValueError


class ParameterStore(Mapping[str, Tensor]):
    '''
    An ordered collection of named parameter tensors.

    Iteration order is insertion order, which is the order used by
    `flatten`, `unflatten` and the checkpoint format.
    '''
    __slots: dict[str, Tensor]

    def __init__(self, slots: Optional[Mapping[str, Tensor]] = None):
        self.__slots = {}
        for name, value in (slots or {}).items():
            self.add(name, value)

    @classmethod
    def compose(cls, parts: Mapping[str, 'ParameterStore']) -> 'ParameterStore':
        '''
        Build a store whose slots are `<part>.<slot>` for every part, sharing
        the parts' arrays.
        '''
        store = cls()
        for prefix, part in parts.items():
            for name, value in part.items():
                store.__share(f'{prefix}.{name}', value)
        return store

    def __share(self, name: str, value: Tensor):
        if name in self.__slots:
            raise TnvpValueError(f'Duplicate parameter slot: {name}')
        self.__slots[name] = value

    def add(self, name: str, value: Tensor) -> Tensor:
        '''
        Create a slot holding a private float64 copy of `value`.
        '''
        arr = np.array(value, dtype=np.float64, copy=True)
        self.__share(name, arr)
        return arr

    def __getitem__(self, name: str) -> Tensor:
        return self.__slots[name]

    def __setitem__(self, name: str, value: Tensor):
        '''
        Overwrite a slot's values in place. The shape must match.
        '''
        slot = self.__slots[name]
        value = np.asarray(value, dtype=np.float64)
        if value.shape != slot.shape:
            raise ShapeMismatchError(slot.shape, value.shape, f'slot {name}')
        np.copyto(slot, value)

    def __iter__(self) -> Iterator[str]:
        return iter(self.__slots)

    def __len__(self) -> int:
        return len(self.__slots)

    @property
    def shapes(self) -> MappingProxyType[str, Shape]:
        return MappingProxyType({k: v.shape for k, v in self.__slots.items()})

    @property
    def size(self) -> int:
        '''
        Total number of scalar parameters.
        '''
        return sum(v.size for v in self.__slots.values())

    def flatten(self) -> Tensor:
        '''
        All parameters as one vector, in slot order.
        '''
        if not self.__slots:
            return np.zeros(0)
        return np.concatenate([v.ravel() for v in self.__slots.values()])

    def unflatten(self, vector: Tensor):
        '''
        Write a vector produced by `flatten` back into the slots, in place.
        '''
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.size,):
            raise ShapeMismatchError((self.size,), vector.shape, 'unflatten')
        offset = 0
        for slot in self.__slots.values():
            n = slot.size
            np.copyto(slot, vector[offset:offset + n].reshape(slot.shape))
            offset += n

    def checksum(self) -> str:
        '''
        SHA-256 of the flattened little-endian parameter bytes.
        '''
        return sha256(self.flatten().astype('<f8').tobytes()).hexdigest()

    def snapshot(self) -> dict[str, Tensor]:
        '''
        Independent copies of every slot.
        '''
        return {k: v.copy() for k, v in self.__slots.items()}

    def zeros_like(self) -> 'GradientRecord':
        '''
        A zero gradient record aligned with this store.
        '''
        return GradientRecord({k: np.zeros_like(v) for k, v in self.__slots.items()})

    def __repr__(self):
        return f'{type(self).__name__}({len(self)} slots, size={self.size})'


@dataclass
class GradientRecord:
    '''
    Per-slot gradients aligned with a `ParameterStore`, plus an optional
    gradient with respect to the input.
    '''
    slots: dict[str, Tensor] = field(default_factory=dict)
    input: Optional[Tensor] = None

    def __getitem__(self, name: str) -> Tensor:
        return self.slots[name]

    def __contains__(self, name: object) -> bool:
        return name in self.slots

    @classmethod
    def compose(cls, parts: Mapping[str, 'GradientRecord']) -> 'GradientRecord':
        '''
        Prefix and merge records, matching `ParameterStore.compose`.
        '''
        return cls({
            f'{prefix}.{name}': g
            for prefix, part in parts.items()
            for name, g in part.slots.items()
        })

    def check_aligned(self, params: ParameterStore):
        '''
        Raise unless this record has exactly the store's slots and shapes.
        '''
        if list(self.slots) != list(params):
            missing = set(params) - set(self.slots)
            extra = set(self.slots) - set(params)
            raise TnvpValueError(
                f'Gradient record not aligned: missing {sorted(missing)}, '
                f'extra {sorted(extra)}'
            )
        for name, g in self.slots.items():
            if g.shape != params[name].shape:
                raise ShapeMismatchError(params[name].shape, g.shape, f'gradient {name}')

    def flatten(self) -> Tensor:
        if not self.slots:
            return np.zeros(0)
        return np.concatenate([g.ravel() for g in self.slots.values()])

    def norm(self) -> float:
        '''
        The global L2 norm over all slots.
        '''
        return float(np.sqrt(sum(float(np.sum(g * g)) for g in self.slots.values())))

    def scaled(self, factor: float) -> 'GradientRecord':
        return GradientRecord({k: g * factor for k, g in self.slots.items()},
                              None if self.input is None else self.input * factor)

    def masked(self, keep) -> 'GradientRecord':
        '''
        Zero every slot whose name fails the `keep` predicate.
        '''
        return GradientRecord(
            {k: (g if keep(k) else np.zeros_like(g)) for k, g in self.slots.items()},
            self.input,
        )
