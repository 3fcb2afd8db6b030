'''
Composed bijections: a `FlowStack` applies mapping units f_1, ..., f_n in
declared order, sums their log-determinants, and inverts by applying the
unit inverses in reverse order.
'''

from collections.abc import Sequence
from typing import Any, Optional

import numpy as np

from xontrib.tnvp.coupling import MappingUnit, SCALE_BOUND
from xontrib.tnvp.diff import Differentiable, Probe, differentiable, randomize
from xontrib.tnvp.masks import BinaryMask
from xontrib.tnvp.params import GradientRecord, ParameterStore
from xontrib.tnvp.tensor import batched
from xontrib.tnvp.type_aliases import MaskStyle, Tensor
from xontrib.tnvp.types import TnvpValueError


class FlowStack(Differentiable):
    '''
    An ordered composition of mapping units with alternating masks.

    With `strict=True` (the default) the stack must be non-empty, its masks
    non-degenerate, and each unit's mask the complement of the previous one.
    `strict=False` admits the degenerate stacks used to test edge cases.
    '''
    __units: tuple[MappingUnit, ...]
    __params: ParameterStore

    def __init__(self, units: Sequence[MappingUnit], dim: Optional[int] = None, *,
                 strict: bool = True):
        units = tuple(units)
        if dim is None:
            if not units:
                raise TnvpValueError('An empty stack needs an explicit dimension')
            dim = units[0].dim
        for i, unit in enumerate(units):
            if unit.dim != dim:
                raise TnvpValueError(f'Unit {i} has dimension {unit.dim}, expected {dim}')
            unit.index = i
        if strict:
            if not units:
                raise TnvpValueError('A flow stack needs at least one unit')
            for i, unit in enumerate(units):
                if unit.mask.degenerate:
                    raise TnvpValueError(f'Unit {i} has a degenerate mask {unit.mask!r}')
                if i and unit.mask != units[i - 1].mask.complement():
                    raise TnvpValueError(
                        f'Unit {i} mask {unit.mask!r} does not alternate with '
                        f'unit {i - 1} mask {units[i - 1].mask!r}'
                    )
        self.__units = units
        self.dim = dim
        self.in_shape = (dim,)
        self.out_shape = (dim,)
        self.__params = ParameterStore.compose({
            f'unit{i}': u.params for i, u in enumerate(units)
        })

    @property
    def units(self) -> tuple[MappingUnit, ...]:
        return self.__units

    @property
    def params(self) -> ParameterStore:
        return self.__params

    def __len__(self) -> int:
        return len(self.__units)

    def forward(self, x: Tensor, /) -> tuple[tuple[Tensor, Tensor|float], list[Any]]:
        '''
        Returns `((z, log_det), tape)`.
        '''
        xb, single = batched(x, self.dim)
        z = xb
        log_det = np.zeros(xb.shape[0])
        tapes = []
        for unit in self.__units:
            (z, ld), tape = unit.forward(z)
            log_det = log_det + ld
            tapes.append(tape)
        if single:
            return (z[0], float(log_det[0])), tapes
        return (z, log_det), tapes

    def inverse(self, z: Tensor) -> Tensor:
        zb, single = batched(z, self.dim)
        x = zb
        for unit in reversed(self.__units):
            x = unit.inverse(x)
        return x[0] if single else x

    def unit_log_dets(self, x: Tensor) -> list[Tensor|float]:
        '''
        Each unit's log-determinant along the forward pass.
        '''
        out = []
        z = x
        for unit in self.__units:
            z, ld = unit.forward(z)[0]
            out.append(ld)
        return out

    def backward(self, tape: list[Any], grad_out: tuple[Tensor, Tensor|float], /
                 ) -> GradientRecord:
        gz, gl = grad_out
        single = np.ndim(gz) == 1
        gz = np.atleast_2d(np.asarray(gz, dtype=np.float64))
        gl = np.asarray(gl, dtype=np.float64).reshape(gz.shape[0])
        parts: dict[str, GradientRecord] = {}
        for i in reversed(range(len(self.__units))):
            rec = self.__units[i].backward(tape[i], (gz, gl))
            parts[f'unit{i}'] = rec
            assert rec.input is not None
            gz = rec.input
        record = GradientRecord.compose({k: parts[k] for k in sorted(parts, key=_unit_order)})
        record.input = gz[0] if single else gz
        return record

    def __repr__(self):
        return f'FlowStack(dim={self.dim}, units={len(self.__units)})'


def _unit_order(key: str) -> int:
    return int(key.removeprefix('unit'))


def make_default_stack(dim: int,
                       n_units: int = 10,
                       blocks: int = 2,
                       width: int = 32,
                       mask_style: MaskStyle = 'half',
                       *,
                       mask: Optional[Sequence[float]] = None,
                       rng: Optional[np.random.Generator] = None,
                       seed: int = 0,
                       bound: float = SCALE_BOUND) -> FlowStack:
    '''
    A stack of `n_units` identity-initialized units whose masks alternate
    between the first mask and its complement.

    The first mask is `mask` (an explicit 0/1 template) if given, otherwise
    the `mask_style` layout.
    '''
    if dim < 2:
        raise TnvpValueError(f'A flow stack needs dimension ≥ 2, got {dim}')
    if n_units < 1:
        raise TnvpValueError(f'A flow stack needs at least one unit, got {n_units}')
    rng = rng if rng is not None else np.random.default_rng(seed)
    first = BinaryMask.of_style(mask_style, dim, mask)
    masks = [first, first.complement()]
    units = [
        MappingUnit.create(masks[i % 2], width=width, blocks=blocks,
                           rng=rng, index=i, bound=bound)
        for i in range(n_units)
    ]
    return FlowStack(units, dim)


def stack_forward(stack: FlowStack, x: Tensor) -> tuple[Tensor, Tensor|float]:
    '''
    `(z, log_det)` for `x` pushed through the stack.
    '''
    return stack.forward(x)[0]


def stack_inverse(stack: FlowStack, z: Tensor) -> Tensor:
    return stack.inverse(z)


def unit_forward(unit: MappingUnit, x: Tensor) -> tuple[Tensor, Tensor|float]:
    '''
    `(y, log_det)` for one mapping unit.
    '''
    return unit.forward(x)[0]


def unit_inverse(unit: MappingUnit, y: Tensor) -> Tensor:
    return unit.inverse(y)


@differentiable('flow-stack')
def _flow_stack_probe(rng: np.random.Generator) -> Probe:
    stack = make_default_stack(4, n_units=3, blocks=1, width=6, rng=rng)
    randomize(stack.params, rng, 0.3)
    return Probe(stack, rng.normal(size=(5, 4)))
