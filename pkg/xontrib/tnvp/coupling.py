'''
The affine coupling mapping unit.

Given a mask `b`, scale function `S` and translation function `T`, with
x' = b⊙x:

    forward:  y = x' + (1−b)⊙[x⊙exp(S(x')) + T(x')]
    log-det:  Σ_j s_j over the unmasked coordinates, s = S(x')
    inverse:  x = y' + (1−b)⊙[(y − T(y'))⊙exp(−S(y'))],  y' = b⊙y

The Jacobian is triangular (identity on the masked block, diag(exp(s)) on
the free block), which is what makes the log-determinant a plain sum.
'''

from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Any, NamedTuple, Optional

import numpy as np

from xontrib.tnvp.diff import Differentiable, Probe, differentiable, randomize
from xontrib.tnvp.masks import BinaryMask
from xontrib.tnvp.params import GradientRecord, ParameterStore
from xontrib.tnvp.resnet import BoundedScale, ResidualNet
from xontrib.tnvp.tensor import batched, check_finite
from xontrib.tnvp.type_aliases import Tensor
from xontrib.tnvp.types import CouplingOverflowError, ShapeMismatchError

SCALE_LIMIT = 50.0
'''
Largest |s_j| for which `exp(s_j)` is evaluated.
'''

SCALE_BOUND = 5.0
'''
The tanh bound applied to the default scale networks.
'''

_faults: ContextVar[frozenset[str]] = ContextVar('tnvp_faults', default=frozenset())


@contextmanager
def inject_fault(name: str) -> Iterator[None]:
    '''
    Temporarily corrupt the unit arithmetic, to prove the self-checks can fail.
    The fault applies only in the current thread or task.

    `inverse-sign` flips the sign of the exponent in the inverse map.
    '''
    token = _faults.set(_faults.get() | {name})
    try:
        yield
    finally:
        _faults.reset(token)


class _UnitTape(NamedTuple):
    x: Tensor
    s: Tensor
    es: Tensor
    s_tape: Any
    t_tape: Any
    single: bool


class MappingUnit(Differentiable):
    '''
    One coupling transform f: (mask, S, T).

    `S` and `T` may be any `Differentiable` from R^D to R^D; the default
    factory uses bounded residual networks. `index` is the unit's position
    in its stack, reported by overflow errors.
    '''
    __params: ParameterStore

    def __init__(self, mask: BinaryMask,
                 scale: Differentiable,
                 translate: Differentiable,
                 index: int = 0):
        dim = mask.dim
        for name, fn in (('S', scale), ('T', translate)):
            if fn.in_shape != (dim,) or fn.out_shape != (dim,):
                raise ShapeMismatchError((dim,), fn.out_shape, f'{name} of unit {index}')
        self.mask = mask
        self.S = scale
        self.T = translate
        self.index = index
        self.in_shape = (dim,)
        self.out_shape = (dim,)
        self.__pass = mask.b.astype(bool)
        self.__params = ParameterStore.compose({'S': scale.params, 'T': translate.params})

    @classmethod
    def create(cls, mask: BinaryMask, *,
               width: int = 32,
               blocks: int = 2,
               rng: Optional[np.random.Generator] = None,
               index: int = 0,
               bound: float = SCALE_BOUND) -> 'MappingUnit':
        '''
        A unit with bounded residual-network S and T, starting as the identity.
        '''
        rng = rng if rng is not None else np.random.default_rng(0)
        s_net = ResidualNet(mask.dim, width, blocks, rng=rng)
        t_net = ResidualNet(mask.dim, width, blocks, rng=rng)
        return cls(mask, BoundedScale(s_net, bound), t_net, index)

    @property
    def params(self) -> ParameterStore:
        return self.__params

    @property
    def dim(self) -> int:
        return self.mask.dim

    def _scale(self, masked: Tensor) -> tuple[Tensor, Any]:
        s, s_tape = self.S.forward(masked)
        s = s * self.mask.free
        worst = float(np.max(np.abs(s))) if s.size else 0.0
        if not np.isfinite(worst) or worst > SCALE_LIMIT:
            raise CouplingOverflowError(self.index, worst)
        return s, s_tape

    def forward(self, x: Tensor, /) -> tuple[tuple[Tensor, Tensor|float], _UnitTape]:
        '''
        Returns `((y, log_det), tape)`. For a single vector, `log_det` is a
        float; for a batch, one value per row.
        '''
        xb, single = batched(x, self.dim)
        masked = xb * self.mask.b
        s, s_tape = self._scale(masked)
        t, t_tape = self.T.forward(masked)
        es = np.exp(s)
        y = np.where(self.__pass, xb, xb * es + t)
        check_finite(y, f'mapping unit {self.index}')
        log_det = s.sum(axis=1)
        tape = _UnitTape(xb, s, es, s_tape, t_tape, single)
        if single:
            return (y[0], float(log_det[0])), tape
        return (y, log_det), tape

    def inverse(self, y: Tensor) -> Tensor:
        yb, single = batched(y, self.dim)
        masked = yb * self.mask.b
        s, _ = self._scale(masked)
        t = self.T(masked)
        sign = 1.0 if 'inverse-sign' in _faults.get() else -1.0
        x = np.where(self.__pass, yb, (yb - t) * np.exp(sign * s))
        check_finite(x, f'inverse of mapping unit {self.index}')
        return x[0] if single else x

    def log_det(self, x: Tensor) -> Tensor|float:
        return self.forward(x)[0][1]

    def backward(self, tape: _UnitTape, grad_out: tuple[Tensor, Tensor|float], /
                 ) -> GradientRecord:
        gy, gl = grad_out
        gy = np.asarray(gy, dtype=np.float64)
        gl = np.asarray(gl, dtype=np.float64)
        if tape.single:
            gy = gy[None, :]
            gl = gl.reshape(1)
        b = self.mask.b
        free = self.mask.free
        g_free = gy * free
        gs = g_free * tape.x * tape.es + gl[:, None] * free
        s_rec = self.S.backward(tape.s_tape, gs)
        t_rec = self.T.backward(tape.t_tape, g_free)
        gx = gy * b + g_free * tape.es
        assert s_rec.input is not None and t_rec.input is not None
        gx = gx + (s_rec.input + t_rec.input) * b
        record = GradientRecord.compose({'S': s_rec, 'T': t_rec})
        record.input = gx[0] if tape.single else gx
        return record

    def __repr__(self):
        return f'MappingUnit({self.index}, {self.mask!r}, S={self.S!r}, T={self.T!r})'


@differentiable('mapping-unit')
def _mapping_unit_probe(rng: np.random.Generator) -> Probe:
    unit = MappingUnit.create(BinaryMask.half(4), width=6, blocks=1, rng=rng)
    randomize(unit.params, rng, 0.4)
    return Probe(unit, rng.normal(size=(5, 4)))
