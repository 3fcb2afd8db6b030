'''
The differentiable-function contract, and the finite-difference oracles used
to verify every gradient and Jacobian in the package.

Reverse mode is hand-derived per component: each `Differentiable` records
what it needs on a tape during `forward`, and `backward` turns an upstream
gradient into parameter and input gradients.

Components register a *probe* with `@differentiable(name)`: a factory that
builds a randomly parameterized instance and a sample input. The self-check
suite walks the registry and compares every probe against
`finite_diff_gradient`.
'''

from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable, Mapping
from types import MappingProxyType
from typing import Any, NamedTuple, Optional

import numpy as np

from xontrib.tnvp.params import GradientRecord, ParameterStore
from xontrib.tnvp.type_aliases import Tensor, Shape
from xontrib.tnvp.types import ShapeMismatchError, TnvpValueError


class Differentiable(ABC):
    '''
    A function with parameters and hand-derived reverse mode.

    `in_shape` and `out_shape` are per-sample shapes; `forward` also accepts
    a leading batch axis. An `out_shape` of `()` marks a scalar function
    (an objective), whose output is a single number for the whole batch.
    '''
    in_shape: Shape
    out_shape: Shape

    @property
    @abstractmethod
    def params(self) -> ParameterStore:
        '''
        The parameters read by `forward`.
        '''
        ...

    @abstractmethod
    def forward(self, x: Any, /) -> tuple[Any, Any]:
        '''
        Evaluate, returning `(output, tape)`.
        '''
        ...

    @abstractmethod
    def backward(self, tape: Any, grad_out: Any, /) -> GradientRecord:
        '''
        Propagate `grad_out` (the gradient of a scalar loss with respect to
        the output) back through the evaluation recorded on `tape`.
        '''
        ...

    def __call__(self, x: Any, /) -> Any:
        return self.forward(x)[0]


def eval_with_gradients(fn: Differentiable,
                        params: ParameterStore,
                        x: Any,
                        seed: Any = 1.0,
                        ) -> tuple[Any, GradientRecord]:
    '''
    Evaluate `fn` at `x` and return its output with the reverse-mode
    gradients of the downstream scalar loss whose output gradient is `seed`.

    For a scalar function the seed must be a scalar (normally 1.0). For a
    vector function it is the loss gradient with respect to the output, of
    the output's shape.
    '''
    if list(params) != list(fn.params) or any(
        params[k] is not fn.params[k] for k in params
    ):
        raise TnvpValueError('Parameter store does not belong to this function')
    y, tape = fn.forward(x)
    record = fn.backward(tape, _check_seed(fn, y, seed))
    record.check_aligned(params)
    return y, record


def _check_seed(fn: Differentiable, y: Any, seed: Any) -> Any:
    if isinstance(y, tuple):
        if not isinstance(seed, tuple) or len(seed) != len(y):
            raise TnvpValueError(f'Seed must be a {len(y)}-tuple for this function')
        return tuple(_check_part(p, s) for p, s in zip(y, seed))
    if fn.out_shape == ():
        seed_arr = np.asarray(seed, dtype=np.float64)
        if seed_arr.ndim != 0:
            raise TnvpValueError(f'Non-scalar seed {seed_arr.shape} for a scalar function')
        return float(seed_arr)
    return _check_part(y, seed)


def _check_part(y: Any, seed: Any) -> Tensor:
    seed_arr = np.asarray(seed, dtype=np.float64)
    if seed_arr.shape != np.shape(y):
        raise ShapeMismatchError(np.shape(y), seed_arr.shape, 'seed')
    return seed_arr


def _seed_like(y: Any, rng: np.random.Generator) -> Any:
    if isinstance(y, tuple):
        return tuple(rng.normal(size=np.shape(p)) for p in y)
    return rng.normal(size=np.shape(y))


def _weighted(seed: Any, y: Any) -> float:
    if isinstance(y, tuple):
        return sum(float(np.sum(s * p)) for s, p in zip(seed, y))
    return float(np.sum(np.asarray(seed) * y))


def finite_diff_gradient(fn: Callable[[ParameterStore], float],
                         params: ParameterStore,
                         step: float = 1e-5,
                         indices: Optional[Mapping[str, Iterable[int]]] = None,
                         ) -> GradientRecord:
    '''
    Central-difference estimate (f(p+h) − f(p−h)) / 2h of the gradient of
    the scalar function `fn` for every parameter coordinate.

    Parameters are perturbed in place and restored bit-exactly.
    `indices` restricts the estimate to some flat coordinates per slot;
    the rest of the record is zero.
    '''
    if not step > 0:
        raise TnvpValueError(f'Finite-difference step must be positive: {step}')
    grads: dict[str, Tensor] = {}
    for name, slot in params.items():
        flat = slot.reshape(-1)
        g = np.zeros(slot.size)
        chosen = range(slot.size) if indices is None else indices.get(name, ())
        for i in chosen:
            saved = flat[i]
            try:
                flat[i] = saved + step
                f_plus = float(fn(params))
                flat[i] = saved - step
                f_minus = float(fn(params))
            finally:
                flat[i] = saved
            g[i] = (f_plus - f_minus) / (2 * step)
        grads[name] = g.reshape(slot.shape)
    return GradientRecord(grads)


def numerical_jacobian(fn: Callable[[Tensor], Tensor],
                       x: Tensor,
                       step: float = 1e-5) -> Tensor:
    '''
    The D×D Jacobian of `fn` at `x`; column j is the central difference
    along coordinate j.
    '''
    if not step > 0:
        raise TnvpValueError(f'Finite-difference step must be positive: {step}')
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeMismatchError((x.size,), x.shape, 'numerical_jacobian input')
    dim = x.shape[0]
    jac = np.zeros((dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = step
        y_plus = np.asarray(fn(x + e), dtype=np.float64)
        y_minus = np.asarray(fn(x - e), dtype=np.float64)
        if y_plus.shape != (dim,):
            raise ShapeMismatchError((dim,), y_plus.shape, 'numerical_jacobian output')
        jac[:, j] = (y_plus - y_minus) / (2 * step)
    return jac


class GradientComparison(NamedTuple):
    '''
    The outcome of comparing reverse-mode gradients against finite differences.
    '''
    max_rel_error: float
    worst_slot: str
    compared: int


def compare_gradients(analytic: GradientRecord,
                      numeric: GradientRecord,
                      indices: Optional[Mapping[str, Iterable[int]]] = None,
                      threshold: float = 1e-8,
                      floor: float = 1e-6) -> GradientComparison:
    '''
    Maximum relative error |a − n| / max(|a|, |n|, floor) over coordinates
    whose magnitude exceeds `threshold`.

    `floor` absorbs the O(1e-10) noise of a central difference on
    coordinates that are nearly zero.
    '''
    worst = 0.0
    worst_slot = ''
    compared = 0
    for name, a in analytic.slots.items():
        a_flat = a.reshape(-1)
        n_flat = numeric[name].reshape(-1)
        chosen = range(a_flat.size) if indices is None else indices.get(name, ())
        for i in chosen:
            mag = max(abs(a_flat[i]), abs(n_flat[i]))
            if mag <= threshold:
                continue
            compared += 1
            err = abs(a_flat[i] - n_flat[i]) / max(mag, floor)
            if err > worst:
                worst, worst_slot = err, name
    return GradientComparison(worst, worst_slot, compared)


class Probe(NamedTuple):
    '''
    A randomly parameterized instance of a `Differentiable`, with an input
    to evaluate it at.
    '''
    fn: Differentiable
    x: Any


ProbeFactory = Callable[[np.random.Generator], Probe]

_probes: dict[str, ProbeFactory] = {}


def differentiable(name: str):
    '''
    Decorator registering a probe factory under `name`.
    '''
    def decorator(factory: ProbeFactory) -> ProbeFactory:
        if name in _probes:
            raise TnvpValueError(f'Probe already registered: {name}')
        _probes[name] = factory
        return factory
    return decorator


def registered_probes() -> MappingProxyType[str, ProbeFactory]:
    '''
    All registered probe factories, by name.
    '''
    return MappingProxyType(_probes)


def randomize(params: ParameterStore, rng: np.random.Generator, scale: float = 0.3):
    '''
    Overwrite every slot with N(0, scale²) draws, in slot order.
    '''
    for name, slot in params.items():
        params[name] = rng.normal(0.0, scale, size=slot.shape)


def check_probe(probe: Probe,
                rng: np.random.Generator,
                step: float = 1e-5,
                max_coords: Optional[int] = None) -> GradientComparison:
    '''
    Compare a probe's reverse-mode gradients against finite differences.

    Vector-valued functions are reduced to a scalar with a random output
    weighting. `max_coords` samples at most that many coordinates per slot.
    '''
    fn, x = probe
    y, _ = fn.forward(x)
    seed: Any = 1.0 if fn.out_shape == () else _seed_like(y, rng)

    def loss(_: ParameterStore) -> float:
        return _weighted(seed, fn.forward(x)[0])

    _, analytic = eval_with_gradients(fn, fn.params, x, seed)
    indices: Optional[dict[str, Iterable[int]]] = None
    if max_coords is not None:
        indices = {
            name: sorted(rng.choice(slot.size, size=min(max_coords, slot.size), replace=False))
            for name, slot in fn.params.items()
        }
    numeric = finite_diff_gradient(loss, fn.params, step, indices)
    return compare_gradients(analytic, numeric, indices)
