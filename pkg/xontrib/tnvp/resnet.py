'''
Residual feedforward networks for the scale and translation functions of a
mapping unit.

Layout, for input dimension D, width H and R blocks:

    h = x·W_in + b_in
    h = h + relu(relu(h)·W1 + b1)·W2 + b2        (once per block)
    out = relu(h)·W_out + b_out

`W_out` and `b_out` start at zero, so a fresh network outputs zero and a
fresh mapping unit is the identity.
'''

from collections.abc import Callable, Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from typing import NamedTuple, Optional

import numpy as np

from xontrib.tnvp.diff import Differentiable, Probe, differentiable, randomize
from xontrib.tnvp.params import GradientRecord, ParameterStore
from xontrib.tnvp.tensor import batched, dense, outer_sum
from xontrib.tnvp.type_aliases import Tensor
from xontrib.tnvp.types import TnvpValueError


class _BlockTape(NamedTuple):
    h: Tensor
    u: Tensor
    v: Tensor
    w: Tensor


class _NetTape(NamedTuple):
    x: Tensor
    blocks: list[_BlockTape]
    h: Tensor
    q: Tensor
    single: bool


_margins: ContextVar[Optional[list[float]]] = ContextVar('tnvp_kink_margins', default=None)


def _relu(x: Tensor) -> Tensor:
    seen = _margins.get()
    if seen is not None and x.size:
        seen.append(float(np.min(np.abs(x))))
    return np.maximum(x, 0.0)


@contextmanager
def kink_margin() -> Iterator[Callable[[], float]]:
    '''
    Record the smallest |pre-activation| seen by any rectifier while active.

    Finite differences are only trustworthy when no pre-activation lies
    within a step of a kink; the yielded function returns the current
    minimum (infinity if nothing was evaluated). Recording is local to the
    current thread or task.
    '''
    seen: list[float] = []
    token = _margins.set(seen)
    try:
        yield lambda: min(seen, default=float('inf'))
    finally:
        _margins.reset(token)


class ResidualNet(Differentiable):
    '''
    A residual multilayer network mapping R^D to R^D.
    '''
    __params: ParameterStore

    def __init__(self, dim: int, width: int = 32, blocks: int = 2, *,
                 rng: Optional[np.random.Generator] = None):
        if dim < 1 or width < 1 or blocks < 0:
            raise TnvpValueError(
                f'Invalid residual net: dim={dim}, width={width}, blocks={blocks}'
            )
        self.dim = dim
        self.width = width
        self.blocks = blocks
        self.in_shape = (dim,)
        self.out_shape = (dim,)
        rng = rng if rng is not None else np.random.default_rng(0)

        def uniform(fan_in: int, fan_out: int) -> Tensor:
            limit = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-limit, limit, size=(fan_in, fan_out))

        p = ParameterStore()
        p.add('in.W', uniform(dim, width))
        p.add('in.b', np.zeros(width))
        for r in range(blocks):
            p.add(f'block{r}.W1', uniform(width, width))
            p.add(f'block{r}.b1', np.zeros(width))
            p.add(f'block{r}.W2', uniform(width, width))
            p.add(f'block{r}.b2', np.zeros(width))
        p.add('out.W', np.zeros((width, dim)))
        p.add('out.b', np.zeros(dim))
        self.__params = p

    @property
    def params(self) -> ParameterStore:
        return self.__params

    def forward(self, x: Tensor, /) -> tuple[Tensor, _NetTape]:
        p = self.__params
        xb, single = batched(x, self.dim)
        h = dense(xb, p['in.W']) + p['in.b']
        tapes: list[_BlockTape] = []
        for r in range(self.blocks):
            u = _relu(h)
            v = dense(u, p[f'block{r}.W1']) + p[f'block{r}.b1']
            w = _relu(v)
            tapes.append(_BlockTape(h, u, v, w))
            h = h + dense(w, p[f'block{r}.W2']) + p[f'block{r}.b2']
        q = _relu(h)
        out = dense(q, p['out.W']) + p['out.b']
        return (out[0] if single else out), _NetTape(xb, tapes, h, q, single)

    def backward(self, tape: _NetTape, grad_out: Tensor, /) -> GradientRecord:
        p = self.__params
        g = np.asarray(grad_out, dtype=np.float64)
        if tape.single:
            g = g[None, :]
        grads: dict[str, Tensor] = {}
        grads['out.W'] = outer_sum(tape.q, g)
        grads['out.b'] = g.sum(axis=0)
        gh = dense(g, p['out.W'].T) * (tape.h > 0)
        for r in reversed(range(self.blocks)):
            bt = tape.blocks[r]
            grads[f'block{r}.W2'] = outer_sum(bt.w, gh)
            grads[f'block{r}.b2'] = gh.sum(axis=0)
            gv = dense(gh, p[f'block{r}.W2'].T) * (bt.v > 0)
            grads[f'block{r}.W1'] = outer_sum(bt.u, gv)
            grads[f'block{r}.b1'] = gv.sum(axis=0)
            gh = gh + dense(gv, p[f'block{r}.W1'].T) * (bt.h > 0)
        grads['in.W'] = outer_sum(tape.x, gh)
        grads['in.b'] = gh.sum(axis=0)
        gx = dense(gh, p['in.W'].T)
        return GradientRecord({k: grads[k] for k in p},
                              gx[0] if tape.single else gx)

    def __repr__(self):
        return f'ResidualNet(dim={self.dim}, width={self.width}, blocks={self.blocks})'


class BoundedScale(Differentiable):
    '''
    A scale function whose output is squashed smoothly into (−bound, bound):
    s = bound·tanh(raw / bound).

    The bound belongs to the scale function itself, so the forward map,
    its inverse and its log-determinant all see the same `s`.
    '''
    def __init__(self, net: Differentiable, bound: float = 5.0):
        if not bound > 0:
            raise TnvpValueError(f'Scale bound must be positive: {bound}')
        self.net = net
        self.bound = bound
        self.in_shape = net.in_shape
        self.out_shape = net.out_shape

    @property
    def params(self) -> ParameterStore:
        return self.net.params

    def forward(self, x: Tensor, /) -> tuple[Tensor, tuple]:
        raw, net_tape = self.net.forward(x)
        t = np.tanh(raw / self.bound)
        return self.bound * t, (net_tape, t)

    def backward(self, tape: tuple, grad_out: Tensor, /) -> GradientRecord:
        net_tape, t = tape
        return self.net.backward(net_tape, grad_out * (1.0 - t * t))

    def __repr__(self):
        return f'BoundedScale({self.net!r}, bound={self.bound})'


@differentiable('residual-net')
def _residual_net_probe(rng: np.random.Generator) -> Probe:
    net = ResidualNet(4, width=8, blocks=2, rng=rng)
    randomize(net.params, rng, 0.5)
    return Probe(net, rng.normal(size=(5, 4)))


@differentiable('bounded-scale')
def _bounded_scale_probe(rng: np.random.Generator) -> Probe:
    net = ResidualNet(3, width=6, blocks=1, rng=rng)
    randomize(net.params, rng, 1.0)
    return Probe(BoundedScale(net, 2.0), rng.normal(size=(4, 3)))
