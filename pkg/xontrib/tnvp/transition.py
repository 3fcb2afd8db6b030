'''
The latent transition G(z) = W·z + b_G and the standard-normal density.
'''

from typing import Optional

import numpy as np

from xontrib.tnvp.diff import Differentiable, Probe, differentiable, randomize
from xontrib.tnvp.params import GradientRecord, ParameterStore
from xontrib.tnvp.tensor import batched, dense, outer_sum, matvec
from xontrib.tnvp.type_aliases import Tensor, TransitionStructure
from xontrib.tnvp.types import TnvpValueError

LOG_2PI = float(np.log(2.0 * np.pi))


def standard_normal_logpdf(v: Tensor) -> Tensor|float:
    '''
    log N(v; 0, I) = −(D/2)·log(2π) − ½‖v‖².

    A (D,) vector gives a float; an (N, D) batch gives one value per row.
    '''
    v = np.asarray(v, dtype=np.float64)
    dim = v.shape[-1]
    value = -0.5 * dim * LOG_2PI - 0.5 * np.sum(v * v, axis=-1)
    return float(value) if v.ndim == 1 else value


class TemporalTransition(Differentiable):
    '''
    The affine latent-to-latent map G(z) = W·z + b_G.

    With `structure='diagonal'` only the diagonal of W is a parameter
    (stored as the vector `w`).
    '''
    __params: ParameterStore

    def __init__(self, dim: int, structure: TransitionStructure = 'full',
                 weights: Optional[Tensor] = None,
                 bias: Optional[Tensor] = None):
        if dim < 1:
            raise TnvpValueError(f'Transition dimension must be positive: {dim}')
        if structure not in ('full', 'diagonal'):
            raise TnvpValueError(f'Unknown transition structure: {structure!r}')
        self.dim = dim
        self.structure = structure
        self.in_shape = (dim,)
        self.out_shape = (dim,)
        p = ParameterStore()
        match structure:
            case 'full':
                p.add('W', np.eye(dim) if weights is None else weights)
            case 'diagonal':
                w = np.ones(dim) if weights is None else np.asarray(weights, dtype=np.float64)
                if w.ndim == 2:
                    w = np.diag(w).copy()
                p.add('w', w)
        p.add('b', np.zeros(dim) if bias is None else bias)
        if structure == 'full' and p['W'].shape != (dim, dim):
            raise TnvpValueError(f'W must be {dim}×{dim}, got {p["W"].shape}')
        if p['b'].shape != (dim,):
            raise TnvpValueError(f'b_G must have length {dim}, got {p["b"].shape}')
        self.__params = p

    @property
    def params(self) -> ParameterStore:
        return self.__params

    @property
    def W(self) -> Tensor:
        '''
        The full weight matrix (a fresh array for the diagonal structure).
        '''
        if self.structure == 'full':
            return self.__params['W']
        return np.diag(self.__params['w'])

    @property
    def b(self) -> Tensor:
        return self.__params['b']

    def apply(self, z_prev: Tensor) -> Tensor:
        '''
        W·z_prev + b_G for a vector, or row-wise for a batch.
        '''
        z_prev = np.asarray(z_prev, dtype=np.float64)
        if z_prev.ndim == 1:
            batched(z_prev, self.dim, 'z_prev')
            return matvec(self.W, z_prev) + self.b
        return self.forward(z_prev)[0]

    def forward(self, z: Tensor, /) -> tuple[Tensor, tuple[Tensor, bool]]:
        zb, single = batched(z, self.dim, 'z_prev')
        if self.structure == 'full':
            out = dense(zb, self.__params['W'].T) + self.b
        else:
            out = zb * self.__params['w'] + self.b
        return (out[0] if single else out), (zb, single)

    def backward(self, tape: tuple[Tensor, bool], grad_out: Tensor, /) -> GradientRecord:
        zb, single = tape
        g = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))
        grads: dict[str, Tensor] = {}
        if self.structure == 'full':
            grads['W'] = outer_sum(g, zb)
            gz = dense(g, self.__params['W'])
        else:
            grads['w'] = np.sum(g * zb, axis=0)
            gz = g * self.__params['w']
        grads['b'] = g.sum(axis=0)
        return GradientRecord(grads, gz[0] if single else gz)

    def __repr__(self):
        return f'TemporalTransition(dim={self.dim}, structure={self.structure!r})'


def transition_apply(g: TemporalTransition, z_prev: Tensor) -> Tensor:
    return g.apply(z_prev)


@differentiable('transition-full')
def _transition_full_probe(rng: np.random.Generator) -> Probe:
    g = TemporalTransition(3)
    randomize(g.params, rng, 1.0)
    return Probe(g, rng.normal(size=(4, 3)))


@differentiable('transition-diagonal')
def _transition_diagonal_probe(rng: np.random.Generator) -> Probe:
    g = TemporalTransition(3, 'diagonal')
    randomize(g.params, rng, 1.0)
    return Probe(g, rng.normal(size=(4, 3)))
