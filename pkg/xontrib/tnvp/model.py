'''
The temporal model: two flow stacks F1, F2 and a latent transition G.

    z_prev = F1(x_prev)
    z_t    = F2(x_t)
    z_t    = G(z_prev) + z̄,   z̄ ∼ N(0, I)

The conditional density of the next stage is

    log p(x_t | x_prev) = log N(F2(x_t) − G(F1(x_prev)); 0, I) + log|det ∂F2/∂x_t|

F1's log-determinant never enters: x_prev is conditioned on, so z_prev is a
deterministic function of it.
'''

from collections.abc import Sequence
from typing import Any, NamedTuple, Optional

import numpy as np

from xontrib.tnvp.diff import Differentiable, Probe, differentiable, randomize
from xontrib.tnvp.flow import FlowStack, make_default_stack
from xontrib.tnvp.params import GradientRecord, ParameterStore
from xontrib.tnvp.tensor import as_tensor, batched
from xontrib.tnvp.transition import TemporalTransition, standard_normal_logpdf
from xontrib.tnvp.type_aliases import MaskStyle, NoiseSpec, Tensor, TransitionStructure
from xontrib.tnvp.types import ShapeMismatchError, TnvpValueError
from xontrib.tnvp.utils import check_seed


class ModelSpec(NamedTuple):
    '''
    The hyperparameters a model is built from, as stored in a checkpoint.
    '''
    dim: int
    n_units: int = 10
    blocks: int = 2
    width: int = 32
    mask_style: MaskStyle = 'half'
    structure: TransitionStructure = 'full'
    seed: int = 0
    mask: Optional[tuple[float, ...]] = None


class PairBatch(NamedTuple):
    '''
    Aligned previous-stage and next-stage observations, (N, D) each.
    '''
    x_prev: Tensor
    x_t: Tensor


class TNVPModel:
    '''
    F1 (θ1), F2 (θ2) and the transition G (θ3), with one parameter view
    `params` spanning all three.
    '''
    __params: ParameterStore

    def __init__(self, F1: FlowStack, F2: FlowStack,
                 transition: TemporalTransition,
                 spec: Optional[ModelSpec] = None):
        if not F1.dim == F2.dim == transition.dim:
            raise TnvpValueError(
                f'Model parts disagree on dimension: F1={F1.dim}, F2={F2.dim}, '
                f'G={transition.dim}'
            )
        f1_slots = {id(v) for v in F1.params.values()}
        if any(id(v) in f1_slots for v in F2.params.values()):
            raise TnvpValueError('F1 and F2 must not share parameters')
        self.F1 = F1
        self.F2 = F2
        self.G = transition
        self.spec = spec if spec is not None else ModelSpec(F1.dim, len(F1))
        self.__params = ParameterStore.compose({
            'F1': F1.params,
            'F2': F2.params,
            'G': transition.params,
        })

    @property
    def dim(self) -> int:
        return self.F1.dim

    @property
    def params(self) -> ParameterStore:
        return self.__params

    def _check(self, v: Tensor, what: str) -> Tensor:
        v = np.asarray(v, dtype=np.float64)
        if v.shape[-1:] != (self.dim,):
            raise ShapeMismatchError((self.dim,), v.shape, what)
        return v

    def latents(self, x_t: Tensor, x_prev: Tensor) -> tuple[Tensor, Tensor, Tensor|float]:
        '''
        `(z_t, z_prev, log_det)` with `log_det` the log-determinant of F2 at `x_t`.
        '''
        x_t = self._check(x_t, 'x_t')
        x_prev = self._check(x_prev, 'x_prev')
        if x_t.shape != x_prev.shape:
            raise ShapeMismatchError(x_prev.shape, x_t.shape, 'x_t and x_prev')
        z_prev = self.F1.forward(x_prev)[0][0]
        (z_t, log_det), _ = self.F2.forward(x_t)
        return z_t, z_prev, log_det

    def conditional_latent_logpdf(self, z_t: Tensor, z_prev: Tensor) -> Tensor|float:
        '''
        log N(z_t; W·z_prev + b_G, I).
        '''
        z_t = self._check(z_t, 'z_t')
        z_prev = self._check(z_prev, 'z_prev')
        if z_t.shape != z_prev.shape:
            raise ShapeMismatchError(z_prev.shape, z_t.shape, 'z_t and z_prev')
        return standard_normal_logpdf(z_t - self.G.apply(z_prev))

    def joint_latent_logpdf(self, z_t: Tensor, z_prev: Tensor) -> Tensor|float:
        '''
        log p(z_t, z_prev) = log N(z_prev; 0, I) + log N(z_t; G(z_prev), I).

        This is the Gaussian with mean [b_G; 0] and covariance
        [[W·Wᵀ + I, W], [Wᵀ, I]].
        '''
        return (standard_normal_logpdf(self._check(z_prev, 'z_prev'))
                + self.conditional_latent_logpdf(z_t, z_prev))

    def conditional_loglik(self, x_t: Tensor, x_prev: Tensor) -> Tensor|float:
        '''
        log p(x_t | x_prev): the latent residual density plus F2's log-determinant.

        PARAMETERS
        ----------
        x_t: Tensor
            The next-stage observation, (D,) or (N, D).
        x_prev: Tensor
            The previous-stage observation, same shape as `x_t`.
        RETURNS
        -------
        float|Tensor
            A float for single vectors, one value per row for batches.
        '''
        z_t, z_prev, log_det = self.latents(x_t, x_prev)
        return self.conditional_latent_logpdf(z_t, z_prev) + log_det

    def conditional_loglik_via_joint(self, x_t: Tensor, x_prev: Tensor) -> Tensor|float:
        '''
        log p(x_t | x_prev) as the joint latent density minus the marginal of
        z_prev, plus F2's log-determinant.
        '''
        z_t, z_prev, log_det = self.latents(x_t, x_prev)
        return (self.joint_latent_logpdf(z_t, z_prev)
                - standard_normal_logpdf(z_prev) + log_det)

    def synthesize_next(self, x_prev: Tensor,
                        noise: NoiseSpec|np.random.Generator = 'zero') -> Tensor:
        '''
        The next-stage observation F2⁻¹(G(F1(x_prev)) + z̄).

        `noise='zero'` takes z̄ = 0 (the mode); an integer seeds a standard
        normal draw; a `Generator` is drawn from directly.
        '''
        x_prev = as_tensor(self._check(x_prev, 'x_prev'), what='x_prev')
        z_prev = self.F1.forward(x_prev)[0][0]
        z_t = self.G.apply(z_prev) + latent_noise(noise, z_prev.shape)
        return self.F2.inverse(z_t)

    def __repr__(self):
        return f'TNVPModel(dim={self.dim}, units={len(self.F1)}, G={self.G.structure!r})'


def latent_noise(noise: NoiseSpec|np.random.Generator, shape: tuple[int, ...]) -> Tensor:
    '''
    The residual z̄ for a synthesis step.
    '''
    match noise:
        case 'zero':
            return np.zeros(shape)
        case np.random.Generator():
            return noise.normal(size=shape)
        case int() if not isinstance(noise, bool):
            return np.random.default_rng(check_seed(noise, 'noise seed')).normal(size=shape)
        case _:
            raise TnvpValueError(f'Invalid noise: {noise!r} (expected "zero" or a seed)')


def synthesize_chain(models: Sequence[TNVPModel], x_0: Tensor,
                     noise: NoiseSpec|np.random.Generator = 'zero') -> list[Tensor]:
    '''
    Apply `synthesize_next` model by model, each stage consuming the
    previous stage's output. Seeded noise draws every stage from one
    generator, so a chain is reproducible from its seed. A generator may be
    passed instead, to continue one stream across several chains.
    '''
    if not models:
        return []
    dim = models[0].dim
    for i, m in enumerate(models):
        if m.dim != dim:
            raise ShapeMismatchError((dim,), (m.dim,), f'chained model {i}')
    source: NoiseSpec|np.random.Generator = (
        noise if isinstance(noise, np.random.Generator) or noise == 'zero'
        else np.random.default_rng(check_seed(noise, 'noise seed'))
    )
    out = []
    x = np.asarray(x_0, dtype=np.float64)
    for m in models:
        x = m.synthesize_next(x, source)
        out.append(x)
    return out


def make_model(dim: int,
               n_units: int = 10,
               blocks: int = 2,
               width: int = 32,
               mask_style: MaskStyle = 'half',
               structure: TransitionStructure = 'full',
               *,
               seed: int = 0,
               mask: Optional[Sequence[float]] = None) -> TNVPModel:
    '''
    A freshly initialized model: identity flows, W = I, b_G = 0.

    Hidden weights of F1 then F2 are drawn from one generator seeded with
    `seed`, so equal arguments give bit-identical models.
    '''
    rng = np.random.default_rng(check_seed(seed))
    template =None if mask is None else tuple(float(v) for v in mask)
    F1 = make_default_stack(dim, n_units, blocks, width, mask_style, mask=template, rng=rng)
    F2 = make_default_stack(dim, n_units, blocks, width, mask_style, mask=template, rng=rng)
    spec = ModelSpec(dim, n_units, blocks, width, mask_style, structure, seed, template)
    return TNVPModel(F1, F2, TemporalTransition(dim, structure), spec)


class ParameterLayout(NamedTuple):
    '''
    The size of a model's parameter store: slot count, the sum of slot
    ranks, and the number of float64 values.
    '''
    tensors: int
    extents: int
    values: int


def parameter_layout(spec: ModelSpec) -> ParameterLayout:
    '''
    The layout `make_model` would produce for `spec`, computed without
    allocating it.
    '''
    d, h, r = spec.dim, spec.width, spec.blocks
    # One residual net: in, `r` blocks, out.
    net_values = d * h + h + r * (2 * h * h + 2 * h) + h * d + d
    net_tensors = 4 + 4 * r
    nets = 2 * 2 * spec.n_units
    g_values, g_extents = (d * d + d, 3) if spec.structure == 'full' else (2 * d, 2)
    return ParameterLayout(
        tensors=nets * net_tensors + 2,
        extents=nets * (3 * net_tensors // 2) + g_extents,
        values=nets * net_values + g_values,
    )


class TemporalObjective(Differentiable):
    '''
    The training loss: mean −log p(x_t | x_prev) over a `PairBatch`.
    '''
    def __init__(self, model: TNVPModel):
        self.model = model
        self.in_shape = (2, model.dim)
        self.out_shape = ()

    @property
    def params(self) -> ParameterStore:
        return self.model.params

    def forward(self, pairs: PairBatch, /) -> tuple[float, Any]:
        m = self.model
        x_prev, _ = batched(pairs[0], m.dim, 'x_prev')
        x_t, _ = batched(pairs[1], m.dim, 'x_t')
        if x_prev.shape != x_t.shape:
            raise ShapeMismatchError(x_prev.shape, x_t.shape, 'pair batch')
        (z_prev, _), f1_tape = m.F1.forward(x_prev)
        (z_t, log_det), f2_tape = m.F2.forward(x_t)
        mean, g_tape = m.G.forward(z_prev)
        r = z_t - mean
        loss = -float(np.mean(standard_normal_logpdf(r) + log_det))
        return loss, (f1_tape, f2_tape, g_tape, r)

    def backward(self, tape: Any, grad_out: float, /) -> GradientRecord:
        m = self.model
        f1_tape, f2_tape, g_tape, r = tape
        n = r.shape[0]
        gr = r * (grad_out / n)
        f2_rec = m.F2.backward(f2_tape, (gr, np.full(n, -grad_out / n)))
        g_rec = m.G.backward(g_tape, -gr)
        assert g_rec.input is not None
        f1_rec = m.F1.backward(f1_tape, (g_rec.input, np.zeros(n)))
        return GradientRecord.compose({'F1': f1_rec, 'F2': f2_rec, 'G': g_rec})

    def __repr__(self):
        return f'TemporalObjective({self.model!r})'


def temporal_objective(model: TNVPModel, pairs: PairBatch) -> float:
    '''
    Mean negative conditional log-likelihood of `pairs`.
    '''
    return TemporalObjective(model)(pairs)


@differentiable('temporal-objective')
def _temporal_objective_probe(rng: np.random.Generator) -> Probe:
    model = make_model(4, n_units=2, blocks=1, width=6, seed=int(rng.integers(1 << 31)))
    randomize(model.params, rng, 0.3)
    return Probe(TemporalObjective(model),
                 PairBatch(rng.normal(size=(5, 4)), rng.normal(size=(5, 4))))


@differentiable('temporal-objective-diagonal')
def _temporal_objective_diagonal_probe(rng: np.random.Generator) -> Probe:
    model = make_model(3, n_units=2, blocks=1, width=5, structure='diagonal',
                       mask_style='even-odd', seed=int(rng.integers(1 << 31)))
    randomize(model.params, rng, 0.3)
    return Probe(TemporalObjective(model),
                 PairBatch(rng.normal(size=(4, 3)), rng.normal(size=(4, 3))))
