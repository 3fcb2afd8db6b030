'''
Maximum-likelihood training.

Two phases, run in order when `phases='both'`:

- `pretrain`: F1 and F2 are fitted separately as standalone density models
  of the previous-stage and next-stage observations under an N(0, I) prior.
- `joint`: the whole temporal model (θ1, θ2, θ3) minimizes the mean
  negative conditional log-likelihood of the pairs.

Both use plain mini-batch SGD with optional global-norm clipping. Batches are
drawn without replacement within an epoch from a generator seeded with
`TrainConfig.seed`; the final partial batch of an epoch is used as is.
'''

from collections.abc import Callable, Iterator
from dataclasses import dataclass, field, replace
from time import perf_counter
from typing import IO, Any, NamedTuple, Optional

import numpy as np

from xontrib.tnvp.diff import Differentiable, eval_with_gradients
from xontrib.tnvp.flow import FlowStack
from xontrib.tnvp.model import PairBatch, TNVPModel, TemporalObjective, make_model, ModelSpec
from xontrib.tnvp.params import GradientRecord, ParameterStore
from xontrib.tnvp.tensor import batched
from xontrib.tnvp.transition import standard_normal_logpdf
from xontrib.tnvp.type_aliases import PhaseFlag, Tensor
from xontrib.tnvp.types import (
    ConfigError, EmptyDatasetError, NonFiniteError, ShapeMismatchError, TnvpValueError,
)
from xontrib.tnvp.utils import check_seed, chunked, print_if

PHASES: tuple[PhaseFlag, ...] = ('pretrain_only', 'joint_only', 'both')


@dataclass(frozen=True)
class TrainConfig:
    '''
    Optimizer and schedule settings.

    The defaults use the reference batch size of 64.
    '''
    batch_size: int = 64
    learning_rate: float = 1e-3
    clip: Optional[float] = 5.0
    '''
    Global-norm gradient clip threshold, or `None` for no clipping.
    '''
    phases: PhaseFlag = 'both'
    seed: int = 0
    pretrain_steps: int = 200
    joint_steps: int = 500
    freeze_flows: bool = False
    '''
    Hold θ1 and θ2 fixed during the joint phase, training only G.
    '''
    log_every: int = 50
    per_stage: bool = False
    '''
    Train one model per stage transition instead of one shared model.
    '''

    def __post_init__(self):
        def bad(key: str, message: str):
            raise ConfigError(f'train.{key}', message)
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            bad('batch_size', f'must be a positive integer, got {self.batch_size!r}')
        if not self.learning_rate >= 0 or not np.isfinite(self.learning_rate):
            bad('learning_rate', f'must be a finite non-negative number, got {self.learning_rate!r}')
        if self.clip is not None and not self.clip > 0:
            bad('clip', f'must be positive or null, got {self.clip!r}')
        if self.phases not in PHASES:
            bad('phases', f'must be one of {", ".join(PHASES)}, got {self.phases!r}')
        for key in ('pretrain_steps', 'joint_steps'):
            if (v := getattr(self, key)) < 0:
                bad(key, f'must be non-negative, got {v!r}')
        if self.log_every < 1:
            bad('log_every', f'must be positive, got {self.log_every!r}')
        try:
            check_seed(self.seed)
        except TnvpValueError as e:
            raise ConfigError('train.seed', e.message.removeprefix('seed ')) from None


class TraceEntry(NamedTuple):
    phase: str
    step: int
    objective: float


@dataclass
class TrainReport:
    '''
    The outcome of a training run: the objective before every update, the
    wall-clock time per phase, and the checksum of the final parameters.
    '''
    seed: int
    trace: list[TraceEntry] = field(default_factory=list)
    wall_clock: dict[str, float] = field(default_factory=dict)
    checksum: str = ''

    @property
    def steps(self) -> int:
        return len(self.trace)

    def objectives(self, phase: Optional[str] = None) -> list[float]:
        return [e.objective for e in self.trace if phase is None or e.phase == phase]

    def extend(self, other: 'TrainReport'):
        self.trace.extend(other.trace)
        for k, v in other.wall_clock.items():
            self.wall_clock[k] = self.wall_clock.get(k, 0.0) + v
        self.checksum = other.checksum or self.checksum

    def export_trace(self, out: IO[str]):
        '''
        Write the trace as CSV with columns `phase,step,objective`.
        '''
        out.write('phase,step,objective\n')
        for e in self.trace:
            out.write(f'{e.phase},{e.step},{e.objective!r}\n')


def sgd_step(params: ParameterStore, grads: GradientRecord,
             lr: float, clip: Optional[float] = None) -> float:
    '''
    p ← p − lr·g in place, after scaling g down to global norm `clip`
    if it is longer.

    RETURNS
    -------
    float
        The gradient norm before clipping.
    '''
    grads.check_aligned(params)
    norm = grads.norm()
    if clip is not None and norm > clip:
        grads = grads.scaled(clip / norm)
    for name, g in grads.slots.items():
        slot = params[name]
        slot -= lr * g
    return norm


class PretrainObjective(Differentiable):
    '''
    Mean negative log-likelihood of a flow under an N(0, I) prior:
    −mean[log N(F(x); 0, I) + log|det ∂F/∂x|].
    '''
    def __init__(self, stack: FlowStack):
        self.stack = stack
        self.in_shape = (stack.dim,)
        self.out_shape = ()

    @property
    def params(self) -> ParameterStore:
        return self.stack.params

    def forward(self, x: Tensor, /) -> tuple[float, Any]:
        xb, _ = batched(x, self.stack.dim)
        (z, log_det), tape = self.stack.forward(xb)
        loss = -float(np.mean(standard_normal_logpdf(z) + log_det))
        return loss, (tape, z)

    def backward(self, tape: Any, grad_out: float, /) -> GradientRecord:
        stack_tape, z = tape
        n = z.shape[0]
        return self.stack.backward(stack_tape, (z * (grad_out / n), np.full(n, -grad_out / n)))


def minibatches(n: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    '''
    Row indices, epoch after epoch, each epoch a fresh permutation.
    '''
    if n < 1:
        raise EmptyDatasetError()
    while True:
        for chunk in chunked(list(rng.permutation(n)), batch_size):
            yield np.array(chunk)


def _run_phase(objective: Differentiable,
               select: Callable[[np.ndarray], Any],
               n: int,
               steps: int,
               cfg: TrainConfig,
               rng: np.random.Generator,
               phase: str,
               keep: Optional[Callable[[str], bool]] = None) -> TrainReport:
    trace = print_if('TRAIN')
    report = TrainReport(cfg.seed)
    params = objective.params
    batches = minibatches(n, cfg.batch_size, rng)
    start = perf_counter()
    for step in range(steps):
        batch = select(next(batches))
        try:
            loss, grads = eval_with_gradients(objective, params, batch)
        except NonFiniteError as e:
            raise NonFiniteError(f'{phase}: {e.operation}', step) from e
        if not np.isfinite(loss):
            raise NonFiniteError(f'{phase} objective', step)
        report.trace.append(TraceEntry(phase, step, loss))
        if keep is not None:
            grads = grads.masked(keep)
        norm = sgd_step(params, grads, cfg.learning_rate, cfg.clip)
        if step % cfg.log_every == 0 or step == steps - 1:
            trace(f'{phase} step {step}: objective={loss:.6f} |g|={norm:.4g}')
    report.wall_clock[phase] = perf_counter() - start
    report.checksum = params.checksum()
    if steps:
        trace(f'{phase} done: {steps} steps in {report.wall_clock[phase]:.2f}s')
    return report


def pretrain_stack(stack: FlowStack, data: Tensor, cfg: TrainConfig, *,
                   rng: Optional[np.random.Generator] = None,
                   phase: str = 'pretrain') -> TrainReport:
    '''
    Fit a flow alone as a density model of `data` (N, D) for
    `cfg.pretrain_steps` steps. Parameters are updated in place.
    '''
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise EmptyDatasetError(phase)
    if data.shape[1] != stack.dim:
        raise ShapeMismatchError((data.shape[0], stack.dim), data.shape, f'{phase} data')
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    return _run_phase(PretrainObjective(stack), lambda rows: data[rows],
                      data.shape[0], cfg.pretrain_steps, cfg, rng, phase)


def _flows_frozen(name: str) -> bool:
    return name.startswith('G.')


def train_temporal(model: TNVPModel, data: PairBatch|Any, cfg: TrainConfig, *,
                   rng: Optional[np.random.Generator] = None) -> TrainReport:
    '''
    The joint phase: minimize mean −log p(x_t | x_prev) over mini-batches
    of pairs for `cfg.joint_steps` steps, updating θ1, θ2 and θ3 (only θ3
    with `freeze_flows`).

    `data` is a `PairBatch` or anything with a `pairs()` method returning one.
    '''
    pairs = data.pairs() if hasattr(data, 'pairs') else PairBatch(*data)
    x_prev = np.asarray(pairs.x_prev, dtype=np.float64)
    x_t = np.asarray(pairs.x_t, dtype=np.float64)
    if x_prev.ndim != 2 or x_prev.shape[0] == 0:
        raise EmptyDatasetError('joint')
    if x_prev.shape[1] != model.dim or x_t.shape != x_prev.shape:
        raise ShapeMismatchError((x_prev.shape[0], model.dim), x_t.shape, 'training pairs')
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    return _run_phase(
        TemporalObjective(model),
        lambda rows: PairBatch(x_prev[rows], x_t[rows]),
        x_prev.shape[0], cfg.joint_steps, cfg, rng, 'joint',
        keep=_flows_frozen if cfg.freeze_flows else None,
    )


def run_schedule(model: TNVPModel, data: Any, cfg: TrainConfig) -> TrainReport:
    '''
    The two-step schedule selected by `cfg.phases`. One generator seeded
    with `cfg.seed` draws every mini-batch, F1's pretraining first, then
    F2's, then the joint phase.
    '''
    pairs = data.pairs() if hasattr(data, 'pairs') else PairBatch(*data)
    rng = np.random.default_rng(cfg.seed)
    report = TrainReport(cfg.seed)
    if cfg.phases in ('pretrain_only', 'both'):
        report.extend(pretrain_stack(model.F1, pairs.x_prev, cfg, rng=rng, phase='pretrain-F1'))
        report.extend(pretrain_stack(model.F2, pairs.x_t, cfg, rng=rng, phase='pretrain-F2'))
    if cfg.phases in ('joint_only', 'both'):
        report.extend(train_temporal(model, pairs, cfg, rng=rng))
    report.checksum = model.params.checksum()
    return report


def train_per_stage(spec: ModelSpec, data: Any, cfg: TrainConfig
                    ) -> list[tuple[int, TNVPModel, TrainReport]]:
    '''
    One model per stage transition i−1 → i, each built from `spec` and
    trained on that stage's pairs only. Stage i's model is seeded with
    `spec.seed + i` and trained with `cfg.seed + i`.
    '''
    out = []
    for i in range(1, data.stage_count):
        stage_data = data.stage(i)
        m = make_model(spec.dim, spec.n_units, spec.blocks, spec.width,
                       spec.mask_style, spec.structure,
                       seed=spec.seed + i, mask=spec.mask)
        stage_cfg = replace(cfg, seed=cfg.seed + i)
        print_if('TRAIN')(f'Training stage {i} on {len(stage_data)} pairs')
        out.append((i, m, run_schedule(m, stage_data, stage_cfg)))
    return out


class EvalMetrics(NamedTuple):
    '''
    Mean negative conditional log-likelihoods, for the true pairing and for
    the shuffled-pair control.
    '''
    paired_nll: float
    shuffled_nll: float
    pairs: int

    @property
    def margin(self) -> float:
        return self.shuffled_nll - self.paired_nll


def mean_nll(model: TNVPModel, x_t: Tensor, x_prev: Tensor) -> float:
    value = float(-np.mean(model.conditional_loglik(x_t, x_prev)))
    if not np.isfinite(value):
        raise NonFiniteError('mean negative log-likelihood')
    return value


def evaluate(model: TNVPModel, data: Any, seed: int = 0) -> EvalMetrics:
    '''
    Paired and shuffled-pair NLL of a `StageSequenceDataset`.
    '''
    if data.dim != model.dim:
        raise ShapeMismatchError((model.dim,), (data.dim,), 'model and dataset dimension')
    control = data.shuffled_pairs(seed)
    return EvalMetrics(
        mean_nll(model, data.x_t, data.x_prev),
        mean_nll(model, control.x_t, control.x_prev),
        len(data),
    )
