'''
Stage-sequence datasets: synthetic generators, the pair CSV format, and the
held-out split, shuffled-pair control and standardization used in evaluation.

Every generator follows a fixed set of subjects through `stages` stages.
Pairs link stage i−1 to stage i of the same subject, ordered by stage and
then by subject; no pair ever skips a stage.
'''

from collections.abc import Iterator, Sequence
from dataclasses import dataclass, replace
from io import StringIO
from pathlib import Path
from typing import IO, Optional
import csv

import numpy as np

from xontrib.tnvp.model import PairBatch
from xontrib.tnvp.tensor import check_finite
from xontrib.tnvp.type_aliases import DatasetKind, JsonObject, Tensor
from xontrib.tnvp.types import (
    DatasetFormatError, EmptyDatasetError, NonFiniteError,
    ShapeMismatchError, TnvpValueError,
)
from xontrib.tnvp.utils import check_seed, pairwise_stages, print_if

DATASET_KINDS: tuple[DatasetKind, ...] = (
    'gaussian-drift',
    'rotating-moons',
    'mixture-morph',
    'linear-transition',
)


@dataclass(frozen=True)
class Provenance:
    '''
    Where a dataset came from: a generator and seed, or a file.
    '''
    generator: Optional[str] = None
    seed: Optional[int] = None
    path: Optional[str] = None
    mean: Optional[tuple[float, ...]] = None
    std: Optional[tuple[float, ...]] = None
    derived: Optional[str] = None
    '''
    How this dataset was derived from its source (`split`, `shuffled`, ...).
    '''

    def to_json(self) -> JsonObject:
        out: JsonObject = {}
        for key in ('generator', 'seed', 'path', 'derived'):
            if (v := getattr(self, key)) is not None:
                out[key] = v
        if self.mean is not None and self.std is not None:
            out['standardize'] = {'mean': list(self.mean), 'std': list(self.std)}
        return out

    def __str__(self):
        if self.path is not None:
            base = self.path
        else:
            base = f'{self.generator}(seed={self.seed})'
        return f'{base} [{self.derived}]' if self.derived else base


class StageSequenceDataset:
    '''
    Paired observations (x_prev, x_t) across successive stages.

    `stage_index[k]` is the stage of `x_t[k]`; its `x_prev[k]` is from the
    stage before. Arrays are read-only.
    '''
    __x_prev: Tensor
    __x_t: Tensor
    __stage_index: np.ndarray

    def __init__(self, x_prev: Tensor, x_t: Tensor,
                 stage_index: Sequence[int]|np.ndarray,
                 stage_count: Optional[int] = None,
                 provenance: Provenance = Provenance()):
        x_prev = np.array(x_prev, dtype=np.float64)
        x_t = np.array(x_t, dtype=np.float64)
        stages = np.array(stage_index, dtype=np.int64).reshape(-1)
        if x_prev.ndim != 2:
            raise TnvpValueError(f'x_prev must be an (N, D) array, got shape {x_prev.shape}')
        if x_t.shape != x_prev.shape:
            raise ShapeMismatchError(x_prev.shape, x_t.shape, 'x_prev and x_t')
        if stages.shape != (x_prev.shape[0],):
            raise ShapeMismatchError((x_prev.shape[0],), stages.shape, 'stage_index')
        if x_prev.shape[0] == 0:
            raise EmptyDatasetError(str(provenance) if provenance != Provenance() else None)
        check_finite(x_prev, 'x_prev')
        check_finite(x_t, 'x_t')
        if stage_count is None:
            stage_count = int(stages.max()) + 1
        if np.any(stages < 1) or np.any(stages > stage_count - 1):
            raise TnvpValueError(
                f'Stage indices must lie in [1, {stage_count - 1}]: '
                f'found {int(stages.min())}..{int(stages.max())}'
            )
        for arr in (x_prev, x_t, stages):
            arr.setflags(write=False)
        self.__x_prev = x_prev
        self.__x_t = x_t
        self.__stage_index = stages
        self.stage_count = stage_count
        self.provenance = provenance

    @property
    def dim(self) -> int:
        return self.__x_prev.shape[1]

    @property
    def x_prev(self) -> Tensor:
        return self.__x_prev

    @property
    def x_t(self) -> Tensor:
        return self.__x_t

    @property
    def stage_index(self) -> np.ndarray:
        return self.__stage_index

    def __len__(self) -> int:
        return self.__x_prev.shape[0]

    def __iter__(self) -> Iterator[tuple[Tensor, Tensor, int]]:
        for k in range(len(self)):
            yield self.__x_prev[k], self.__x_t[k], int(self.__stage_index[k])

    def pairs(self) -> PairBatch:
        return PairBatch(self.__x_prev, self.__x_t)

    def _subset(self, rows: np.ndarray, derived: str) -> 'StageSequenceDataset':
        return StageSequenceDataset(
            self.__x_prev[rows], self.__x_t[rows], self.__stage_index[rows],
            self.stage_count, replace(self.provenance, derived=derived),
        )

    def stage(self, i: int) -> 'StageSequenceDataset':
        '''
        The pairs linking stage i−1 to stage i.
        '''
        rows = np.flatnonzero(self.__stage_index == i)
        if rows.size == 0:
            raise EmptyDatasetError(f'stage {i} of {self.provenance}')
        return self._subset(rows, f'stage {i}')

    def split(self, holdout: float, seed: int = 0
              ) -> tuple['StageSequenceDataset', 'StageSequenceDataset']:
        '''
        A seeded (train, held-out) partition. The held-out part receives
        round(holdout·N) pairs, at least one, and the training part keeps at
        least one. Both keep their original row order.
        '''
        if not 0.0 < holdout < 1.0:
            raise TnvpValueError(f'Holdout fraction must be in (0, 1): {holdout}')
        n = len(self)
        if n < 2:
            raise TnvpValueError(f'Cannot split {n} pair(s)')
        n_held = min(max(1, round(holdout * n)), n - 1)
        order = np.random.default_rng(check_seed(seed)).permutation(n)
        held = np.sort(order[:n_held])
        train = np.sort(order[n_held:])
        return self._subset(train, 'train'), self._subset(held, 'held-out')

    def shuffled_pairs(self, seed: int = 0) -> 'StageSequenceDataset':
        '''
        The shuffled-pair control: within each stage, every `x_prev` is
        moved to a different pair (a seeded derangement), so each `x_t` is
        paired with an unrelated subject from the right stage.
        '''
        rng = np.random.default_rng(check_seed(seed))
        source = np.arange(len(self))
        for i in np.unique(self.__stage_index):
            rows = np.flatnonzero(self.__stage_index == i)
            if rows.size < 2:
                raise TnvpValueError(f'Stage {i} has too few pairs to shuffle')
            source[rows] = rows[_derangement(rows.size, rng)]
        return StageSequenceDataset(
            self.__x_prev[source], self.__x_t, self.__stage_index,
            self.stage_count, replace(self.provenance, derived='shuffled'),
        )

    def standardize(self) -> 'StageSequenceDataset':
        '''
        Subtract the per-dimension mean and divide by the standard deviation,
        pooled over every observation in the dataset. The statistics are
        recorded in the provenance.
        '''
        pooled = np.concatenate([self.__x_prev, self.__x_t])
        mean = pooled.mean(axis=0)
        std = pooled.std(axis=0)
        if np.any(std == 0.0):
            raise NonFiniteError('standardize (a dimension has zero variance)')
        prov = replace(self.provenance,
                       mean=tuple(float(v) for v in mean),
                       std=tuple(float(v) for v in std))
        return StageSequenceDataset(
            (self.__x_prev - mean) / std, (self.__x_t - mean) / std,
            self.__stage_index, self.stage_count, prov,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StageSequenceDataset):
            return NotImplemented
        return (
            self.stage_count == other.stage_count
            and np.array_equal(self.__stage_index, other.__stage_index)
            and np.array_equal(self.__x_prev, other.__x_prev)
            and np.array_equal(self.__x_t, other.__x_t)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        return (f'StageSequenceDataset(dim={self.dim}, stages={self.stage_count}, '
                f'pairs={len(self)}, source={self.provenance})')


def _derangement(n: int, rng: np.random.Generator) -> np.ndarray:
    '''
    A permutation of range(n), n ≥ 2, with no fixed point: a random cyclic order.
    '''
    cycle = rng.permutation(n)
    out = np.empty(n, dtype=np.int64)
    out[cycle] = np.roll(cycle, -1)
    return out


# Generators

def linear_transition_matrix(dim: int, seed: int) -> Tensor:
    '''
    The default A for `linear-transition` data: 0.9 times a seeded random
    orthogonal matrix, so the sequence neither explodes nor collapses.
    '''
    rng = np.random.default_rng([seed, 0x7A])
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
    return 0.9 * q * np.sign(np.diag(r))


def _rotate(points: Tensor, angle: float) -> Tensor:
    out = points.copy()
    c, s = np.cos(angle), np.sin(angle)
    x, y = points[:, 0], points[:, 1]
    out[:, 0] = c * x - s * y
    out[:, 1] = s * x + c * y
    return out


def _trajectories(kind: DatasetKind, dim: int, stages: int, n: int,
                  rng: np.random.Generator,
                  transition: Optional[Tensor]) -> list[Tensor]:
    match kind:
        case 'gaussian-drift':
            shift = np.zeros(dim)
            shift[0] = 1.0
            x = rng.normal(size=(n, dim))
            out = [x]
            for _ in range(1, stages):
                x = x + shift + 0.25 * rng.normal(size=(n, dim))
                out.append(x)
            return out
        case 'rotating-moons':
            t = rng.uniform(0.0, np.pi, size=n)
            upper = rng.integers(0, 2, size=n).astype(bool)
            base = np.zeros((n, dim))
            base[:, 0] = np.where(upper, np.cos(t), 1.0 - np.cos(t)) - 0.5
            base[:, 1] = np.where(upper, np.sin(t), 0.5 - np.sin(t)) - 0.25
            base[:, :2] += 0.1 * rng.normal(size=(n, 2))
            if dim > 2:
                base[:, 2:] = 0.1 * rng.normal(size=(n, dim - 2))
            return [
                _rotate(base, s * np.pi / 8) + 0.05 * rng.normal(size=(n, dim))
                for s in range(stages)
            ]
        case 'mixture-morph':
            k = 3
            component = rng.integers(0, k, size=n)
            angles = 2.0 * np.pi * np.arange(k) / k
            centers = np.zeros((k, dim))
            centers[:, 0] = 2.0 * np.cos(angles)
            centers[:, 1] = 2.0 * np.sin(angles)
            offset = 0.3 * rng.normal(size=(n, dim))
            out = []
            for s in range(stages):
                moved = _rotate(centers, s * np.pi / 6)
                moved[:, 0] += 0.5 * s
                out.append(moved[component] + offset + 0.1 * rng.normal(size=(n, dim)))
            return out
        case 'linear-transition':
            a = transition
            assert a is not None
            x = rng.normal(size=(n, dim))
            out = [x]
            for _ in range(1, stages):
                x = x @ a.T + rng.normal(size=(n, dim))
                out.append(x)
            return out
        case _:
            raise TnvpValueError(f'Unknown dataset kind: {kind!r}')


def generate_drift_dataset(kind: DatasetKind,
                           dim: int,
                           stages: int,
                           n_per_stage: int,
                           seed: int = 0,
                           *,
                           transition: Optional[Tensor] = None) -> StageSequenceDataset:
    '''
    A synthetic stage-sequence dataset of `n_per_stage` subjects followed
    through `stages` stages.

    PARAMETERS
    ----------
    kind: DatasetKind
        `gaussian-drift`: each stage shifts by [1, 0, ...] plus N(0, 0.25²) noise.
        `rotating-moons`: a two-moons cloud rotated by π/8 per stage.
        `mixture-morph`: a three-component mixture whose centres rotate and
        drift; each subject keeps its component.
        `linear-transition`: x_t = A·x_prev + ε, ε ∼ N(0, I).
    dim: int
        Observation dimension; `rotating-moons` and `mixture-morph` need ≥ 2.
    stages, n_per_stage: int
        Sizes; the result has n_per_stage·(stages−1) pairs.
    seed: int
        The only source of randomness.
    transition: Tensor, optional
        A for `linear-transition`; defaults to `linear_transition_matrix(dim, seed)`.
    '''
    if kind not in DATASET_KINDS:
        raise TnvpValueError(f'Unknown dataset kind: {kind!r}')
    check_seed(seed)
    if stages < 2:
        raise TnvpValueError(f'A stage sequence needs at least 2 stages, got {stages}')
    if n_per_stage < 1:
        raise TnvpValueError(f'n_per_stage must be at least 1, got {n_per_stage}')
    if dim < 1 or (dim < 2 and kind in ('rotating-moons', 'mixture-morph')):
        raise TnvpValueError(f'Invalid dimension {dim} for {kind}')
    if kind == 'linear-transition':
        if transition is None:
            transition = linear_transition_matrix(dim, seed)
        transition = np.asarray(transition, dtype=np.float64)
        if transition.shape != (dim, dim):
            raise ShapeMismatchError((dim, dim), transition.shape, 'transition matrix')
    elif transition is not None:
        raise TnvpValueError('A transition matrix only applies to linear-transition data')
    rng = np.random.default_rng(seed)
    xs = _trajectories(kind, dim, stages, n_per_stage, rng, transition)
    x_prev = np.concatenate([xs[a] for a, _ in pairwise_stages(stages)])
    x_t = np.concatenate([xs[b] for _, b in pairwise_stages(stages)])
    stage_index = np.repeat(np.arange(1, stages), n_per_stage)
    print_if('DATA')(f'Generated {kind} dim={dim} stages={stages} '
                     f'n={n_per_stage} seed={seed}')
    return StageSequenceDataset(x_prev, x_t, stage_index, stages,
                                Provenance(generator=kind, seed=seed))


# CSV

def _header(dim: int) -> list[str]:
    return (['stage_index']
            + [f'x_prev_{j}' for j in range(dim)]
            + [f'x_t_{j}' for j in range(dim)])


def save_dataset(ds: StageSequenceDataset, path: Path|str|IO[str]):
    '''
    Write one pair per row: the stage index, then `x_prev`, then `x_t`,
    floats with 17 significant digits.
    '''
    if isinstance(path, (str, Path)):
        with open(path, 'w', newline='') as f:
            save_dataset(ds, f)
        print_if('DATA')(f'Saved {len(ds)} pairs to {path}')
        return
    writer = csv.writer(path, lineterminator='\n')
    writer.writerow(_header(ds.dim))
    for x_prev, x_t, stage in ds:
        writer.writerow([str(stage)]
                        + ['%.17g' % v for v in x_prev]
                        + ['%.17g' % v for v in x_t])


def load_dataset(path: Path|str|IO[str]) -> StageSequenceDataset:
    '''
    Read a dataset written by `save_dataset`.

    Raises `DatasetFormatError` with the 1-based line number of a bad row,
    and `EmptyDatasetError` for a file with no pairs.
    '''
    if isinstance(path, (str, Path)):
        with open(path, newline='') as f:
            ds = _read_dataset(f, Path(path))
        print_if('DATA')(f'Loaded {len(ds)} pairs from {path}')
        return ds
    return _read_dataset(path, None)


def _read_dataset(stream: IO[str], path: Optional[Path]) -> StageSequenceDataset:
    rows = csv.reader(stream)
    header = next(rows, None)
    if header is None or header == []:
        raise EmptyDatasetError(path)
    if (len(header) - 1) % 2 or len(header) < 3 or header != _header((len(header) - 1) // 2):
        raise DatasetFormatError(path, 1, f'Bad header: {",".join(header)}')
    dim = (len(header) - 1) // 2
    stages: list[int] = []
    values: list[list[float]] = []
    for line, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DatasetFormatError(path, line,
                                     f'Expected {len(header)} columns, found {len(row)}')
        try:
            stage = int(row[0])
        except ValueError:
            raise DatasetFormatError(path, line, f'Bad stage index: {row[0]!r}') from None
        if stage < 1:
            raise DatasetFormatError(path, line, f'Stage index must be ≥ 1: {stage}')
        try:
            vals = [float(v) for v in row[1:]]
        except ValueError as e:
            raise DatasetFormatError(path, line, str(e)) from None
        if not np.all(np.isfinite(vals)):
            raise DatasetFormatError(path, line, 'Non-finite value')
        stages.append(stage)
        values.append(vals)
    if not values:
        raise EmptyDatasetError(path)
    data = np.array(values)
    return StageSequenceDataset(
        data[:, :dim], data[:, dim:], stages, None,
        Provenance(path=str(path) if path is not None else None),
    )


def dataset_to_csv(ds: StageSequenceDataset) -> str:
    '''
    The CSV text `save_dataset` would write.
    '''
    out = StringIO()
    save_dataset(ds, out)
    return out.getvalue()
