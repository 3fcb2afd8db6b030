'''
Run configuration documents.

A run configuration has four sections, each optional:

```yaml
model:
  D: 2                  # defaults to data.dim
  n_units: 10
  blocks: 2
  width: 32
  mask_style: half      # or even-odd
  mask: null            # explicit 0/1 template for the first unit
  W_structure: full     # or diagonal
train:
  batch_size: 64
  learning_rate: 0.001
  clip: 5.0             # null disables clipping
  phases: both          # pretrain_only, joint_only
  seed: 0
  pretrain_steps: 200
  joint_steps: 500
  freeze_flows: false
  log_every: 50
  per_stage: false
data:
  kind: gaussian-drift  # rotating-moons, mixture-morph, linear-transition
  path: null            # a dataset CSV, used instead of a generator
  dim: 2
  stages: 3
  n_per_stage: 256
  seed: 0
  standardize: false
  holdout: 0.2
output:
  directory: tnvp-out
```

Documents are read with `yaml.safe_load`, so plain JSON is accepted as is.
Unknown keys are rejected with their dotted path; missing keys take the
defaults above.
'''

from collections.abc import Mapping
from dataclasses import dataclass, field, fields, asdict, replace
from pathlib import Path
from types import NoneType, UnionType
from typing import Any, Literal, Optional, Union, get_args, get_origin, get_type_hints

import yaml

from xontrib.tnvp.datasets import DATASET_KINDS
from xontrib.tnvp.model import ModelSpec
from xontrib.tnvp.training import TrainConfig
from xontrib.tnvp.type_aliases import DatasetKind, JsonObject, MaskStyle, TransitionStructure
from xontrib.tnvp.types import ConfigError, TnvpValueError
from xontrib.tnvp.utils import SEED_LIMIT, check_seed


@dataclass(frozen=True)
class ModelConfig:
    D: Optional[int] = None
    n_units: int = 10
    blocks: int = 2
    width: int = 32
    mask_style: MaskStyle = 'half'
    mask: Optional[list[float]] = None
    W_structure: TransitionStructure = 'full'

    def __post_init__(self):
        for key in ('n_units', 'width'):
            if getattr(self, key) < 1:
                raise ConfigError(f'model.{key}', f'must be positive, got {getattr(self, key)}')
        if self.blocks < 0:
            raise ConfigError('model.blocks', f'must be non-negative, got {self.blocks}')
        if self.D is not None and self.D < 2:
            raise ConfigError('model.D', f'must be at least 2, got {self.D}')
        if self.mask is not None:
            if any(v not in (0, 1) for v in self.mask):
                raise ConfigError('model.mask', 'entries must be 0 or 1')
            if not 0 < sum(self.mask) < len(self.mask):
                raise ConfigError('model.mask', 'must contain both 0 and 1')


@dataclass(frozen=True)
class DataConfig:
    kind: DatasetKind = 'gaussian-drift'
    path: Optional[str] = None
    dim: int = 2
    stages: int = 3
    n_per_stage: int = 256
    seed: int = 0
    standardize: bool = False
    holdout: float = 0.2

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ConfigError('data.kind', f'must be one of {", ".join(DATASET_KINDS)}')
        if self.dim < 1:
            raise ConfigError('data.dim', f'must be positive, got {self.dim}')
        if self.stages < 2:
            raise ConfigError('data.stages', f'must be at least 2, got {self.stages}')
        if self.n_per_stage < 1:
            raise ConfigError('data.n_per_stage', f'must be positive, got {self.n_per_stage}')
        if not 0.0 <= self.holdout < 1.0:
            raise ConfigError('data.holdout', f'must be in [0, 1), got {self.holdout}')
        try:
            check_seed(self.seed)
        except TnvpValueError as e:
            raise ConfigError('data.seed', e.message.removeprefix('seed ')) from None


@dataclass(frozen=True)
class OutputConfig:
    directory: str = 'tnvp-out'

    def __post_init__(self):
        if not self.directory:
            raise ConfigError('output.directory', 'must not be empty')


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        if self.data.path is None:
            if self.model.D is None:
                object.__setattr__(self, 'model', replace(self.model, D=self.data.dim))
            elif self.model.D != self.data.dim:
                raise ConfigError('model.D', f'{self.model.D} disagrees with data.dim {self.data.dim}')
        if (
            self.model.mask is not None
            and self.model.D is not None
            and len(self.model.mask) != self.model.D
        ):
            raise ConfigError('model.mask', f'must have {self.model.D} entries')
        if self.train.per_stage and self.data.path is None:
            last = self.train.seed + self.data.stages - 1
            if last >= SEED_LIMIT:
                raise ConfigError('train.seed', f'per-stage seeds run up to {last}, past {SEED_LIMIT - 1}')

    def model_spec(self, dim: Optional[int] = None) -> ModelSpec:
        '''
        The model hyperparameters, for `dim` (default: `model.D`). The model
        is seeded with `train.seed`.
        '''
        m = self.model
        if dim is None:
            dim = m.D
        elif m.D is not None and m.D != dim:
            raise ConfigError('model.D', f'{m.D} disagrees with the dataset dimension {dim}')
        if dim is None:
            raise ConfigError('model.D', 'unknown without a dataset')
        if m.mask is not None and len(m.mask) != dim:
            raise ConfigError('model.mask', f'must have {dim} entries')
        return ModelSpec(
            dim, m.n_units, m.blocks, m.width,
            m.mask_style, m.W_structure, self.train.seed,
            None if m.mask is None else tuple(float(v) for v in m.mask),
        )

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any]|None) -> 'RunConfig':
        doc = {} if doc is None else doc
        if not isinstance(doc, Mapping):
            raise ConfigError('', f'A configuration must be a mapping, not {type(doc).__name__}')
        sections = [f.name for f in fields(cls)]
        for key in doc:
            if key not in sections:
                raise ConfigError(str(key), 'unknown key')
        hints = get_type_hints(cls)
        return cls(**{
            name: _section(name, hints[name], doc[name])
            for name in sections if name in doc
        })

    @classmethod
    def load(cls, path: Path|str) -> 'RunConfig':
        '''
        Read a JSON or YAML configuration file.
        '''
        text = Path(path).read_text()
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError('', f'{path}: cannot parse: {e}') from None
        return cls.from_mapping(doc)

    def to_json(self) -> JsonObject:
        return {
            'model': asdict(self.model),
            'train': asdict(self.train),
            'data': asdict(self.data),
            'output': asdict(self.output),
        }


def _section(name: str, cls: type, value: Any) -> Any:
    if value is None:
        return cls()
    if not isinstance(value, Mapping):
        raise ConfigError(name, f'must be a mapping, not {type(value).__name__}')
    hints = get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    for key in value:
        if key not in known:
            raise ConfigError(f'{name}.{key}', 'unknown key')
    return cls(**{
        key: _check(f'{name}.{key}', hints[key], v)
        for key, v in value.items()
    })


def _describe(hint: Any) -> str:
    match get_origin(hint), get_args(hint):
        case (o, args) if o is Union or o is UnionType:
            return ' or '.join(_describe(a) for a in args)
        case (o, args) if o is Literal:
            return 'one of ' + ', '.join(repr(a) for a in args)
        case (o, (item,)) if o is list:
            return f'a list of {_describe(item)}'
        case _:
            return 'null' if hint is NoneType else getattr(hint, '__name__', str(hint))


def _check(key: str, hint: Any, value: Any) -> Any:
    '''
    Validate `value` against the field type `hint`, returning it unchanged
    (integers are accepted where floats are expected).
    '''
    origin, args = get_origin(hint), get_args(hint)
    ok: bool
    if origin is Union or origin is UnionType:
        for a in args:
            try:
                return _check(key, a, value)
            except ConfigError:
                continue
        ok = False
    elif origin is Literal:
        ok = value in args
    elif origin is list:
        if isinstance(value, list):
            return [_check(f'{key}[{i}]', args[0], v) for i, v in enumerate(value)]
        ok = False
    elif hint is NoneType:
        ok = value is None
    elif hint is bool:
        ok = isinstance(value, bool)
    elif hint is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif hint is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        if ok:
            value = float(value)
    elif hint is str:
        ok = isinstance(value, str)
    else:
        ok = isinstance(value, hint)
    if not ok:
        raise ConfigError(key, f'expected {_describe(hint)}, got {value!r}')
    return value
