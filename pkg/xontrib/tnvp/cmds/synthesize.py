'''
The tnvp synthesize command.
'''

from pathlib import Path
from typing import IO, Optional

import numpy as np

from xontrib.tnvp.checkpoint import load_checkpoint
from xontrib.tnvp.datasets import load_dataset
from xontrib.tnvp.decorators import command, tnvp
from xontrib.tnvp.model import synthesize_chain
from xontrib.tnvp.outputs import write_synthesized
from xontrib.tnvp.type_aliases import NoiseSpec
from xontrib.tnvp.types import ArgumentError
from xontrib.tnvp.utils import check_seed


def parse_noise(text: str) -> NoiseSpec:
    '''
    `zero` or `seed:N`.
    '''
    if text == 'zero':
        return 'zero'
    kind, _, value = text.partition(':')
    if kind == 'seed':
        try:
            return check_seed(int(value), 'noise seed')
        except ValueError:
            pass
    raise ArgumentError(f'Invalid --noise {text!r}: expected zero or seed:N')


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(',')])
    except ValueError:
        raise ArgumentError(f'Invalid --input {text!r}: expected comma-separated numbers') from None


@command(prefix=(tnvp, 'synthesize'), flags={'input': (1, 'vector')})
def tnvp_synthesize(*checkpoints: Path,
                    vector: Optional[str] = None,
                    dataset: Optional[Path] = None,
                    noise: str = 'zero',
                    stages: Optional[int] = None,
                    output: Path = Path('tnvp-out'),
                    stdout: IO[str]) -> int:
    """
    Synthesize next-stage vectors by chaining checkpoints.

    With one checkpoint, `--stages K` applies it K times. With several, they
    are applied in order; `--stages K` uses the first K, repeating the last
    if K exceeds their number.
    """
    if not checkpoints:
        raise ArgumentError('synthesize: at least one checkpoint is required')
    if (vector is None) == (dataset is None):
        raise ArgumentError('synthesize: give exactly one of --input or --dataset')
    source = parse_noise(noise)
    k = len(checkpoints) if stages is None else stages
    if k < 1:
        raise ArgumentError(f'synthesize: --stages must be positive, got {k}')
    loaded = [load_checkpoint(p) for p in checkpoints]
    models = [loaded[min(i, len(loaded) - 1)] for i in range(k)]

    if vector is not None:
        inputs = [parse_vector(vector)]
    else:
        assert dataset is not None
        inputs = list(load_dataset(dataset).x_prev)
    rng = None if source == 'zero' else np.random.default_rng(source)
    chains = [synthesize_chain(models, x, 'zero' if rng is None else rng) for x in inputs]
    path = write_synthesized(output, chains)
    print(f'Synthesized {k} stage(s) for {len(inputs)} input(s); wrote {path}', file=stdout)
    return 0
