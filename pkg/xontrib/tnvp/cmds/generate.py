'''
The tnvp generate command.
'''

from pathlib import Path
from typing import IO

from xontrib.tnvp.datasets import generate_drift_dataset, save_dataset
from xontrib.tnvp.decorators import command, tnvp
from xontrib.tnvp.type_aliases import DatasetKind


@command(prefix=(tnvp, 'generate'))
def tnvp_generate(kind: DatasetKind, *,
                  dim: int = 2,
                  stages: int = 3,
                  n_per_stage: int = 256,
                  seed: int = 0,
                  output: Path,
                  stdout: IO[str]) -> int:
    """
    Write a synthetic stage-sequence dataset as CSV.
    """
    ds = generate_drift_dataset(kind, dim, stages, n_per_stage, seed)
    output.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, output)
    print(f'Wrote {len(ds)} pairs ({ds.provenance}) to {output}', file=stdout)
    return 0
