'''
The tnvp eval command.
'''

from pathlib import Path
from typing import IO

from xontrib.tnvp.checkpoint import load_checkpoint
from xontrib.tnvp.datasets import load_dataset
from xontrib.tnvp.decorators import command, tnvp
from xontrib.tnvp.outputs import write_metrics
from xontrib.tnvp.table import Column, TableView
from xontrib.tnvp.training import evaluate


@command(prefix=(tnvp, 'eval'))
def tnvp_eval(checkpoint: Path, dataset: Path, *,
              output: Path = Path('tnvp-out'),
              seed: int = 0,
              stdout: IO[str]) -> int:
    """
    Report paired and shuffled-pair NLL of a dataset under a checkpoint.
    """
    model = load_checkpoint(checkpoint)
    ds = load_dataset(dataset)
    m = evaluate(model, ds, seed)
    common = {'checkpoint': str(checkpoint), 'dataset': str(dataset),
              'pairs': m.pairs, 'seed': seed}
    records = [
        {'metric': 'paired_nll', 'value': m.paired_nll, **common},
        {'metric': 'shuffled_nll', 'value': m.shuffled_nll, **common},
    ]
    write_metrics(output, records)
    print(TableView(records, columns=[
        Column('metric'),
        Column('value', formatter=lambda v: f'{v:.6f}', align='>'),
        Column('pairs', align='>'),
    ]), file=stdout)
    print(f'margin {m.margin:.6f}', file=stdout)
    return 0
