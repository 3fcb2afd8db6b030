'''
Files written by the commands: manifests, metrics and synthesized vectors.

Every writer takes the output directory and creates it if needed; nothing is
written outside it.
'''

from collections.abc import Iterable, Sequence
from pathlib import Path
import csv
import json

import numpy as np

from xontrib.tnvp.type_aliases import JsonObject, Tensor
from xontrib.tnvp.utils import print_if

CHECKPOINT_NAME = 'checkpoint.tnvp'
TRACE_NAME = 'trace.csv'
MANIFEST_NAME = 'manifest.json'
METRICS_NAME = 'metrics.ndjson'
SYNTHESIZED_NAME = 'synthesized.csv'

_version: str = ''


def tnvp_version() -> str:
    '''
    The installed version of xontrib-tnvp, in `git describe` form (`v0.1.0`).
    Source checkouts that were never installed report `v0+unknown`.
    '''
    global _version
    if _version:
        return _version
    from importlib.metadata import PackageNotFoundError, version
    try:
        _version = f'v{version("xontrib-tnvp")}'
    except PackageNotFoundError:
        _version = 'v0+unknown'
    return _version


def stage_checkpoint_name(stage: int) -> str:
    return f'checkpoint-stage-{stage}.tnvp'


def output_path(directory: Path|str, name: str) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def write_manifest(directory: Path|str, manifest: JsonObject) -> Path:
    path = output_path(directory, MANIFEST_NAME)
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + '\n', encoding='utf-8')
    print_if('DATA')(f'Wrote {path}')
    return path


def write_metrics(directory: Path|str, records: Iterable[JsonObject]) -> Path:
    '''
    Write one JSON record per line.
    '''
    path = output_path(directory, METRICS_NAME)
    with open(path, 'w', encoding='utf-8') as f:
        for r in records:
            f.write(json.dumps(r, sort_keys=True, separators=(',', ':')) + '\n')
    print_if('DATA')(f'Wrote {path}')
    return path


def read_metrics(path: Path|str) -> list[JsonObject]:
    with open(path, encoding='utf-8') as f:
        return [json.loads(line) for line in f if line.strip()]


def write_synthesized(directory: Path|str,
                      chains: Sequence[Sequence[Tensor]]) -> Path:
    '''
    Write synthesized chains, one row per input and stage:
    `input_index,stage,x_0,...` (stages count from 1).
    '''
    path = output_path(directory, SYNTHESIZED_NAME)
    dim = len(chains[0][0]) if chains and chains[0] else 0
    with open(path, 'w', newline='', encoding='utf-8') as f:
        w = csv.writer(f, lineterminator='\n')
        w.writerow(['input_index', 'stage', *(f'x_{j}' for j in range(dim))])
        for i, chain in enumerate(chains):
            for s, x in enumerate(chain, start=1):
                w.writerow([i, s, *('%.17g' % v for v in np.asarray(x))])
    print_if('DATA')(f'Wrote {len(chains)} chains to {path}')
    return path
