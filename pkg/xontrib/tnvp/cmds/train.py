'''
The tnvp train command.
'''

from pathlib import Path
from typing import IO, Optional

from xontrib.tnvp.checkpoint import save_checkpoint
from xontrib.tnvp.config import RunConfig
from xontrib.tnvp.datasets import StageSequenceDataset, generate_drift_dataset, load_dataset
from xontrib.tnvp.decorators import command, tnvp
from xontrib.tnvp.model import make_model
from xontrib.tnvp.outputs import (
    CHECKPOINT_NAME, TRACE_NAME, output_path, stage_checkpoint_name,
    tnvp_version, write_manifest, write_metrics,
)
from xontrib.tnvp.table import Column, TableView
from xontrib.tnvp.training import TrainReport, evaluate, run_schedule, train_per_stage
from xontrib.tnvp.type_aliases import JsonObject
from xontrib.tnvp.types import TnvpValueError
from xontrib.tnvp.utils import print_if


def load_training_data(cfg: RunConfig) -> StageSequenceDataset:
    '''
    The dataset a run trains on: `data.path` if given, else the configured
    generator; standardized if requested.
    '''
    d = cfg.data
    if d.path is not None:
        ds = load_dataset(d.path)
    else:
        ds = generate_drift_dataset(d.kind, d.dim, d.stages, d.n_per_stage, d.seed)
    return ds.standardize() if d.standardize else ds


def _held_out_metrics(model, held: Optional[StageSequenceDataset], seed: int,
                      stage: Optional[int] = None) -> list[JsonObject]:
    if held is None:
        return []
    try:
        m = evaluate(model, held, seed)
    except TnvpValueError as e:
        print_if('TRAIN')(f'No held-out evaluation: {e.message}')
        return []
    extra: JsonObject = {'split': 'held-out', 'pairs': m.pairs}
    if stage is not None:
        extra['stage'] = stage
    return [
        {'metric': 'paired_nll', 'value': m.paired_nll, **extra},
        {'metric': 'shuffled_nll', 'value': m.shuffled_nll, **extra},
    ]


@command(prefix=(tnvp, 'train'))
def tnvp_train(config: Path, *, stdout: IO[str]) -> int:
    """
    Train a model from a run configuration (YAML or JSON).
    """
    cfg = RunConfig.load(config)
    ds = load_training_data(cfg)
    spec = cfg.model_spec(ds.dim)
    if cfg.data.holdout > 0:
        train, held = ds.split(cfg.data.holdout, seed=cfg.data.seed)
    else:
        train, held = ds, None
    out = Path(cfg.output.directory)

    report = TrainReport(cfg.train.seed)
    metrics: list[JsonObject] = []
    checkpoints: dict[str, str] = {}
    if cfg.train.per_stage:
        for i, model, stage_report in train_per_stage(spec, train, cfg.train):
            name = stage_checkpoint_name(i)
            save_checkpoint(model, output_path(out, name))
            checkpoints[name] = stage_report.checksum
            report.trace.extend(e._replace(phase=f'stage{i}/{e.phase}') for e in stage_report.trace)
            metrics.extend(_held_out_metrics(
                model, held.stage(i) if held is not None and i in held.stage_index else None,
                cfg.data.seed, i,
            ))
    else:
        model = make_model(spec.dim, spec.n_units, spec.blocks, spec.width,
                           spec.mask_style, spec.structure, seed=spec.seed, mask=spec.mask)
        report = run_schedule(model, train, cfg.train)
        save_checkpoint(model, output_path(out, CHECKPOINT_NAME))
        checkpoints[CHECKPOINT_NAME] = report.checksum
        metrics.extend(_held_out_metrics(model, held, cfg.data.seed))

    with open(output_path(out, TRACE_NAME), 'w', encoding='utf-8') as f:
        report.export_trace(f)
    write_metrics(out, metrics)
    write_manifest(out, {
        'config': cfg.to_json(),
        'seed': cfg.train.seed,
        'version': tnvp_version(),
        'dataset': {
            **ds.provenance.to_json(),
            'dim': ds.dim,
            'stages': ds.stage_count,
            'train_pairs': len(train),
            'held_out_pairs': 0 if held is None else len(held),
        },
        'checkpoints': checkpoints,
        'steps': report.steps,
    })

    objectives = report.trace
    print(f'Trained on {len(train)} pairs in {report.steps} steps; wrote {out}', file=stdout)
    if objectives:
        print(f'final objective {objectives[-1].objective:.6f} ({objectives[-1].phase})',
              file=stdout)
    if metrics:
        print(TableView(metrics, columns=[
            Column('metric'), Column('stage', missing='-'),
            Column('value', formatter=lambda v: f'{v:.6f}', align='>'),
            Column('pairs', align='>'),
        ]), file=stdout)
    return 0
