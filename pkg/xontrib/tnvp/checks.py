'''
The self-check oracle suite behind `tnvp selfcheck`.

Each check is registered with `@oracle(name)` and returns `(passed, detail)`.
The checks verify the model mechanically: exact inversion, log-determinants
against numerical Jacobians, reverse-mode gradients against central
differences, normalization of the learned density, the latent Gaussian
densities against brute-force evaluation, the learning signal on synthetic
data, the default hyperparameters, determinism and checkpoint round trips.

`quick=True` shrinks every check so the suite runs in seconds; the
learning-signal check is skipped in quick mode.
'''

from collections.abc import Callable, Iterable
from io import BytesIO
from typing import IO, NamedTuple, Optional
import time

import numpy as np
from colorama import Fore, Style

from xontrib.tnvp.checkpoint import load_checkpoint, save_checkpoint
from xontrib.tnvp.config import RunConfig
from xontrib.tnvp.datasets import generate_drift_dataset, linear_transition_matrix
from xontrib.tnvp.diff import (
    Probe, ProbeFactory, check_probe, numerical_jacobian, randomize, registered_probes,
)
from xontrib.tnvp.flow import FlowStack, make_default_stack
from xontrib.tnvp.model import TNVPModel, make_model
from xontrib.tnvp.resnet import kink_margin
from xontrib.tnvp.table import Column, TableView
from xontrib.tnvp.training import TrainConfig, evaluate, run_schedule
from xontrib.tnvp.transition import LOG_2PI
from xontrib.tnvp.types import TnvpError, TnvpValueError
from xontrib.tnvp.utils import print_if

ROUND_TRIP_TOL = 1e-8
LOG_DET_TOL = 1e-5
TRIANGULAR_TOL = 1e-6
GRADIENT_TOL = 1e-4
DENSITY_TOL = 0.01
LATENT_TOL = 1e-10
TRANSITION_TOL = 0.1

KINK_MARGIN = 1e-4
'''
Smallest |pre-activation| allowed at a finite-difference evaluation point.
'''


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str
    seconds: float


OracleFn = Callable[[bool], tuple[bool, str]]

_oracles: dict[str, OracleFn] = {}


def oracle(name: str):
    '''
    Decorator registering a self-check under `name`, in definition order.
    '''
    def decorator(fn: OracleFn) -> OracleFn:
        if name in _oracles:
            raise TnvpValueError(f'Check already registered: {name}')
        _oracles[name] = fn
        return fn
    return decorator


def check_names() -> list[str]:
    return list(_oracles)


def smooth_probe(factory: ProbeFactory, rng: np.random.Generator,
                 attempts: int = 50) -> Probe:
    '''
    Draw probes from `factory` until one evaluates with every rectifier
    pre-activation at least `KINK_MARGIN` from zero.
    '''
    for _ in range(attempts):
        probe = factory(rng)
        with kink_margin() as margin:
            probe.fn.forward(probe.x)
        if margin() >= KINK_MARGIN:
            return probe
    raise TnvpError(f'No smooth probe in {attempts} draws')


def _smooth_point(fn: Callable[[np.ndarray], object], draw: Callable[[], np.ndarray],
                  attempts: int = 50) -> np.ndarray:
    for _ in range(attempts):
        x = draw()
        with kink_margin() as margin:
            fn(x)
        if margin() >= KINK_MARGIN:
            return x
    raise TnvpError(f'No smooth evaluation point in {attempts} draws')


def _random_stack(dim: int, n_units: int, rng: np.random.Generator, *,
                  blocks: int = 2, width: int = 32, scale: float = 0.1) -> FlowStack:
    style = 'half' if rng.integers(2) == 0 else 'even-odd'
    stack = make_default_stack(dim, n_units, blocks, width, style, rng=rng)
    randomize(stack.params, rng, scale)
    return stack


@oracle('round-trip')
def check_round_trip(quick: bool) -> tuple[bool, str]:
    rng = np.random.default_rng(101)
    dims = (2, 8) if quick else (2, 8, 16, 64)
    unit_counts = (1, 4) if quick else (1, 4, 10)
    samples = 200 if quick else 1000
    worst = 0.0
    for dim in dims:
        for n in unit_counts:
            stack = _random_stack(dim, n, rng)
            x = rng.normal(size=(samples, dim))
            z, _ = stack.forward(x)[0]
            back = stack.inverse(z)
            z2 = rng.normal(size=(samples, dim))
            forth, _ = stack.forward(stack.inverse(z2))[0]
            err = max(float(np.max(np.abs(back - x))), float(np.max(np.abs(forth - z2))))
            print_if('CHECKS')(f'round-trip D={dim} units={n}: {err:.3e}')
            worst = max(worst, err)
    return worst < ROUND_TRIP_TOL, f'max error {worst:.2e} (tol {ROUND_TRIP_TOL:g})'


@oracle('log-det')
def check_log_det(quick: bool) -> tuple[bool, str]:
    rng = np.random.default_rng(202)
    cases = 20 if quick else 120
    worst = 0.0
    for _ in range(cases):
        dim = int(rng.integers(2, 9))
        stack = _random_stack(dim, int(rng.integers(1, 5)), rng, blocks=1, width=8, scale=0.3)
        def fwd(v: np.ndarray) -> np.ndarray:
            return stack.forward(v)[0][0]
        x = _smooth_point(fwd, lambda: rng.normal(size=dim))
        analytic = float(stack.forward(x)[0][1])
        sign, numeric = np.linalg.slogdet(numerical_jacobian(fwd, x))
        if sign == 0:
            return False, f'singular numerical Jacobian at D={dim}'
        worst = max(worst, abs(analytic - numeric) / max(1.0, abs(numeric)))

    # The pass-through outputs of one unit ignore the transformed inputs.
    tri = 0.0
    for dim in (4, 5, 8):
        stack = _random_stack(dim, 1, rng, blocks=1, width=8, scale=0.3)
        unit = stack.units[0]
        jac = numerical_jacobian(lambda v: unit.forward(v)[0][0], rng.normal(size=dim))
        passed = unit.mask.b.astype(bool)
        tri = max(tri, float(np.max(np.abs(jac[np.ix_(passed, ~passed)]))))
    ok = worst < LOG_DET_TOL and tri < TRIANGULAR_TOL
    return ok, f'{cases} cases, max rel error {worst:.2e}; off-triangle {tri:.1e}'


@oracle('gradients')
def check_gradients(quick: bool) -> tuple[bool, str]:
    factory = registered_probes()['temporal-objective']
    seeds = 5 if quick else 50
    max_coords = 6 if quick else None
    worst = 0.0
    compared = 0
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        probe = smooth_probe(factory, rng)
        result = check_probe(probe, rng, max_coords=max_coords)
        compared += result.compared
        if result.max_rel_error > worst:
            worst = result.max_rel_error
            print_if('CHECKS')(f'gradients seed {seed}: {worst:.3e} in {result.worst_slot}')
    return (worst < GRADIENT_TOL,
            f'{seeds} seeds, {compared} coordinates, max rel error {worst:.2e}')


@oracle('probes')
def check_probes(quick: bool) -> tuple[bool, str]:
    rng = np.random.default_rng(303)
    failed = []
    worst = 0.0
    for name, factory in registered_probes().items():
        result = check_probe(smooth_probe(factory, rng), rng,
                             max_coords=4 if quick else 24)
        worst = max(worst, result.max_rel_error)
        if result.max_rel_error >= GRADIENT_TOL:
            failed.append(name)
    detail = f'{len(registered_probes())} probes, max rel error {worst:.2e}'
    if failed:
        detail += f'; failed: {", ".join(failed)}'
    return not failed, detail


def _briefly_trained(dim: int, quick: bool) -> TNVPModel:
    data = generate_drift_dataset('gaussian-drift', dim, 3, 200, seed=5)
    model = make_model(dim, n_units=4, blocks=1, width=16, seed=5)
    cfg = TrainConfig(learning_rate=5e-3, seed=5,
                      pretrain_steps=20 if quick else 100,
                      joint_steps=40 if quick else 200)
    run_schedule(model, data, cfg)
    return model


@oracle('density')
def check_density(quick: bool) -> tuple[bool, str]:
    model = _briefly_trained(2, quick)
    x_prev = np.array([0.5, -0.25])
    rng = np.random.default_rng(404)
    samples = model.synthesize_next(np.tile(x_prev, (1000 if quick else 4000, 1)), rng)
    centre = samples.mean(axis=0)
    half = 7.0 * samples.std(axis=0)
    n = 200 if quick else 400
    dx = 2 * half / n
    axes = [centre[j] - half[j] + (np.arange(n) + 0.5) * dx[j] for j in range(2)]
    g0, g1 = np.meshgrid(*axes, indexing='ij')
    grid = np.column_stack([g0.ravel(), g1.ravel()])
    ll = model.conditional_loglik(grid, np.tile(x_prev, (len(grid), 1)))
    mass = float(np.sum(np.exp(ll)) * dx[0] * dx[1])
    return abs(mass - 1.0) <= DENSITY_TOL, f'{n}x{n} grid mass {mass:.5f}'


def _gaussian_logpdf(v: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    r = v - mean
    _, logdet = np.linalg.slogdet(cov)
    return -0.5 * (v.size * LOG_2PI + logdet + float(r @ np.linalg.solve(cov, r)))


@oracle('latent-density')
def check_latent_density(quick: bool) -> tuple[bool, str]:
    rng = np.random.default_rng(505)
    worst = 0.0
    for structure in ('full', 'diagonal'):
        for dim in (2, 3, 5):
            model = make_model(dim, n_units=2, blocks=1, width=6, structure=structure,
                               seed=int(rng.integers(1 << 31)))
            randomize(model.params, rng, 0.4)
            W, b = model.G.W, model.G.b
            eye = np.eye(dim)
            joint_cov = np.block([[W @ W.T + eye, W], [W.T, eye]])
            joint_mean = np.concatenate([b, np.zeros(dim)])
            for _ in range(3 if quick else 10):
                z_t, z_prev = rng.normal(size=dim), rng.normal(size=dim)
                cond = _gaussian_logpdf(z_t, W @ z_prev + b, eye)
                joint = _gaussian_logpdf(np.concatenate([z_t, z_prev]), joint_mean, joint_cov)
                x_t, x_prev = rng.normal(size=dim), rng.normal(size=dim)
                worst = max(
                    worst,
                    abs(float(model.conditional_latent_logpdf(z_t, z_prev)) - cond),
                    abs(float(model.joint_latent_logpdf(z_t, z_prev)) - joint),
                    abs(float(model.conditional_loglik(x_t, x_prev))
                        - float(model.conditional_loglik_via_joint(x_t, x_prev))),
                )
    return worst < LATENT_TOL, f'max abs error {worst:.2e}'


@oracle('learning-signal')
def check_learning_signal(quick: bool) -> tuple[bool, str]:
    if quick:
        return True, 'skipped (quick)'
    A = linear_transition_matrix(2, 11)
    data = generate_drift_dataset('linear-transition', 2, 3, 2000, seed=11, transition=A)
    model = make_model(2, n_units=2, blocks=1, width=8, seed=11)
    run_schedule(model, data, TrainConfig(learning_rate=0.02, phases='joint_only',
                                          joint_steps=2000, freeze_flows=True, seed=11))
    gap = float(np.linalg.norm(model.G.W - A))

    mix = generate_drift_dataset('mixture-morph', 2, 3, 400, seed=3)
    train, held = mix.split(0.25, seed=3)
    mixed = make_model(2, n_units=4, blocks=1, width=16, seed=3)
    run_schedule(mixed, train, TrainConfig(learning_rate=5e-3, pretrain_steps=150,
                                           joint_steps=300, seed=3))
    metrics = evaluate(mixed, held, seed=3)
    ok = gap < TRANSITION_TOL and metrics.margin > 0
    return ok, f'‖W − A‖ {gap:.3f}; held-out margin {metrics.margin:.3f}'


@oracle('defaults')
def check_defaults(quick: bool) -> tuple[bool, str]:
    cfg = RunConfig()
    model = make_model(2)
    unit = model.F1.units[0]
    width = unit.T.params['in.W'].shape[1]
    seen = (cfg.model.n_units, cfg.model.blocks, cfg.model.width, cfg.train.batch_size,
            len(model.F1), len(model.F2), width)
    return seen == (10, 2, 32, 64, 10, 10, 32), f'units/blocks/width/batch {seen[:4]}'


@oracle('determinism')
def check_determinism(quick: bool) -> tuple[bool, str]:
    data = generate_drift_dataset('rotating-moons', 2, 3, 64, seed=7)
    cfg = TrainConfig(batch_size=16, learning_rate=1e-2, pretrain_steps=5, joint_steps=10, seed=7)
    blobs = []
    models = []
    for _ in range(2):
        m = make_model(2, n_units=3, blocks=1, width=8, seed=7)
        run_schedule(m, data, cfg)
        buf = BytesIO()
        save_checkpoint(m, buf)
        blobs.append(buf.getvalue())
        models.append(m)
    loaded = load_checkpoint(BytesIO(blobs[0]))
    same_eval = (
        np.array_equal(loaded.conditional_loglik(data.x_t, data.x_prev),
                       models[0].conditional_loglik(data.x_t, data.x_prev))
        and np.array_equal(loaded.synthesize_next(data.x_prev, 9),
                           models[0].synthesize_next(data.x_prev, 9))
    )
    ok = blobs[0] == blobs[1] and same_eval
    return ok, f'{len(blobs[0])}-byte checkpoints {"identical" if blobs[0] == blobs[1] else "differ"}'


def run_checks(quick: bool = False, names: Optional[Iterable[str]] = None) -> list[CheckResult]:
    '''
    Run the named checks (default: all). A check that raises a `TnvpError`
    fails with the error message as its detail.
    '''
    chosen = list(_oracles) if names is None else list(names)
    for n in chosen:
        if n not in _oracles:
            raise TnvpValueError(f'Unknown check: {n}')
    results = []
    for n in chosen:
        start = time.perf_counter()
        try:
            passed, detail = _oracles[n](quick)
        except TnvpError as e:
            passed, detail = False, f'{type(e).__name__}: {e.message}'
        elapsed = time.perf_counter() - start
        print_if('CHECKS')(f'{n}: {"pass" if passed else "FAIL"} ({elapsed:.1f}s) {detail}')
        results.append(CheckResult(n, passed, detail, elapsed))
    return results


def results_table(results: Iterable[CheckResult], color: bool = False) -> TableView:
    def mark(passed: bool) -> str:
        text = 'PASS' if passed else 'FAIL'
        if not color:
            return text
        return f'{Fore.GREEN if passed else Fore.RED}{text}{Style.RESET_ALL}'
    return TableView(
        (r._asdict() for r in results),
        columns=[
            Column('name', heading='check'),
            Column('passed', heading='result', formatter=mark),
            Column('seconds', heading='time', formatter=lambda s: f'{s:.1f}s', align='>'),
            Column('detail'),
        ],
    )


def report(results: list[CheckResult], out: IO[str]) -> bool:
    '''
    Print the results table and a summary; returns whether all passed.
    '''
    isatty = getattr(out, 'isatty', None)
    print(results_table(results, color=bool(isatty and isatty())), file=out)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f'{len(failed)} of {len(results)} checks failed: {", ".join(failed)}', file=out)
    else:
        print(f'All {len(results)} checks passed.', file=out)
    return not failed
