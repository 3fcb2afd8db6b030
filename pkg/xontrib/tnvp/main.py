"""
Temporal non-volume-preserving flows: train, evaluate and sample models of
how a distribution drifts from one stage to the next.

It provides the following commands, as the `tnvp` console script and, once
the xontrib is loaded, as the `tnvp` alias in xonsh:
- tnvp train: train a model from a run configuration.
- tnvp eval: paired and shuffled-pair NLL of a dataset.
- tnvp synthesize: push vectors through one or more trained stages.
- tnvp selfcheck: run the oracle suite.
- tnvp generate: write a synthetic stage-sequence dataset.

Loading the xontrib also places the main library entry points in the xonsh
context.
"""

from collections.abc import MutableMapping, Sequence
from typing import IO, Any, Optional
import sys
import traceback

from xonsh.built_ins import XonshSession
from xonsh.events import events

from xontrib.tnvp.checkpoint import load_checkpoint, save_checkpoint
from xontrib.tnvp.datasets import generate_drift_dataset, load_dataset, save_dataset
from xontrib.tnvp.decorators import _exports, _export, tnvp
from xontrib.tnvp.model import make_model, synthesize_chain
from xontrib.tnvp.training import evaluate, run_schedule
from xontrib.tnvp.types import NumericalError, TnvpError, TnvpIOError, TnvpValueError
from xontrib.tnvp.utils import env_flag, print_if, set_session_env
import xontrib.tnvp.cmds  # noqa: F401

for _fn in (make_model, run_schedule, evaluate, synthesize_chain,
           load_checkpoint, save_checkpoint,
           load_dataset, save_dataset, generate_drift_dataset):
    _export(_fn)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def exit_code(e: BaseException) -> int:
    '''
    The exit status for an exception escaping a command.
    '''
    match e:
        case TnvpValueError():
            return EXIT_INVALID
        case NumericalError():
            return EXIT_NUMERICAL
        case TnvpIOError() | OSError():
            return EXIT_IO
        case _:
            return EXIT_INVALID


def run(argv: Sequence[Any],
        stdout: Optional[IO[str]] = None,
        stderr: Optional[IO[str]] = None) -> int:
    '''
    Dispatch one `tnvp` command line, converting errors to an exit status
    and a one-line diagnostic. `TNVP_SHOW_TRACEBACK` adds the traceback.
    '''
    err = stderr or sys.stderr
    try:
        status = tnvp(*argv, stdout=stdout, stderr=stderr)
    except (TnvpError, OSError) as e:
        message = e.message if isinstance(e, TnvpError) else str(e)
        print(f'tnvp: {type(e).__name__}: {message}', file=err)
        if env_flag('TNVP_SHOW_TRACEBACK'):
            traceback.print_exc(file=err)
        return exit_code(e)
    return EXIT_OK if status is None else int(status)


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


def _tnvp_alias(args, stdin=None, stdout=None, stderr=None) -> int:
    return run(list(args), stdout, stderr)


events.doc('on_tnvp_load', 'Runs when the tnvp xontrib is loaded.')
events.doc('on_tnvp_unload', 'Runs when the tnvp xontrib is unloaded.')


def _load_xontrib_(xsh: XonshSession, **kwargs) -> dict:
    """
    this function will be called when loading/reloading the xontrib.

    Args:
        xsh: the current xonsh session instance, serves as the interface to
            manipulate the session.
        **kwargs: it is empty as of now. Kept for future proofing.
    Returns:
        dict: this will get loaded into the current execution context
    """
    env = xsh.env
    assert isinstance(env, MutableMapping),\
        f"XSH.env is not a MutableMapping: {env!r}"
    env["TNVP_TRACE_LOAD"] = env.get("TNVP_TRACE_LOAD", False)
    set_session_env(env)

    tnvp.register(xsh, _tnvp_alias)
    events.on_tnvp_load.fire(XSH=xsh)

    print_if('TNVP_TRACE_LOAD')("Loaded xontrib-tnvp")
    return _exports


def _unload_xontrib_(xsh: XonshSession, **kwargs) -> dict:
    """Clean up on unload."""
    env = xsh.env
    assert isinstance(env, MutableMapping),\
        f"XSH.env is not a MutableMapping: {env!r}"
    print_if('TNVP_TRACE_LOAD')("Unloading xontrib-tnvp")

    ctx = xsh.ctx
    if isinstance(ctx, MutableMapping):
        for name in _exports:
            ctx.pop(name, None)
    events.on_tnvp_unload.fire(XSH=xsh)
    set_session_env(None)
    return dict()
