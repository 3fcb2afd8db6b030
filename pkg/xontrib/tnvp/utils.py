'''
Miscellaneous utility functions.
'''

from collections.abc import Iterable, Mapping, MutableMapping
from typing import Any, TypeVar
import os
import sys

import numpy as np

from xontrib.tnvp.types import TnvpValueError

T = TypeVar('T')

_session_env: MutableMapping[str, Any]|None = None
'''
The xonsh session environment, while the xontrib is loaded.
'''


def set_session_env(env: MutableMapping[str, Any]|None):
    '''
    Route `print_if` lookups to a xonsh session environment (or back to
    `os.environ` when `None`).
    '''
    global _session_env
    _session_env = env


def environment() -> Mapping[str, Any]:
    '''
    The environment consulted for `TNVP_*` switches.
    '''
    if _session_env is not None:
        return _session_env
    return os.environ


def _enabled(value: Any) -> bool:
    match value:
        case None | False | '' | '0' | 'false' | 'False' | 'no':
            return False
        case _:
            return bool(value)


def env_flag(var: str) -> bool:
    '''
    Whether the `TNVP_` variable `var` is set to a true value.
    '''
    return _enabled(environment().get(var))


def print_if(var: str):
    '''
    Returns a print function that is enabled if the variable `var` is in the
    environment. If the variable does not begin with `TNVP_`, then it is
    prefixed with `TNVP_SHOW_`.

    The variable is checked once on each call of this function and used
    to determine if the returned print function should be enabled or
    disabled.

    Output (if any) is to `sys.stderr`. Messages will be prefixed with
    the `var` without `TNVP_SHOW_`.

    PARAMETERS
    ----------
    var: str
        The name of the environment variable to check.
    RETURNS
    -------
    print: function
        A function that prints if the variable is in the environment.
    '''
    if not var.startswith('TNVP_'):
        var = f'TNVP_SHOW_{var}'
    enable = env_flag(var)
    label = var.removeprefix('TNVP_SHOW_')
    def _print(*args):
        if enable:
            print(f'{label}:', *args, file=sys.stderr)
    return _print


def pairwise_stages(stages: int) -> Iterable[tuple[int, int]]:
    """
    The successive-stage links (i-1, i) for i in 1..stages-1.
    """
    for i in range(1, stages):
        yield i - 1, i


def chunked(items: list[T], size: int) -> Iterable[list[T]]:
    """
    Split a list into consecutive chunks of at most `size` items.
    """
    for start in range(0, len(items), size):
        yield items[start:start + size]


SEED_LIMIT = 1 << 32
'''
Seeds are stored as u32 in checkpoints and manifests.
'''


def check_seed(seed: Any, what: str = 'seed') -> int:
    '''
    `seed` as an int in [0, 2³²), or `TnvpValueError`.
    '''
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TnvpValueError(f'{what} must be an integer, got {seed!r}')
    if not 0 <= seed < SEED_LIMIT:
        raise TnvpValueError(f'{what} must be in [0, {SEED_LIMIT}), got {seed}')
    return int(seed)
