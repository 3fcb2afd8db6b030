'''
Test the command invoker, used for invoking commands based on their signatures.
'''
import io
from inspect import Signature
from pathlib import Path
from typing import IO, Optional

from pytest import raises

from xontrib.tnvp.decorators import tnvp
from xontrib.tnvp.invoker import (
    ArgumentError, CommandInvoker, Invoker, PrefixCommandInvoker,
)
import xontrib.tnvp.cmds  # noqa: F401


def test_invoker_bad_flags():
    with raises(ValueError):
        CommandInvoker(lambda: None,
            flags={'seed': ['cow']},  # type: ignore
        )


def test_invoker_canonical_flags():
    invoker = CommandInvoker(lambda: None, flags={'a': True, 'b': 0, 'c': 1,
                                                  'd': '+', 'e': '*', 'f': False,
                                                  'input': 'vector'})
    assert invoker.flags == {
        'a': (True, 'a'),
        'b': (0, 'b'),
        'c': (1, 'c'),
        'd': ('+', 'd'),
        'e': ('*', 'e'),
        'f': (False, 'f'),
        'input': (True, 'vector'),
    }


def test_invoker_empty():
    s = CommandInvoker(lambda: None).extract_keywords([])
    assert s == ([], [], {}, {})


def test_invoker_flag():
    invoker = CommandInvoker(lambda: None, flags={
        'quick': True,
        'input': (1, 'vector'),
    })
    s = invoker.extract_keywords(['--quick', '--input', '1,2'])
    assert s.args == []
    assert s.kwargs == {'quick': True, 'vector': '1,2'}
    assert s.extra_args == []
    assert s.extra_kwargs == {}


def test_invoker_short_flag():
    invoker = CommandInvoker(lambda: None, flags={
        'q': (True, 'quick'),
        's': (1, 'seed'),
    })
    s = invoker.extract_keywords(['-q', '-s', '7'])
    assert s.kwargs == {'quick': True, 'seed': '7'}


def test_invoker_arity_plus():
    invoker = CommandInvoker(lambda: None, flags={
        'models': ('+', 'models'),
        's': (1, 'seed'),
    })
    s = invoker.extract_keywords(['--models', 'a', 'b', 'c', '-s', '3'])
    assert s.args == []
    assert s.kwargs == {'models': ['a', 'b', 'c'], 'seed': '3'}
    with raises(ArgumentError):
        invoker.extract_keywords(['--models'])


def test_invoker_arity_star():
    invoker = CommandInvoker(lambda: None, flags={
        'models': ('*', 'models'),
        's': (1, 'seed'),
    })
    assert invoker.extract_keywords(['--models', 1, 2]).kwargs == {'models': [1, 2]}
    assert invoker.extract_keywords(['--models']).kwargs == {'models': []}


def test_invoker_positional_around_flags():
    invoker = CommandInvoker(lambda x: x, flags={
        's': (1, 'seed'),
    })
    s = invoker.extract_keywords([1, 2, '-s', 3, 4])
    assert s.args == [1, 2, 4]
    assert s.kwargs == {'seed': 3}


def test_invoker_negative_number_is_positional():
    s = CommandInvoker(lambda x: x).extract_keywords(['-1.5', '-3'])
    assert s.args == ['-1.5', '-3']
    assert s.extra_kwargs == {}


def test_invoker_negate_flag_undeclared_hyphen():
    s = CommandInvoker(lambda: None).extract_keywords(['--no-flag-1', '--flag-2'])
    assert s.kwargs == {}
    assert s.extra_kwargs == {'flag_1': False, 'flag_2': True}


def test_invoker_negate_flag_declared():
    invoker = CommandInvoker(lambda: None, flags={
        'quick': True, 'slow': False,
    })
    s = invoker.extract_keywords(['--no-quick', '--no-slow'])
    assert s.kwargs == {'quick': False, 'slow': True}


def test_invoker_keyword_equals():
    s = CommandInvoker(lambda: None).extract_keywords(['--seed=30'])
    assert s.extra_kwargs == {'seed': '30'}


def test_dash_dash_positional():
    s = CommandInvoker(lambda: None).extract_keywords(
        ['--flag', 'value', '--', 'value2', '--data'])
    assert s.args == ['value']
    assert s.extra_args == ['value2', '--data']
    assert s.extra_kwargs == {'flag': True}


def test_invoker_invoke():
    def f(a, b, c):
        return a, b, c
    invoker = CommandInvoker(f)
    assert invoker(1, 2, 3) == (1, 2, 3)
    assert invoker(a=1, b=2, c=3) == (1, 2, 3)


def test_simple_invoker_arity():
    def f(a, b, c):
        return a, b, c
    invoker = Invoker(f)
    with raises(ArgumentError):
        invoker(1, 2)
    with raises(ArgumentError):
        invoker(1, 2, 3, 4)
    with raises(ArgumentError):
        invoker(a=1, b=2, c=3, d=4)


def test_invoker_signature():
    def f(a, b, c):
        return a, b, c
    sig = Invoker(f).signature
    assert isinstance(sig, Signature)
    assert len(sig.parameters) == 3


def test_invoker_flags_from_signature():
    def f(a, b: bool, c, *, seed: int = 0, dataset_path: Optional[Path] = None):
        return a, b, c
    assert CommandInvoker(f).flags == {
        'b': (True, 'b'),
        'seed': (1, 'seed'),
        'dataset-path': (1, 'dataset_path'),
    }


def test_invoker_extra_positional():
    def f(a, b: bool, c, /, **kwargs):
        return a, b, c, kwargs
    invoker = CommandInvoker(f)
    assert invoker(1, True, 3, d=4) == (1, True, 3, {'d': 4})
    with raises(ArgumentError):
        invoker(1, True, 3, 4)


def test_invoker_extra_positional_accept():
    def f(a, b: bool, c, /, *args, e='no e'):
        return a, b, c, e, args
    invoker = CommandInvoker(f)
    assert invoker(1, True, 3, 4, '--e', 5) == (1, True, 3, 5, (4,))


def test_invoker_converts_annotated_types():
    def f(n: int, path: Path, *, rate: float = 0.1, seed: Optional[int] = None):
        return n, path, rate, seed
    invoker = CommandInvoker(f)
    assert invoker('3', 'out/a.tnvp', '--rate', '0.5', '--seed', '7') == (
        3, Path('out/a.tnvp'), 0.5, 7)
    assert invoker('3', 'x') == (3, Path('x'), 0.1, None)
    with raises(ArgumentError):
        invoker('three', 'x')
    with raises(ArgumentError):
        invoker('3', 'x', '--seed', 'many')


def test_invoker_var_positional_conversion():
    def f(*paths: Path, stages: Optional[int] = None):
        return paths, stages
    assert CommandInvoker(f)('a', 'b', '--stages', '2') == ((Path('a'), Path('b')), 2)


def test_invoker_unknown_option():
    def f(*, seed: int = 0):
        return seed
    invoker = CommandInvoker(f)
    with raises(ArgumentError):
        invoker('--colour')
    with raises(ArgumentError):
        invoker('--', 'x')


def test_invoker_injects_stdout():
    def f(name: str, *, stdout: IO[str]) -> int:
        print(f'hello {name}', file=stdout)
        return 0
    out = io.StringIO()
    assert CommandInvoker(f)('tnvp', stdout=out) == 0
    assert out.getvalue() == 'hello tnvp\n'


def test_invoker_repr():
    def f(a: int):
        return a
    assert repr(CommandInvoker(f, 'f')) == '<CommandInvoker(f)(...)>'
    assert CommandInvoker(f).name == 'f'


def _prefix() -> PrefixCommandInvoker:
    def add(a: int, b: int) -> int:
        '''
        Add two numbers.
        '''
        return a + b
    p = PrefixCommandInvoker(lambda: None, 'calc')
    p.add_subcommand('add', CommandInvoker(add))
    return p


def test_prefix_dispatch():
    assert _prefix()('add', '2', '3') == 5


def test_prefix_unknown_subcommand():
    with raises(ArgumentError):
        _prefix()('subtract', '2', '3')


def test_prefix_usage():
    out = io.StringIO()
    assert _prefix()(stdout=out) == 1
    assert _prefix()('--help', stdout=out) == 0
    lines = out.getvalue().splitlines()
    assert lines[0] == 'usage: calc <command> [arguments]'
    assert any(line.split() == ['add', 'Add', 'two', 'numbers.'] for line in lines)


def test_tnvp_subcommands():
    assert set(tnvp.subcommands) == {'train', 'eval', 'synthesize', 'selfcheck', 'generate'}
    assert tnvp.subcommands['synthesize'].flags['input'] == (1, 'vector')
    assert tnvp.subcommands['selfcheck'].flags['quick'] == (True, 'quick')
