'''
Test the self-check suite: the quick checks pass, a corrupted inverse is
caught, and the report reads correctly.
'''

import io

import pytest
from pytest import raises

from xontrib.tnvp.checks import (
    CheckResult, check_names, oracle, report, results_table, run_checks,
)
from xontrib.tnvp.coupling import inject_fault
from xontrib.tnvp.types import TnvpValueError


def test_registered_checks():
    assert check_names() == [
        'round-trip', 'log-det', 'gradients', 'probes', 'density',
        'latent-density', 'learning-signal', 'defaults', 'determinism',
    ]


@pytest.mark.parametrize('name', [
    'round-trip', 'log-det', 'gradients', 'probes',
    'latent-density', 'defaults', 'determinism',
])
def test_quick_check_passes(name):
    (result,) = run_checks(quick=True, names=[name])
    assert result.passed, result.detail


def test_learning_signal_skipped_when_quick():
    (result,) = run_checks(quick=True, names=['learning-signal'])
    assert result.passed
    assert 'skipped' in result.detail


@pytest.mark.slow
def test_density_normalizes():
    (result,) = run_checks(quick=True, names=['density'])
    assert result.passed, result.detail


def test_corrupted_inverse_fails():
    with inject_fault('inverse-sign'):
        (result,) = run_checks(quick=True, names=['round-trip'])
    assert not result.passed
    (result,) = run_checks(quick=True, names=['round-trip'])
    assert result.passed


def test_unknown_check():
    with raises(TnvpValueError):
        run_checks(names=['telepathy'])


def test_duplicate_oracle():
    with raises(TnvpValueError):
        oracle('round-trip')(lambda quick: (True, ''))


def test_report_all_passed():
    out = io.StringIO()
    ok = report([CheckResult('a', True, 'fine', 0.25), CheckResult('b', True, '', 1.0)], out)
    assert ok
    text = out.getvalue()
    assert 'PASS' in text
    assert '\x1b[' not in text
    assert text.splitlines()[-1] == 'All 2 checks passed.'


def test_report_failures():
    out = io.StringIO()
    ok = report([CheckResult('a', True, '', 0.0), CheckResult('b', False, 'bad', 0.0)], out)
    assert not ok
    assert out.getvalue().splitlines()[-1] == '1 of 2 checks failed: b'


def test_results_table_colors():
    table = results_table([CheckResult('a', False, 'x', 0.5)], color=True)
    lines = table.lines()
    assert lines[0].split() == ['check', 'result', 'time', 'detail']
    assert '\x1b[' in lines[1] and 'FAIL' in lines[1]
    assert '0.5s' in lines[1]
