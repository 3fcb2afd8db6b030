'''
Test the reverse-mode contract and the finite-difference oracles.
'''

import zlib

import numpy as np
import pytest
from pytest import approx, raises

import xontrib.tnvp  # noqa: F401  registers every probe
from xontrib.tnvp.checks import GRADIENT_TOL, smooth_probe
from xontrib.tnvp.diff import (
    Differentiable, check_probe, compare_gradients, differentiable,
    eval_with_gradients, finite_diff_gradient, numerical_jacobian, registered_probes,
)
from xontrib.tnvp.params import GradientRecord, ParameterStore
from xontrib.tnvp.types import TnvpValueError


class SumOfSquares(Differentiable):
    in_shape = (3,)
    out_shape = ()

    def __init__(self):
        self.__params = ParameterStore()

    @property
    def params(self):
        return self.__params

    def forward(self, x, /):
        x = np.asarray(x, dtype=np.float64)
        return float(np.sum(x * x)), x

    def backward(self, tape, grad_out, /):
        return GradientRecord({}, 2.0 * tape * grad_out)


def test_eval_with_gradients_quadratic():
    fn = SumOfSquares()
    y, rec = eval_with_gradients(fn, fn.params, [1.0, 2.0, 3.0])
    assert y == 14.0
    assert rec.input.tolist() == [2.0, 4.0, 6.0]


def test_eval_with_gradients_foreign_store():
    fn = SumOfSquares()
    with raises(TnvpValueError):
        eval_with_gradients(fn, ParameterStore({'x': np.zeros(1)}), [1.0, 2.0, 3.0])


def test_eval_with_gradients_bad_seed():
    fn = SumOfSquares()
    with raises(TnvpValueError):
        eval_with_gradients(fn, fn.params, [1.0, 2.0, 3.0], seed=np.ones(3))


def test_finite_diff_quadratic():
    p = ParameterStore({'x': np.array([3.0])})
    g = finite_diff_gradient(lambda q: float(q['x'][0] ** 2), p)
    assert g['x'][0] == approx(6.0, abs=1e-9)
    assert p['x'][0] == 3.0


def test_finite_diff_linear(rng):
    p = ParameterStore({'x': rng.normal(size=(2, 3))})
    g = finite_diff_gradient(lambda q: float(np.sum(q['x'])), p)
    np.testing.assert_allclose(g['x'], np.ones((2, 3)), atol=1e-9)


def test_finite_diff_constant():
    p = ParameterStore({'x': np.array([1.0, -1.0])})
    assert not finite_diff_gradient(lambda q: 4.0, p)['x'].any()


def test_finite_diff_step_must_be_positive():
    p = ParameterStore({'x': np.zeros(1)})
    with raises(TnvpValueError):
        finite_diff_gradient(lambda q: 0.0, p, step=0.0)


def test_numerical_jacobian_linear():
    np.testing.assert_allclose(numerical_jacobian(lambda v: v, np.ones(3)), np.eye(3), atol=1e-9)
    np.testing.assert_allclose(numerical_jacobian(lambda v: 2 * v, np.ones(4)),
                               2 * np.eye(4), atol=1e-9)


def test_compare_gradients():
    a = GradientRecord({'w': np.array([1.0, 1e-12, 2.0])})
    n = GradientRecord({'w': np.array([1.0 + 1e-6, 0.0, 2.0])})
    result = compare_gradients(a, n)
    assert result.compared == 2
    assert result.max_rel_error == approx(1e-6, rel=1e-3)
    assert result.worst_slot == 'w'


def test_duplicate_probe_name():
    with raises(TnvpValueError):
        differentiable('mapping-unit')(lambda rng: None)


def test_registry_covers_components():
    assert {
        'residual-net', 'bounded-scale', 'mapping-unit', 'flow-stack',
        'transition-full', 'transition-diagonal',
        'temporal-objective', 'temporal-objective-diagonal',
    } <= set(registered_probes())


@pytest.mark.parametrize('name', sorted(registered_probes()))
def test_registered_probe_gradients(name):
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    probe = smooth_probe(registered_probes()[name], rng)
    result = check_probe(probe, rng, max_coords=10)
    assert result.compared > 0
    assert result.max_rel_error < GRADIENT_TOL, result
