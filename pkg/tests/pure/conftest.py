'''
Fixtures for pure tests.
'''

import numpy as np
import pytest

from xontrib.tnvp.diff import Differentiable
from xontrib.tnvp.model import PairBatch, TNVPModel, make_model
from xontrib.tnvp.params import GradientRecord, ParameterStore


@pytest.fixture(autouse=True, scope='package')
def lock_out_impure(test_lock):
    '''
    Lock out impure tests from running.
    '''
    with test_lock:
        yield


@pytest.fixture()
def small_model() -> TNVPModel:
    '''
    A freshly initialized D=2 model small enough to train in a test.
    '''
    return make_model(2, n_units=2, blocks=1, width=8, seed=3)


@pytest.fixture()
def pairs(rng) -> PairBatch:
    return PairBatch(rng.normal(size=(6, 2)), rng.normal(size=(6, 2)))


class Constant(Differentiable):
    '''
    A parameterless function R^D → R^D returning `value` for every input.
    '''
    def __init__(self, value):
        self.value = np.asarray(value, dtype=np.float64)
        self.in_shape = self.value.shape
        self.out_shape = self.value.shape
        self.__params = ParameterStore()

    @property
    def params(self) -> ParameterStore:
        return self.__params

    def forward(self, x, /):
        x = np.asarray(x, dtype=np.float64)
        return np.broadcast_to(self.value, x.shape).copy(), x.shape

    def backward(self, tape, grad_out, /) -> GradientRecord:
        return GradientRecord({}, np.zeros(tape))


@pytest.fixture()
def f_constant() -> type[Constant]:
    return Constant
