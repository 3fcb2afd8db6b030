'''
Test the tensor primitives.
'''

import numpy as np
from pytest import raises

from xontrib.tnvp.tensor import (
    as_tensor, batched, dense, elementwise, matvec, outer_sum, require_shape,
)
from xontrib.tnvp.types import NonFiniteError, ShapeMismatchError, TnvpValueError


def test_matvec():
    w = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert matvec(w, np.array([1.0, 1.0])).tolist() == [3.0, 7.0]


def test_matvec_identity_plus_bias():
    z = np.array([4.0, 8.0])
    assert (matvec(np.eye(2), z) + np.zeros(2)).tolist() == [4.0, 8.0]


def test_matvec_accumulates_left_to_right(rng):
    w, z = rng.normal(size=(40, 40)), rng.normal(size=40)
    expected = []
    for row in w:
        acc = 0.0
        for a, b in zip(row, z):
            acc += float(a) * float(b)
        expected.append(acc)
    assert matvec(w, z).tolist() == expected
    # 1e16 + 1.0 rounds back to 1e16 before the cancellation
    assert matvec(np.ones((3, 3)), np.array([1e16, 1.0, -1e16])).tolist() == [0.0] * 3


def test_matvec_shape_mismatch():
    with raises(ShapeMismatchError) as e:
        matvec(np.eye(2), np.ones(3))
    assert e.value.expected == (2,)
    assert e.value.actual == (3,)


def test_matvec_not_square():
    with raises(TnvpValueError):
        matvec(np.ones((2, 3)), np.ones(3))


def test_elementwise_exp_overflow():
    with raises(NonFiniteError) as e:
        elementwise('exp', np.array([1000.0]))
    assert e.value.operation == 'exp'


def test_elementwise_binary():
    a = np.array([1.0, 2.0])
    assert elementwise('add', a, 1.0).tolist() == [2.0, 3.0]
    assert elementwise('mul', a, a).tolist() == [1.0, 4.0]
    assert elementwise('neg', a).tolist() == [-1.0, -2.0]


def test_elementwise_arity():
    with raises(TnvpValueError):
        elementwise('add', np.ones(2))
    with raises(TnvpValueError):
        elementwise('exp', np.ones(2), 1.0)
    with raises(ShapeMismatchError):
        elementwise('sub', np.ones(2), np.ones(3))


def test_as_tensor_rejects_empty_and_nan():
    with raises(TnvpValueError):
        as_tensor(np.zeros((0, 2)))
    with raises(NonFiniteError):
        as_tensor([1.0, np.nan])
    assert as_tensor([1, 2]).dtype == np.float64


def test_require_shape():
    x = np.zeros((2, 3))
    assert require_shape(x, (2, 3)) is x
    with raises(ShapeMismatchError):
        require_shape(x, (3, 2))


def test_dense_and_outer_sum_agree_with_matmul(rng):
    x = rng.normal(size=(5, 3))
    w = rng.normal(size=(3, 4))
    g = rng.normal(size=(5, 4))
    np.testing.assert_allclose(dense(x, w), x @ w, rtol=1e-14)
    np.testing.assert_allclose(outer_sum(x, g), x.T @ g, rtol=1e-14)


def test_batched():
    b, single = batched(np.ones(3), 3)
    assert b.shape == (1, 3) and single
    b, single = batched(np.ones((4, 3)), 3)
    assert b.shape == (4, 3) and not single
    with raises(ShapeMismatchError):
        batched(np.ones((4, 2)), 3)
    with raises(ShapeMismatchError):
        batched(np.ones((1, 1, 3)), 3)
