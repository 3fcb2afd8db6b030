'''
Test parameter stores and gradient records.
'''

import numpy as np
from pytest import raises

from xontrib.tnvp.params import GradientRecord, ParameterStore
from xontrib.tnvp.types import ShapeMismatchError, TnvpValueError


def test_compose_shares_arrays():
    a = ParameterStore({'W': np.eye(2)})
    b = ParameterStore({'b': np.zeros(2)})
    both = ParameterStore.compose({'A': a, 'B': b})
    assert list(both) == ['A.W', 'B.b']
    both['A.W'] = np.ones((2, 2))
    assert a['W'].tolist() == [[1.0, 1.0], [1.0, 1.0]]


def test_setitem_shape_fixed():
    p = ParameterStore({'W': np.eye(2)})
    with raises(ShapeMismatchError):
        p['W'] = np.ones(3)


def test_duplicate_slot():
    p = ParameterStore({'W': np.eye(2)})
    with raises(TnvpValueError):
        p.add('W', np.eye(2))


def test_flatten_unflatten(rng):
    p = ParameterStore({'W': rng.normal(size=(2, 3)), 'b': rng.normal(size=3)})
    v = p.flatten()
    assert v.shape == (9,)
    p.unflatten(np.zeros(9))
    assert p.size == 9
    assert not p.flatten().any()
    p.unflatten(v)
    assert np.array_equal(p.flatten(), v)


def test_checksum_tracks_values():
    p = ParameterStore({'W': np.eye(2)})
    before = p.checksum()
    assert before == ParameterStore({'W': np.eye(2)}).checksum()
    p['W'] = 2 * np.eye(2)
    assert p.checksum() != before


def test_gradient_record_norm_and_mask():
    g = GradientRecord({'F1.x': np.array([3.0]), 'G.W': np.array([4.0])})
    assert g.norm() == 5.0
    kept = g.masked(lambda name: name.startswith('G.'))
    assert kept['F1.x'].tolist() == [0.0]
    assert kept['G.W'].tolist() == [4.0]
    assert g.scaled(0.5)['G.W'].tolist() == [2.0]


def test_check_aligned():
    p = ParameterStore({'W': np.eye(2), 'b': np.zeros(2)})
    p.zeros_like().check_aligned(p)
    with raises(TnvpValueError):
        GradientRecord({'W': np.zeros((2, 2))}).check_aligned(p)
    with raises(ShapeMismatchError):
        GradientRecord({'W': np.zeros(2), 'b': np.zeros(2)}).check_aligned(p)
