'''
Test single mapping units.
'''

import threading

import numpy as np
from hypothesis import given, settings, strategies as st
from pytest import approx, raises

from xontrib.tnvp.coupling import MappingUnit, inject_fault
from xontrib.tnvp.diff import numerical_jacobian, randomize
from xontrib.tnvp.masks import BinaryMask
from xontrib.tnvp.types import CouplingOverflowError, ShapeMismatchError


def test_hand_example(f_constant):
    unit = MappingUnit(BinaryMask([1, 0]), f_constant([np.log(2.0)] * 2), f_constant([0.5] * 2))
    (y, log_det), _ = unit.forward(np.array([1.0, 2.0]))
    assert y.tolist() == approx([1.0, 4.5])
    assert log_det == approx(0.693147, abs=1e-6)
    assert unit.inverse(y).tolist() == approx([1.0, 2.0])


def test_identity_unit(f_constant, rng):
    unit = MappingUnit(BinaryMask([1, 0, 0]), f_constant(np.zeros(3)), f_constant(np.zeros(3)))
    x = rng.normal(size=3)
    (y, log_det), _ = unit.forward(x)
    assert np.array_equal(y, x)
    assert log_det == 0.0
    assert np.array_equal(unit.inverse(x), x)


def test_all_pass_mask(f_constant, rng):
    mask = BinaryMask([1, 1, 1], allow_degenerate=True)
    unit = MappingUnit(mask, f_constant([1.0, 2.0, 3.0]), f_constant([4.0, 5.0, 6.0]))
    x = rng.normal(size=3)
    assert np.array_equal(unit.forward(x)[0][0], x)


def test_batch_log_det(f_constant, rng):
    unit = MappingUnit(BinaryMask([0, 1]), f_constant([0.25, 9.0]), f_constant([0.0, 0.0]))
    (y, log_det), _ = unit.forward(rng.normal(size=(4, 2)))
    assert y.shape == (4, 2)
    assert log_det.tolist() == approx([0.25] * 4)


def test_overflow(f_constant):
    unit = MappingUnit(BinaryMask([1, 0]), f_constant([0.0, 60.0]), f_constant([0.0, 0.0]), index=3)
    with raises(CouplingOverflowError) as e:
        unit.forward(np.ones(2))
    assert e.value.unit == 3
    assert e.value.magnitude == 60.0


def test_bounded_default_never_overflows(rng):
    unit = MappingUnit.create(BinaryMask.half(4), width=6, blocks=1, rng=rng)
    randomize(unit.params, rng, 100.0)
    _, log_det = unit.forward(rng.normal(size=(10, 4)))[0]
    assert np.all(np.abs(log_det) <= 2 * 5.0)


def test_shape_checks(f_constant):
    with raises(ShapeMismatchError):
        MappingUnit(BinaryMask([1, 0]), f_constant(np.zeros(3)), f_constant(np.zeros(2)))
    unit = MappingUnit(BinaryMask([1, 0]), f_constant(np.zeros(2)), f_constant(np.zeros(2)))
    with raises(ShapeMismatchError):
        unit.forward(np.ones(3))


def test_injected_fault_breaks_inverse(f_constant):
    unit = MappingUnit(BinaryMask([1, 0]), f_constant([0.0, 1.0]), f_constant([0.0, 0.0]))
    y = unit.forward(np.array([1.0, 2.0]))[0][0]
    with inject_fault('inverse-sign'):
        assert unit.inverse(y)[1] != approx(2.0)
    assert unit.inverse(y)[1] == approx(2.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 12))
def test_pass_through_coordinates_unchanged(seed, dim):
    rng = np.random.default_rng(seed)
    mask = BinaryMask.even_odd(dim)
    unit = MappingUnit.create(mask, width=8, blocks=1, rng=rng)
    randomize(unit.params, rng, 0.5)
    x = rng.normal(size=(8, dim))
    (y, _), _ = unit.forward(x)
    passed = mask.b.astype(bool)
    assert np.array_equal(y[:, passed], x[:, passed])
    assert np.max(np.abs(unit.inverse(y) - x)) < 1e-10


def test_jacobian_diagonal_is_exp_scale(rng):
    mask = BinaryMask.half(4)
    unit = MappingUnit.create(mask, width=6, blocks=1, rng=rng)
    randomize(unit.params, rng, 0.4)
    x = rng.normal(size=4)
    s = unit.S.forward(x * mask.b)[0]
    jac = numerical_jacobian(lambda v: unit.forward(v)[0][0], x)
    free = mask.free.astype(bool)
    np.testing.assert_allclose(np.diag(jac)[free], np.exp(s[free]), rtol=1e-6)
    np.testing.assert_allclose(np.diag(jac)[~free], 1.0, atol=1e-9)


def test_injected_fault_is_thread_local(f_constant):
    unit = MappingUnit(BinaryMask([1, 0]), f_constant([0.0, 1.0]), f_constant([0.0, 0.0]))
    y = unit.forward(np.array([1.0, 2.0]))[0][0]
    seen = []
    with inject_fault('inverse-sign'):
        worker = threading.Thread(target=lambda: seen.append(unit.inverse(y)[1]))
        worker.start()
        worker.join()
        assert unit.inverse(y)[1] != approx(2.0)
    assert seen == [approx(2.0)]
