'''
Test the latent transition and the standard-normal density.
'''

import numpy as np
from pytest import approx, raises

from xontrib.tnvp.transition import (
    LOG_2PI, TemporalTransition, standard_normal_logpdf, transition_apply,
)
from xontrib.tnvp.types import TnvpValueError


def test_standard_normal_examples(rng):
    assert standard_normal_logpdf(np.zeros(2)) == approx(-1.837877, abs=1e-6)
    assert standard_normal_logpdf(np.array([1.0])) == approx(-1.418939, abs=1e-6)
    v = rng.normal(size=5)
    assert standard_normal_logpdf(v) == approx(
        sum(standard_normal_logpdf(np.array([c])) for c in v), abs=1e-12)
    batch = standard_normal_logpdf(rng.normal(size=(3, 2)))
    assert batch.shape == (3,)


def test_identity_transition(rng):
    g = TemporalTransition(3)
    z = rng.normal(size=3)
    assert np.array_equal(transition_apply(g, z), z)


def test_zero_weights_gives_bias():
    g = TemporalTransition(2, weights=np.zeros((2, 2)), bias=np.array([5.0, -1.0]))
    assert transition_apply(g, np.array([3.0, 7.0])).tolist() == [5.0, -1.0]


def test_hand_example():
    g = TemporalTransition(2, weights=np.array([[1.0, 2.0], [3.0, 4.0]]), bias=np.ones(2))
    assert transition_apply(g, np.ones(2)).tolist() == [4.0, 8.0]


def test_diagonal_structure(rng):
    g = TemporalTransition(3, 'diagonal', weights=np.array([0.5, 2.0, -1.0]))
    assert list(g.params) == ['w', 'b']
    assert np.array_equal(g.W, np.diag([0.5, 2.0, -1.0]))
    z = rng.normal(size=(4, 3))
    np.testing.assert_allclose(g.apply(z), z * [0.5, 2.0, -1.0], rtol=1e-15)


def test_batch_matches_single(rng):
    g = TemporalTransition(3, weights=rng.normal(size=(3, 3)), bias=rng.normal(size=3))
    z = rng.normal(size=(4, 3))
    np.testing.assert_allclose(g.apply(z), np.stack([g.apply(r) for r in z]), rtol=1e-14)


def test_invalid():
    with raises(TnvpValueError):
        TemporalTransition(0)
    with raises(TnvpValueError):
        TemporalTransition(2, 'banded')  # type: ignore[arg-type]
    with raises(TnvpValueError):
        TemporalTransition(2, weights=np.eye(3))
    with raises(TnvpValueError):
        TemporalTransition(2, bias=np.zeros(3))


def test_log_2pi():
    assert LOG_2PI == approx(1.8378770664093453)


def test_transition_is_affine(rng):
    for g in (TemporalTransition(3, weights=rng.normal(size=(3, 3)), bias=rng.normal(size=3)),
              TemporalTransition(3, 'diagonal', weights=rng.normal(size=3), bias=rng.normal(size=3))):
        z1, z2 = rng.normal(size=3), rng.normal(size=3)
        np.testing.assert_allclose(g.apply(z1) - g.apply(z2), g.W @ (z1 - z2), atol=1e-12)
