'''
Test the residual networks and the bounded scale.
'''

import threading

import numpy as np
from pytest import raises

from xontrib.tnvp.resnet import BoundedScale, ResidualNet, kink_margin
from xontrib.tnvp.diff import randomize
from xontrib.tnvp.types import TnvpValueError


def test_identity_init_outputs_zero(rng):
    net = ResidualNet(4, width=8, blocks=2, rng=rng)
    assert not net(rng.normal(size=(5, 4))).any()
    assert net(rng.normal(size=4)).shape == (4,)


def test_slot_layout():
    net = ResidualNet(3, width=5, blocks=2)
    assert list(net.params) == [
        'in.W', 'in.b',
        'block0.W1', 'block0.b1', 'block0.W2', 'block0.b2',
        'block1.W1', 'block1.b1', 'block1.W2', 'block1.b2',
        'out.W', 'out.b',
    ]
    assert net.params['in.W'].shape == (3, 5)
    assert net.params['out.W'].shape == (5, 3)


def test_no_blocks(rng):
    net = ResidualNet(2, width=4, blocks=0, rng=rng)
    randomize(net.params, rng)
    assert net(np.ones(2)).shape == (2,)


def test_invalid_sizes():
    with raises(TnvpValueError):
        ResidualNet(0)
    with raises(TnvpValueError):
        ResidualNet(2, width=0)
    with raises(TnvpValueError):
        ResidualNet(2, blocks=-1)


def test_same_seed_same_weights():
    a = ResidualNet(4, rng=np.random.default_rng(9))
    b = ResidualNet(4, rng=np.random.default_rng(9))
    assert a.params.checksum() == b.params.checksum()


def test_bounded_scale_stays_inside_bound(rng):
    net = ResidualNet(3, width=6, blocks=1, rng=rng)
    randomize(net.params, rng, 50.0)
    s = BoundedScale(net, 2.0)(rng.normal(size=(20, 3)))
    assert np.all(np.abs(s) <= 2.0)
    with raises(TnvpValueError):
        BoundedScale(net, 0.0)


def test_kink_margin(rng):
    net = ResidualNet(3, width=6, blocks=1, rng=rng)
    with kink_margin() as margin:
        assert margin() == float('inf')
        net(rng.normal(size=(4, 3)))
        first = margin()
    assert 0.0 <= first < float('inf')
    with kink_margin() as margin:
        pass
    assert margin() == float('inf')


def test_kink_margin_is_thread_local(rng):
    net = ResidualNet(3, width=4, blocks=1, rng=rng)
    x = rng.normal(size=3)
    with kink_margin() as margin:
        worker = threading.Thread(target=net, args=(x,))
        worker.start()
        worker.join()
        assert margin() == float('inf')
        net(x)
        assert margin() < float('inf')
