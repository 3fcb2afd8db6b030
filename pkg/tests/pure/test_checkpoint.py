'''
Test the binary checkpoint format.
'''

import io
import struct

import numpy as np
import pytest
from pytest import raises

from xontrib.tnvp.checkpoint import MAGIC, VERSION, load_checkpoint, save_checkpoint
from xontrib.tnvp.diff import randomize
from xontrib.tnvp.model import TNVPModel, make_model, parameter_layout
from xontrib.tnvp.types import (
    BadMagicError, CheckpointError, TnvpValueError, TruncatedCheckpointError,
    UnsupportedVersionError,
)


def _bytes(model) -> bytes:
    out = io.BytesIO()
    save_checkpoint(model, out)
    return out.getvalue()


@pytest.fixture()
def trained(rng):
    model = make_model(3, n_units=3, blocks=1, width=5, structure='diagonal', seed=8)
    randomize(model.params, rng, 0.4)
    return model


def test_header(trained):
    data = _bytes(trained)
    assert data[:8] == MAGIC
    fields = struct.unpack('<9I', data[8:44])
    assert fields == (VERSION, 3, 3, 1, 5, 0, 1, 8, len(trained.params))


def test_round_trip_is_exact(trained, rng):
    loaded = load_checkpoint(io.BytesIO(_bytes(trained)))
    assert loaded.spec == trained.spec
    assert loaded.params.checksum() == trained.params.checksum()
    x_t, x_prev = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    assert np.array_equal(loaded.conditional_loglik(x_t, x_prev),
                          trained.conditional_loglik(x_t, x_prev))
    assert _bytes(loaded) == _bytes(trained)


def test_template_mask_round_trip():
    model = make_model(3, n_units=2, blocks=1, width=4, mask=[0, 1, 1], seed=2)
    loaded = load_checkpoint(io.BytesIO(_bytes(model)))
    assert loaded.spec.mask == (0.0, 1.0, 1.0)
    assert loaded.F1.units[0].mask.b.tolist() == [0, 1, 1]


def test_file_round_trip(tmp_path, trained):
    path = tmp_path / 'model.tnvp'
    save_checkpoint(trained, path)
    assert load_checkpoint(path).params.checksum() == trained.params.checksum()


def test_bad_magic(trained):
    data = b'NOTACKPT' + _bytes(trained)[8:]
    with raises(BadMagicError):
        load_checkpoint(io.BytesIO(data))
    with raises(BadMagicError):
        load_checkpoint(io.BytesIO(b''))


def test_unsupported_version(trained):
    data = bytearray(_bytes(trained))
    data[8:12] = struct.pack('<I', VERSION + 1)
    with raises(UnsupportedVersionError) as e:
        load_checkpoint(io.BytesIO(bytes(data)))
    assert e.value.version == VERSION + 1


@pytest.mark.parametrize('cut', [4, 10, 30, 60, -1])
def test_truncated(trained, cut):
    data = _bytes(trained)
    with raises(TruncatedCheckpointError):
        load_checkpoint(io.BytesIO(data[:cut]))


def test_trailing_bytes(trained):
    with raises(CheckpointError):
        load_checkpoint(io.BytesIO(_bytes(trained) + b'\0'))


def test_unknown_codes(trained):
    data = bytearray(_bytes(trained))
    data[28:32] = struct.pack('<I', 7)
    with raises(CheckpointError):
        load_checkpoint(io.BytesIO(bytes(data)))
    data = bytearray(_bytes(trained))
    data[32:36] = struct.pack('<I', 7)
    with raises(CheckpointError):
        load_checkpoint(io.BytesIO(bytes(data)))


def test_checkpoint_errors_are_io_errors():
    assert issubclass(CheckpointError, OSError)


@pytest.mark.parametrize('dim,n_units,blocks,width,structure', [
    (2, 1, 0, 1, 'full'),
    (3, 3, 1, 5, 'diagonal'),
    (4, 2, 2, 7, 'full'),
])
def test_parameter_layout_matches_model(dim, n_units, blocks, width, structure):
    model = make_model(dim, n_units, blocks, width, structure=structure)
    layout = parameter_layout(model.spec)
    params = model.params
    assert layout.tensors == len(params)
    assert layout.extents == sum(v.ndim for v in params.values())
    assert layout.values == params.size


def test_oversized_header_is_rejected_before_allocating(trained):
    data = bytearray(_bytes(trained))
    data[24:28] = struct.pack('<I', 1 << 30)
    with raises(TruncatedCheckpointError):
        load_checkpoint(io.BytesIO(bytes(data)))


def test_failed_save_leaves_no_file(tmp_path, trained):
    bad = TNVPModel(trained.F1, trained.F2, trained.G,
                    trained.spec._replace(seed=1 << 33))
    path = tmp_path / 'model.tnvp'
    with raises(TnvpValueError):
        save_checkpoint(bad, path)
    assert not path.exists()
    stream = io.BytesIO()
    with raises(TnvpValueError):
        save_checkpoint(bad, stream)
    assert stream.getvalue() == b''
