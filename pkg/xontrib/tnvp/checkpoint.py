'''
Binary model checkpoints.

Layout (all integers little-endian u32, all floats little-endian float64):

    magic               8 bytes, b"TNVPCKPT"
    version             u32, currently 1
    dim                 u32
    n_units             u32
    blocks              u32
    width               u32
    mask code           u32: 0 half, 1 even-odd, 2 explicit template
    structure code      u32: 0 full W, 1 diagonal W
    seed                u32
    tensor count        u32
    [template]          dim × u32 mask bits, only for mask code 2
    tensors             per slot, in parameter-store order:
                            rank u32, rank × extent u32, float64 data

Loading rebuilds the model from the hyperparameters and overwrites every
slot, so a loaded model evaluates bit-identically to the one saved.
'''

from pathlib import Path
from io import BytesIO
from typing import IO, BinaryIO
import struct

import numpy as np

from xontrib.tnvp.model import ModelSpec, TNVPModel, make_model, parameter_layout
from xontrib.tnvp.types import (
    BadMagicError, CheckpointError, TruncatedCheckpointError,
    UnsupportedVersionError, TnvpValueError,
)
from xontrib.tnvp.utils import print_if

MAGIC = b'TNVPCKPT'
VERSION = 1

MASK_CODES = {'half': 0, 'even-odd': 1}
STRUCTURE_CODES = {'full': 0, 'diagonal': 1}
TEMPLATE_CODE = 2

_U32 = struct.Struct('<I')


def _u32(value: int) -> bytes:
    if not 0 <= value < 1 << 32:
        raise TnvpValueError(f'Value does not fit a u32 checkpoint field: {value}')
    return _U32.pack(value)


def write_checkpoint(model: TNVPModel, out: IO[bytes]):
    spec = model.spec
    params = model.params
    mask_code = TEMPLATE_CODE if spec.mask is not None else MASK_CODES[spec.mask_style]
    out.write(MAGIC)
    for v in (VERSION, spec.dim, spec.n_units, spec.blocks, spec.width,
              mask_code, STRUCTURE_CODES[spec.structure], spec.seed, len(params)):
        out.write(_u32(v))
    if spec.mask is not None:
        for bit in spec.mask:
            out.write(_u32(int(bit)))
    for value in params.values():
        out.write(_u32(value.ndim))
        for n in value.shape:
            out.write(_u32(n))
        out.write(value.astype('<f8').tobytes())


def save_checkpoint(model: TNVPModel, path: Path|str|BinaryIO):
    '''
    Write `model` to a file path or a binary stream.

    The checkpoint is serialized in memory first; nothing is written if
    serialization fails.
    '''
    buffer = BytesIO()
    write_checkpoint(model, buffer)
    data = buffer.getvalue()
    if isinstance(path, (str, Path)):
        with open(path, 'wb') as f:
            f.write(data)
        print_if('CHECKPOINT')(f'Saved {model!r} to {path} ({model.params.checksum()[:12]})')
    else:
        path.write(data)


class _Reader:
    def __init__(self, stream: IO[bytes]):
        self.stream = stream

    def read(self, n: int, what: str) -> bytes:
        data = self.stream.read(n)
        if len(data) != n:
            raise TruncatedCheckpointError(what)
        return data

    def u32(self, what: str) -> int:
        return _U32.unpack(self.read(4, what))[0]


_CHUNK = 1 << 20


def _read_at_most(stream: IO[bytes], n: int) -> bytes:
    '''
    Up to `n` bytes, read in bounded chunks so a lying header cannot force
    a large allocation.
    '''
    parts: list[bytes] = []
    while n > 0:
        chunk = stream.read(min(n, _CHUNK))
        if not chunk:
            break
        parts.append(chunk)
        n -= len(chunk)
    return b''.join(parts)


def read_checkpoint(stream: IO[bytes]) -> TNVPModel:
    r = _Reader(stream)
    magic = stream.read(len(MAGIC))
    if magic != MAGIC:
        if len(magic) < len(MAGIC) and MAGIC.startswith(magic) and magic:
            raise TruncatedCheckpointError('magic')
        raise BadMagicError(magic)
    version = r.u32('version')
    if version != VERSION:
        raise UnsupportedVersionError(version, VERSION)
    dim, n_units, blocks, width, mask_code, structure_code, seed, count = (
        r.u32(name) for name in ('dim', 'n_units', 'blocks', 'width',
                                 'mask code', 'structure code', 'seed', 'tensor count')
    )
    structures = {v: k for k, v in STRUCTURE_CODES.items()}
    if structure_code not in structures:
        raise CheckpointError(f'Unknown transition structure code: {structure_code}')
    template = None
    mask_style = 'half'
    match mask_code:
        case 0 | 1:
            mask_style = 'half' if mask_code == 0 else 'even-odd'
        case 2:
            template = tuple(float(r.u32(f'mask bit {j}')) for j in range(dim))
        case _:
            raise CheckpointError(f'Unknown mask code: {mask_code}')
    spec = ModelSpec(dim, n_units, blocks, width, mask_style,  # type: ignore[arg-type]
                     structures[structure_code], seed, template)
    layout = parameter_layout(spec)
    if count != layout.tensors:
        raise CheckpointError(f'Checkpoint holds {count} tensors, model has {layout.tensors}')
    expected = 4 * layout.tensors + 4 * layout.extents + 8 * layout.values
    payload = _read_at_most(stream, expected + 1)
    if len(payload) < expected:
        raise TruncatedCheckpointError(f'tensors ({len(payload)} of {expected} bytes)')
    if len(payload) > expected:
        raise CheckpointError('Trailing bytes after the last tensor')
    try:
        model = make_model(spec.dim, spec.n_units, spec.blocks, spec.width,
                           spec.mask_style, spec.structure, seed=spec.seed, mask=spec.mask)
    except TnvpValueError as e:
        raise CheckpointError(f'Invalid hyperparameters: {e.message}') from e
    except MemoryError:
        raise CheckpointError(f'Model too large to load: {spec}') from None
    r = _Reader(BytesIO(payload))
    params = model.params
    for name, slot in params.items():
        rank = r.u32(f'{name} rank')
        shape = tuple(r.u32(f'{name} extent') for _ in range(rank))
        if shape != slot.shape:
            raise CheckpointError(f'Tensor {name} has shape {shape}, expected {slot.shape}')
        data = r.read(8 * slot.size, name)
        params[name] = np.frombuffer(data, dtype='<f8').reshape(shape)
    return model


def load_checkpoint(path: Path|str|BinaryIO) -> TNVPModel:
    '''
    Read a model from a file path or a binary stream.

    Raises `BadMagicError`, `UnsupportedVersionError` or
    `TruncatedCheckpointError` for the corresponding damage, and
    `CheckpointError` for any other inconsistency.
    '''
    if isinstance(path, (str, Path)):
        with open(path, 'rb') as f:
            model = read_checkpoint(f)
        print_if('CHECKPOINT')(f'Loaded {model!r} from {path} ({model.params.checksum()[:12]})')
        return model
    return read_checkpoint(path)
