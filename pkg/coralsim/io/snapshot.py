"""KSNS snapshot files.

Layout, all little-endian::

    b'KSNS'  u16 version  u8 dim  u8 bc (0 paperbox, 1 periodic)
    u32 shape[dim]  f8 extent[dim]  f8 t
    u16 field count, then per field: u8 name length + ASCII name
    per field, in header order: row-major f8 payload

Fields are ``n, c, m, p, u0, u1[, u2]``; velocity components carry their
face shapes.
"""
import struct

import numpy as np

from coralsim.errors import SnapshotFormatError, SnapshotTruncatedError, SnapshotVersionError
from coralsim.grid_ops import BCMode, ScalarField, VectorField, make_grid
from coralsim.model import SimState

MAGIC = b'KSNS'
VERSION = 1
_BC_CODES = {BCMode.PAPER_BOX: 0, BCMode.PERIODIC: 1}
_BC_MODES = {code: mode for mode, code in _BC_CODES.items()}
_SCALARS = ('n', 'c', 'm', 'p')


def _field_names(dim):
    return _SCALARS + tuple(f'u{a}' for a in range(dim))


def _field_shape(grid, name):
    if name in _SCALARS:
        return tuple(grid.shape)
    return grid.face_shape(int(name[1:]))


def encode_snapshot(state):
    grid = state.grid
    names = _field_names(grid.dim)
    header = [MAGIC, struct.pack('<HBB', VERSION, grid.dim, _BC_CODES[grid.bc_mode]),
              struct.pack(f'<{grid.dim}I', *grid.shape),
              struct.pack(f'<{grid.dim}d', *grid.extent),
              struct.pack('<d', state.t),
              struct.pack('<H', len(names))]
    for name in names:
        encoded = name.encode('ascii')
        header.append(struct.pack('<B', len(encoded)) + encoded)
    arrays = [state.n.values, state.c.values, state.m.values, state.p.values, *state.u.components]
    payload = [np.ascontiguousarray(a, dtype='<f8').tobytes() for a in arrays]
    return b''.join(header + payload)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.offset = 0

    def take(self, size, what):
        if self.offset + size > len(self.data):
            raise SnapshotTruncatedError(
                f"snapshot truncated while reading {what}: need {size} bytes at offset {self.offset}, "
                f"have {len(self.data) - self.offset}")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_snapshot(data):
    reader = _Reader(data)
    if reader.take(4, 'magic') != MAGIC:
        raise SnapshotFormatError("not a KSNS snapshot (bad magic)")
    version, dim, bc_code = reader.unpack('<HBB', 'header')
    if version != VERSION:
        raise SnapshotVersionError(f"unsupported snapshot version {version}, expected {VERSION}",
                                   version=version)
    if dim not in (2, 3) or bc_code not in _BC_MODES:
        raise SnapshotFormatError(f"corrupt snapshot header (dim={dim}, bc={bc_code})")
    shape = reader.unpack(f'<{dim}I', 'shape')
    extent = reader.unpack(f'<{dim}d', 'extent')
    (t,) = reader.unpack('<d', 'time')
    (count,) = reader.unpack('<H', 'field count')
    names = []
    for _ in range(count):
        (length,) = reader.unpack('<B', 'field name')
        names.append(reader.take(length, 'field name').decode('ascii', errors='replace'))
    if tuple(names) != _field_names(dim):
        raise SnapshotFormatError(f"unexpected snapshot fields {names}")

    grid = make_grid(dim, shape, extent, _BC_MODES[bc_code])
    arrays = {}
    for name in names:
        shape = _field_shape(grid, name)
        size = int(np.prod(shape)) * 8
        arrays[name] = np.frombuffer(reader.take(size, f"field {name}"), dtype='<f8').reshape(shape).copy()
    if reader.offset != len(data):
        raise SnapshotFormatError(f"{len(data) - reader.offset} trailing bytes after snapshot payload")

    u = VectorField(grid, tuple(arrays[f'u{a}'] for a in range(dim)))
    return SimState(t, *(ScalarField(grid, arrays[name]) for name in ('n', 'c', 'm')), u,
                    ScalarField(grid, arrays['p']))


def write_snapshot(state, path):
    with open(path, 'wb') as fh:
        fh.write(encode_snapshot(state))


def read_snapshot(path):
    with open(path, 'rb') as fh:
        return decode_snapshot(fh.read())
